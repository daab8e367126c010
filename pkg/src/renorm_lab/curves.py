"""Closed polylines: adaptive sampling, membership, distances, JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np
from matplotlib.path import Path
from scipy.spatial import cKDTree


@dataclass(frozen=True)
class DomainBoundary:
    """Polyline approximating the boundary of a simply connected domain.

    ``points`` is a 1-d complex array in traversal order; for a closed
    curve the last point is not repeated.
    """

    points: np.ndarray
    closed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=complex).ravel())

    def __len__(self):
        return self.points.size

    @property
    def diameter(self) -> float:
        p = self.points
        return float(max(np.ptp(p.real), np.ptp(p.imag)) * np.sqrt(2.0))

    @property
    def area(self) -> float:
        x, y = self.points.real, self.points.imag
        return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

    def contains(self, z, radius: float = 0.0):
        """Even-odd membership; ``radius > 0`` enlarges the polygon slightly."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        verts = np.column_stack([self.points.real, self.points.imag])
        path = Path(verts, closed=True)
        return path.contains_points(np.column_stack([z.real, z.imag]), radius=radius)

    def segments(self):
        p = self.points
        q = np.roll(p, -1) if self.closed else p[1:]
        return (p, q) if self.closed else (p[:-1], q)

    def to_json(self) -> dict:
        return {"closed": bool(self.closed),
                "points": [[float(z.real), float(z.imag)] for z in self.points]}

    @classmethod
    def from_json(cls, obj) -> "DomainBoundary":
        if isinstance(obj, str):
            obj = json.loads(obj)
        pts = np.array(obj["points"], dtype=float).reshape(-1, 2)
        return cls(pts[:, 0] + 1j * pts[:, 1], bool(obj.get("closed", True)))

    def transformed(self, func: Callable) -> "DomainBoundary":
        return DomainBoundary(func(self.points), self.closed)


def symmetric_closure(upper: np.ndarray) -> DomainBoundary:
    """Close an arc running from a positive real point to a negative one
    through the upper half-plane, by reflection in the real axis."""
    upper = np.asarray(upper, dtype=complex)
    lower = np.conj(upper[::-1])[1:-1]
    return DomainBoundary(np.concatenate([upper, lower]), closed=True)


def quarter_to_upper(quarter: np.ndarray) -> np.ndarray:
    """Arc in the closed first quadrant (real axis to imaginary axis)
    completed by reflection in the imaginary axis."""
    quarter = np.asarray(quarter, dtype=complex)
    return np.concatenate([quarter, -np.conj(quarter[::-1])[1:]])


def _segment_distance(p, a, b):
    ab = b - a
    denom = np.abs(ab) ** 2
    t = np.where(denom > 0, ((p - a) * np.conj(ab)).real / np.where(denom > 0, denom, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.abs(p - (a + t * ab))


def point_polyline_distance(z, curve: DomainBoundary, k: int = 6,
                            upper_bound: float = np.inf) -> np.ndarray:
    """Distance from each point to the polyline (nearest-vertex candidates).

    Points farther than ``upper_bound`` from every vertex get ``inf``;
    the bound may be an array, one entry per point.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    pts = curve.points
    n = pts.size
    tree = cKDTree(np.column_stack([pts.real, pts.imag]))
    k = min(k, n)
    best = np.full(z.size, np.inf)
    bound = np.broadcast_to(np.asarray(upper_bound, dtype=float), z.shape)
    if np.isfinite(bound).any():
        seg = np.abs(np.diff(np.append(pts, pts[0]))).max()
        # vertices lie within half an edge of the nearest polyline point
        reach = bound + seg
        todo = np.nonzero(np.isfinite(reach))[0]
        dv, _ = tree.query(np.column_stack([z.real[todo], z.imag[todo]]), k=1,
                           distance_upper_bound=float(reach[todo].max()))
        keep = dv <= reach[todo]
        cand = np.concatenate([todo[keep], np.nonzero(~np.isfinite(reach))[0]])
    else:
        cand = np.arange(z.size)
    if not cand.size:
        return best
    zc = z[cand]
    _, idx = tree.query(np.column_stack([zc.real, zc.imag]), k=k)
    idx = np.atleast_2d(idx).reshape(zc.size, k)
    sub = np.full(zc.size, np.inf)
    for j in range(k):
        i = idx[:, j]
        nxt = (i + 1) % n if curve.closed else np.minimum(i + 1, n - 1)
        prv = (i - 1) % n if curve.closed else np.maximum(i - 1, 0)
        sub = np.minimum(sub, _segment_distance(zc, pts[i], pts[nxt]))
        sub = np.minimum(sub, _segment_distance(zc, pts[prv], pts[i]))
    best[cand] = sub
    return best


def polyline_separation(a: DomainBoundary, b: DomainBoundary) -> float:
    """Minimum vertex-to-segment distance between two polylines."""
    return float(min(point_polyline_distance(a.points, b).min(),
                     point_polyline_distance(b.points, a).min()))


def hausdorff(a: DomainBoundary, b: DomainBoundary) -> float:
    return float(max(point_polyline_distance(a.points, b).max(),
                     point_polyline_distance(b.points, a).max()))


def adaptive_polyline(func: Callable, t0: float, t1: float, tol: float,
                      n0: int = 64, max_passes: int = 40,
                      max_points: int = 400_000):
    """Sample ``func`` on ``[t0, t1]`` until every sagitta is below ``tol``.

    ``func`` maps a float array to a complex array.  Returns ``(t, z)``.
    Midpoint sagitta is the refinement criterion; segments longer than a
    fraction of the curve extent are split too, so narrow features are
    not skipped.
    """
    t = np.linspace(t0, t1, n0 + 1)
    z = np.asarray(func(t), dtype=complex)
    for _ in range(max_passes):
        tm = 0.5 * (t[:-1] + t[1:])
        zm = np.asarray(func(tm), dtype=complex)
        sag = _segment_distance(zm, z[:-1], z[1:])
        bad = ~(sag <= tol)
        extent = max(np.ptp(z.real), np.ptp(z.imag), tol)
        bad |= np.abs(z[1:] - z[:-1]) > extent / 16
        bad &= np.isfinite(zm)
        if not bad.any() or t.size + bad.sum() > max_points:
            break
        ins = np.nonzero(bad)[0] + 1
        t = np.insert(t, ins, tm[bad])
        z = np.insert(z, ins, zm[bad])
    return t, z


def polyline_intersections(p: np.ndarray, q: np.ndarray) -> list:
    """Crossings between two open polylines as ``(point, i, j)`` triples."""
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    a0, a1 = p[:-1], p[1:]
    out = []
    # bounding-box prefilter in chunks
    qa, qb = q[:-1], q[1:]
    qxmin, qxmax = np.minimum(qa.real, qb.real), np.maximum(qa.real, qb.real)
    qymin, qymax = np.minimum(qa.imag, qb.imag), np.maximum(qa.imag, qb.imag)
    for i in range(a0.size):
        s0, s1 = a0[i], a1[i]
        m = ((qxmax >= min(s0.real, s1.real)) & (qxmin <= max(s0.real, s1.real)) &
             (qymax >= min(s0.imag, s1.imag)) & (qymin <= max(s0.imag, s1.imag)))
        for j in np.nonzero(m)[0]:
            r = s1 - s0
            s = qb[j] - qa[j]
            den = (np.conj(r) * s).imag
            if den == 0:
                continue
            d = qa[j] - s0
            tt = (np.conj(d) * s).imag / den
            uu = (np.conj(d) * r).imag / den
            if 0 <= tt <= 1 and 0 <= uu <= 1:
                out.append((s0 + tt * r, i, int(j)))
    return out
