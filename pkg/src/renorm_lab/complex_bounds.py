"""Invariant sets, their hulls and polynomial-like restrictions.

Given an Epstein map ``g`` the backward orbit of ``[-1, 1]`` approximates
the smallest completely invariant compact set; its filled-in hull must sit
compactly inside the slit plane.  A restriction ``g: V' -> V`` with
``V' = g^-1(V)`` and ``closure(V') < V`` is then searched for among
Poincare neighbourhoods, and ``mod(V - closure(V'))`` is measured.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage
from skimage import measure

from .annulus_modulus import ModulusEstimate, modulus
from .curves import DomainBoundary, adaptive_polyline, point_polyline_distance, polyline_separation, symmetric_closure
from .errors import DomainError, NoRestrictionFound
from .quadratic_dynamics import QuadraticMap, renorm_cascade, verify_real_bounds
from .renormalization import EpsteinMap, epstein_verify, preimage_arc, rescale
from .slit_geometry import poincare_region

#: Default depth and seed density of invariant sets.
DEFAULT_DEPTH = 12
DEFAULT_DENSITY = 512
#: Points per level kept after the deterministic thinning.
LEVEL_CAP = 1 << 17
#: Alarm for cloud points hugging the real axis right of 1.
ALARM_IM = 1e-4
ALARM_RE = 1e-4


@dataclass
class InvariantSetApprox:
    """Points of ``T_n = union of g^-i([-1, 1])`` for ``i <= depth``."""

    depth: int
    points: np.ndarray
    depths: np.ndarray
    skipped: int = 0
    thinned: int = 0

    def __len__(self):
        return self.points.size

    def level(self, i: int) -> np.ndarray:
        return self.points[self.depths == i]

    def upto(self, i: int) -> np.ndarray:
        return self.points[self.depths <= i]

    def counts(self) -> list:
        return [int((self.depths == i).sum()) for i in range(self.depth + 1)]


def _symmetrize(p: np.ndarray) -> np.ndarray:
    """Orbit of p under negation and conjugation, (+) copies first."""
    allp = np.concatenate([p, -p, np.conj(p), -np.conj(p)])
    _, first = np.unique(allp, return_index=True)
    return allp[np.sort(first)]


def invariant_set(g: EpsteinMap, depth: int = DEFAULT_DEPTH, density: int = DEFAULT_DENSITY,
                  cap: int = LEVEL_CAP) -> InvariantSetApprox:
    """Backward orbit of ``density`` seeds on ``[-b, b]`` through both branches.

    Only upper-half-plane points are pulled back; the rest of each level
    follows by the symmetries ``g(-z) = g(z)`` and ``g(conj z) = conj g(z)``.
    Levels above ``cap`` points are thinned by a fixed stride.  Points on
    the slits or at a branch point are skipped and counted.
    """
    if depth < 0 or density < 2:
        raise DomainError("need depth >= 0 and density >= 2")
    b = abs(g.beta)
    cur = np.linspace(-b, b, density).astype(complex)
    pts, dep = [cur], [np.zeros(cur.size, dtype=np.int16)]
    skipped = thinned = 0
    for i in range(1, depth + 1):
        reps = cur[cur.imag >= 0]
        ok = g.in_slit_plane(reps)
        skipped += int((~ok).sum())
        reps = reps[ok]
        u, args = g.F_inverse(reps, steps=True)
        bad = ~np.isfinite(u)
        for a in args:
            bad |= np.abs(a) < 1e-14
        skipped += int(bad.sum())
        nxt = _symmetrize(np.sqrt(u[~bad]))
        if nxt.size > cap:
            stride = int(math.ceil(nxt.size / cap))
            # thin the first-quadrant representatives, then restore symmetry
            q1 = nxt[(nxt.real >= 0) & (nxt.imag >= 0)]
            keep = q1[::stride]
            thinned += nxt.size
            nxt = _symmetrize(keep)
            thinned -= nxt.size
        pts.append(nxt)
        dep.append(np.full(nxt.size, i, dtype=np.int16))
        cur = nxt
    return InvariantSetApprox(depth=depth, points=np.concatenate(pts),
                              depths=np.concatenate(dep), skipped=skipped, thinned=thinned)


# --------------------------------------------------------------------------
# hull


@dataclass
class Hull:
    """Polygonal over-approximation of the filled-in cloud at scale ``h``."""

    boundary: DomainBoundary
    h: float
    dilation: int
    components: int

    @property
    def area(self) -> float:
        return self.boundary.area

    def contains(self, z, tol: float = 0.0):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        inside = self.boundary.contains(z)
        if tol > 0:
            inside |= point_polyline_distance(z, self.boundary, upper_bound=tol) <= tol
        return inside


def hull_boundary(points, resolution: int = 512) -> Hull:
    """Outer contour of the cloud, holes filled, at cell size ``diameter/resolution``.

    The cloud is rasterised, dilated until it is connected, filled and
    contoured; every cloud point lies inside the result.  A collinear real
    cloud yields a thin rectangle of width h.
    """
    if isinstance(points, InvariantSetApprox):
        points = points.points
    z = np.asarray(points, dtype=complex).ravel()
    if not z.size:
        raise DomainError("empty cloud")
    span = max(np.ptp(z.real), np.ptp(z.imag))
    if span == 0:
        raise DomainError("cloud is a single point")
    h = span / resolution
    if np.ptp(z.imag) <= 1e-12 * span:
        x0, x1, y = z.real.min() - h / 2, z.real.max() + h / 2, z.imag.mean()
        rect = np.array([x1 + 1j * (y - h / 2), x1 + 1j * (y + h / 2),
                         x0 + 1j * (y + h / 2), x0 + 1j * (y - h / 2)])
        return Hull(DomainBoundary(rect), h, 0, 1)
    pad = 8
    x0, y0 = z.real.min() - pad * h, z.imag.min() - pad * h
    nx = int(math.ceil((z.real.max() - x0) / h)) + pad + 1
    ny = int(math.ceil((z.imag.max() - y0) / h)) + pad + 1
    ix = np.floor((z.real - x0) / h).astype(int)
    iy = np.floor((z.imag - y0) / h).astype(int)
    occ = np.zeros((ny, nx), dtype=bool)
    occ[iy, ix] = True
    dil, comps = 0, 0
    mask = occ
    for dil in range(1, pad - 1):
        mask = ndimage.binary_dilation(occ, iterations=dil)
        _, comps = ndimage.label(mask, structure=np.ones((3, 3)))
        if comps == 1:
            break
    mask = ndimage.binary_fill_holes(mask)
    contours = measure.find_contours(mask.astype(float), 0.5)
    best = max(contours, key=len)
    # contour coordinates are (row, col) in cell-centre units
    poly = (x0 + (best[:, 1] + 0.5) * h) + 1j * (y0 + (best[:, 0] + 0.5) * h)
    if np.abs(poly[0] - poly[-1]) < 1e-12 * span:
        poly = poly[:-1]
    return Hull(DomainBoundary(poly), h, dil, comps)


# --------------------------------------------------------------------------
# checks


@dataclass
class ContainmentReport:
    slit_distance: float
    max_modulus: float
    bounded: bool
    alarm: bool
    alarm_points: int

    @property
    def ok(self) -> bool:
        return self.slit_distance > 0 and self.bounded and not self.alarm


def _slit_distance(z: np.ndarray, j0: float) -> np.ndarray:
    x, y = np.abs(z.real), np.abs(z.imag)
    return np.where(x >= j0, y, np.hypot(j0 - x, y))


def compact_containment_check(points, J0, bound: float = 10.0) -> ContainmentReport:
    """Distance of the cloud to the slits outside ``J0``, its size, and the
    alarm for points creeping along the real axis to the right of 1."""
    if isinstance(points, InvariantSetApprox):
        points = points.points
    z = np.asarray(points, dtype=complex)
    j0 = J0[1] if isinstance(J0, (tuple, list)) else float(J0)
    dist = float(_slit_distance(z, j0).min())
    mx = float(np.abs(z).max())
    al = (np.abs(z.imag) < ALARM_IM) & (z.real > 1.0 + ALARM_RE)
    return ContainmentReport(slit_distance=dist, max_modulus=mx, bounded=mx <= bound,
                             alarm=bool(al.any()), alarm_points=int(al.sum()))


@dataclass
class InvarianceReport:
    samples: int
    forward_escapes: int
    backward_escapes: int
    tol: float

    @property
    def forward_fraction(self) -> float:
        return self.forward_escapes / max(self.samples, 1)

    @property
    def backward_fraction(self) -> float:
        return self.backward_escapes / max(2 * self.samples, 1)

    @property
    def ok(self) -> bool:
        return self.forward_escapes == 0 and self.backward_escapes == 0


def sample_interior(boundary: DomainBoundary, samples: int, seed: int = 0) -> np.ndarray:
    """``samples`` uniform points inside a polygon (rejection, seeded)."""
    rng = np.random.default_rng(seed)
    p = boundary.points
    x0, x1, y0, y1 = p.real.min(), p.real.max(), p.imag.min(), p.imag.max()
    out = []
    got = 0
    while got < samples:
        cand = rng.uniform(x0, x1, 4 * samples) + 1j * rng.uniform(y0, y1, 4 * samples)
        cand = cand[boundary.contains(cand)]
        out.append(cand)
        got += cand.size
    return np.concatenate(out)[:samples]


def invariance_check(hull, g: EpsteinMap, samples: int = 10_000, tol: Optional[float] = None,
                     seed: int = 0, cloud=None) -> InvarianceReport:
    """Map samples forward and through both inverse branches and count
    images leaving the hull enlarged by ``tol`` (default: the hull scale h).

    With ``cloud`` the samples are evenly spaced points of the invariant
    set itself, i.e. of the hull of a set without interior.  Otherwise
    they are uniform in the polygon; that thickened region is not
    invariant, because g expands near the set, so escapes are expected
    there and are reported as a diagnostic.
    """
    if isinstance(hull, Hull):
        tol = hull.h if tol is None else tol
        hb = hull
    else:
        tol = tol or 0.0
        hb = Hull(hull, tol, 0, 1)
    if cloud is not None:
        pts = cloud.points if isinstance(cloud, InvariantSetApprox) else np.asarray(cloud)
        idx = np.unique(np.linspace(0, pts.size - 1, min(samples, pts.size)).astype(int))
        z = pts[idx]
    else:
        z = sample_interior(hb.boundary, samples, seed)
    fw = g(z)
    fw_ok = np.isfinite(fw)
    fw_in = np.zeros(z.size, dtype=bool)
    fw_in[fw_ok] = hb.contains(fw[fw_ok], tol)
    ok = g.in_slit_plane(z)
    plus, minus = g.preimages(np.where(ok, z, 0.0))
    back = np.concatenate([plus[ok], minus[ok]])
    back_in = hb.contains(back, tol)
    return InvarianceReport(samples=int(z.size), forward_escapes=int((~fw_in).sum()),
                            backward_escapes=int((~back_in).sum() + 2 * (~ok).sum()),
                            tol=float(tol))


# --------------------------------------------------------------------------
# restrictions


@dataclass
class PLRestriction:
    V: DomainBoundary
    V_prime: DomainBoundary
    modulus: Optional[ModulusEstimate]
    separation: float
    construction: dict

    def to_json(self) -> dict:
        return {"construction": self.construction, "separation": self.separation,
                "modulus": self.modulus.to_json() if self.modulus else None,
                "V": self.V.to_json(), "V_prime": self.V_prime.to_json()}


@dataclass
class Candidate:
    """One tried pair (V, V') with the reason it was rejected, if any."""

    V: DomainBoundary
    V_prime: DomainBoundary
    separation: float
    contained: bool
    hull_inside: bool
    h: float
    construction: dict

    @property
    def accepted(self) -> bool:
        return self.contained and self.hull_inside and self.separation > 10.0 * self.h


def _trace(func, tol):
    _, z = adaptive_polyline(func, 0.0, 1.0, tol, n0=256)
    return z


def _candidate(g, arc_v, hull, tol, construction, V_poly=None):
    up_v = _trace(arc_v, tol) if V_poly is None else None
    V = V_poly if V_poly is not None else symmetric_closure(up_v)
    arc_p = preimage_arc(g, arc_v)
    up_p = _trace(arc_p, tol)
    if not np.all(np.isfinite(up_p)):
        return None, arc_p
    Vp = symmetric_closure(up_p)
    contained = bool(np.all(V.contains(Vp.points)))
    sep = polyline_separation(V, Vp) if contained else 0.0
    hull_in = bool(hull is None or np.all(Vp.contains(hull.boundary.points)))
    return Candidate(V, Vp, float(sep), contained, hull_in, tol, construction), arc_p


def _finish(g, cand: Candidate, grid_n: int, with_modulus: bool) -> PLRestriction:
    est = modulus(cand.V, cand.V_prime, grid_n) if with_modulus else None
    return PLRestriction(V=cand.V, V_prime=cand.V_prime, modulus=est,
                         separation=cand.separation, construction=dict(cand.construction))


def find_pl_restriction(g: EpsteinMap, strategy: str = "preimage", params: Optional[dict] = None,
                        hull: Optional[Hull] = None) -> PLRestriction:
    """Search a domain V with ``closure(g^-1(V)) < V`` containing the hull.

    ``preimage``: ``V_0 = D(J0, theta0)`` (a bounded stand-in for the slit
    plane of J0) and ``V_(k+1) = g^-1(V_k)``; the first ``k <= k_max`` with
    ``V_(k+1)`` compactly inside ``V_k`` is taken.
    ``poincare``: ``V = D((-r, r), theta)`` over a dial of ``r`` in (1, j]
    and angles; the first accepted pair is taken.

    Separation must exceed ``10 h`` with ``h`` the sagitta tolerance of the
    traced polylines.  Raises :class:`NoRestrictionFound` carrying the most
    separated rejected candidate.
    """
    params = dict(params or {})
    tol = float(params.get("tol", 1e-7))
    grid_n = int(params.get("grid", 256))
    with_mod = bool(params.get("modulus", True))
    tried = []
    if strategy == "preimage":
        j0 = float(params.get("J0", g.j))
        theta0 = float(params.get("theta0", math.pi / 3))
        k_max = int(params.get("k_max", 6))
        if j0 > g.j:
            raise DomainError("J0 must lie inside J")
        arc = poincare_region((-j0, j0), theta0).upper_arc
        V_poly = None
        for k in range(k_max + 1):
            cons = {"strategy": "preimage", "k": k, "J0": j0, "theta0": theta0}
            cand, nxt = _candidate(g, arc, hull, tol, cons, V_poly)
            if cand is None:
                break
            tried.append(cand)
            if cand.accepted:
                return _finish(g, cand, grid_n, with_mod)
            arc, V_poly = nxt, cand.V_prime
    elif strategy == "poincare":
        rs = params.get("r_values")
        if rs is None:
            rs = [g.j * t + abs(g.beta) * (1 - t) for t in (1.0, 0.75, 0.5, 0.25)]
        thetas = params.get("thetas", [math.pi / 2, math.pi / 3, math.pi / 4, math.pi / 6])
        for r in rs:
            if r > g.j:
                raise DomainError("r must lie inside J")
            for th in thetas:
                cons = {"strategy": "poincare", "r": float(r), "theta": float(th)}
                arc = poincare_region((-r, r), th).upper_arc
                cand, _ = _candidate(g, arc, hull, tol, cons)
                if cand is None:
                    continue
                tried.append(cand)
                if cand.accepted:
                    return _finish(g, cand, grid_n, with_mod)
    else:
        raise DomainError(f"unknown strategy {strategy!r}")
    best = max(tried, key=lambda c: c.separation) if tried else None
    raise NoRestrictionFound(f"no restriction found by {strategy}", best=best)


# --------------------------------------------------------------------------
# sweep


SWEEP_COLUMNS = ("n", "q", "modulus", "separation", "strategy", "k_or_theta", "status",
                 "c", "N", "L", "grid", "depth", "density")


@dataclass
class SweepTable:
    rows: list
    params: dict = field(default_factory=dict)

    @property
    def successes(self) -> list:
        return [r for r in self.rows if r["status"] == "ok"]

    @property
    def min_modulus(self) -> float:
        ok = [r["modulus"] for r in self.successes]
        return min(ok) if ok else math.nan

    @property
    def max_modulus(self) -> float:
        ok = [r["modulus"] for r in self.successes]
        return max(ok) if ok else math.nan

    @property
    def modulus_ratio(self) -> float:
        return self.max_modulus / self.min_modulus if self.successes else math.nan

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, extrasaction="ignore",
                           lineterminator="\r\n")
        w.writeheader()
        for r in self.rows:
            w.writerow(r)
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"params": self.params, "rows": self.rows,
                "min_modulus": self.min_modulus if self.successes else None,
                "modulus_ratio": self.modulus_ratio if self.successes else None}


def level_pipeline(g: EpsteinMap, strategy: str, depth: int, density: int, grid: int,
                   params: Optional[dict] = None, hull_resolution: int = 256) -> dict:
    """Verify, build the invariant set and hull, then search a restriction."""
    rep = epstein_verify(g)
    out = {"epstein_ok": rep.ok}
    if not rep.ok:
        out["status"] = "epstein check failed"
        return out
    cloud = invariant_set(g, depth, density)
    cc = compact_containment_check(cloud, g.J)
    out["containment"] = cc
    hull = hull_boundary(cloud, hull_resolution)
    out["hull"] = hull
    out["invariance"] = invariance_check(hull, g, cloud=cloud)
    if not cc.ok:
        out["status"] = "containment failed"
        return out
    p = dict(params or {})
    p.setdefault("grid", grid)
    try:
        res = find_pl_restriction(g, strategy, p, hull=hull)
    except NoRestrictionFound as exc:
        out["status"] = "no restriction"
        out["best"] = exc.best
        return out
    out["restriction"] = res
    out["status"] = "ok"
    return out


def complex_bounds_sweep(f: QuadraticMap, N: int = 2, n_range: Sequence[int] = range(2, 6),
                         L: float = 1.6, strategy: str = "preimage", grid: int = 256,
                         depth: int = DEFAULT_DEPTH, density: int = DEFAULT_DENSITY,
                         params: Optional[dict] = None, keep: bool = False) -> SweepTable:
    """One row per level n: restriction found, its modulus and separation.

    Level failures are recorded and the sweep goes on.  With ``keep`` the
    rows also hold the restriction objects (not serialised).
    """
    n_range = list(n_range)
    base = {"c": f.c, "N": N, "L": L, "grid": grid, "depth": depth, "density": density}
    table = SweepTable(rows=[], params=dict(base, strategy=strategy, n_range=n_range))
    if not n_range:
        return table
    levels = renorm_cascade(f, N, max_depth=max(n_range))
    for n in n_range:
        row = dict(base, n=n, q=None, modulus=None, separation=None, strategy=strategy,
                   k_or_theta=None, status="")
        if n < 1 or n > len(levels):
            row["status"] = "level not found"
            table.rows.append(row)
            continue
        lvl = levels[n - 1]
        row["q"] = lvl.q
        if L >= lvl.enlargement_limit:
            row["status"] = "L exceeds monotone range"
            table.rows.append(row)
            continue
        g = rescale(f, lvl, L)
        out = level_pipeline(g, strategy, depth, density, grid, params)
        row["status"] = out["status"]
        res = out.get("restriction")
        if res is not None:
            row["modulus"] = res.modulus.richardson if res.modulus else None
            row["separation"] = res.separation
            c = res.construction
            row["k_or_theta"] = c.get("k") if strategy == "preimage" else c.get("theta")
        if keep:
            row["_detail"] = out
        table.rows.append(row)
    if len(levels) >= 2:
        rb = verify_real_bounds(levels[:max(2, min(len(levels), max(n_range)))], L)
        table.params["real_bounds_L_hat"] = rb.L_hat
    return table
