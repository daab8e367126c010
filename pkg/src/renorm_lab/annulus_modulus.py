"""Conformal modulus of a polygonal annulus by a discrete Dirichlet problem.

The harmonic function with ``u = 0`` on the inner boundary and ``u = 1`` on
the outer one has Dirichlet energy ``1 / mod``, where the round annulus
``r < |z| < R`` has modulus ``log(R/r) / (2 pi)``.

Both the Laplace equation and the energy are conformally invariant, so the
problem is posed on the cylinder ``z = z0 + exp(rho + i phi)`` around a
point ``z0`` inside the inner curve.  A uniform square grid there gives
cells that shrink near ``z0`` and grow far away, which resolves annuli
whose radii differ by orders of magnitude.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np
import pyamg
from scipy import ndimage
from scipy.sparse import csr_matrix

from .curves import DomainBoundary, point_polyline_distance
from .errors import GeometryError, ToleranceError

RESIDUAL_TOL = 1e-10


@dataclass
class GridAnnulus:
    """Cell labels of an annulus on the log-polar grid.

    ``mask`` holds one of ``INNER``, ``ANNULUS``, ``OUTER`` or ``BAND`` per
    cell; rows index ``rho``, columns the periodic angle.
    """

    INNER = 0
    ANNULUS = 1
    OUTER = 2
    BAND = 3

    outer: DomainBoundary
    inner: DomainBoundary
    grid_n: int
    cell_size: float
    center: complex
    rho0: float
    mask: np.ndarray
    value: np.ndarray  # boundary value of fixed cells (0 or 1), nan on free cells

    @property
    def free(self) -> np.ndarray:
        return self.mask == self.ANNULUS


@dataclass
class ModulusEstimate:
    value: float
    grid_n: int
    richardson: float
    energy: float
    fine_value: float = math.nan
    residual: float = 0.0

    @property
    def tolerance(self) -> float:
        return abs(self.value - self.richardson)

    def to_json(self) -> dict:
        return {"value": self.value, "grid_n": self.grid_n, "richardson": self.richardson,
                "energy": self.energy, "fine_value": self.fine_value}


def _interior_point(inner: DomainBoundary) -> complex:
    """A point deep inside the inner curve (centroid when it is inside)."""
    p = inner.points
    cand = [complex(p.mean())]
    x0, x1, y0, y1 = p.real.min(), p.real.max(), p.imag.min(), p.imag.max()
    X, Y = np.meshgrid(np.linspace(x0, x1, 41), np.linspace(y0, y1, 41))
    cand.extend((X + 1j * Y).ravel())
    cand = np.asarray(cand)
    inside = inner.contains(cand)
    if not inside.any():
        raise GeometryError("inner curve encloses no grid point")
    d = point_polyline_distance(cand[inside], inner)
    # prefer the centroid unless it sits much closer to the boundary
    if inside[0] and d[0] >= 0.5 * d.max():
        return complex(cand[0])
    return complex(cand[inside][int(np.argmax(d))])


def _classify(Z: np.ndarray, curve: DomainBoundary, h: float, z0: complex) -> np.ndarray:
    """Point-in-polygon for grid centres, exact only near the curve.

    Cells farther from the curve than their own size are grouped into
    connected components, and one representative per component is tested.
    """
    flat = Z.ravel()
    local = np.abs(flat - z0) * h * 1.5  # size of the log-polar cell, with margin
    near = point_polyline_distance(flat, curve, upper_bound=local) <= local
    out = np.zeros(flat.size, dtype=bool)
    if near.any():
        out[near] = curve.contains(flat[near])
    far = (~near).reshape(Z.shape)
    lab, n = ndimage.label(far)
    if n:
        first = ndimage.minimum_position(np.arange(lab.size).reshape(lab.shape), lab,
                                         np.arange(1, n + 1))
        reps = np.array([Z[pos] for pos in first])
        inside = np.concatenate([[False], curve.contains(reps)])
        out[far.ravel()] = inside[lab.ravel()[far.ravel()]]
    return out.reshape(Z.shape)


def grid_annulus(outer: DomainBoundary, inner: DomainBoundary, grid_n: int) -> GridAnnulus:
    """Label log-polar cells; fixed cells next to the annulus form the bands."""
    if grid_n < 16:
        raise GeometryError("grid_n must be at least 16")
    if not np.all(outer.contains(inner.points)):
        raise GeometryError("inner curve is not inside the outer curve")
    z0 = _interior_point(inner)
    dmin = float(point_polyline_distance(np.array([z0]), inner)[0])
    rmax = float(np.abs(outer.points - z0).max())
    h = 2.0 * math.pi / grid_n
    rho0 = math.log(dmin) - 2.0 * h
    n_rho = int(math.ceil((math.log(rmax) + 2.0 * h - rho0) / h)) + 1
    rho = rho0 + h * (np.arange(n_rho) + 0.5)
    phi = h * (np.arange(grid_n) + 0.5)
    Z = z0 + np.exp(rho[:, None] + 1j * phi[None, :])
    in_inner = _classify(Z, inner, h, z0)
    in_outer = _classify(Z, outer, h, z0)
    mask = np.full(Z.shape, GridAnnulus.ANNULUS, dtype=np.int8)
    mask[~in_outer] = GridAnnulus.OUTER
    mask[in_inner] = GridAnnulus.INNER
    value = np.where(mask == GridAnnulus.INNER, 0.0,
                     np.where(mask == GridAnnulus.OUTER, 1.0, np.nan))
    free = mask == GridAnnulus.ANNULUS
    if not free.any():
        raise GeometryError("annulus has no interior cells at this resolution")
    near = np.zeros_like(free)
    for axis, shift in ((0, 1), (0, -1), (1, 1), (1, -1)):
        near |= np.roll(free, shift, axis=axis)
    mask[near & ~free] = GridAnnulus.BAND
    lab, n = ndimage.label(free)
    if n > 1:
        lab = _merge_periodic(lab, n)
        if np.unique(lab[lab > 0]).size > 1:
            raise GeometryError("annulus region is disconnected")
    return GridAnnulus(outer=outer, inner=inner, grid_n=grid_n, cell_size=h, center=z0,
                       rho0=rho0, mask=mask, value=value)


def _merge_periodic(lab: np.ndarray, n: int) -> np.ndarray:
    parent = list(range(n + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in zip(lab[:, 0], lab[:, -1]):
        if a and b:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(i) for i in range(n + 1)])
    return roots[lab]


def _crossing_fraction(ga: GridAnnulus, za, zb, curve: DomainBoundary, iters: int = 30):
    """Fraction of the log-polar edge from a free centre to a fixed one at
    which it crosses ``curve``, by bisection."""
    z0 = ga.center
    la, lb = np.log(za - z0), np.log(zb - z0)
    # keep the angular step short across the branch cut of log
    lb = lb.real + 1j * (la.imag + np.angle(np.exp(1j * (lb.imag - la.imag))))
    ref = curve.contains(za)
    lo, hi = np.zeros(za.size), np.ones(za.size)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        zm = z0 + np.exp(la + mid * (lb - la))
        same = curve.contains(zm) == ref
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return np.clip(0.5 * (lo + hi), 1e-2, 1.0)


@contextmanager
def _seeded_global_rng(seed: int = 0):
    """pyamg draws start vectors from the global numpy RNG; pin it locally."""
    state = np.random.get_state()
    np.random.seed(seed)
    try:
        yield
    finally:
        np.random.set_state(state)


def _solve(ga: GridAnnulus):
    free = ga.free
    n_rho, n_phi = free.shape
    h = ga.cell_size
    nfree = int(free.sum())
    idx = -np.ones(free.shape, dtype=np.int64)
    idx[free] = np.arange(nfree)
    fixed_val = np.nan_to_num(ga.value)
    rho = ga.rho0 + h * (np.arange(n_rho) + 0.5)
    phi = h * (np.arange(n_phi) + 0.5)
    ii, kk = np.nonzero(free)
    me = idx[ii, kk]
    rows, cols, vals = [], [], []
    diag = np.zeros(nfree)
    rhs = np.zeros(nfree)
    cut_edges = []  # (free index, boundary value, conductance)
    for di, dk in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        ni = ii + di
        nk = (kk + dk) % n_phi
        inside = (ni >= 0) & (ni < n_rho)
        ni_c = np.clip(ni, 0, n_rho - 1)
        nb_free = inside & free[ni_c, nk]
        diag += nb_free
        rows.append(me[nb_free])
        cols.append(idx[ni_c, nk][nb_free])
        vals.append(-np.ones(int(nb_free.sum())))
        fixed = inside & ~free[ni_c, nk]
        if fixed.any():
            za = ga.center + np.exp(rho[ii[fixed]] + 1j * phi[kk[fixed]])
            zb = ga.center + np.exp(rho[ni_c[fixed]] + 1j * phi[nk[fixed]])
            vb = fixed_val[ni_c[fixed], nk[fixed]]
            frac = np.empty(za.size)
            for v, curve in ((0.0, ga.inner), (1.0, ga.outer)):
                sel = vb == v
                if sel.any():
                    frac[sel] = _crossing_fraction(ga, za[sel], zb[sel], curve)
            cond = 1.0 / frac
            np.add.at(diag, me[fixed], cond)
            np.add.at(rhs, me[fixed], cond * vb)
            cut_edges.append((me[fixed], vb, cond))
    rows.append(np.arange(nfree))
    cols.append(np.arange(nfree))
    vals.append(diag)
    A = csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                   shape=(nfree, nfree))
    with _seeded_global_rng():
        ml = pyamg.smoothed_aggregation_solver(A, symmetry="symmetric")
        x = ml.solve(rhs, x0=np.full(nfree, 0.5), tol=1e-13, accel="cg", maxiter=500)
    res = float(np.linalg.norm(rhs - A @ x) / max(np.linalg.norm(rhs), 1e-300))
    if not res <= RESIDUAL_TOL:
        raise ToleranceError(f"linear solve stalled at relative residual {res:.3g}", residual=res)
    # energy: interior edges plus cut edges weighted by their conductance
    u = np.full(free.shape, np.nan)
    u[free] = x
    e = 0.0
    d_rho = np.diff(u, axis=0)
    d_phi = u - np.roll(u, 1, axis=1)
    e += float(np.nansum(d_rho ** 2) + np.nansum(d_phi ** 2))
    for i, vb, cond in cut_edges:
        e += float(np.sum(cond * (x[i] - vb) ** 2))
    return e, res


def _single(outer, inner, grid_n):
    ga = grid_annulus(outer, inner, grid_n)
    e, res = _solve(ga)
    if not e > 0:
        raise GeometryError("zero energy: boundaries touch")
    return 1.0 / e, e, res


def modulus(outer: DomainBoundary, inner: DomainBoundary, grid_n: int = 512) -> ModulusEstimate:
    """Modulus of the annulus between two nested closed curves.

    Solves at ``grid_n`` and ``2 grid_n`` angular cells.  Cut edges carry
    the exact crossing point of the curve, which makes the scheme second
    order, and the two values are extrapolated accordingly.
    """
    v1, e1, r1 = _single(outer, inner, grid_n)
    v2, _, r2 = _single(outer, inner, 2 * grid_n)
    return ModulusEstimate(value=v1, grid_n=grid_n, richardson=(4.0 * v2 - v1) / 3.0,
                           energy=e1, fine_value=v2, residual=max(r1, r2))


def modulus_lower_bound_check(estimate: ModulusEstimate, m: float) -> bool:
    """``richardson >= m`` up to the discretisation tolerance."""
    return bool(estimate.richardson >= m - estimate.tolerance)


def round_annulus(r: float, R: float, n: int = 4096, center: complex = 0.0):
    """Inner and outer circles as polygons (for calibration)."""
    t = 2.0 * math.pi * np.arange(n) / n
    e = np.exp(1j * t)
    return DomainBoundary(center + R * e), DomainBoundary(center + r * e)
