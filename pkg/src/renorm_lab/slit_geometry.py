"""Slit planes, their hyperbolic metric and Poincare neighbourhoods.

The slit plane ``C_A`` of an interval ``A = (a, b)`` is normalised to
``C_(-1,1)`` by a real affine map and uniformised by ``sin`` from the
strip ``|Re w| < pi/2``; ``exp(i w)`` carries the strip onto the right
half-plane, where distances are closed-form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq, fsolve, minimize_scalar

from .curves import DomainBoundary, adaptive_polyline, symmetric_closure
from .errors import DomainError, NoIntersection

#: Relative gap above which the closed-form k(theta) and the measured
#: apex distance are flagged as disagreeing.
K_DISCREPANCY_TOL = 1e-6


def _check_theta(theta):
    if not (0.0 < theta < math.pi):
        raise DomainError(f"angle {theta} outside (0, pi)")


def _check_interval(A):
    a, b = float(A[0]), float(A[1])
    if not a < b:
        raise DomainError(f"degenerate interval {A}")
    return a, b


@dataclass(frozen=True)
class SlitPlane:
    """``C_A = (C minus R) union A``."""

    a: float
    b: float

    def __post_init__(self):
        _check_interval((self.a, self.b))

    def normalize(self, z):
        return (2.0 * np.asarray(z) - (self.a + self.b)) / (self.b - self.a)

    def denormalize(self, w):
        return 0.5 * ((self.b - self.a) * np.asarray(w) + (self.a + self.b))

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        return (z.imag != 0) | ((z.real > self.a) & (z.real < self.b))


# --------------------------------------------------------------------------
# Poincare neighbourhoods


@dataclass(frozen=True)
class PoincareRegion:
    """``D(A, theta)``: points of ``C_A`` within fixed hyperbolic distance of A.

    ``disk_upper`` is the disk whose boundary arc bounds the region in the
    upper half-plane, ``disk_lower`` its mirror image.  For theta below
    pi/2 the region is the union of both disks; above pi/2 it is their
    intersection (a lens).  Membership uses the half-plane rule, which
    covers both cases.
    """

    A: tuple
    theta: float
    disk_upper: tuple
    disk_lower: tuple

    @property
    def apex(self) -> complex:
        c, r = self.disk_upper
        return complex(c.real, c.imag + r)

    def contains(self, z, closed: bool = False, rtol: float = 0.0):
        z = np.asarray(z, dtype=complex)
        cu, r = self.disk_upper
        cl, _ = self.disk_lower
        lim = r * (1.0 + rtol)
        if closed:
            up = np.abs(z - cu) <= lim
            lo = np.abs(z - cl) <= lim
        else:
            up = np.abs(z - cu) < lim
            lo = np.abs(z - cl) < lim
        a, b = self.A
        on_a = (z.imag == 0) & (z.real > a) & (z.real < b)
        return np.where(z.imag > 0, up, np.where(z.imag < 0, lo, on_a | (closed & up)))

    def upper_arc(self, t):
        """Boundary arc in the upper half-plane, ``t`` in [0, 1] from b to a."""
        cu, r = self.disk_upper
        b = self.A[1]
        phi0 = np.angle(b - cu)
        sweep = math.pi - 2.0 * phi0  # symmetric about the vertical through cu
        return cu + r * np.exp(1j * (phi0 + np.asarray(t) * sweep))

    def boundary(self, tol: Optional[float] = None) -> DomainBoundary:
        """Closed adaptive polyline of the boundary (sagitta ``tol``)."""
        if tol is None:
            tol = 1e-6 * (self.A[1] - self.A[0])
        _, z = adaptive_polyline(self.upper_arc, 0.0, 1.0, tol)
        z[0], z[-1] = self.A[1], self.A[0]
        return symmetric_closure(z)

    def boundary_samples(self, n: int) -> np.ndarray:
        """``n`` points spread evenly over both arcs (endpoints excluded)."""
        m = max(1, n // 2)
        t = (np.arange(m) + 0.5) / m
        up = self.upper_arc(t)
        pts = np.concatenate([up, np.conj(up)])
        return pts[:n] if n % 2 == 0 else np.concatenate([pts, [self.apex]])[:n]


def poincare_region(A, theta: float) -> PoincareRegion:
    """Closed-form disks of ``D(A, theta)``.

    For ``A = (-1, 1)`` the upper boundary circle has centre ``i cot theta``
    and radius ``1 / sin theta``; it leaves the endpoint 1 at angle theta
    from the outward slit.  General ``A`` follows by affine covariance.
    """
    _check_theta(theta)
    a, b = _check_interval(A)
    half, mid = 0.5 * (b - a), 0.5 * (a + b)
    k = math.cos(theta) / math.sin(theta)
    r = half / math.sin(theta)
    cu = complex(mid, half * k)
    return PoincareRegion(A=(a, b), theta=float(theta), disk_upper=(cu, r),
                          disk_lower=(cu.conjugate(), r))


def contains(region: PoincareRegion, z):
    """Membership in the open region ``D(A, theta)`` (points of A included)."""
    return region.contains(z)


def external_angle(region: PoincareRegion, end: str = "b") -> float:
    """Angle between the upper boundary arc and the outward slit at an endpoint."""
    cu, _ = region.disk_upper
    a, b = region.A
    if end == "b":
        rad = b - cu
        tangent = 1j * rad  # counter-clockwise tangent leaves b upwards
        return float(np.angle(tangent))
    rad = a - cu
    tangent = -1j * rad
    return float(math.pi - np.angle(tangent))


# --------------------------------------------------------------------------
# hyperbolic metric


def _to_half_plane(A, z):
    plane = SlitPlane(*_check_interval(A))
    z = np.asarray(z, dtype=complex)
    if np.any(~plane.contains(z)):
        raise DomainError("point on the slit of C_A")
    w = np.arcsin(plane.normalize(z))
    return np.exp(1j * w)


def strip_coordinate(A, z):
    """Preimage of ``z`` in the strip ``|Re w| < pi/2`` under sin (after normalising A)."""
    plane = SlitPlane(*_check_interval(A))
    z = np.asarray(z, dtype=complex)
    if np.any(~plane.contains(z)):
        raise DomainError("point on the slit of C_A")
    return np.arcsin(plane.normalize(z))


def hyperbolic_distance(A, z1, z2):
    """Distance in the complete curvature -1 metric of ``C_A``."""
    u1, u2 = _to_half_plane(A, z1), _to_half_plane(A, z2)
    num = np.abs(u1 - u2)
    den = 2.0 * np.sqrt(u1.real * u2.real)
    d = 2.0 * np.arcsinh(num / den)
    return float(d) if np.ndim(d) == 0 else d


def distance_to_interval(A, z, xtol: float = 1e-10) -> float:
    """``inf_{x in A} d(z, x)``, minimised over the strip coordinate of x."""
    u = complex(_to_half_plane(A, z))
    if complex(z).imag == 0.0:  # a point of A itself
        return 0.0

    def dist(s):
        v = complex(math.cos(s), math.sin(s))
        return 2.0 * math.asinh(abs(u - v) / (2.0 * math.sqrt(u.real * v.real)))

    grid = np.linspace(-math.pi / 2, math.pi / 2, 257)[1:-1]
    vals = [dist(s) for s in grid]
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(dist, bounds=(lo, hi), method="bounded",
                          options={"xatol": xtol})
    return float(min(res.fun, vals[i]))


@dataclass(frozen=True)
class KTheta:
    """Closed-form ``log tan(pi/2 - theta/2)`` next to the measured distance
    from ``A = (-1, 1)`` to the apex of ``D(A, theta)``."""

    theta: float
    formula: float
    measured: float

    @property
    def discrepancy(self) -> bool:
        return abs(self.formula - self.measured) > K_DISCREPANCY_TOL * max(1.0, abs(self.measured))


def k_of_theta(theta: float) -> KTheta:
    _check_theta(theta)
    formula = math.log(math.tan(math.pi / 2 - theta / 2))
    region = poincare_region((-1.0, 1.0), theta)
    measured = distance_to_interval((-1.0, 1.0), region.apex)
    return KTheta(theta=float(theta), formula=formula, measured=measured)


# --------------------------------------------------------------------------
# the square map and the crossing point Z(K, theta)


def _quarter_arc(theta: float):
    region = poincare_region((-1.0, 1.0), theta)

    def arc(t):
        return region.upper_arc(0.5 * np.asarray(t))

    return arc


def square_image_boundary(theta: float, resolution: int = 512) -> DomainBoundary:
    """Image of the boundary of ``D((-1,1), theta)`` under ``z -> z**2``.

    The lower arc retraces the image of the upper arc, so the curve is
    the upper arc pushed forward, sampled at ``resolution`` points.
    """
    _check_theta(theta)
    if resolution < 8:
        raise DomainError("resolution must be at least 8")
    region = poincare_region((-1.0, 1.0), theta)
    t = np.arange(resolution) / resolution
    z = region.upper_arc(t) ** 2
    z[0] = 1.0
    return DomainBoundary(z, closed=True)


def _crossing_residual(K, theta):
    """Implicit equations of the two boundaries, scaled to be O(1).

    A point P of the upper half-plane lies on the image curve iff its
    principal square root lies on the small circle.
    """
    k = math.cos(theta) / math.sin(theta)
    r1 = 1.0 / math.sin(theta)
    cK, rK = poincare_region((-K, 1.0), theta).disk_upper

    def small(P):
        return (np.abs(np.sqrt(P) - 1j * k) ** 2 - r1 ** 2) / r1 ** 2

    def eqs(v):
        P = complex(v[0], v[1])
        return [float(small(P)), (abs(P - cK) ** 2 - rK ** 2) / rK ** 2]

    return small, eqs


def ls_intersection(K: float, theta: float, tol: float = 1e-13) -> complex:
    """Crossing ``Z(K, theta)`` in the upper half-plane of the boundaries of
    ``Q(D((-1,1), theta))`` and ``D((-K,1), theta)``.

    Both curves leave the point 1 along the same direction; that common
    tangency is not a crossing.  The residual of the image-curve equation
    is scanned along the arc of the larger region, the first genuine sign
    change is bracketed and solved, and the point is polished by a 2-d
    Newton solve on both implicit equations.

    Raises
    ------
    NoIntersection
        If the curves do not cross in the upper half-plane.
    """
    if not K > 1.0:
        raise DomainError("K must exceed 1")
    _check_theta(theta)
    big = poincare_region((-K, 1.0), theta)
    small, eqs = _crossing_residual(K, theta)

    def along(t):
        return small(big.upper_arc(t))

    t = np.concatenate([np.geomspace(1e-6, 1e-3, 128, endpoint=False),
                        np.linspace(1e-3, 1.0 - 1e-9, 4096)])
    f = along(t)
    noise = 1e-11
    ok = np.abs(f) > noise
    t, f = t[ok], f[ok]
    change = np.nonzero(np.sign(f[:-1]) != np.sign(f[1:]))[0]
    if not change.size:
        raise NoIntersection(f"no crossing for K={K}, theta={theta}")
    i = change[0]
    ts = brentq(lambda x: float(along(x)), t[i], t[i + 1], xtol=1e-15, rtol=1e-15)
    z0 = complex(big.upper_arc(ts))
    sol, _, ier, _ = fsolve(eqs, [z0.real, z0.imag], full_output=True, xtol=tol)
    Z = complex(sol[0], sol[1])
    if ier != 1 or Z.imag <= 0 or abs(Z - z0) > 1e-8 * max(1.0, abs(z0)):
        Z = z0
    return Z


def theta0_scan(K: float, thetas=None) -> float:
    """Largest sampled angle at which the crossing still exists."""
    if thetas is None:
        thetas = np.linspace(0.01, 3.1, 310)
    best = 0.0
    for th in sorted(thetas):
        try:
            ls_intersection(K, float(th))
        except NoIntersection:
            break
        best = float(th)
    return best


# --------------------------------------------------------------------------
# Schwarz inclusion


@dataclass
class SchwarzReport:
    """Sampled evidence for ``Psi(D(B, theta)) < D(Psi(B), theta)``."""

    ok: bool
    samples: int
    violations: int
    target: tuple
    witness: Optional[tuple] = None
    max_excess: float = 0.0


def schwarz_inclusion_check(psi: Callable, A, B, theta: float, samples: int = 1000,
                            target=None, rtol: float = 1e-9) -> SchwarzReport:
    """Map boundary samples of ``D(B, theta)`` and test membership in the
    Poincare neighbourhood of the image interval.

    ``psi`` must map real points of A to real points.  ``target``
    overrides ``Psi(B)`` (lets a caller check against the wrong interval).
    Evaluation errors propagate with the offending sample attached.
    """
    a, b = _check_interval(A)
    ba, bb = _check_interval(B)
    if ba < a or bb > b:
        raise DomainError("B must lie in A")
    region = poincare_region((ba, bb), theta)
    if target is None:
        ends = np.real(np.asarray([psi(complex(ba)), psi(complex(bb))], dtype=complex))
        target = (float(ends.min()), float(ends.max()))
    goal = poincare_region(target, theta)
    pts = region.boundary_samples(samples)
    images = np.empty_like(pts)
    for i, z in enumerate(pts):
        try:
            images[i] = psi(z)
        except Exception as exc:  # re-raised with the sample point
            raise type(exc)(f"{exc} (at sample {z!r})") from exc
    inside = goal.contains(images, closed=True, rtol=rtol)
    cu, r = goal.disk_upper
    cl, _ = goal.disk_lower
    excess = np.where(images.imag >= 0, np.abs(images - cu), np.abs(images - cl)) / r - 1.0
    bad = np.nonzero(~inside)[0]
    witness = (complex(pts[bad[0]]), complex(images[bad[0]])) if bad.size else None
    return SchwarzReport(ok=not bad.size, samples=int(pts.size), violations=int(bad.size),
                         target=tuple(target), witness=witness,
                         max_excess=float(max(excess.max(), 0.0)))


@dataclass(frozen=True)
class HyperbolicPoint:
    """A point of ``C_A`` together with its strip coordinate."""

    A: tuple
    z: complex
    strip_coord: complex

    @classmethod
    def of(cls, A, z) -> "HyperbolicPoint":
        a, b = _check_interval(A)
        return cls((a, b), complex(z), complex(strip_coordinate((a, b), z)))
