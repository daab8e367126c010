"""Rescaled iterates, their inverse-branch structure, domains and towers.

An :class:`EpsteinMap` is ``g(z) = f^q(s z) / s`` for a real quadratic
``f`` and a real scale ``s``.  Writing ``f^q = f^(q-1) o f`` gives
``g = F o Q`` with ``Q(z) = z**2`` and ``F(u) = f^(q-1)(s**2 u + c) / s``.
``F^-1`` is the chain of square-root branches inverting ``f^(q-1)`` on its
monotone range; its signs come from the critical orbit.

Complex evaluation always composes the quadratic steps; ``f^q`` is never
expanded into coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .curves import DomainBoundary, adaptive_polyline, symmetric_closure
from .errors import ContractError, DomainError, TraceError
from .quadratic_dynamics import QuadraticMap, RenormLevel, iterate

#: Tolerance on g(b) = b for a rescaled periodic point.
FIXED_POINT_TOL = 1e-12
#: Tolerance of the composition identities along a tower.
COMPOSITION_TOL = 1e-9


def _branch_signs(f: QuadraticMap, q: int) -> tuple:
    """Signs of ``f^i(c)``, i = 0..q-2: the branch of each square root."""
    x, out = f.c, []
    for _ in range(q - 1):
        if x == 0.0:
            raise ContractError("critical orbit returns to 0 before the period")
        out.append(1 if x > 0 else -1)
        x = x * x + f.c
    return tuple(out)


@dataclass(frozen=True)
class EpsteinMap:
    """``g(z) = f^q(s z)/s`` with its slit interval ``J = (-j, j)``.

    ``beta`` is the rescaled boundary fixed point (``g(beta) = beta``,
    ``+-1`` for a plain renormalization) and ``J' = (-j_prime, j_prime)``
    is the component of ``g^-1(J)`` containing 0.
    """

    base: QuadraticMap
    q: int
    beta_scale: float
    beta: float
    j: float
    j_prime: float
    eps: tuple
    p: int = 1

    @property
    def J(self) -> tuple:
        return (-self.j, self.j)

    @property
    def J_prime(self) -> tuple:
        return (-self.j_prime, self.j_prime)

    @property
    def orientation(self) -> int:
        """+1 when 0 is a minimum of g on the real line."""
        return 1 if self.beta > 0 else -1

    def __call__(self, z):
        s = self.beta_scale
        with np.errstate(over="ignore", invalid="ignore"):
            return iterate(self.base, s * np.asarray(z), self.q) / s

    def derivative(self, z):
        return self.base.derivative(self.beta_scale * np.asarray(z), self.q)

    def F(self, u):
        s = self.beta_scale
        with np.errstate(over="ignore", invalid="ignore"):
            return iterate(self.base, s * s * np.asarray(u) + self.base.c, self.q - 1) / s

    def F_inverse(self, y, steps: bool = False):
        """Univalent inverse of ``F`` on ``C_W``, by the square-root chain.

        With ``steps=True`` also return the list of square-root arguments,
        one per step, for branch-cut diagnostics.
        """
        s, c = self.beta_scale, self.base.c
        x = s * np.asarray(y, dtype=complex)
        args = []
        for e in reversed(self.eps):
            a = x - c
            args.append(a)
            x = e * np.sqrt(a)
        u = (x - c) / (s * s)
        return (u, args) if steps else u

    def preimages(self, y):
        """Both points of ``g^-1(y)``: ``(+sqrt(F^-1 y), -sqrt(F^-1 y))``."""
        r = np.sqrt(self.F_inverse(y))
        return r, -r

    def folded_preimage(self, y):
        """The preimage folded into the closed first quadrant."""
        r = np.sqrt(self.F_inverse(y))
        return np.abs(r.real) + 1j * np.abs(r.imag)

    def in_slit_plane(self, z):
        z = np.asarray(z, dtype=complex)
        return (z.imag != 0) | (np.abs(z.real) < self.j)

    def in_domain(self, z, rtol: float = 1e-8):
        """Membership in ``Omega = g^-1(C_J)``, decided by a branch round trip."""
        z = np.asarray(z, dtype=complex)
        w = self(z)
        ok = np.isfinite(w) & self.in_slit_plane(w)
        back = np.where(ok, w, 0.0)
        r = np.sqrt(self.F_inverse(back))
        err = np.minimum(np.abs(r - z), np.abs(r + z))
        return ok & (err <= rtol * np.maximum(1.0, np.abs(z)))


def _solve_j_prime(g_eval: Callable, b: float, target: float) -> float:
    """Solve ``g(x) = target`` for ``x > |b|`` on the monotone branch."""
    lo = abs(b)
    sgn = 1.0 if b > 0 else -1.0
    hi = lo
    step = 1e-3 * lo
    for _ in range(200):
        hi = lo + step
        v = float(np.real(g_eval(hi)))
        if not math.isfinite(v):
            break
        if sgn * v >= sgn * target:
            return brentq(lambda x: float(np.real(g_eval(x))) - target, lo, hi,
                          xtol=1e-15, rtol=1e-15)
        step *= 1.25
    raise ContractError("monotone branch does not reach the end of J")


def epstein_map(f: QuadraticMap, q: int, scale: float, beta: float, L: float,
                p: int = 1) -> EpsteinMap:
    """Rescaled iterate ``f^q(s z)/s`` with ``J = L.<-b, b>``, ``b = beta/scale``."""
    if L <= 1.0:
        raise DomainError("L must exceed 1")
    b = beta / scale
    if abs(iterate(f, beta, q) - beta) > 1e-9 * max(1.0, abs(beta)):
        raise ContractError("beta is not a fixed point of f^q")
    eps = _branch_signs(f, q)
    j = L * abs(b)

    def g_eval(x):
        return iterate(f, scale * x, q) / scale

    target = math.copysign(j, b)
    jp = _solve_j_prime(g_eval, b, target)
    return EpsteinMap(base=f, q=q, beta_scale=float(scale), beta=float(b), j=float(j),
                      j_prime=float(jp), eps=eps, p=p)


def rescale(f: QuadraticMap, level: RenormLevel, L: float = 1.05) -> EpsteinMap:
    """The renormalization ``beta^-1 o f^q o beta`` of one level."""
    if abs(iterate(f, level.beta, level.q) - level.beta) > 1e-9:
        raise ContractError("level does not belong to this map")
    return epstein_map(f, level.q, level.beta, level.beta, L)


def boundary_fixed_point_multiplier(g: EpsteinMap) -> float:
    """``g'(b)`` at the boundary fixed point, by the chain rule."""
    return float(np.real(g.derivative(g.beta)))


# --------------------------------------------------------------------------
# verification


@dataclass
class EpsteinReport:
    """Numerical evidence for membership in the Epstein class.

    The branch-chain check is a necessary condition for univalence of
    ``F^-1`` on ``C_J``; it is not a certificate.
    """

    checks: dict
    witnesses: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def _slit_plane_grid(j: float, samples: int) -> np.ndarray:
    n = max(4, int(math.sqrt(samples)))
    x = np.linspace(-3.0 * j, 3.0 * j, n)
    y = np.geomspace(1e-6 * j, 3.0 * j, n // 2)
    X, Y = np.meshgrid(x, np.concatenate([-y[::-1], y]))
    pts = (X + 1j * Y).ravel()
    real = np.linspace(-j, j, n + 2)[1:-1].astype(complex)
    return np.concatenate([pts, real])


def epstein_verify(g: EpsteinMap, samples: int = 1000) -> EpsteinReport:
    """Unimodality on J', closure(J') in J, the branch chain on C_J, g(+-b) = b."""
    checks, wit, stats = {}, {}, {}
    sgn = g.orientation
    x = np.linspace(0.0, g.j_prime, 2049)[1:]
    d = np.real(g.derivative(x))
    bad = np.nonzero(sgn * d <= 0)[0]
    checks["unimodal"] = bool(bad.size == 0)
    if bad.size:
        wit["unimodal"] = float(x[bad[0]])
    checks["closure_Jp_in_J"] = bool(g.j_prime < g.j)
    if not checks["closure_Jp_in_J"]:
        wit["closure_Jp_in_J"] = (g.j_prime, g.j)

    y = _slit_plane_grid(g.j, samples)
    u, args = g.F_inverse(y, steps=True)
    real_y = y.imag == 0
    cut = np.zeros(y.size, dtype=bool)
    for a in args:
        on_axis = np.abs(a.imag) <= 1e-14 * np.abs(a)
        cut |= on_axis & (a.real <= 0) & ~real_y
        cut |= real_y & (a.real <= 0)
    back = g.F(u)
    rt = np.abs(back - y) / np.maximum(1.0, np.abs(y))
    finite = np.isfinite(rt)
    stats["grid_points"] = int(y.size)
    stats["max_round_trip"] = float(rt[finite].max()) if finite.any() else math.inf
    checks["branch_chain"] = bool(not cut.any() and finite.all() and (rt <= 1e-9).all())
    if not checks["branch_chain"]:
        bad = np.nonzero(cut | ~finite | (rt > 1e-9))[0]
        wit["branch_chain"] = complex(y[bad[0]])
    # the two one-sided limits across J agree (the chain is analytic there)
    xs = np.linspace(-g.j, g.j, 129)[1:-1]
    jump = np.abs(g.F_inverse(xs + 1e-9j * g.j) - g.F_inverse(xs - 1e-9j * g.j))
    stats["max_jump_across_J"] = float(jump.max())
    checks["continuous_across_J"] = bool(jump.max() < 1e-6 * max(1.0, np.abs(u[np.isfinite(u)]).max()))

    gb = np.real(g(np.array([-g.beta, g.beta])))
    err = float(np.abs(gb - g.beta).max())
    stats["fixed_point_error"] = err
    checks["boundary_values"] = bool(err <= FIXED_POINT_TOL * max(1.0, abs(g.beta)))
    g0 = float(np.real(g(0.0)))
    stats["g0"] = g0
    checks["high_return"] = bool(g0 * g.beta <= 0.0)
    return EpsteinReport(checks=checks, witnesses=wit, stats=stats)


# --------------------------------------------------------------------------
# domain tracing


def preimage_arc(g: EpsteinMap, arc: Callable) -> Callable:
    """Upper boundary arc of ``g^-1(U)`` from that of a symmetric domain U.

    ``arc(t)``, t in [0, 1], runs from a positive real point through the
    closed upper half-plane to a negative real point.  Its image under
    the folded branch is the first-quadrant quarter of the preimage
    boundary; the result runs over that quarter and its mirror image.
    """

    def quarter(t):
        return g.folded_preimage(arc(t))

    def upper(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty(t.shape, dtype=complex)
        lo = t <= 0.5
        out[lo] = quarter(2.0 * t[lo])
        out[~lo] = -np.conj(quarter(2.0 - 2.0 * t[~lo]))
        return out

    return upper


def truncated_slit_arc(j: float, R: float) -> Callable:
    """Upper boundary of ``C_(-j,j)`` cut off by ``|z| < R``: edge, circle, edge."""
    if not R > j > 0:
        raise DomainError("need R > j > 0")
    edge = R - j
    total = 2.0 * edge + math.pi * R

    def arc(t):
        s = np.atleast_1d(np.asarray(t, dtype=float)) * total
        out = np.empty(s.shape, dtype=complex)
        a = s <= edge
        b = (s > edge) & (s < edge + math.pi * R)
        c = s >= edge + math.pi * R
        out[a] = j + s[a]
        out[b] = R * np.exp(1j * (s[b] - edge) / R)
        out[c] = -R + (s[c] - edge - math.pi * R)
        return out

    return arc


@dataclass
class OmegaTrace:
    """Traced boundary of ``Omega_R = g^-1(C_J intersect {|z|<R})``.

    ``w`` is the largest real point where the boundary leaves the real
    axis; it should be a critical point of g with ``g(w)`` beyond J.
    """

    boundary: DomainBoundary
    j_prime: float
    w: float
    R: float
    tol: float


def trace_omega(g: EpsteinMap, resolution: int = 256, R: Optional[float] = None,
                tol: Optional[float] = None) -> OmegaTrace:
    R = R if R is not None else 4.0 * g.j
    arc = truncated_slit_arc(g.j, R)
    upper = preimage_arc(g, arc)
    probe = upper(np.linspace(0.0, 1.0, 65))
    if not np.all(np.isfinite(probe)):
        raise TraceError("preimage branch is not finite along the slit edges")
    scale = float(np.abs(probe).max())
    tol = tol if tol is not None else 1e-8 * scale
    t, z = None, None
    for attempt in range(3):
        t, z = adaptive_polyline(upper, 0.0, 1.0, tol, n0=resolution * (4 ** attempt))
        jumps = np.abs(np.diff(z))
        if np.all(np.isfinite(z)) and jumps.max() < 0.05 * scale:
            break
    else:
        raise TraceError("boundary trace did not resolve")
    # pin the symmetric points exactly
    z[0] = g.j_prime
    mid = np.argmin(np.abs(t - 0.5))
    z[mid] = 1j * abs(z[mid].imag)
    z[-1] = -g.j_prime
    on_axis = np.abs(z.imag) <= 1e-12 * scale
    real_pts = z.real[on_axis & (z.real > 0)]
    w = float(real_pts.max()) if real_pts.size else float(g.j_prime)
    return OmegaTrace(boundary=symmetric_closure(z), j_prime=g.j_prime, w=w, R=R, tol=tol)


def omega_boundary(g: EpsteinMap, resolution: int = 256, R: Optional[float] = None,
                   tol: Optional[float] = None) -> DomainBoundary:
    """Closed boundary polyline of the component of ``g^-1(C_J)`` containing J'
    (truncated at ``|g| < R``), symmetric under conjugation and ``z -> -z``."""
    return trace_omega(g, resolution, R, tol).boundary


# --------------------------------------------------------------------------
# towers


@dataclass
class TowerLevel:
    n: int
    q: int
    p: int
    beta: float  # beta_{m,n}, signed
    I: float  # half-width of I_{m,n}
    J: float  # half-width of J_{m,n}
    map: EpsteinMap
    checks: dict = field(default_factory=dict)


@dataclass
class Tower:
    """Finite tower ``g_{m,n}(z) = f^(q_n)(beta_m z)/beta_m``, n = m..0.

    Level 0 is ``f`` itself with ``beta_0`` its positive fixed point.
    """

    m: int
    N: int
    L: float
    mu_hat: float
    lambda_hat: float
    levels: list  # TowerLevel, ordered n = m, m-1, ..., 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def maps(self) -> list:
        return [lv.map for lv in self.levels]

    @property
    def betas(self) -> list:
        return [lv.beta for lv in self.levels]

    @property
    def ps(self) -> list:
        return [lv.p for lv in self.levels]

    @property
    def intervals_I(self) -> list:
        return [(-lv.I, lv.I) for lv in self.levels]

    @property
    def intervals_J(self) -> list:
        return [(-lv.J, lv.J) for lv in self.levels]

    @property
    def params(self) -> tuple:
        return (self.N, self.L, self.mu_hat, self.lambda_hat)

    def to_json(self) -> dict:
        return {"m": self.m, "N": self.N, "L": self.L, "mu_hat": self.mu_hat,
                "lambda_hat": self.lambda_hat,
                "levels": [{"n": lv.n, "q": lv.q, "p": lv.p, "beta": lv.beta,
                            "I": [-lv.I, lv.I], "J": [-lv.J, lv.J],
                            "checks": lv.checks} for lv in self.levels],
                "failures": list(self.failures)}


def _compose(g: EpsteinMap, x, k: int):
    for _ in range(k):
        x = g(x)
    return x


def build_tower(f: QuadraticMap, levels: Sequence[RenormLevel], m: int,
                L: float = 1.05, N: Optional[int] = None,
                samples: int = 257) -> Tower:
    """Tower over ``levels[:m]`` rescaled by the single factor ``beta_m``.

    Checks (recorded, never raised): ``2^(m-n) <= p <= N^(m-n)``,
    ``mu^(m-n) < |beta_{m,n}| < lambda^(m-n)``, interval nesting,
    ``g_{m,m} = g_{m,n}^p`` on [-1, 1] and ``g_{m,n} = g_{m,n-1}^(a_n)``.
    The empirical bounds are widened by a relative 1e-6 so that the
    extreme ratios satisfy the strict inequalities.
    """
    if not 1 <= m <= len(levels):
        raise DomainError(f"m={m} outside 1..{len(levels)}")
    N = N if N is not None else max([lv.a for lv in levels[:m]] + [2])
    qs = [1] + [lv.q for lv in levels[:m]]
    bs = [f.beta_fixed] + [lv.beta for lv in levels[:m]]
    s = bs[m]
    ratios = [abs(bs[i]) / abs(bs[i + 1]) for i in range(m)]
    mu_hat = min(ratios) * (1.0 - 1e-6)
    lam_hat = max(ratios) * (1.0 + 1e-6)
    x = np.linspace(-1.0, 1.0, samples)
    maps = {}
    out, failures = [], []
    for n in range(m, -1, -1):
        g = epstein_map(f, qs[n], s, bs[n], L, p=qs[m] // qs[n])
        maps[n] = g
    top = np.real(maps[m](x))
    for n in range(m, -1, -1):
        g = maps[n]
        p = qs[m] // qs[n]
        bmn = bs[n] / s
        chk = {}
        chk["p_integer"] = bool(qs[m] % qs[n] == 0)
        chk["e_p"] = bool(2 ** (m - n) <= p <= N ** (m - n))
        if n < m:
            chk["e_I"] = bool(mu_hat ** (m - n) < abs(bmn) < lam_hat ** (m - n))
        half_I, half_J = abs(bmn), L * abs(bmn)
        if n >= 1:
            parent = abs(bs[n - 1] / s)
            chk["nested"] = bool(half_I < half_J < parent)
        comp = np.real(_compose(g, x.astype(complex), p))
        chk["composition_error"] = float(np.abs(comp - top).max())
        chk["composition"] = bool(chk["composition_error"] <= COMPOSITION_TOL)
        if n >= 1:
            a = qs[n] // qs[n - 1]
            xi = np.linspace(-half_I, half_I, samples)
            lhs = np.real(g(xi))
            rhs = np.real(_compose(maps[n - 1], xi.astype(complex), a))
            err = float(np.abs(lhs - rhs).max())
            chk["step_identity_error"] = err
            chk["step_identity"] = bool(err <= COMPOSITION_TOL * max(1.0, half_I))
        for key, val in chk.items():
            if val is False:
                failures.append(f"n={n}: {key}")
        out.append(TowerLevel(n=n, q=qs[n], p=p, beta=float(bmn), I=half_I, J=half_J,
                              map=g, checks=chk))
    if not mu_hat > 1.0:
        failures.append(f"mu_hat={mu_hat:.6g} not above 1")
    return Tower(m=m, N=N, L=L, mu_hat=mu_hat, lambda_hat=lam_hat, levels=out,
                 failures=failures)


# --------------------------------------------------------------------------
# convergence of renormalizations


@dataclass
class ConvergenceReport:
    """Sup distances between consecutive maps on a common grid."""

    sups: list
    excluded: int
    points: int

    @property
    def decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.sups, self.sups[1:]))


def convergence_estimate(g_list: Sequence[EpsteinMap], compact=(-0.9, 0.9, -0.2, 0.2),
                         grid: int = 64) -> ConvergenceReport:
    """Cauchy surrogate for compactness: ``sup |g_i - g_(i+1)|`` on a rectangle.

    Points outside any map's domain are excluded and counted.
    """
    x0, x1, y0, y1 = compact
    X, Y = np.meshgrid(np.linspace(x0, x1, grid), np.linspace(y0, y1, grid))
    z = (X + 1j * Y).ravel()
    keep = np.ones(z.size, dtype=bool)
    vals = []
    for g in g_list:
        keep &= g.in_domain(z)
        vals.append(g(z))
    if len(g_list) and not keep.any():
        raise ContractError("no grid point lies in every domain")
    sups = [float(np.abs(vals[i][keep] - vals[i + 1][keep]).max())
            for i in range(len(vals) - 1)]
    return ConvergenceReport(sups=sups, excluded=int((~keep).sum()), points=int(z.size))
