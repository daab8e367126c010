"""Real dynamics of the quadratic family x -> x**2 + c.

Iteration, superstable parameters, detection of symmetric periodic
intervals (renormalization levels) and real-bounds bookkeeping.

Everything here works on the exact composition of quadratic steps; the
polynomial f^q is never expanded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, NoRoot, ToleranceError

#: Absolute tolerance on |f_c^q(0)| for superstable parameters.
SUPERSTABLE_TOL = 1e-12
#: Periodic intervals shorter than this are not resolved in double precision.
RESOLUTION_FLOOR = 1e-9


@dataclass(frozen=True)
class QuadraticMap:
    """The real quadratic polynomial ``f(z) = z**2 + c``."""

    c: float

    def __call__(self, z):
        return z * z + self.c

    @property
    def beta_fixed(self) -> float:
        """Positive fixed point; ``[-p, p]`` is the invariant real interval."""
        return 0.5 * (1.0 + math.sqrt(1.0 - 4.0 * self.c))

    @property
    def renormalizable_family(self) -> bool:
        return -2.0 <= self.c <= 0.25

    def orbit(self, x, k: int):
        """Return ``[x, f(x), ..., f^k(x)]`` (array input gives stacked rows)."""
        out = [x]
        for _ in range(k):
            x = x * x + self.c
            out.append(x)
        return np.array(out)

    def derivative(self, x, k: int):
        """Exact derivative of ``f^k`` at ``x``: the product of ``2 f^i(x)``."""
        d = np.ones_like(np.asarray(x, dtype=float)) if np.isrealobj(x) else 1.0
        for _ in range(k):
            d = d * 2.0 * x
            x = x * x + self.c
        return d


def iterate(f: QuadraticMap, x, k: int):
    """Return ``f^k(x)`` by repeated evaluation.

    Escaping orbits are returned as they are (possibly ``inf``); no
    exception is raised.
    """
    if k < 0:
        raise DomainError("iterate needs k >= 0")
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(k):
            x = x * x + f.c
    return x


def critical_orbit_value(c, q: int):
    """``f_c^q(0)``; vectorised over ``c``."""
    x = np.zeros_like(np.asarray(c, dtype=float))
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(q):
            x = x * x + c
    return x if np.ndim(x) else float(x)


def is_primitive(c: float, q: int, tol: float = 1e-9) -> bool:
    """True if the critical point is not periodic with a period smaller than q."""
    x = 0.0
    for _ in range(1, q):
        x = x * x + c
        if abs(x) <= tol:
            return False
    return True


def find_superstable(q: int, bracket: Optional[Sequence[float]] = None,
                     max_iter: int = 400) -> float:
    """Superstable parameter of period ``q`` inside ``bracket``.

    Bisection on ``c -> f_c^q(0)`` down to adjacent doubles.  Without a
    bracket only periods that are powers of two are supported; their
    bracket comes from the period-doubling chain.

    Raises
    ------
    NoRoot
        The bracket shows no sign change.
    ToleranceError
        The final residual exceeds ``SUPERSTABLE_TOL``.
    """
    if q < 1:
        raise DomainError("period must be positive")
    if bracket is None:
        bracket = default_bracket(q)
    a, b = float(bracket[0]), float(bracket[1])
    if a > b:
        a, b = b, a
    fa, fb = critical_orbit_value(a, q), critical_orbit_value(b, q)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0) == (fb > 0):
        raise NoRoot(f"f_c^{q}(0) has no sign change on [{a}, {b}]")
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        fm = critical_orbit_value(m, q)
        if fm == 0.0:
            a = b = m
            break
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    else:
        raise ToleranceError(f"bisection for period {q} did not converge",
                             residual=b - a)
    c = min((a, b), key=lambda t: abs(critical_orbit_value(t, q)))
    res = abs(critical_orbit_value(c, q))
    if res > SUPERSTABLE_TOL:
        raise ToleranceError(f"|f_c^{q}(0)| = {res:.3e} above tolerance", residual=res)
    return c


def _power_of_two(q: int) -> int:
    k = q.bit_length() - 1
    if q <= 0 or (1 << k) != q:
        raise DomainError(f"no default bracket for period {q}; pass one explicitly")
    return k


def default_bracket(q: int) -> tuple:
    """Bracket isolating the period-doubling superstable parameter ``c(q)``."""
    k = _power_of_two(q)
    if k == 0:
        return (-0.5, 0.25)
    if k == 1:
        return (-1.5, -0.5)
    chain = _doubling_chain(k - 1)
    d = chain[-2] - chain[-1]
    return (chain[-1] - 0.5 * d, chain[-1] - 0.1 * d)


def _doubling_chain(depth: int) -> list:
    """``[c(1), c(2), ..., c(2**depth)]`` with ``c(1) = 0``."""
    chain = [0.0]
    if depth >= 1:
        chain.append(find_superstable(2, (-1.5, -0.5)))
    for k in range(2, depth + 1):
        d = chain[-2] - chain[-1]
        chain.append(find_superstable(2 ** k, (chain[-1] - 0.5 * d, chain[-1] - 0.1 * d)))
    return chain


@dataclass(frozen=True)
class FeigenbaumEstimate:
    """Superstable chain and its geometric extrapolation."""

    value: float
    sequence: tuple
    ratios: tuple
    depth: int


def feigenbaum_parameter(depth: int = 10) -> FeigenbaumEstimate:
    """Extrapolate the period-doubling accumulation parameter.

    ``sequence`` holds ``c(2**k)`` for ``k = 0..depth`` (``c(1) = 0``);
    ``ratios[n]`` is ``(c_{n-1} - c_{n-2}) / (c_n - c_{n-1})``.  The
    limit is ``c_n + (c_n - c_{n-1}) / (ratio_n - 1)`` with the last ratio.
    """
    if depth < 4:
        raise DomainError("depth must be at least 4")
    seq = np.array(_doubling_chain(depth))
    ratios = (seq[1:-1] - seq[:-2]) / (seq[2:] - seq[1:-1])
    value = seq[-1] + (seq[-1] - seq[-2]) / (ratios[-1] - 1.0)
    return FeigenbaumEstimate(float(value), tuple(map(float, seq)),
                              tuple(map(float, ratios)), depth)


# --------------------------------------------------------------------------
# periodic intervals


@dataclass(frozen=True)
class SignedInterval:
    """The closed interval ``<-beta, beta>``; ``beta`` keeps its sign."""

    beta: float

    def __post_init__(self):
        if not self.beta:
            raise DomainError("degenerate interval")

    @property
    def half_width(self) -> float:
        return abs(self.beta)

    @property
    def length(self) -> float:
        return 2.0 * abs(self.beta)

    @property
    def bounds(self) -> tuple:
        return (-abs(self.beta), abs(self.beta))

    def contains(self, x, tol: float = 0.0):
        return np.abs(x) <= abs(self.beta) + tol


@dataclass(frozen=True)
class RenormLevel:
    """One level: a symmetric q-periodic interval and its monotone range.

    ``W`` is the range of ``f^(q-1)`` on its maximal monotone interval
    ``Wc`` around ``f(I)``, clipped to the parent level's interval (to the
    invariant interval of ``f`` on the first level).
    """

    q: int
    beta: float
    a: int
    W: tuple
    Wc: tuple
    multiplier: float
    critical_value: float  # f^q(0)

    @property
    def I(self) -> SignedInterval:  # noqa: E743
        return SignedInterval(self.beta)

    @property
    def orientation(self) -> int:
        """+1 when 0 is a local minimum of f^q, -1 for a local maximum."""
        return 1 if self.beta > 0 else -1

    @property
    def enlargement_limit(self) -> float:
        """Largest t with t.I inside W."""
        return min(-self.W[0], self.W[1]) / abs(self.beta)


def _scan_grid(length: float, n: int) -> np.ndarray:
    """Offsets in (0, length]: uniform points merged with geometric ones."""
    lin = np.linspace(0.0, length, n + 1)[1:]
    geo = length * np.geomspace(1e-7, 1.0, n)
    return np.unique(np.concatenate([lin, geo]))


def _bisect_sign(func, a: float, b: float, iters: int = 200) -> float:
    fa = func(a)
    for _ in range(iters):
        m = 0.5 * (a + b)
        if m <= min(a, b) or m >= max(a, b):
            break
        fm = func(m)
        if fm == 0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def _first_sign_change(values: np.ndarray, ref_sign: float) -> Optional[int]:
    bad = np.nonzero(np.sign(values) != ref_sign)[0]
    return int(bad[0]) if bad.size else None


def _nearest_critical_point(f: QuadraticMap, k: int, start: float, direction: int,
                            span: float, grid: int) -> Optional[float]:
    """First zero of (f^k)' strictly beyond ``start`` along ``direction``.

    Returns ``None`` if (f^k)' keeps its sign for ``span``.
    """
    if k == 0:
        return None
    offs = _scan_grid(span, grid)
    with np.errstate(over="ignore", invalid="ignore"):
        return _locate_critical(f, k, start, direction, offs)


def _locate_critical(f, k, start, direction, offs):
    xs = start + direction * offs
    d = f.derivative(xs, k)
    ref = np.sign(f.derivative(start + direction * offs[0] * 1e-3, k))
    if ref == 0:
        ref = np.sign(d[0])
    idx = _first_sign_change(d, ref)
    if idx is None:
        return None
    lo = start + direction * (offs[idx - 1] if idx > 0 else offs[0] * 1e-3)
    hi = xs[idx]
    return _bisect_sign(lambda x: f.derivative(x, k), lo, hi)


def _interval_image(c: float, lo: float, hi: float) -> tuple:
    if lo <= 0.0 <= hi:
        return (c, max(lo * lo, hi * hi) + c)
    a, b = lo * lo + c, hi * hi + c
    return (min(a, b), max(a, b))


def _cycle_disjoint(f: QuadraticMap, b: float, q: int, tol: float) -> bool:
    """Images f^i(I), 0 < i < q, have no interior overlap with I."""
    lo, hi = -b, b
    for _ in range(1, q):
        lo, hi = _interval_image(f.c, lo, hi)
        overlap = min(hi, b) - max(lo, -b)
        if overlap > tol:
            return False
    return True


def detect_renormalization(f: QuadraticMap, q: int, within: Optional[float] = None,
                           grid: int = 2048) -> Optional[RenormLevel]:
    """Find the symmetric q-periodic interval of ``f``, if there is one.

    Candidates for the boundary point are the fixed points of ``f^q`` on
    the monotone branch next to 0, on the side fixed by the sign
    convention (positive iff 0 is a local minimum of f^q).  The outermost
    candidate that passes every check is returned: repelling boundary
    point, invariance, high return, unimodality and disjointness of the
    cycle of intervals.  ``within`` bounds the search (the parent level's
    half-width inside a cascade).
    """
    if q < 2:
        raise DomainError("period must be at least 2")
    if not f.renormalizable_family:
        return None
    c = f.c
    # (f^q)''(0) = 2 * prod_{i=1}^{q-1} 2 f^i(0)
    orb = f.orbit(0.0, q)
    second = 2.0 * np.prod(2.0 * orb[1:q])
    if second == 0.0 or not np.isfinite(second):
        return None
    s = 1 if second > 0 else -1
    span = abs(within) if within else f.beta_fixed
    x_crit = _nearest_critical_point(f, q, 0.0, 1, span, grid)
    limit = x_crit if x_crit is not None else span

    ys = _scan_grid(limit, grid)[:-1]
    with np.errstate(over="ignore", invalid="ignore"):
        phi = iterate(f, ys, q) - s * ys
    roots = []
    sg = np.sign(phi)
    for i in np.nonzero(sg[1:] != sg[:-1])[0]:
        r = _bisect_sign(lambda y: iterate(f, y, q) - s * y, ys[i], ys[i + 1])
        roots.append(r)
    fq0 = float(orb[q])
    for y in sorted(roots, reverse=True):
        beta = s * y
        mult = float(f.derivative(beta, q))
        if mult <= 1.0:
            continue
        if abs(fq0) > y * (1 + 1e-12):
            continue
        if fq0 * beta > 0:  # high return: 0 in <beta, f^q(0)>
            continue
        xs = np.linspace(-y, y, grid + 1)
        d = f.derivative(xs, q)
        left, right = d[xs < 0], d[xs > 0]
        if not (np.all(np.sign(right) == s) and np.all(np.sign(left) == -s)):
            continue
        if not _cycle_disjoint(f, y, q, tol=1e-12 * max(1.0, y)):
            continue
        level = RenormLevel(q=q, beta=beta, a=q, W=(-math.inf, math.inf),
                            Wc=(-math.inf, math.inf), multiplier=mult,
                            critical_value=fq0)
        Wc, W = monotone_range(f, level, grid=grid, parent=within)
        return RenormLevel(q=q, beta=beta, a=q, W=W, Wc=Wc, multiplier=mult,
                           critical_value=fq0)
    return None


def monotone_range(f: QuadraticMap, level: RenormLevel, grid: int = 2048,
                   parent: Optional[float] = None) -> tuple:
    """Maximal ``Wc`` around ``f(I)`` on which ``f^(q-1)`` is monotone.

    Returns ``(Wc, W)`` with ``W = f^(q-1)(Wc)`` sorted.  Endpoints are
    located by bisection on the sign of the exact derivative product.
    The range is measured for the return map of the enclosing level:
    ``W`` is clipped to ``(-|parent|, |parent|)`` (the invariant interval
    ``[-p, p]`` of ``f`` when ``parent`` is None) and ``Wc`` is pulled
    back accordingly.
    """
    q, b = level.q, abs(level.beta)
    k = q - 1
    c = f.c
    P = abs(parent) if parent else f.beta_fixed
    lo0, hi0 = c, b * b + c
    span = 2.0 * f.beta_fixed + 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        left = _nearest_critical_point(f, k, lo0, -1, span, grid)
        right = _nearest_critical_point(f, k, hi0, 1, span, grid)
    wc = [left if left is not None else -math.inf,
          right if right is not None else math.inf]
    ends = [iterate(f, x, k) if math.isfinite(x) else math.inf for x in wc]
    for i, anchor in ((0, lo0), (1, hi0)):
        if abs(ends[i]) <= P:
            continue
        target = math.copysign(P, ends[i])
        far = wc[i]
        if not math.isfinite(far):
            far = anchor + (span if i else -span)
        wc[i] = _bisect_sign(lambda y: iterate(f, y, k) - target, anchor, far)
        ends[i] = target
    order = sorted(range(2), key=lambda i: ends[i])
    W = (float(ends[order[0]]), float(ends[order[1]]))
    Wc = (float(wc[0]), float(wc[1]))
    if not (W[0] < -b and W[1] > b):
        raise ToleranceError("monotone range does not contain the periodic interval")
    return Wc, W


def renorm_cascade(f: QuadraticMap, N: int = 2, max_depth: int = 6,
                   grid: int = 2048) -> list:
    """Greedy nested renormalization levels with ratios ``a_n`` in [2, N].

    The list stops early when no further level is found or the interval
    falls below ``RESOLUTION_FLOOR``; levels are never extrapolated.
    """
    if N < 2:
        raise DomainError("N must be at least 2")
    levels = []
    q_prev, parent = 1, None
    while len(levels) < max_depth:
        found = None
        for a in range(2, N + 1):
            lvl = detect_renormalization(f, q_prev * a, within=parent, grid=grid)
            if lvl is None:
                continue
            if parent is not None and abs(lvl.beta) >= abs(parent):
                continue
            found = RenormLevel(q=lvl.q, beta=lvl.beta, a=a, W=lvl.W, Wc=lvl.Wc,
                                multiplier=lvl.multiplier,
                                critical_value=lvl.critical_value)
            break
        if found is None or 2 * abs(found.beta) < RESOLUTION_FLOOR:
            break
        levels.append(found)
        q_prev, parent = found.q, found.beta
    return levels


# --------------------------------------------------------------------------
# real bounds


@dataclass
class RealBoundsReport:
    """Interval geometry along a cascade.

    ``ratios[k] = |I(q_k)| / |I(q_{k+1})|``; ``fits[k]`` says whether
    ``L.I(q_k)`` lies in ``W_k``; ``nested[k]`` checks
    ``I(q_k) < W_k < I(q_{k-1})`` (vacuous on the first level).
    """

    L: float
    periods: list
    ratios: list
    ratio_ok: list
    fits: list
    nested: list
    enlargement_limits: list
    mu_hat: float
    lambda_hat: float
    L_hat: float
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def ratio_differences(self) -> list:
        """Relative successive differences of the ratio sequence."""
        r = self.ratios
        return [abs(r[i + 1] - r[i]) / abs(r[i + 1]) for i in range(len(r) - 1)]


def verify_real_bounds(levels: Sequence[RenormLevel], L: float = 1.05,
                       start: int = 0) -> RealBoundsReport:
    """Check interval ratios and definite enlargement ``L.I(q_n)`` in ``W_n``.

    Checks are recorded, never raised.  ``start`` skips the first levels
    (the "n >= n(f)" threshold) when forming failures and ``L_hat``.
    """
    if len(levels) < 2:
        raise DomainError("need at least two levels")
    halfs = [abs(l.beta) for l in levels]
    ratios = [halfs[i] / halfs[i + 1] for i in range(len(halfs) - 1)]
    ratio_ok = [r > 1.0 for r in ratios]
    limits = [l.enlargement_limit for l in levels]
    fits = [t > L for t in limits]
    nested = [True]
    for i in range(1, len(levels)):
        W = levels[i].W
        nested.append(halfs[i] < min(-W[0], W[1]) and
                      -halfs[i - 1] <= W[0] and W[1] <= halfs[i - 1])
    failures = []
    for i in range(start, len(levels)):
        n = i + 1
        if not fits[i]:
            failures.append(f"level {n}: {L}.I not inside W (limit {limits[i]:.6g})")
        if not nested[i]:
            failures.append(f"level {n}: W not nested between I(q_n) and I(q_n-1)")
        if i < len(ratios) and not ratio_ok[i]:
            failures.append(f"level {n}: ratio {ratios[i]:.6g} <= 1")
    used = ratios[start:] or ratios
    return RealBoundsReport(L=L, periods=[l.q for l in levels], ratios=ratios,
                            ratio_ok=ratio_ok, fits=fits, nested=nested,
                            enlargement_limits=limits, mu_hat=min(used),
                            lambda_hat=max(used), L_hat=min(limits[start:]),
                            failures=failures)
