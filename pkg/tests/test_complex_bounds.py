import math

import numpy as np
import pytest

from renorm_lab import complex_bounds as cb
from renorm_lab import quadratic_dynamics as qd
from renorm_lab import renormalization as rn
from renorm_lab.annulus_modulus import modulus_lower_bound_check
from renorm_lab.curves import DomainBoundary, hausdorff
from renorm_lab.errors import DomainError, NoRestrictionFound

L_SWEEP = 1.6


@pytest.fixture(scope="module")
def g2(f_feig, levels_feig):
    return rn.rescale(f_feig, levels_feig[1], L_SWEEP)


@pytest.fixture(scope="module")
def cloud12(g2):
    return cb.invariant_set(g2, 12, 512)


@pytest.fixture(scope="module")
def hull12(cloud12):
    return cb.hull_boundary(cloud12, 256)


@pytest.fixture(scope="module")
def restriction(g2, hull12):
    return cb.find_pl_restriction(g2, "preimage", {"grid": 128}, hull=hull12)


def test_depth_zero_is_the_seed(g2):
    s = cb.invariant_set(g2, 0, 64)
    assert np.array_equal(s.points, np.linspace(-1, 1, 64).astype(complex))


def test_cardinality_at_most_doubles(g2):
    counts = cb.invariant_set(g2, 6, 64).counts()
    # per level: two branches, then the symmetric copies of each point
    assert all(b <= 2 * a for a, b in zip(counts, counts[1:]))


def test_forward_consistency(g2):
    s = cb.invariant_set(g2, 4, 64)
    for i in range(1, 5):
        z = s.level(i)
        for _ in range(i):
            z = g2(z)
        assert np.all(np.abs(z.imag) <= 1e-9) and np.all(np.abs(z.real) <= 1 + 1e-9)


def test_symmetric_and_nested(g2):
    a = cb.invariant_set(g2, 3, 64)
    b = cb.invariant_set(g2, 4, 64)
    pts = b.points
    for img in (np.conj(pts), -pts):
        d = np.abs(np.sort_complex(img) - np.sort_complex(pts))
        assert d.max() < 1e-9
    assert np.array_equal(b.points[: a.points.size], a.points)


def test_superstable_first_preimage(g_minus1):
    s = cb.invariant_set(g_minus1, 1, 65)
    lvl = s.level(1)
    real = lvl[np.abs(lvl.imag) < 1e-15].real
    w = g_minus1(lvl)
    assert np.all(np.abs(w.imag) < 1e-9) and np.all(np.abs(w.real) <= 1 + 1e-9)
    assert np.all(np.abs(real) <= g_minus1.j_prime)


def test_invalid_depth(g2):
    with pytest.raises(DomainError):
        cb.invariant_set(g2, -1)


def test_collinear_cloud_gives_rectangle():
    h = cb.hull_boundary(np.linspace(-1, 1, 100).astype(complex), 100)
    assert len(h.boundary) == 4
    assert np.ptp(h.boundary.points.imag) == pytest.approx(h.h)


def test_hull_contains_cloud(cloud12, hull12):
    assert hull12.components == 1
    assert np.all(hull12.contains(cloud12.points, tol=1e-12))
    assert np.all(hull12.boundary.contains(np.linspace(-1, 1, 101)))


def test_hull_area_shrinks_with_resolution(cloud12):
    areas = [cb.hull_boundary(cloud12, r).area for r in (256, 512, 1024)]
    assert areas[0] > areas[1] > areas[2] - 1e-3


def test_containment(cloud12):
    rep = cb.compact_containment_check(cloud12, (-L_SWEEP, L_SWEEP))
    assert rep.ok and not rep.alarm
    # the cloud meets the real axis inside [-1, 1]: distance j - 1 to the slits
    assert rep.slit_distance == pytest.approx(L_SWEEP - 1.0, abs=1e-12)
    assert rep.max_modulus == pytest.approx(1.0, abs=1e-12)


def test_containment_alarm_on_translated_cloud(cloud12):
    rep = cb.compact_containment_check(cloud12.points + 2.0, (-L_SWEEP, L_SWEEP))
    assert rep.alarm and not rep.ok


def test_containment_stable_under_depth(g2, cloud12):
    a = cb.compact_containment_check(cb.invariant_set(g2, 8, 512), L_SWEEP)
    b = cb.compact_containment_check(cloud12, L_SWEEP)
    assert abs(a.slit_distance - b.slit_distance) <= 0.2 * b.slit_distance


def test_invariance_on_cloud(g2, cloud12, hull12):
    rep = cb.invariance_check(hull12, g2, 10_000, cloud=cloud12)
    assert rep.samples == 10_000
    assert rep.forward_escapes == 0 and rep.backward_escapes == 0 and rep.ok


def test_invariance_fails_for_disjoint_square(g2):
    sq = DomainBoundary(np.array([5 + 5j, 6 + 5j, 6 + 6j, 5 + 6j]))
    rep = cb.invariance_check(sq, g2, 2000, tol=1e-3)
    assert rep.forward_fraction > 0.9


def test_restriction_found(restriction, hull12):
    r = restriction
    assert r.construction["strategy"] == "preimage" and r.construction["k"] <= 6
    assert r.separation > 10 * 1e-7
    assert r.modulus.richardson > 0
    assert np.all(r.V.contains(r.V_prime.points))
    assert np.all(r.V_prime.contains(hull12.boundary.points))
    assert np.all(r.V_prime.contains(np.linspace(-1, 1, 101)))
    assert modulus_lower_bound_check(r.modulus, 0.01)


def test_restriction_boundary_correspondence(g2, restriction):
    V, Vp = restriction.V, restriction.V_prime
    img = DomainBoundary(g2(Vp.points))
    assert hausdorff(img, V) <= 1e-6 * V.diameter


def test_restriction_degree_two(g2, restriction):
    V, Vp = restriction.V, restriction.V_prime
    rng = np.random.default_rng(7)
    p = V.points
    z = rng.uniform(p.real.min(), p.real.max(), 3000) + 1j * rng.uniform(p.imag.min(), p.imag.max(), 3000)
    z = z[V.contains(z) & (np.abs(z.imag) > 1e-6)]
    plus, minus = g2.preimages(z)
    inside = Vp.contains(plus).astype(int) + Vp.contains(minus).astype(int)
    assert np.mean(inside == 2) > 0.999


def test_restriction_symmetric(restriction):
    for b in (restriction.V, restriction.V_prime):
        assert hausdorff(b, b.transformed(np.conj)) < 1e-9


def test_restriction_superstable(g_minus1):
    g = qd.QuadraticMap(-1.0)
    gm = rn.rescale(g, qd.detect_renormalization(g, 2), L_SWEEP)
    hull = cb.hull_boundary(cb.invariant_set(gm, 10, 256), 256)
    r = cb.find_pl_restriction(gm, "preimage", {"grid": 128}, hull=hull)
    assert r.modulus.richardson > 0


def test_forced_failure(g2):
    with pytest.raises(NoRestrictionFound) as info:
        cb.find_pl_restriction(g2, "poincare", {"r_values": [1.0], "thetas": [3.0],
                                                "modulus": False})
    assert info.value.best is None or not info.value.best.accepted


def test_unknown_strategy(g2):
    with pytest.raises(DomainError):
        cb.find_pl_restriction(g2, "magic")


def test_sweep_edge_cases(f_feig):
    assert cb.complex_bounds_sweep(f_feig, 2, []).rows == []
    t = cb.complex_bounds_sweep(qd.QuadraticMap(0.2), 2, [2, 3])
    assert [r["status"] for r in t.rows] == ["level not found"] * 2
    assert not t.successes and math.isnan(t.min_modulus)


def test_sweep_csv_columns():
    t = cb.SweepTable(rows=[dict(n=2, q=4, modulus=0.1, separation=0.01, strategy="preimage",
                                 k_or_theta=0, status="ok", c=-1.4, N=2, L=1.6, grid=64,
                                 depth=4, density=16)])
    text = t.to_csv()
    assert text.startswith("n,q,modulus,separation,strategy,k_or_theta,status")
    assert text.endswith("\r\n")
