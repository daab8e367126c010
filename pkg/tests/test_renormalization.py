import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renorm_lab import quadratic_dynamics as qd
from renorm_lab import renormalization as rn
from renorm_lab.curves import hausdorff
from renorm_lab.errors import ContractError, DomainError

# tools/oracles/rescaled_maps.py: (g(0), (f^q)'(beta), j') at L = 1.05
ORACLE = {
    1: (-0.71605111552501737535, 2.4647294126277591769, 1.0204116418399391243),
    2: (-0.72799335986823053345, 2.5748077717752614469, 1.0195238676683722404),
    3: (-0.72717575943440749506, 2.5625273301108369419, 1.0196218693531087216),
    4: (-0.72735202112690026803, 2.563968568488943833, 1.0196108078600967496),
    5: (-0.72734345607621925418, 2.5637947550735741502, 1.0196122181003507056),
}
GOLDEN = (1 + math.sqrt(5)) / 2


@pytest.mark.parametrize("n", sorted(ORACLE))
def test_rescaled_maps_match_oracle(g_feig, n):
    g = g_feig[n]
    g0, mult, jp = ORACLE[n]
    assert float(np.real(g(0.0))) == pytest.approx(g0, abs=1e-10)
    assert rn.boundary_fixed_point_multiplier(g) == pytest.approx(mult, rel=1e-9)
    assert g.j_prime == pytest.approx(jp, abs=1e-10)


def test_superstable_rescaling(g_minus1):
    g = g_minus1
    assert abs(g(0.0)) < 1e-15
    assert float(np.real(g(1.0))) == pytest.approx(1.0, abs=1e-12)
    assert g.j_prime == pytest.approx(1.032875132561273911, abs=1e-12)
    # (f^2)'(beta) = 4 beta^2 at the fixed point beta = -1/golden ratio
    assert rn.boundary_fixed_point_multiplier(g) == pytest.approx(1.5278640450004206072, rel=1e-12)


def test_identities_on_real_line(g_feig):
    x = np.linspace(-1, 1, 101)
    for g in g_feig.values():
        assert np.allclose(np.real(g(x)), np.real(g(-x)), atol=1e-12)
        assert np.allclose(np.real(g(np.array([-1.0, 1.0]))), 1.0, rtol=0, atol=1e-11)
        assert float(np.real(g(0.0))) < 0


def test_complex_evaluation_matches_real_iterate(f_feig, g_feig):
    g = g_feig[3]
    x = np.linspace(-1, 1, 257)
    real = qd.iterate(f_feig, g.beta_scale * x, g.q) / g.beta_scale
    assert np.allclose(np.real(g(x.astype(complex))), real, atol=1e-12)


def test_multiplier_finite_difference(g_feig, g_minus1):
    for g in (g_minus1, *g_feig.values()):
        h = 1e-6
        fd = float(np.real(g(1.0 + h) - g(1.0 - h))) / (2 * h)
        mult = rn.boundary_fixed_point_multiplier(g)
        assert mult > 1
        assert fd == pytest.approx(mult, rel=1e-6)


def test_rescale_rejects_foreign_level(levels_feig):
    with pytest.raises(ContractError):
        rn.rescale(qd.QuadraticMap(-1.0), levels_feig[2])


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_epstein_verify_passes(g_feig, n):
    rep = rn.epstein_verify(g_feig[n])
    assert rep.ok, rep.witnesses


def test_epstein_verify_superstable(g_minus1):
    rep = rn.epstein_verify(g_minus1)
    assert rep.ok and rep.stats["g0"] == 0.0


def test_epstein_verify_flags_fabricated_map(g_feig):
    g = g_feig[2]
    bad = rn.EpsteinMap(base=g.base, q=g.q, beta_scale=g.beta_scale, beta=g.beta, j=g.j,
                        j_prime=g.j, eps=g.eps)
    rep = rn.epstein_verify(bad)
    assert not rep.checks["closure_Jp_in_J"] and "closure_Jp_in_J" in rep.witnesses


def test_conjugation_symmetry(g_feig):
    rng = np.random.default_rng(3)
    z = rng.uniform(-1, 1, 200) + 1j * rng.uniform(-0.5, 0.5, 200)
    for g in g_feig.values():
        assert np.allclose(g(np.conj(z)), np.conj(g(z)), rtol=1e-12, atol=1e-12)


def test_branch_round_trip(g_feig):
    g = g_feig[3]
    rng = np.random.default_rng(4)
    y = rng.uniform(-2, 2, 500) + 1j * rng.uniform(0.01, 2, 500)
    plus, minus = g.preimages(y)
    assert np.allclose(g(plus), y, atol=1e-9)
    assert np.allclose(g(minus), y, atol=1e-9)


def test_omega_superstable(g_minus1):
    tr = rn.trace_omega(g_minus1)
    b = tr.boundary
    pts = b.points
    # symmetric under conjugation and negation (as sets)
    assert hausdorff(b, b.transformed(np.conj)) < 1e-9
    assert hausdorff(b, b.transformed(np.negative)) < 1e-9
    on_axis = pts[np.abs(pts.imag) < 1e-12]
    assert np.min(np.abs(np.abs(on_axis.real) - tr.j_prime)) < 1e-8
    assert tr.w == pytest.approx(GOLDEN, abs=1e-6)


def test_omega_interior_maps_into_slit_plane(g_minus1):
    g = g_minus1
    tr = rn.trace_omega(g)
    rng = np.random.default_rng(5)
    z = rng.uniform(-2, 2, 5000) + 1j * rng.uniform(-2, 2, 5000)
    z = z[tr.boundary.contains(z)]
    w = g(z)
    ok = g.in_slit_plane(w) & (np.abs(w) < tr.R)
    assert ok.mean() > 0.999


def test_omega_resolution_stable(g_feig):
    a = rn.omega_boundary(g_feig[2], 256)
    b = rn.omega_boundary(g_feig[2], 512)
    assert hausdorff(a, b) < 1e-6


def test_omega_real_trace_within_w(g_feig):
    tr = rn.trace_omega(g_feig[2])
    real = tr.boundary.points[np.abs(tr.boundary.points.imag) < 1e-12].real
    assert np.all(np.abs(real) <= tr.w + 1e-12)
    assert tr.w >= tr.j_prime


def test_omega_meets_real_line_in_j_prime(g_feig):
    g = g_feig[2]
    x = np.linspace(-1.5 * g.j, 1.5 * g.j, 3001).astype(complex)
    inside = g.in_domain(x)
    assert np.array_equal(inside, np.abs(x.real) < g.j_prime)


def test_second_preimage_decreases(g_feig):
    g = g_feig[2]
    om = rn.omega_boundary(g)
    rng = np.random.default_rng(6)
    z = rng.uniform(-1.5, 1.5, 4000) + 1j * rng.uniform(-1.5, 1.5, 4000)
    z = z[om.contains(z)]
    w = g(z)
    ok = g.in_slit_plane(w)
    # g^-2 of the slit plane sits inside g^-1 of it
    second = z[ok & om.contains(w)]
    assert second.size and np.all(g.in_slit_plane(second))


def test_tower_m5(f_feig, levels_feig):
    t = rn.build_tower(f_feig, levels_feig, 5, 1.05, 2)
    assert t.ok, t.failures
    assert t.ps == [1, 2, 4, 8, 16, 32]
    top = t.levels[0]
    assert (top.I, top.beta) == (pytest.approx(1.0), pytest.approx(1.0))
    for lv in t.levels:
        assert lv.checks["composition_error"] <= 1e-9
    c = f_feig.c
    beta0 = (1 + math.sqrt(1 - 4 * c)) / 2
    ratios = [beta0 / abs(levels_feig[0].beta)] + [2.5573989758968537, 2.5005854907481845,
                                                    2.5037622993253749, 2.5028977831632742]
    assert t.mu_hat == pytest.approx(min(ratios) * (1 - 1e-6), rel=1e-9)
    assert t.lambda_hat == pytest.approx(max(ratios) * (1 + 1e-6), rel=1e-9)
    assert t.lambda_hat > t.mu_hat > 1


def test_tower_m4_period_doubling(f_feig, levels_feig):
    t = rn.build_tower(f_feig, levels_feig, 4, 1.05)
    assert [lv.p for lv in t.levels] == [2 ** (4 - lv.n) for lv in t.levels]
    for lv in t.levels[1:]:
        k = 4 - lv.n
        assert t.mu_hat ** k < abs(lv.beta) < t.lambda_hat ** k


def test_tower_m1(f_feig, levels_feig):
    t = rn.build_tower(f_feig, levels_feig, 1)
    assert t.ok and len(t.levels) == 2
    with pytest.raises(DomainError):
        rn.build_tower(f_feig, levels_feig, 7)


def test_tower_json(f_feig, levels_feig):
    js = rn.build_tower(f_feig, levels_feig, 3).to_json()
    assert js["m"] == 3 and [lv["n"] for lv in js["levels"]] == [3, 2, 1, 0]
    assert set(js["levels"][0]) >= {"n", "p", "beta", "I", "J", "checks"}


def test_convergence_decreasing(g_feig):
    rep = rn.convergence_estimate([g_feig[n] for n in range(2, 7)])
    assert rep.decreasing and rep.excluded == 0
    # frozen from a direct evaluation on the 64 x 64 grid
    assert rep.sups[:3] == pytest.approx([0.0024369675515237654, 0.0005114001097837446,
                                          3.315727579404132e-05], rel=1e-6)


def test_convergence_identical_maps(g_feig):
    assert rn.convergence_estimate([g_feig[3], g_feig[3]]).sups == [0.0]


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.99, 0.99))
def test_unimodal_on_real_domain(x):
    f = qd.QuadraticMap(qd.feigenbaum_parameter(6).value)
    lvl = qd.renorm_cascade(f, 2, 2)[1]
    g = rn.rescale(f, lvl)
    d = float(np.real(g.derivative(x)))
    if abs(x) > 1e-9:
        assert np.sign(d) == np.sign(x) * g.orientation
