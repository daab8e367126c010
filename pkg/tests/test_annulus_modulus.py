import math

import numpy as np
import pytest

from renorm_lab import annulus_modulus as am
from renorm_lab.curves import DomainBoundary
from renorm_lab.errors import GeometryError

# tools/oracles/square_annulus.py: node-aligned Cartesian solve at 1024, 2048
# and 4096 cells, extrapolated with the observed order 4/3
SQUARE_ORACLE = 0.20642307777323124


def square(side, n=400, center=0.0):
    t = np.linspace(0, 1, n, endpoint=False)
    h = side / 2
    edges = [h - 1j * h + 2j * h * t, h + 1j * h - 2 * h * t,
             -h + 1j * h - 2j * h * t, -h - 1j * h + 2 * h * t]
    return DomainBoundary(center + np.concatenate(edges))


@pytest.mark.parametrize("log_ratio", [1.0, 2 * math.pi])
def test_round_annulus(log_ratio):
    outer, inner = am.round_annulus(1.0, math.exp(log_ratio))
    est = am.modulus(outer, inner, 512)
    exact = log_ratio / (2 * math.pi)
    assert abs(est.richardson - exact) / exact < 0.02
    assert est.value == pytest.approx(1.0 / est.energy)
    assert est.residual <= am.RESIDUAL_TOL


def test_square_annulus_against_oracle():
    est = am.modulus(square(4.0), square(1.0), 256)
    assert est.richardson == pytest.approx(SQUARE_ORACLE, rel=5e-4)
    assert abs(est.richardson - SQUARE_ORACLE) < abs(est.value - SQUARE_ORACLE)


def test_grid_convergence_on_squares():
    vals = [am.modulus(square(4.0), square(1.0), n).value for n in (64, 128, 256)]
    d = [abs(SQUARE_ORACLE - v) for v in vals]
    assert d[0] > d[1] > d[2]


def test_richardson_improves_eccentric_annulus():
    # an off-centre circle inside a circle: mod = acosh((R^2 + r^2 - d^2)/(2 R r)) / (2 pi)
    R, r, d = 1.0, 0.3, 0.4
    t = 2 * math.pi * np.arange(4096) / 4096
    outer = DomainBoundary(R * np.exp(1j * t))
    inner = DomainBoundary(d + r * np.exp(1j * t))
    exact = math.acosh((R * R + r * r - d * d) / (2 * R * r)) / (2 * math.pi)
    est = am.modulus(outer, inner, 128)
    assert abs(est.richardson - exact) < abs(est.value - exact)
    assert est.richardson == pytest.approx(exact, rel=1e-3)


def test_conformal_invariance_proxy():
    outer, inner = square(4.0), square(1.0)
    a = am.modulus(outer, inner, 128)
    b = am.modulus(outer.transformed(lambda z: 2 * z + 1), inner.transformed(lambda z: 2 * z + 1), 128)
    assert b.richardson == pytest.approx(a.richardson, abs=max(a.tolerance, 1e-6) * 2)


def test_shrinking_inner_increases_modulus():
    outer, inner = square(4.0), square(1.0)
    small = inner.transformed(lambda z: 0.5 * z)
    assert am.modulus(outer, small, 128).richardson > am.modulus(outer, inner, 128).richardson


def test_lower_bound_check():
    big = am.ModulusEstimate(value=1.0, grid_n=512, richardson=1.0, energy=1.0)
    small = am.ModulusEstimate(value=0.1592, grid_n=512, richardson=0.1592, energy=1 / 0.1592)
    assert am.modulus_lower_bound_check(big, 0.5)
    assert not am.modulus_lower_bound_check(small, 0.2)


def test_inner_not_inside_outer():
    with pytest.raises(GeometryError):
        am.modulus(square(1.0), square(4.0), 64)
    with pytest.raises(GeometryError):
        am.modulus(square(1.0), square(1.0, center=3.0), 64)


def test_too_coarse_grid():
    outer, inner = am.round_annulus(1.0, 2.0)
    with pytest.raises(GeometryError):
        am.grid_annulus(outer, inner, 8)


def test_grid_labels():
    outer, inner = am.round_annulus(1.0, 3.0)
    ga = am.grid_annulus(outer, inner, 64)
    labels = set(np.unique(ga.mask).tolist())
    assert labels == {ga.INNER, ga.ANNULUS, ga.OUTER, ga.BAND}


def test_deterministic():
    a = am.modulus(square(4.0), square(1.0), 64)
    b = am.modulus(square(4.0), square(1.0), 64)
    assert a.to_json() == b.to_json()
