import cmath
import math

import numpy as np
import pytest

from oracles import bessel_k_series
from ovforge.base_geometry import ModelParams
from ovforge.errors import DomainError, PositivityError, StencilError
from ovforge.gibbons_hawking import (
    Omega_zeta_gh,
    SpacePoint,
    bianchi_residual,
    closedness_residual,
    complex_structure,
    connection_A,
    hamiltonian_residual,
    instanton_truncation_bound,
    laplacian_V,
    metric,
    moment_map,
    omega_triple,
    omega_zeta,
    potential_V,
    top_coefficient,
)
from ovforge.numerics import FiniteDifferenceSpec

P = ModelParams()
FD3 = FiniteDifferenceSpec(h=1e-3)


def random_points(seed, n, rmin=0.05, rmax=0.8):
    rng = np.random.default_rng(seed)
    rho = rng.uniform(rmin, rmax, n)
    ang = rng.uniform(-math.pi, math.pi, n)
    return [SpacePoint(r * cmath.exp(1j * a), *rng.uniform(0, 2 * math.pi, 2)) for r, a in zip(rho, ang)], rng


def test_potential_examples():
    assert potential_V(SpacePoint(1.0, 0.3), "sf", P) == 0
    assert potential_V(SpacePoint(math.exp(-1), 0.3), "sf", P) == pytest.approx(1 / (2 * math.pi))
    for te in (0.4, 1.7, 3.0):
        assert potential_V(SpacePoint(0.3j, te), "inst", P) == pytest.approx(potential_V(SpacePoint(0.3j, -te), "inst", P))


def test_instanton_series_against_oracle():
    # brute-force sum with the series oracle; the modes are centred on theta_e = pi
    p = SpacePoint(0.23 - 0.1j, 0.9)
    rho = abs(p.b)
    ref = sum(bessel_k_series(0, 2 * math.pi * n * rho) * math.cos(n * (p.theta_e - math.pi)) for n in range(1, 25)) / math.pi
    assert potential_V(p, "inst", P) == pytest.approx(ref, rel=1e-12)


def test_potential_singular_fiber():
    with pytest.raises(DomainError):
        potential_V(SpacePoint(0), "total", P)
    with pytest.raises(DomainError):
        potential_V(SpacePoint(1.2), "total", P)


def test_truncation_bound_dominates_tail():
    p = SpacePoint(0.1, 0.5)
    v24 = potential_V(p, "inst", P)
    v60 = potential_V(p, "inst", ModelParams(bessel_truncation=60))
    assert abs(v60 - v24) <= 1.1 * instanton_truncation_bound(p, P)


def test_connection_examples():
    assert connection_A(SpacePoint(0.4, 1.0), "sf", P).max_abs() == 0
    assert connection_A(SpacePoint(0.4 + 0.2j, 0.0), "inst", P).max_abs() <= 1e-17
    a = connection_A(SpacePoint(0.3 + 0.2j, 1.0), "total", P)
    assert np.all(a.coefficients.imag == 0)


def test_bianchi_at_reference_point():
    assert bianchi_residual(SpacePoint(0.3 + 0.2j, 1.0), P, FD3).max_abs() <= 1e-5


def test_bianchi_opposite_orientation_rejected():
    # flipping the star's sign leaves a residual of size |2 dA|
    p = SpacePoint(0.3 + 0.2j, 1.0)
    res = bianchi_residual(p, P, FD3)
    from ovforge.numerics import fd_exterior_derivative

    dA = fd_exterior_derivative(lambda q: connection_A(q, "total", P), 1, p, FD3)
    flipped = res - dA * 2.0
    assert flipped.max_abs() > 1e-2


def test_triple_examples():
    p = SpacePoint(0.3 + 0.2j, 1.0, 2.0)
    w1, w2, w3 = omega_triple(p, P)
    assert w1.component(0, 3) == 1 / (2 * math.pi)
    assert w3.component(0, 1) == potential_V(p, "total", P)


def test_closedness_sampled():
    pts, _ = random_points(11, 20, 0.2, 0.8)
    for p in pts:
        assert max(closedness_residual(p, P, FD3)) <= 1e-4


def test_laplacian_second_order_away_from_core():
    pts, _ = random_points(12, 10, 0.3, 0.8)
    for p in pts:
        assert abs(laplacian_V(p, P, FD3)) <= 1e-5


def test_laplacian_stencil_guard():
    with pytest.raises(StencilError):
        laplacian_V(SpacePoint(0.005), P, FD3)


def test_omega_zeta_reality_and_unit_circle():
    pts, rng = random_points(13, 10)
    for p in pts:
        z = complex(*rng.uniform(-2, 2, 2))
        assert np.abs(omega_zeta(p, z, P).coefficients.imag).max() <= 1e-14
        u = cmath.exp(1j * rng.uniform(-3, 3))
        w1, w2, _ = omega_triple(p, P)
        wp = w1 + w2 * 1j
        expect = (wp * u.conjugate()).imag * (-4 * math.pi**2)
        assert (omega_zeta(p, u, P) - expect).max_abs() <= 1e-12


def test_omega_zeta_rejects_zero():
    with pytest.raises(DomainError):
        omega_zeta(SpacePoint(0.3), 0, P)
    with pytest.raises(DomainError):
        Omega_zeta_gh(SpacePoint(0.3), 0, P)


def test_Omega_laurent_structure():
    p = SpacePoint(0.3 + 0.2j, 1.0, 0.5)
    zs = [0.5, 1.3j, -0.7 + 0.2j]
    mat = np.array([[1 / z, 1, z] for z in zs])
    vals = np.array([Omega_zeta_gh(p, z, P).coefficients for z in zs])
    cm1, c0, c1 = np.linalg.solve(mat, vals)
    w1, w2, w3 = omega_triple(p, P)
    wp = (w1 + w2 * 1j).coefficients
    assert np.abs(cm1 - (-4 * math.pi**2) * wp / 2j).max() <= 1e-12
    # the zeta^-1 and zeta coefficients are minus conjugates of each other
    assert np.abs(cm1 + np.conj(c1)).max() <= 1e-12
    # no further Laurent terms: a fourth sample is reproduced
    z4 = 0.4 - 1.1j
    pred = cm1 / z4 + c0 + c1 * z4
    assert np.abs(pred - Omega_zeta_gh(p, z4, P).coefficients).max() <= 1e-12


def test_omega_wedge_Omega_vanishes():
    pts, rng = random_points(14, 20)
    for p in pts:
        z = cmath.exp(1j * rng.uniform(-3, 3))
        o, big = omega_zeta(p, z, P), Omega_zeta_gh(p, z, P)
        assert abs(top_coefficient(o.wedge(big))) <= 1e-10 * o.max_abs() * big.max_abs()


def test_metric_positive_definite():
    pts, _ = random_points(15, 100, 0.05, 0.8)
    for p in pts:
        g = metric(p, "total", P)
        assert np.allclose(g, g.T)
        assert np.linalg.eigvalsh(g).min() > 0


def test_semiflat_metric_independent_of_angles():
    g0 = metric(SpacePoint(0.4, 0.0, 0.0), "sf", P)
    g1 = metric(SpacePoint(0.4, 2.0, 5.0), "sf", P)
    assert np.array_equal(g0, g1)


def test_metric_errors():
    with pytest.raises(PositivityError):
        metric(SpacePoint(1.0, 0.0), "total", P)
    with pytest.raises(DomainError):
        metric(SpacePoint(0.3), "inst", P)


def test_complex_structure_squares_to_minus_one():
    pts, rng = random_points(16, 20)
    for p in pts:
        j = complex_structure(p, cmath.exp(1j * rng.uniform(-3, 3)), P)
        assert np.abs(j @ j + np.eye(4)).max() <= 1e-10


def test_moment_map():
    assert moment_map(SpacePoint(0.4), 1, P) == 0
    assert moment_map(SpacePoint(0.4), 1j, P) == pytest.approx(-2 * math.pi * 0.4)
    with pytest.raises(DomainError, match="Hamiltonian"):
        moment_map(SpacePoint(0.4), 1.5, P)
    pts, rng = random_points(17, 20)
    for p in pts:
        assert hamiltonian_residual(p, cmath.exp(1j * rng.uniform(-3, 3)), P) <= 1e-6


def test_periodicity_and_decomposition():
    p = SpacePoint(0.3 - 0.25j, 1.2, 0.7)
    q = SpacePoint(p.b, p.theta_e + 2 * math.pi, p.theta_m + 2 * math.pi)
    z = 0.3 + 0.8j
    assert potential_V(p, "total", P) == potential_V(q, "total", P)
    assert potential_V(p, "total", P) == pytest.approx(potential_V(p, "sf", P) + potential_V(p, "inst", P), abs=1e-16)
    a = connection_A(p, "total", P) - connection_A(p, "sf", P) - connection_A(p, "inst", P)
    assert a.max_abs() <= 1e-16
    o = Omega_zeta_gh(p, z, P) - Omega_zeta_gh(p, z, P, "sf") - Omega_zeta_gh(p, z, P, "inst")
    assert o.max_abs() <= 1e-13
    w = omega_zeta(p, z, P) - omega_zeta(p, z, P, "sf") - omega_zeta(p, z, P, "inst")
    assert w.max_abs() <= 1e-13
