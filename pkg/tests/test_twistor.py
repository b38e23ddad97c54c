import cmath
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from oracles import affine_closed, bessel_k_series, dense_trapezoid_ray
from ovforge.base_geometry import ModelParams
from ovforge.errors import DomainError, RayProximityError, StencilError
from ovforge.gibbons_hawking import Omega_zeta_gh, SpacePoint, top_coefficient
from ovforge.numerics import FiniteDifferenceSpec
from ovforge.twistor import (
    Omega_zeta_coords,
    TwistorParam,
    chi_e_sf,
    chi_m,
    chi_m_sf,
    gmn_correction,
    kernel,
    reflection_defect,
    upsilon,
    verify_jump,
)

P = ModelParams()
REF = SpacePoint(0.3 + 0.2j, 1.0, 0.4)


def off_ray_zeta(rng, b, margin=0.2):
    while True:
        z = cmath.exp(1j * rng.uniform(-math.pi, math.pi))
        if min(abs(cmath.phase(z / b)), abs(cmath.phase(-z / b))) > margin:
            return z


def test_twistor_param():
    with pytest.raises(DomainError):
        TwistorParam(0)


def test_chi_e_examples():
    p = SpacePoint(0.4j, 0.0)
    assert chi_e_sf(p, 1, P) == 1
    q = SpacePoint(0.3 - 0.1j, 0.8)
    assert chi_e_sf(q, 0.5j, P) == pytest.approx(chi_e_sf(SpacePoint(q.b, 0.8 + 2 * math.pi), 0.5j, P), rel=1e-15)


def test_chi_e_unit_circle_identity():
    rng = np.random.default_rng(1)
    for _ in range(50):
        b = complex(*rng.uniform(-0.8, 0.8, 2))
        z = cmath.exp(1j * rng.uniform(-3, 3))
        general = (math.pi) * (b / z + z * b.conjugate())
        assert abs(general - 2 * math.pi * (z.conjugate() * b).real) <= 1e-14


def test_chi_e_modulus_one_on_wall():
    z = cmath.exp(0.3j)
    assert abs(chi_e_sf(SpacePoint(0.5j * z, 2.0), z, P)) == pytest.approx(1, abs=1e-15)


def test_chi_m_sf_monodromy():
    rng = np.random.default_rng(2)
    for _ in range(20):
        b = complex(*rng.uniform(-0.8, 0.8, 2))
        te, tm = rng.uniform(0, 6, 2)
        z = complex(*rng.uniform(-2, 2, 2))
        lhs = chi_m_sf(SpacePoint(b, te, tm + te, 1), z, P)
        rhs = chi_e_sf(SpacePoint(b, te, tm), z, P) * chi_m_sf(SpacePoint(b, te, tm, 0), z, P)
        assert abs(lhs / rhs - 1) <= 1e-12


def test_chi_m_sf_examples():
    assert chi_m_sf(SpacePoint(1.0), 1, P, branch=0) == pytest.approx(1, abs=1e-15)
    with pytest.raises(DomainError):
        chi_m_sf(SpacePoint(0), 1, P)


def test_chi_m_sf_magnitude_is_minus_phi_e():
    rng = np.random.default_rng(3)
    for _ in range(20):
        b = complex(*rng.uniform(-0.8, 0.8, 2))
        z = cmath.exp(1j * rng.uniform(-3, 3))
        phi_e, _ = affine_closed(b, z)
        assert abs(math.log(abs(chi_m_sf(SpacePoint(b, 0.2, 0.9), -1j * z, P))) + phi_e) <= 1e-12


def test_kernel_antisymmetry():
    rng = np.random.default_rng(4)
    for _ in range(50):
        a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        assert abs(kernel(b, a) + kernel(a, b)) <= 1e-14 * abs(kernel(a, b))


def test_correction_against_dense_quadrature():
    # independent route: brute trapezoid of both rays on s = log t
    p, z = REF, cmath.exp(0.7j)
    rho, u = abs(p.b), p.b / abs(p.b)
    c = math.pi * rho

    def ray(direction, sign):
        return lambda t: np.log1p(np.exp(-c * (t + 1 / t) + 1j * sign * p.theta_e)) * (direction * t + z) / (direction * t - z) / t

    ref = (1j / (4 * math.pi)) * (dense_trapezoid_ray(ray(-u, 1)) - dense_trapezoid_ray(ray(u, -1)))
    res = gmn_correction(p, z, P)
    assert abs(res.exponent - ref) <= 1e-10
    assert res.value == cmath.exp(res.exponent)
    assert res.quadrature_error >= 0


def test_correction_finite_at_theta_pi():
    res = gmn_correction(SpacePoint(0.3, math.pi), cmath.exp(1.0j), P)
    assert math.isfinite(abs(res.exponent))


def test_correction_decay_bound():
    b = 0.8 * cmath.exp(0.3j)
    z = cmath.exp(1j * math.pi / 4) * (-b / abs(b)) * cmath.exp(0.5j)
    res = gmn_correction(SpacePoint(b, 1.0), z, P)
    bound = bessel_k_series(0, 2 * math.pi * abs(b)) / math.pi
    assert 0.1 <= abs(res.exponent) / bound <= 10


def test_zero_instanton_limit():
    res = gmn_correction(REF, 0.6 + 0.8j, P, log_factor=lambda x: np.zeros_like(x))
    assert res.exponent == 0 and res.value == 1


def test_correction_theta_m_invariance():
    z = cmath.exp(2.0j)
    a = gmn_correction(REF, z, P).exponent
    b = gmn_correction(SpacePoint(REF.b, REF.theta_e, REF.theta_m + 1.7), z, P).exponent
    assert a == b


def test_correction_thread_determinism():
    z = cmath.exp(2.0j)
    with ThreadPoolExecutor(4) as ex:
        vals = list(ex.map(lambda _: gmn_correction(REF, z, P).exponent, range(8)))
    assert len(set(vals)) == 1


def test_ray_proximity():
    on_ray = -REF.b / abs(REF.b)
    with pytest.raises(RayProximityError):
        gmn_correction(REF, on_ray * cmath.exp(1e-7j), P)


def test_chi_m_continuity_off_rays():
    z = cmath.exp(2.0j)
    base = chi_m(REF, z, P)
    d1 = abs(chi_m(REF, z * cmath.exp(1e-3j), P) - base)
    d2 = abs(chi_m(REF, z * cmath.exp(1e-4j), P) - base)
    assert d2 < d1 and d1 / d2 == pytest.approx(10, rel=0.05)


@pytest.mark.parametrize("ray", ["l+", "l-"])
def test_jump_reference_point(ray):
    m = verify_jump(REF, ray, P)
    assert abs(m.measured_ratio / m.predicted - 1) <= 1e-6


def test_jump_predicted_factors():
    u = REF.b / abs(REF.b)
    plus = verify_jump(REF, "l+", P).predicted
    minus = verify_jump(REF, "l-", P).predicted
    assert plus == 1 + chi_e_sf(REF, -u, P)
    assert minus == 1 + 1 / chi_e_sf(REF, u, P)


def test_jump_raw_convergence():
    errs = [
        abs(verify_jump(REF, "l+", P, delta=d, extrapolate=False).measured_ratio / verify_jump(REF, "l+", P).predicted - 1)
        for d in (1e-2, 1e-3)
    ]
    assert errs[1] <= errs[0] / 5


def test_unknown_ray():
    with pytest.raises(DomainError):
        verify_jump(REF, "R+", P)


def test_upsilon_is_phase_times_correction():
    z = cmath.exp(2.0j)
    assert upsilon(REF, z, P) == pytest.approx(cmath.exp(1j * REF.theta_m) * gmn_correction(REF, z, P).value, rel=1e-15)


def test_reflection_product_form_converges():
    phi = cmath.phase(REF.b) + math.pi / 2
    prods = [reflection_defect(REF, phi, t, P)[1] for t in (1e-2, 1e-3, 1e-4)]
    assert prods[1] <= 1e-3 and prods[2] < prods[1] < prods[0]


def test_reflection_values_form_cauchy_sequences():
    phi = cmath.phase(REF.b) + math.pi / 2
    ts = (1e-2, 1e-3, 1e-4)
    small = [upsilon(REF, t * cmath.exp(1j * phi), P) for t in ts]
    large = [upsilon(REF, cmath.exp(1j * phi) / t, P) for t in ts]
    for seq in (small, large):
        assert abs(seq[2] - seq[1]) < abs(seq[1] - seq[0])


def test_Omega_coords_semiflat():
    fd = FiniteDifferenceSpec(h=1e-4, order=4)
    rng = np.random.default_rng(5)
    for _ in range(10):
        b = 0.5 * cmath.exp(1j * rng.uniform(-3, 3))
        z = off_ray_zeta(rng, b)
        p = SpacePoint(b, *rng.uniform(0, 6, 2))
        a, g = Omega_zeta_coords(p, z, P, "sf", fd), Omega_zeta_gh(p, z, P, "sf")
        assert (a - g).max_abs() <= 1e-8 * g.max_abs()


def test_Omega_coords_total_and_decomposable():
    z = cmath.exp(0.7j)
    a = Omega_zeta_coords(REF, z, P)
    g = Omega_zeta_gh(REF, z, P)
    assert (a - g).max_abs() <= 1e-4 * g.max_abs()
    assert abs(top_coefficient(a.wedge(a))) <= 1e-10 * a.max_abs() ** 2


def test_Omega_coords_refuses_wall_straddle():
    z = REF.b / abs(REF.b) * cmath.exp(1e-6j)
    with pytest.raises(StencilError):
        Omega_zeta_coords(REF, z, P)
