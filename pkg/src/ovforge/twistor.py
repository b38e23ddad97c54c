"""
Twistor-side coordinates: semi-flat chi_e, chi_m, the instanton-corrected
chi_m given by the ray-integral formula, its jumps across the BPS rays and
the holomorphic symplectic form assembled from the coordinates.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .base_geometry import GAMMA_M, BasePoint, ModelParams, central_charge
from .errors import DomainError, RayProximityError, SingularFactorError, StencilError
from .gibbons_hawking import SpacePoint, _check_base
from .numerics import FiniteDifferenceSpec, FormValue, fd_exterior_derivative, ray_integral


@dataclass(frozen=True)
class TwistorParam:
    zeta: complex

    def __post_init__(self):
        object.__setattr__(self, "zeta", complex(self.zeta))
        if self.zeta == 0:
            raise DomainError("zeta must be nonzero")


class CorrectionResult(NamedTuple):
    exponent: complex
    value: complex
    quadrature_error: float


class JumpMeasurement(NamedTuple):
    measured_ratio: complex
    predicted: complex


def _zeta(zeta) -> complex:
    if isinstance(zeta, TwistorParam):
        return zeta.zeta
    return TwistorParam(zeta).zeta


def kernel(zeta_prime, zeta):
    """Cauchy-type kernel (zeta' + zeta) / (zeta' - zeta)."""
    return (zeta_prime + zeta) / (zeta_prime - zeta)


# ---------------------------------------------------------------------------
# semi-flat coordinates
# ---------------------------------------------------------------------------


def chi_e_exponent(p: SpacePoint, zeta, params: ModelParams) -> complex:
    zeta = _zeta(zeta)
    b = p.b
    return (math.pi / params.epsilon) * (b / zeta + zeta * b.conjugate()) + 1j * p.theta_e


def chi_e_sf(p: SpacePoint, zeta, params: ModelParams = ModelParams()) -> complex:
    """chi_e = exp[(pi/eps)(zeta^-1 b + zeta conj(b)) + i theta_e]; single-valued."""
    return cmath.exp(chi_e_exponent(p, zeta, params))


def chi_m_sf_exponent(p: SpacePoint, zeta, params: ModelParams, branch: int | None = None) -> complex:
    zeta = _zeta(zeta)
    k = p.branch if branch is None else branch
    z_m = central_charge(GAMMA_M, BasePoint(p.b, k), params)
    return (math.pi / params.epsilon) * (z_m / zeta + zeta * z_m.conjugate()) + 1j * p.theta_m


def chi_m_sf(p: SpacePoint, zeta, params: ModelParams = ModelParams(), branch: int | None = None) -> complex:
    """chi_m^sf = exp[(pi/eps)(zeta^-1 Z_m + zeta conj(Z_m)) + i theta_m] on log sheet ``branch``."""
    return cmath.exp(chi_m_sf_exponent(p, zeta, params, branch))


# ---------------------------------------------------------------------------
# instanton correction
# ---------------------------------------------------------------------------


def _angle_between(a: complex, b: complex) -> float:
    return abs(cmath.phase(a / b))


def ray_distance(p: SpacePoint, zeta) -> tuple[float, float]:
    """Angular distance of ``zeta`` from l+ and from l- (radians)."""
    zeta = _zeta(zeta)
    u = p.b / abs(p.b)
    return _angle_between(zeta, -u), _angle_between(zeta, u)


def gmn_correction(
    p: SpacePoint,
    zeta,
    params: ModelParams = ModelParams(),
    log_factor: Callable[[np.ndarray], np.ndarray] = np.log1p,
) -> CorrectionResult:
    """Instanton correction factor of chi_m.

    exponent = (i/4 pi) [ int_{l+} log(1 + chi_e(z')) K dz'/z'
                          - int_{l-} log(1 + chi_e(z')^-1) K dz'/z' ],
    K = (z' + zeta)/(z' - zeta).  Both rays are parametrised by
    z' = (direction) t and integrated with `ray_integral`.  On l+,
    chi_e(z') = exp(-(pi/eps)|b|(t + 1/t) + i theta_e); on l-,
    chi_e(z')^-1 has the same modulus and phase -theta_e.

    ``log_factor`` replaces log(1 + x); passing a zero function gives the
    uncorrected (semi-flat) coordinate.
    """
    zeta = _zeta(zeta)
    _check_base(p, params)
    d_plus, d_minus = ray_distance(p, zeta)
    if min(d_plus, d_minus) < params.quad.pole_exclusion_radius:
        raise RayProximityError(
            f"zeta = {zeta} is within {params.quad.pole_exclusion_radius:g} rad of a BPS ray"
        )
    rho = abs(p.b)
    u_plus = -p.b / rho
    c = math.pi * rho / params.epsilon
    theta = p.theta_e

    def make(direction, sign):
        def integrand(t):
            x = np.exp(-c * (t + 1.0 / t) + 1j * sign * theta)
            zp = direction * t
            return log_factor(x) * kernel(zp, zeta) / t

        return integrand

    near = 0.35
    bp_plus = (abs(zeta),) if d_plus < near else ()
    bp_minus = (abs(zeta),) if d_minus < near else ()
    i_plus, e_plus = ray_integral(make(u_plus, +1), params.quad, bp_plus, full_output=True)
    i_minus, e_minus = ray_integral(make(-u_plus, -1), params.quad, bp_minus, full_output=True)
    exponent = (1j / (4.0 * math.pi)) * (i_plus - i_minus)
    return CorrectionResult(exponent, cmath.exp(exponent), (e_plus + e_minus) / (4.0 * math.pi))


def log_chi_m(p: SpacePoint, zeta, params: ModelParams = ModelParams(), branch: int | None = None) -> complex:
    """Exponent of the corrected chi_m (semi-flat exponent plus correction)."""
    return chi_m_sf_exponent(p, zeta, params, branch) + gmn_correction(p, zeta, params).exponent


def chi_m(p: SpacePoint, zeta, params: ModelParams = ModelParams(), branch: int | None = None) -> complex:
    """Instanton-corrected chi_m = chi_m^sf * exp(correction)."""
    return cmath.exp(log_chi_m(p, zeta, params, branch))


def upsilon(p: SpacePoint, zeta, params: ModelParams = ModelParams()) -> complex:
    """chi_m exp[-(pi/eps)(zeta^-1 Z_m + zeta conj Z_m)] = e^{i theta_m} * correction."""
    return cmath.exp(1j * p.theta_m + gmn_correction(p, zeta, params).exponent)


def reflection_defect(p: SpacePoint, phi: float, t: float, params: ModelParams = ModelParams()) -> tuple[float, float]:
    """Finite-zeta proxies for the zeta -> 0, infinity limits of Upsilon.

    Returns ``(|U0 - conj(Uinf)|, |U0 conj(Uinf) - 1|)`` with
    U0 = Upsilon(t e^{i phi}) and Uinf = Upsilon(e^{i phi} / t).
    """
    u0 = upsilon(p, t * cmath.exp(1j * phi), params)
    ui = upsilon(p, cmath.exp(1j * phi) / t, params)
    return abs(u0 - ui.conjugate()), abs(u0 * ui.conjugate() - 1.0)


# ---------------------------------------------------------------------------
# jumps
# ---------------------------------------------------------------------------


def richardson3(values) -> complex:
    """Limit of a sequence sampled at h, h/2, h/4 with error a h + b h^2 + ..."""
    f1, f2, f4 = values
    return (f1 - 6.0 * f2 + 8.0 * f4) / 3.0


def _log_ratios(samples):
    # logs of nearby complex numbers, unwrapped relative to the first
    base = cmath.log(samples[0])
    return [base] + [base + cmath.log(s / samples[0]) for s in samples[1:]]


def verify_jump(
    p: SpacePoint,
    ray: str,
    params: ModelParams = ModelParams(),
    delta: float = 1e-3,
    modulus: float = 1.0,
    extrapolate: bool = True,
) -> JumpMeasurement:
    """Two-sided ratio of chi_m across a BPS ray and the predicted factor.

    For l+ the ratio is chi_m(clockwise side) / chi_m(counter-clockwise side),
    predicted 1 + chi_e; for l- it is counter-clockwise over clockwise,
    predicted 1 + chi_e^-1.  chi_m is evaluated at zeta_ray e^{-+ i delta}.
    With ``extrapolate`` the ratio is Richardson-extrapolated from
    delta, delta/2, delta/4 to remove the O(delta) drift of the
    one-sided values.
    """
    u = p.b / abs(p.b)
    if ray == "l+":
        z0 = -u * modulus
    elif ray == "l-":
        z0 = u * modulus
    else:
        raise DomainError(f"unknown BPS ray {ray!r}")
    ce = chi_e_sf(p, z0, params)
    predicted = 1.0 + (ce if ray == "l+" else 1.0 / ce)
    if abs(predicted) < 1e-12:
        raise SingularFactorError("chi_e = -1 on the ray: singular point of the metric")

    def ratio(d):
        cw = log_chi_m(p, z0 * cmath.exp(-1j * d), params)
        ccw = log_chi_m(p, z0 * cmath.exp(1j * d), params)
        return cmath.exp(cw - ccw) if ray == "l+" else cmath.exp(ccw - cw)

    if not extrapolate:
        return JumpMeasurement(ratio(delta), predicted)
    logs = _log_ratios([ratio(delta), ratio(delta / 2), ratio(delta / 4)])
    return JumpMeasurement(cmath.exp(richardson3(logs)), predicted)


# ---------------------------------------------------------------------------
# holomorphic symplectic form from coordinates
# ---------------------------------------------------------------------------


def Omega_zeta_coords(
    p: SpacePoint,
    zeta,
    params: ModelParams = ModelParams(),
    part: str = "total",
    fd: FiniteDifferenceSpec | None = None,
) -> FormValue:
    """d log chi_e ^ d log chi_m by finite differences.

    ``part="sf"`` uses the semi-flat chi_m.  The logarithms are differenced
    modulo 2 pi i against the stencil centre.  Stencils that would cross
    the line Im(conj(zeta) b) = 0, where chi_m jumps, are refused.
    """
    zeta = _zeta(zeta)
    fd = fd or params.fd
    if part not in ("sf", "total"):
        raise DomainError("part must be 'sf' or 'total'")
    dist = abs((zeta.conjugate() * p.b).imag) / abs(zeta)
    if part == "total" and dist <= 2.0 * fd.radius:
        raise StencilError("stencil straddles the wall where chi_m jumps for this zeta")

    if part == "sf":
        fm = lambda q: chi_m_sf_exponent(q, zeta, params)
    else:
        fm = lambda q: log_chi_m(q, zeta, params)
    de = fd_exterior_derivative(lambda q: chi_e_exponent(q, zeta, params), 0, p, fd, log_valued=True)
    dm = fd_exterior_derivative(fm, 0, p, fd, log_valued=True)
    return de.wedge(dm)
