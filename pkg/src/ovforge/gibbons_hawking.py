"""
Gibbons-Hawking description of the Ooguri-Vafa metric.

Chart: (b1, b2, theta_e, theta_m) with b = b1 + i b2 and b3 = eps theta_e / 2 pi.
The potential and connection split into a semi-flat part and a Bessel
series of instanton corrections.  The series is centred on the nut at
theta_e = pi, the point where chi_e = -1 on the wall; with this placement
the forms built here coincide with the twistor-side coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base_geometry import ModelParams, require_unit
from .errors import DomainError, PositivityError, StencilError
from .numerics import (
    TWO_PI,
    FiniteDifferenceSpec,
    FormValue,
    bessel_k,
    branch_log,
    fd_exterior_derivative,
    fd_second_derivative,
    hodge_star_3d,
)

PARTS = ("sf", "inst", "total")
NUT_ANGLE = math.pi


@dataclass(frozen=True)
class SpacePoint:
    """A point of M.  ``branch`` selects the sheet of log(b/r) used by
    branch-dependent quantities (A^sf, Z_m, chi_m)."""

    b: complex
    theta_e: float = 0.0
    theta_m: float = 0.0
    branch: int = 0

    def __post_init__(self):
        object.__setattr__(self, "b", complex(self.b))
        object.__setattr__(self, "theta_e", float(self.theta_e) % TWO_PI)
        object.__setattr__(self, "theta_m", float(self.theta_m) % TWO_PI)

    @property
    def b1(self) -> float:
        return self.b.real

    @property
    def b2(self) -> float:
        return self.b.imag

    def b3(self, epsilon: float) -> float:
        return epsilon * self.theta_e / TWO_PI

    def log_b(self, r: float) -> complex:
        return branch_log(self.b / r, self.branch)

    def coords(self) -> np.ndarray:
        return np.array([self.b.real, self.b.imag, self.theta_e, self.theta_m])

    def shifted(self, axis: int, delta: float) -> "SpacePoint":
        """Move along one chart axis, keeping the log sheet continuous."""
        x = self.coords()
        x[axis] += delta
        nb = complex(x[0], x[1])
        branch = self.branch
        if axis < 2 and nb != 0:
            target = branch_log(self.b, self.branch).imag
            branch = int(round((target - branch_log(nb, 0).imag) / TWO_PI))
        return SpacePoint(nb, x[2], x[3], branch)

    def with_angles(self, theta_e=None, theta_m=None) -> "SpacePoint":
        return SpacePoint(
            self.b,
            self.theta_e if theta_e is None else theta_e,
            self.theta_m if theta_m is None else theta_m,
            self.branch,
        )


def _check_part(part: str):
    if part not in PARTS:
        raise DomainError(f"part must be one of {PARTS}, got {part!r}")


def _check_base(p: SpacePoint, params: ModelParams):
    rho = abs(p.b)
    if rho == 0:
        raise DomainError("b = 0: the potential diverges on the singular fiber")
    if rho > params.r * (1 + 1e-14):
        raise DomainError(f"|b| = {rho} lies outside the base disc of radius {params.r}")


def _modes(p: SpacePoint, params: ModelParams):
    n = np.arange(1, int(params.bessel_truncation) + 1)
    x = TWO_PI * n * abs(p.b) / params.epsilon
    phase = n * (p.theta_e - NUT_ANGLE)
    return n, x, phase


def instanton_truncation_bound(p: SpacePoint, params: ModelParams) -> float:
    """First omitted term of the V^inst series, (1/pi eps) K0(2 pi (N+1)|b| / eps)."""
    x = TWO_PI * (params.bessel_truncation + 1) * abs(p.b) / params.epsilon
    return float(bessel_k(0, x)) / (math.pi * params.epsilon)


def potential_V(p: SpacePoint, part: str = "total", params: ModelParams = ModelParams()) -> float:
    """Gibbons-Hawking potential V = V^sf + V^inst.

    V^sf = -(1/2 pi eps) log(|b|/r) and
    V^inst = (1/pi eps) sum_{n=1}^{N} K0(2 pi n |b| / eps) cos(n (theta_e - pi)).
    """
    _check_part(part)
    _check_base(p, params)
    eps = params.epsilon
    v = 0.0
    if part in ("sf", "total"):
        v += -math.log(abs(p.b) / params.r) / (TWO_PI * eps)
    if part in ("inst", "total"):
        _, x, phase = _modes(p, params)
        v += float(np.sum(bessel_k(0, x) * np.cos(phase))) / (math.pi * eps)
    return v


def connection_A(p: SpacePoint, part: str = "total", params: ModelParams = ModelParams()) -> FormValue:
    """Connection 1-form A with dA = *dV.

    A^sf = -(1/4 pi^2) Im log(b/r) d theta_e (on the point's log sheet);
    A^inst = S (b1 db2 - b2 db1) / |b| with
    S = (1/pi eps) sum K1(2 pi n |b| / eps) sin(n (theta_e - pi)).
    """
    _check_part(part)
    _check_base(p, params)
    coeffs = np.zeros(4, dtype=complex)
    if part in ("sf", "total"):
        coeffs[2] += -p.log_b(params.r).imag / (4.0 * math.pi**2)
    if part in ("inst", "total"):
        _, x, phase = _modes(p, params)
        s = float(np.sum(bessel_k(1, x) * np.sin(phase))) / (math.pi * params.epsilon)
        rho = abs(p.b)
        coeffs[0] += -s * p.b2 / rho
        coeffs[1] += s * p.b1 / rho
    return FormValue(1, coeffs)


def _wedge1(a, b) -> FormValue:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return FormValue.from_matrix(np.outer(a, b) - np.outer(b, a))


def omega_triple(p: SpacePoint, params: ModelParams = ModelParams(), part: str = "total"):
    """The hyperkaehler triple (omega_1, omega_2, omega_3).

    omega_1 = db1 ^ alpha + V db2 ^ db3 and cyclic, alpha = d theta_m / 2 pi + A.
    ``part="sf"`` keeps d theta_m / 2 pi with the semi-flat fields;
    ``part="inst"`` is the remainder, so the parts add up to the total.
    """
    _check_part(part)
    v = potential_V(p, part, params)
    alpha = connection_A(p, part, params).coefficients.copy()
    if part in ("sf", "total"):
        alpha[3] += 1.0 / TWO_PI
    c = params.epsilon / TWO_PI
    db1 = np.array([1.0, 0, 0, 0])
    db2 = np.array([0, 1.0, 0, 0])
    db3 = np.array([0, 0, c, 0])
    w1 = _wedge1(db1, alpha) + v * _wedge1(db2, db3)
    w2 = _wedge1(db2, alpha) + v * _wedge1(db3, db1)
    w3 = _wedge1(db3, alpha) + v * _wedge1(db1, db2)
    return w1, w2, w3


def _nonzero(zeta) -> complex:
    zeta = complex(zeta)
    if zeta == 0:
        raise DomainError("zeta = 0 is not a valid twistor parameter")
    return zeta


def omega_zeta(p: SpacePoint, zeta: complex, params: ModelParams = ModelParams(), part: str = "total") -> FormValue:
    """Kaehler form for J(zeta):
    (4 pi^2/eps) [i (conj(zeta) w+ - zeta w-) + (1 - |zeta|^2) w3] / (1 + |zeta|^2)."""
    zeta = _nonzero(zeta)
    w1, w2, w3 = omega_triple(p, params, part)
    wp = w1 + 1j * w2
    wm = w1 - 1j * w2
    a2 = abs(zeta) ** 2
    inner = (wp * (1j * zeta.conjugate()) - wm * (1j * zeta) + w3 * (1.0 - a2)) / (1.0 + a2)
    return inner * (4.0 * math.pi**2 / params.epsilon)


def Omega_zeta_gh(p: SpacePoint, zeta: complex, params: ModelParams = ModelParams(), part: str = "total") -> FormValue:
    """Holomorphic symplectic form for J(zeta):
    -(4 pi^2/eps) [ (zeta^-1 w+ + zeta w-) / 2i + w3 ]."""
    zeta = _nonzero(zeta)
    w1, w2, w3 = omega_triple(p, params, part)
    wp = w1 + 1j * w2
    wm = w1 - 1j * w2
    inner = (wp / zeta + wm * zeta) / 2j + w3
    return inner * (-4.0 * math.pi**2 / params.epsilon)


def metric(p: SpacePoint, part: str = "total", params: ModelParams = ModelParams()) -> np.ndarray:
    """(4 pi^2/eps) [V (db1^2 + db2^2 + db3^2) + V^-1 alpha^2] in chart coordinates."""
    _check_part(part)
    if part == "inst":
        raise DomainError("the instanton part alone does not define a metric")
    v = potential_V(p, part, params)
    if not v > 0:
        raise PositivityError(f"V = {v:.6g} <= 0 at b = {p.b}, theta_e = {p.theta_e}")
    alpha = connection_A(p, part, params).coefficients.real.copy()
    alpha[3] += 1.0 / TWO_PI
    c = params.epsilon / TWO_PI
    g = v * np.diag([1.0, 1.0, c * c, 0.0]) + np.outer(alpha, alpha) / v
    return (4.0 * math.pi**2 / params.epsilon) * g


def complex_structure(p: SpacePoint, zeta: complex, params: ModelParams = ModelParams()) -> np.ndarray:
    """J(zeta) = g^-1 W(zeta) as a matrix, W the coefficient matrix of omega(zeta)."""
    zeta = require_unit(zeta, "J(zeta) from omega(zeta)")
    g = metric(p, "total", params)
    w = omega_zeta(p, zeta, params).matrix().real
    return np.linalg.solve(g, w)


def moment_map(p: SpacePoint, zeta: complex, params: ModelParams = ModelParams()) -> float:
    """Moment map (2 pi/eps) Im(conj(zeta) b) of the theta_m rotation."""
    zeta = require_unit(zeta, "the Hamiltonian moment map (the circle action is Hamiltonian only for |zeta| = 1)")
    return (TWO_PI / params.epsilon) * (zeta.conjugate() * p.b).imag


# ---------------------------------------------------------------------------
# residual checks
# ---------------------------------------------------------------------------


def laplacian_V(p: SpacePoint, params: ModelParams = ModelParams(), fd: FiniteDifferenceSpec | None = None) -> float:
    """Flat Laplacian of V in (b1, b2, b3) by central differences."""
    fd = fd or params.fd
    h = fd.h
    c = params.epsilon / TWO_PI
    if fd.radius >= abs(p.b) or not h < abs(p.b) / 10:
        raise StencilError("Laplacian stencil reaches the singular fiber")

    def along(axis, scale):
        return fd_second_derivative(
            lambda s: potential_V(p.shifted(axis, s / scale), "total", params), 0.0, h, fd.order
        )

    return along(0, 1.0) + along(1, 1.0) + along(2, c)


def bianchi_residual(p: SpacePoint, params: ModelParams = ModelParams(), fd: FiniteDifferenceSpec | None = None) -> FormValue:
    """dA - *dV evaluated with finite differences."""
    fd = fd or params.fd
    dA = fd_exterior_derivative(lambda q: connection_A(q, "total", params), 1, p, fd)
    dV = fd_exterior_derivative(lambda q: potential_V(q, "total", params), 0, p, fd)
    return dA - hodge_star_3d(dV, epsilon=params.epsilon)


def closedness_residual(p: SpacePoint, params: ModelParams = ModelParams(), fd: FiniteDifferenceSpec | None = None):
    """Max |d omega_i| coefficient for i = 1, 2, 3."""
    fd = fd or params.fd
    return tuple(
        fd_exterior_derivative(lambda q, i=i: omega_triple(q, params)[i], 2, p, fd).max_abs()
        for i in range(3)
    )


def hamiltonian_residual(p: SpacePoint, zeta: complex, params: ModelParams = ModelParams(), fd: FiniteDifferenceSpec | None = None) -> float:
    """Max |iota_{d/d theta_m} omega(zeta) - d mu| coefficient."""
    fd = fd or params.fd
    contraction = omega_zeta(p, zeta, params).interior(3)
    dmu = fd_exterior_derivative(lambda q: moment_map(q, zeta, params), 0, p, fd)
    return (contraction - dmu).max_abs()


def top_coefficient(form: FormValue) -> complex:
    """Coefficient of db1 ^ db2 ^ d theta_e ^ d theta_m."""
    if form.degree != 4:
        raise DomainError("expected a 4-form")
    return complex(form.coefficients[0])
