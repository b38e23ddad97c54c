"""
Base disc, charge lattice, central charge, BPS rays and chambers.

The base is B = {|b| < r} with a focus-focus point at b = 0.  Charges are
integer pairs (n_e, n_m) in the basis (gamma_e, gamma_m); a positive loop
around b = 0 acts by gamma_m -> gamma_m + gamma_e.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .numerics import TWO_PI, FiniteDifferenceSpec, QuadratureSpec, branch_log

UNIT_TOL = 1e-12

B1, B2, R_PLUS, R_MINUS, SINGULAR = "B1", "B2", "R+", "R-", "singular"


@dataclass(frozen=True)
class ModelParams:
    """Global constants of the model together with numerical controls."""

    r: float = 1.0
    epsilon: float = 1.0
    bessel_truncation: int = 24
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    fd: FiniteDifferenceSpec = field(default_factory=FiniteDifferenceSpec)

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError(f"r must be > 0, got {self.r}")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be > 0, got {self.epsilon}")
        if int(self.bessel_truncation) < 1:
            raise DomainError("bessel_truncation must be >= 1")


@dataclass(frozen=True)
class Charge:
    n_e: int
    n_m: int

    def __add__(self, other):
        return Charge(self.n_e + other.n_e, self.n_m + other.n_m)

    def __neg__(self):
        return Charge(-self.n_e, -self.n_m)


GAMMA_E = Charge(1, 0)
GAMMA_M = Charge(0, 1)


@dataclass(frozen=True)
class BasePoint:
    """A point of B' with a choice of logarithm sheet ``k``."""

    b: complex
    k: int = 0

    def __post_init__(self):
        object.__setattr__(self, "b", complex(self.b))
        if self.b == 0:
            raise DomainError("b = 0 is the singular fiber")


@dataclass(frozen=True)
class RaySpec:
    plane: str  # "zeta" or "b"
    direction: complex
    kind: str  # "l+", "l-", "R+", "R-"

    def __post_init__(self):
        if abs(abs(self.direction) - 1.0) > UNIT_TOL:
            raise DomainError("ray direction must have unit modulus")
        allowed = {"zeta": ("l+", "l-"), "b": ("R+", "R-")}
        if self.plane not in allowed or self.kind not in allowed[self.plane]:
            raise DomainError(f"ray kind {self.kind!r} does not live in the {self.plane}-plane")


def require_unit(zeta: complex, what: str = "this quantity") -> complex:
    zeta = complex(zeta)
    if abs(abs(zeta) - 1.0) > UNIT_TOL:
        raise DomainError(f"{what} requires |zeta| = 1, got |zeta| = {abs(zeta):.15g}")
    return zeta


def monodromy(gamma: Charge, winding: int = 1) -> Charge:
    """Apply ``winding`` loops of the monodromy (n_e, n_m) -> (n_e + n_m, n_m)."""
    return Charge(gamma.n_e + winding * gamma.n_m, gamma.n_m)


def pairing(gamma: Charge, other: Charge) -> int:
    """Antisymmetric pairing with <gamma_e, gamma_m> = 1."""
    return gamma.n_e * other.n_m - gamma.n_m * other.n_e


def central_charge(gamma: Charge, p: BasePoint, params: ModelParams) -> complex:
    """Z(gamma) = n_e b + n_m (b log(b/r) - b) / (2 pi i), log on sheet p.k."""
    b = p.b
    if abs(b) > params.r * (1 + 1e-14):
        raise DomainError(f"|b| = {abs(b)} exceeds the base radius {params.r}")
    z_m = (b * branch_log(b / params.r, p.k) - b) / (2j * math.pi)
    return gamma.n_e * b + gamma.n_m * z_m


def bps_ray(p: BasePoint, kind: str) -> RaySpec:
    """The ray l+ = {b/zeta < 0} or l- = {b/zeta > 0} in the zeta-plane."""
    u = p.b / abs(p.b)
    if kind == "l+":
        return RaySpec("zeta", -u, "l+")
    if kind == "l-":
        return RaySpec("zeta", u, "l-")
    raise DomainError(f"unknown BPS ray {kind!r}")


def wall_ray(zeta: complex, kind: str) -> RaySpec:
    """R+ = {Re(conj(zeta) b) = 0, Im > 0} (direction i zeta) or R- (direction -i zeta)."""
    zeta = require_unit(zeta, "the wall")
    if kind == "R+":
        return RaySpec("b", 1j * zeta, "R+")
    if kind == "R-":
        return RaySpec("b", -1j * zeta, "R-")
    raise DomainError(f"unknown wall ray {kind!r}")


def classify_wall(b: complex, zeta: complex, tol: float = 0.0) -> str:
    """Chamber or wall ray containing ``b`` for the unit twistor parameter ``zeta``.

    B1 = {Re(conj(zeta) b) < 0}, B2 = {Re(conj(zeta) b) > 0}; points with
    |Re| <= tol * |b| count as lying on the wall.
    """
    zeta = require_unit(zeta, "classify_wall")
    b = complex(b)
    if b == 0:
        return SINGULAR
    w = zeta.conjugate() * b
    if abs(w.real) <= tol * abs(b):
        return R_PLUS if w.imag > 0 else R_MINUS
    return B2 if w.real > 0 else B1


def chart_log(b: complex, zeta: complex, chart: int, r: float = 1.0) -> complex:
    """log(b/r) on the mirror chart sheets.

    Chart 1 has its cut along R+ and chart 2 along R-, arranged so that
    log_1 = log_2 on B1 and log_1 = log_2 + 2 pi i on B2.  Arguments are
    measured from arg(zeta): chart 1 takes arg(conj(zeta) b) in
    (pi/2, 5 pi/2), chart 2 in (-pi/2, 3 pi/2).
    """
    zeta = require_unit(zeta, "chart_log")
    b = complex(b)
    if b == 0:
        raise DomainError("log of zero")
    rel = math.atan2((zeta.conjugate() * b).imag, (zeta.conjugate() * b).real)
    if chart == 1:
        lo = math.pi / 2
    elif chart == 2:
        lo = -math.pi / 2
    else:
        raise DomainError(f"chart must be 1 or 2, got {chart}")
    while rel <= lo:
        rel += TWO_PI
    while rel > lo + TWO_PI:
        rel -= TWO_PI
    arg = math.atan2(zeta.imag, zeta.real) + rel
    return complex(math.log(abs(b) / r), arg)


def sheet_of(log_value: complex, b: complex, r: float = 1.0) -> int:
    """Branch index k with branch_log(b/r, k) == log_value."""
    return int(round((log_value.imag - branch_log(b / r, 0).imag) / TWO_PI))


def _log_term(b: complex, k: int, params: ModelParams) -> complex:
    return b * branch_log(b / params.r, k) - b


def affine_coords(p: BasePoint, zeta: complex, params: ModelParams) -> tuple[float, float]:
    """Symplectic affine coordinates (phi_e, phi_m) on the base."""
    zeta = require_unit(zeta, "the symplectic affine coordinates")
    zb = zeta.conjugate()
    phi_m = -(TWO_PI / params.epsilon) * (zb * p.b).imag
    phi_e = -(1.0 / params.epsilon) * (zb * _log_term(p.b, p.k, params)).real
    return phi_e, phi_m


def complex_affine_coords(p: BasePoint, zeta: complex, params: ModelParams) -> tuple[float, float]:
    """((2 pi/eps) Re(conj(zeta) b), (1/eps) Im[conj(zeta)(b log(b/r) - b)]).

    These equal log|chi_e(zeta)| and log|chi_m^sf(zeta)|.
    """
    zeta = require_unit(zeta, "the complex affine coordinates")
    zb = zeta.conjugate()
    first = (TWO_PI / params.epsilon) * (zb * p.b).real
    second = (1.0 / params.epsilon) * (zb * _log_term(p.b, p.k, params)).imag
    return first, second


def dt_invariant(gamma: Charge) -> int:
    """Numerical DT invariant: 1 on +-gamma_e, 0 otherwise, for every b."""
    return 1 if gamma.n_m == 0 and abs(gamma.n_e) == 1 else 0


def random_base_points(rng: np.random.Generator, n: int, rmin: float, rmax: float) -> np.ndarray:
    """Complex points with modulus uniform in [rmin, rmax] and uniform angle."""
    rho = rng.uniform(rmin, rmax, n)
    ang = rng.uniform(-math.pi, math.pi, n)
    return rho * np.exp(1j * ang)
