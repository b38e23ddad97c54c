"""
SYZ side of the Ooguri-Vafa space.

Fibration Psi over the base, disc-bounding fibers, mirror coordinates
(w, u) on the two charts, the corrected gluing across the walls R+ and R-,
the comparison of those gluings with the jumps of chi_m, and the
semi-flat fiberwise transform.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .base_geometry import (
    B1,
    B2,
    R_MINUS,
    R_PLUS,
    ModelParams,
    chart_log,
    classify_wall,
    require_unit,
)
from .errors import DomainError, SingularFactorError
from .gibbons_hawking import SpacePoint, Omega_zeta_gh, omega_zeta
from .numerics import TWO_PI, FiniteDifferenceSpec, FormValue, fd_exterior_derivative
from .twistor import chi_e_exponent, log_chi_m, richardson3

WALL_TOL = 1e-12


# ---------------------------------------------------------------------------
# fibration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiberClass:
    s: float
    lam: float

    @property
    def nodal(self) -> bool:
        return self.s == 0.0 and self.lam == 0.0


def fibration_psi(p: SpacePoint, zeta: complex, params: ModelParams = ModelParams()) -> FiberClass:
    """(s, lambda) with s + i lambda = (2 pi / eps) conj(zeta) b."""
    zeta = require_unit(zeta, "the fibration")
    v = (TWO_PI / params.epsilon) * zeta.conjugate() * p.b
    return FiberClass(v.real, v.imag)


def bounds_disc(f: FiberClass) -> bool:
    return abs(f.s) <= WALL_TOL and not f.nodal


def disc_area(f: FiberClass) -> float:
    """Signed area -lambda of the disc class bounded by T_{0, lambda}."""
    if not bounds_disc(f):
        raise DomainError("fiber does not bound a holomorphic disc")
    return -f.lam


def special_lagrangian_residual(
    p: SpacePoint,
    zeta: complex,
    params: ModelParams = ModelParams(),
    fd: FiniteDifferenceSpec | None = None,
) -> tuple[float, float]:
    """(|omega(zeta)(d_te, d_tm)|, max |i_{d_tm} Omega(zeta) + i dlog chi_e|)."""
    zeta = require_unit(zeta, "the special Lagrangian condition")
    if p.b == 0:
        raise DomainError("the nodal fiber is excluded")
    lagrangian = abs(omega_zeta(p, zeta, params).component(2, 3))
    reduced = Omega_zeta_gh(p, zeta, params).interior(3)
    dlog = fd_exterior_derivative(
        lambda q: chi_e_exponent(q, zeta, params), 0, p, fd or params.fd, log_valued=True
    )
    return lagrangian, (reduced + dlog * 1j).max_abs()


# ---------------------------------------------------------------------------
# mirror coordinates and charts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MirrorPoint:
    b: complex
    theta_e_check: float
    theta_m_check: float
    chart: int = 1

    def __post_init__(self):
        object.__setattr__(self, "b", complex(self.b))
        if self.b == 0:
            raise DomainError("b = 0 has no mirror chart")
        if self.chart not in (1, 2):
            raise DomainError("chart must be 1 or 2")
        object.__setattr__(self, "theta_e_check", float(self.theta_e_check) % TWO_PI)
        object.__setattr__(self, "theta_m_check", float(self.theta_m_check) % TWO_PI)


def _mirror_exponents(b, te_check, tm_check, chart, zeta, params):
    zeta = require_unit(zeta, "the mirror coordinates")
    b = complex(b)
    if b == 0:
        raise DomainError("b = 0 has no mirror coordinates")
    zb = zeta.conjugate()
    phi_m = -(TWO_PI / params.epsilon) * (zb * b).imag
    lg = chart_log(b, zeta, chart, params.r)
    phi_e = -(1.0 / params.epsilon) * (zb * (b * lg - b)).real
    return phi_m + 1j * tm_check, -phi_e - 1j * te_check


def mirror_coords(
    b: complex,
    theta_e_check: float,
    theta_m_check: float,
    chart: int,
    zeta: complex,
    params: ModelParams = ModelParams(),
) -> tuple[complex, complex]:
    """w = exp(phi_m + i te_check), u = exp(-phi_e^chart - i te_check) on the given chart."""
    lw, lu = _mirror_exponents(b, theta_e_check, theta_m_check, chart, zeta, params)
    return cmath.exp(lw), cmath.exp(lu)


def mirror_point_coords(m: MirrorPoint, zeta: complex, params: ModelParams = ModelParams()):
    return mirror_coords(m.b, m.theta_e_check, m.theta_m_check, m.chart, zeta, params)


def change_chart(m: MirrorPoint, to_chart: int, zeta: complex) -> MirrorPoint:
    """Re-express the dual angles on the other chart.

    On B1 the charts agree.  On B2, te_check(1) = te_check(2) - tm_check, which
    absorbs the 2 pi i jump between the chart logarithms.
    """
    if to_chart == m.chart:
        return m
    side = classify_wall(m.b, zeta)
    if side not in (B1, B2):
        raise DomainError(f"chart change on the wall {side}")
    te = m.theta_e_check
    if side == B2:
        te = te - m.theta_m_check if to_chart == 1 else te + m.theta_m_check
    return MirrorPoint(m.b, te, m.theta_m_check, to_chart)


def angles_from_space(theta_e: float, theta_m: float) -> tuple[float, float]:
    """Dual angles under the identification w = chi_e(-i zeta), u = chi_m^sf(-i zeta)."""
    return (-theta_m) % TWO_PI, theta_e % TWO_PI


def angles_to_space(theta_e_check: float, theta_m_check: float) -> tuple[float, float]:
    return theta_m_check % TWO_PI, (-theta_e_check) % TWO_PI


# ---------------------------------------------------------------------------
# gluing
# ---------------------------------------------------------------------------


def gluing_factor(w: complex, crossing: str) -> complex:
    if crossing == R_PLUS:
        return 1.0 + w
    if crossing == R_MINUS:
        return 1.0 + 1.0 / w
    raise DomainError(f"unknown wall {crossing!r}")


def glue(u: complex, w: complex, from_chart: int, crossing: str, chamber: str | None = None) -> complex:
    """Transport u across a wall or between charts.

    For a wall crossing ``from_chart`` names the side the point leaves:
    2 for the B2 side, 1 for the B1 side.  Leaving B2 across R+ multiplies
    by (1 + w) and across R- by (1 + 1/w); the opposite direction divides.
    With ``crossing="none"`` the chart relation u1 = u2 w on B2 (identity on
    B1) is applied from ``from_chart`` to the other chart; ``chamber`` must
    then be given.
    """
    u, w = complex(u), complex(w)
    if w == 0:
        raise DomainError("w = 0 is not a point of the mirror")
    if from_chart not in (1, 2):
        raise DomainError("from_chart must be 1 or 2")
    if crossing == "none":
        if chamber == B1:
            return u
        if chamber == B2:
            return u * w if from_chart == 2 else u / w
        raise DomainError("crossing 'none' needs chamber B1 or B2")
    if w == -1:
        raise SingularFactorError("w = -1: the gluing factor vanishes (nodal point of the mirror)")
    f = gluing_factor(w, crossing)
    return u * f if from_chart == 2 else u / f


def glue_loop(u: complex, w: complex) -> complex:
    """Carry u once around b = 0: B1 -> R+ -> B2, switch to chart 1, B2 -> R- -> B1."""
    u = glue(u, w, 1, R_PLUS)
    u = glue(u, w, 2, "none", chamber=B2)
    return glue(u, w, 2, R_MINUS)


# ---------------------------------------------------------------------------
# mirror vs twistor
# ---------------------------------------------------------------------------


class EquivalenceResult(NamedTuple):
    gluing_factor: complex
    twistor_jump: complex


def _point_near(b: complex, ref_arg: float, theta_e: float, theta_m: float) -> SpacePoint:
    # log sheet chosen continuous with arg = ref_arg, so the wall is not a cut
    k = int(round((ref_arg - cmath.phase(b)) / TWO_PI))
    return SpacePoint(b, theta_e, theta_m, k)


def equivalence_check(
    b_on_wall: complex,
    zeta: complex,
    theta_e: float,
    theta_m: float,
    delta_b: float = 1e-3,
    params: ModelParams = ModelParams(),
    swap_sides: bool = False,
    extrapolate: bool = True,
) -> EquivalenceResult:
    """Compare (1 + w^{+-1}) at a wall point with the jump of chi_m(-i zeta).

    b is moved perpendicular to the wall, b_on_wall -+ delta_b zeta, and the
    jump is chi_m(B1 side) / chi_m(B2 side) with the twistor parameter held
    at -i zeta.  ``extrapolate`` removes the O(delta_b) drift with three
    offsets; ``swap_sides`` returns the inverse ratio.
    """
    zeta = require_unit(zeta, "equivalence_check")
    b0 = complex(b_on_wall)
    wall = classify_wall(b0, zeta, tol=WALL_TOL)
    if wall not in (R_PLUS, R_MINUS):
        raise DomainError(f"b = {b0} is not on a wall for zeta = {zeta}")
    w = cmath.exp(chi_e_exponent(SpacePoint(b0, theta_e, theta_m), -1j * zeta, params))
    if abs(1.0 + w) < 1e-12:
        raise SingularFactorError("w = -1 at this wall point")
    predicted = gluing_factor(w, wall)
    zt = -1j * zeta
    ref = cmath.phase(b0)

    def log_jump(d):
        side1 = _point_near(b0 - d * zeta, ref, theta_e, theta_m)
        side2 = _point_near(b0 + d * zeta, ref, theta_e, theta_m)
        return log_chi_m(side1, zt, params) - log_chi_m(side2, zt, params)

    if extrapolate:
        logs = [log_jump(delta_b), log_jump(delta_b / 2), log_jump(delta_b / 4)]
        ref_log = logs[0]
        logs = [ref_log + cmath.log(cmath.exp(x - ref_log)) for x in logs]
        lj = richardson3(logs)
    else:
        lj = log_jump(delta_b)
    jump = cmath.exp(-lj if swap_sides else lj)
    return EquivalenceResult(predicted, jump)


def wall_point(radius: float, zeta: complex, kind: str) -> complex:
    zeta = require_unit(zeta, "wall_point")
    return (1j if kind == R_PLUS else -1j) * zeta * radius


# ---------------------------------------------------------------------------
# periods
# ---------------------------------------------------------------------------


def fiber_periods(
    p: SpacePoint, zeta: complex, params: ModelParams = ModelParams(), n: int = 64
) -> tuple[np.ndarray, np.ndarray]:
    """Base 1-forms nu -> (1/2 pi) int_{gamma*} i_nu omega(zeta) over the two fiber circles.

    Returned as (db1, db2) coefficient pairs, for the theta_e and theta_m circles.
    """
    zeta = require_unit(zeta, "fiber periods")
    angles = TWO_PI * np.arange(n) / n
    per_e = np.zeros(2)
    per_m = np.zeros(2)
    for a in angles:
        m = omega_zeta(p.with_angles(theta_e=a), zeta, params).matrix().real
        per_e += m[:2, 2]
        m = omega_zeta(p.with_angles(theta_m=a), zeta, params).matrix().real
        per_m += m[:2, 3]
    return per_e / n, per_m / n


def affine_differentials(p: SpacePoint, zeta: complex, params: ModelParams = ModelParams()):
    """Closed-form (d phi_e, d phi_m) as (db1, db2) coefficient pairs."""
    zeta = require_unit(zeta, "affine coordinates")
    zb = zeta.conjugate()
    lg = p.log_b(params.r)
    # d phi_m = -(2 pi/eps) d Im(zb b); d phi_e = -(1/eps) d Re(zb (b log b - b)) = -(1/eps) Re(zb log b db)
    dphi_m = -(TWO_PI / params.epsilon) * np.array([zb.imag, (1j * zb).imag])
    dphi_e = -(1.0 / params.epsilon) * np.array([(zb * lg).real, (1j * zb * lg).real])
    return dphi_e, dphi_m


# ---------------------------------------------------------------------------
# semi-flat transform
# ---------------------------------------------------------------------------

# generators of the mixed exterior algebra, in canonical order
GENS = ("db1", "db2", "dte", "dtm", "dte_check", "dtm_check")
_BASE = ("db1", "db2")
_RANK = {g: i for i, g in enumerate(GENS)}


def _canon(mono):
    """Sort a monomial, returning (sign, sorted) or (0, None) on a repeat."""
    if len(set(mono)) < len(mono):
        return 0, None
    idx = [_RANK[g] for g in mono]
    inv = sum(1 for i, j in itertools.combinations(range(len(idx)), 2) if idx[i] > idx[j])
    return (-1) ** inv, tuple(sorted(mono, key=_RANK.get))


def ext_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            sign, m = _canon(ma + mb)
            if sign:
                out[m] = out.get(m, 0) + sign * ca * cb
    return out


def ext_add(*terms: dict) -> dict:
    out: dict = {}
    for t in terms:
        for m, c in t.items():
            out[m] = out.get(m, 0) + c
    return out


def ext_scale(a: dict, s) -> dict:
    return {m: s * c for m, c in a.items()}


def _split(mono):
    base = tuple(g for g in mono if g in _BASE)
    return base, mono[len(base):]


# F^sf on fiber monomials; image is (coefficient, monomial)
FORWARD_TABLE = {
    (): (-1, ("dte", "dtm")),
    ("dte_check",): (1, ("dtm",)),
    ("dtm_check",): (-1, ("dte",)),
    ("dte_check", "dtm_check"): (1, ()),
}
INVERSE_TABLE = {
    ("dte", "dtm"): (-1, ()),
    ("dtm",): (1, ("dte_check",)),
    ("dte",): (-1, ("dtm_check",)),
    (): (1, ("dte_check", "dtm_check")),
}


def apply_table(form: dict, table: dict) -> dict:
    out: dict = {}
    for mono, c in form.items():
        base, fiber = _split(mono)
        if fiber not in table:
            raise DomainError(f"monomial {mono} is outside the table's domain")
        s, image = table[fiber]
        sign, m = _canon(base + image)
        out[m] = out.get(m, 0) + s * sign * c
    return out


def to_dict(form: FormValue) -> dict:
    names = GENS[:4]
    return {
        tuple(names[i] for i in idx): c
        for idx, c in zip(_indices(form.degree), form.coefficients)
    }


def _indices(degree):
    return list(itertools.combinations(range(4), degree))


def dict_to_forms(form: dict) -> dict[int, FormValue]:
    """Split a dict over (db1, db2, dte, dtm) monomials into FormValues by degree."""
    by_deg: dict[int, dict] = {}
    for mono, c in form.items():
        if any(g not in GENS[:4] for g in mono):
            raise DomainError(f"monomial {mono} involves dual generators")
        by_deg.setdefault(len(mono), {})[tuple(_RANK[g] for g in mono)] = c
    return {d: FormValue.from_dict(d, e) for d, e in by_deg.items()}


def omega_sf_dual(p: SpacePoint, zeta: complex, params: ModelParams = ModelParams()) -> dict:
    """Closed form omega^sf(-i zeta) = X ^ dte_check + Y ^ dtm_check.

    X = (2 pi/eps) d Re(conj(zeta) b), Y = (2 pi/eps) d Re(conj(zeta) Z_m).
    """
    zeta = require_unit(zeta, "the semi-flat transform")
    zb = zeta.conjugate()
    k = TWO_PI / params.epsilon
    dzm = p.log_b(params.r) / (2j * math.pi)
    x = (k * zb.real, k * (1j * zb).real)
    y = (k * (zb * dzm).real, k * (1j * zb * dzm).real)
    out = {}
    for g, cx, cy in zip(_BASE, x, y):
        out[(g, "dte_check")] = cx
        out[(g, "dtm_check")] = cy
    return out


def dual_substitution(form: FormValue) -> dict:
    """Rewrite a form on (b, theta) in dual angles: dte = dtm_check, dtm = -dte_check."""
    sub = {"db1": {("db1",): 1}, "db2": {("db2",): 1}, "dte": {("dtm_check",): 1}, "dtm": {("dte_check",): -1}}
    out: dict = {}
    for mono, c in to_dict(form).items():
        term = {(): c}
        for g in mono:
            term = ext_mul(term, sub[g])
        out = ext_add(out, term)
    return out


def exp_i(form: dict) -> dict:
    """e^{i form} for a 2-form on a 4-dimensional algebra (series ends at degree 4)."""
    sq = ext_mul(form, form)
    return ext_add({(): 1}, ext_scale(form, 1j), ext_scale(sq, -0.5))


class TransformReport(NamedTuple):
    mode: str
    deviation: float
    result: dict


def _max_dev(a: dict, b: dict) -> float:
    keys = set(a) | set(b)
    return max((abs(a.get(k, 0) - b.get(k, 0)) for k in keys), default=0.0)


def semiflat_transform(
    p: SpacePoint,
    zeta: complex,
    mode: str = "forward",
    params: ModelParams = ModelParams(),
    grid: int = 256,
) -> TransformReport:
    """Forward: max deviation of F^sf(e^{i omega^sf(-i zeta)}) from Omega^sf(zeta).
    Inverse: max theta_e-averaged coefficient of (F^sf)^{-1}(Omega^inst(zeta))."""
    zeta = require_unit(zeta, "the semi-flat transform")
    if mode == "forward":
        image = apply_table(exp_i(omega_sf_dual(p, zeta, params)), FORWARD_TABLE)
        target = to_dict(Omega_zeta_gh(p, zeta, params, part="sf"))
        return TransformReport(mode, _max_dev(image, target), image)
    if mode == "inverse":
        acc: dict = {}
        for j in range(grid):
            q = p.with_angles(theta_e=TWO_PI * j / grid)
            inst = Omega_zeta_gh(q, zeta, params, "total") - Omega_zeta_gh(q, zeta, params, "sf")
            acc = ext_add(acc, apply_table(to_dict(inst), INVERSE_TABLE))
        avg = ext_scale(acc, 1.0 / grid)
        return TransformReport(mode, max((abs(c) for c in avg.values()), default=0.0), avg)
    raise DomainError("mode must be 'forward' or 'inverse'")
