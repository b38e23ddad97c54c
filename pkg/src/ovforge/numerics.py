"""
Numerical primitives used by every other module.

Contents
--------
QuadratureSpec, FiniteDifferenceSpec   numerical controls
FormValue                              differential forms on the chart (b1, b2, theta_e, theta_m)
bessel_k                               modified Bessel functions K0, K1
branch_log                             complex logarithm on a chosen sheet
ray_integral                           adaptive quadrature over (0, inf) after t = e^s
fd_exterior_derivative                 central-difference exterior derivative
hodge_star_3d                          flat Hodge star on (b1, b2, b3)
"""

from __future__ import annotations

import cmath
import heapq
import math
import warnings
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, StencilError

TWO_PI = 2.0 * math.pi
EULER_GAMMA = 0.57721566490153286060651209008240243

CHART = ("b1", "b2", "theta_e", "theta_m")
DIM = 4


# ---------------------------------------------------------------------------
# specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureSpec:
    """Controls for `ray_integral`.

    ``pole_exclusion_radius`` is an angle (radians): the smallest allowed
    angular separation between a kernel pole and the integration ray.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 4000
    pole_exclusion_radius: float = 1e-5

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be > 0, got {self.rel_tol}")
        if not self.abs_tol > 0:
            raise DomainError(f"abs_tol must be > 0, got {self.abs_tol}")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")
        if not self.pole_exclusion_radius > 0:
            raise DomainError("pole_exclusion_radius must be > 0")


_STENCILS = {
    2: (1, np.array([-0.5, 0.0, 0.5])),
    4: (2, np.array([1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12])),
    6: (3, np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60])),
}

_SECOND_STENCILS = {
    2: (1, np.array([1.0, -2.0, 1.0])),
    4: (2, np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12])),
    6: (3, np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])),
}


@dataclass(frozen=True)
class FiniteDifferenceSpec:
    """Central finite differences with step ``h`` and accuracy ``order``."""

    h: float = 1e-4
    order: int = 2

    def __post_init__(self):
        if not self.h > 0:
            raise DomainError(f"finite-difference step must be > 0, got {self.h}")
        if self.order not in _STENCILS:
            raise DomainError(f"order must be one of {sorted(_STENCILS)}")

    @property
    def radius(self) -> float:
        return _STENCILS[self.order][0] * self.h


# ---------------------------------------------------------------------------
# forms
# ---------------------------------------------------------------------------


def form_indices(degree: int) -> list[tuple[int, ...]]:
    """Ordered coordinate multi-indices for forms of ``degree`` on the chart."""
    return list(combinations(range(DIM), degree))


def _merge_sign(a: tuple[int, ...], b: tuple[int, ...]) -> int:
    # sign of the permutation sorting a + b; 0 if an index repeats
    if set(a) & set(b):
        return 0
    inversions = sum(1 for i in a for j in b if i > j)
    return -1 if inversions % 2 else 1


@dataclass(frozen=True, eq=False)
class FormValue:
    """Pointwise value of a complex differential form on the chart.

    Coefficients are stored against ``form_indices(degree)``; a 2-form has six
    entries ordered (01, 02, 03, 12, 13, 23) with 0=b1, 1=b2, 2=theta_e,
    3=theta_m.
    """

    degree: int
    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=complex).reshape(-1)
        expected = math.comb(DIM, self.degree)
        if coeffs.size != expected:
            raise DomainError(
                f"degree-{self.degree} form needs {expected} coefficients, got {coeffs.size}"
            )
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def zero(cls, degree: int) -> "FormValue":
        return cls(degree, np.zeros(math.comb(DIM, degree), dtype=complex))

    @classmethod
    def from_dict(cls, degree: int, entries: dict) -> "FormValue":
        out = np.zeros(math.comb(DIM, degree), dtype=complex)
        index = {idx: k for k, idx in enumerate(form_indices(degree))}
        for idx, value in entries.items():
            if len(set(idx)) != len(idx):
                continue
            inversions = sum(1 for a in range(len(idx)) for b in range(a + 1, len(idx)) if idx[a] > idx[b])
            sign = -1 if inversions % 2 else 1
            out[index[tuple(sorted(idx))]] += sign * value
        return cls(degree, out)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "FormValue":
        m = np.asarray(matrix)
        return cls(2, np.array([m[i, j] for i, j in form_indices(2)], dtype=complex))

    def matrix(self) -> np.ndarray:
        """Antisymmetric 4x4 matrix W with omega = sum_{i<j} W_ij dx^i ^ dx^j."""
        if self.degree != 2:
            raise DomainError("matrix() is only defined for 2-forms")
        m = np.zeros((DIM, DIM), dtype=complex)
        for c, (i, j) in zip(self.coefficients, form_indices(2)):
            m[i, j] = c
            m[j, i] = -c
        return m

    def component(self, *idx: int) -> complex:
        return self.coefficients[form_indices(self.degree).index(tuple(idx))]

    def wedge(self, other: "FormValue") -> "FormValue":
        deg = self.degree + other.degree
        if deg > DIM:
            raise DomainError("wedge product exceeds top degree")
        out = np.zeros(math.comb(DIM, deg), dtype=complex)
        target = {idx: k for k, idx in enumerate(form_indices(deg))}
        for ca, ia in zip(self.coefficients, form_indices(self.degree)):
            if ca == 0:
                continue
            for cb, ib in zip(other.coefficients, form_indices(other.degree)):
                s = _merge_sign(ia, ib)
                if s:
                    out[target[tuple(sorted(ia + ib))]] += s * ca * cb
        return FormValue(deg, out)

    def interior(self, axis: int) -> "FormValue":
        """Contraction with the coordinate vector field of ``axis``."""
        if self.degree == 0:
            raise DomainError("cannot contract a 0-form")
        out = np.zeros(math.comb(DIM, self.degree - 1), dtype=complex)
        target = {idx: k for k, idx in enumerate(form_indices(self.degree - 1))}
        for c, idx in zip(self.coefficients, form_indices(self.degree)):
            if axis in idx:
                pos = idx.index(axis)
                rest = idx[:pos] + idx[pos + 1:]
                out[target[rest]] += (-1) ** pos * c
        return FormValue(self.degree - 1, out)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coefficients))) if self.coefficients.size else 0.0

    @property
    def real(self) -> "FormValue":
        return FormValue(self.degree, self.coefficients.real)

    @property
    def imag(self) -> "FormValue":
        return FormValue(self.degree, self.coefficients.imag)

    def conj(self) -> "FormValue":
        return FormValue(self.degree, self.coefficients.conj())

    def _check(self, other):
        if not isinstance(other, FormValue) or other.degree != self.degree:
            raise DomainError("forms must have equal degree")

    def __add__(self, other):
        self._check(other)
        return FormValue(self.degree, self.coefficients + other.coefficients)

    def __sub__(self, other):
        self._check(other)
        return FormValue(self.degree, self.coefficients - other.coefficients)

    def __neg__(self):
        return FormValue(self.degree, -self.coefficients)

    def __mul__(self, scalar):
        return FormValue(self.degree, self.coefficients * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return FormValue(self.degree, self.coefficients / scalar)

    def __repr__(self):
        terms = ", ".join(
            f"{'^'.join(CHART[i] for i in idx) or '1'}: {c:.6g}"
            for c, idx in zip(self.coefficients, form_indices(self.degree))
        )
        return f"FormValue(degree={self.degree}, {{{terms}}})"


def one_form(*coeffs) -> FormValue:
    return FormValue(1, np.array(coeffs, dtype=complex))


# ---------------------------------------------------------------------------
# Bessel functions
# ---------------------------------------------------------------------------

_SERIES_TERMS = 30
_ASYMPTOTIC_FROM = 40.0
_ASYMPTOTIC_TERMS = 16
_TRAP_STEP = 0.05
_LOG_TINY = math.log(np.finfo(float).tiny)


class BesselUnderflowWarning(RuntimeWarning):
    """K_nu(x) is below the smallest normal double and was flushed to zero."""


def _series_coefficients():
    k = np.arange(_SERIES_TERMS)
    fact = np.array([math.factorial(int(i)) for i in k], dtype=float)
    harmonic = np.concatenate([[0.0], np.cumsum(1.0 / np.arange(1, _SERIES_TERMS))])
    c0 = 1.0 / fact**2
    c1 = 1.0 / (fact * fact * (k + 1))  # 1 / (k! (k+1)!)
    return k, harmonic, c0, c1


_SK, _SH, _SC0, _SC1 = _series_coefficients()


def _k_series(order: int, x: np.ndarray) -> np.ndarray:
    y = (x * x / 4.0)[:, None]
    powers = y ** _SK[None, :]
    log_half = np.log(x / 2.0)
    if order == 0:
        i0 = powers @ _SC0
        s0 = powers @ (_SC0 * _SH)
        return -(log_half + EULER_GAMMA) * i0 + s0
    i1 = (x / 2.0) * (powers @ _SC1)
    digamma_sum = -2.0 * EULER_GAMMA + _SH + np.append(_SH[1:], _SH[-1] + 1.0 / _SERIES_TERMS)
    tail = powers @ (_SC1 * digamma_sum)
    return 1.0 / x + log_half * i1 - (x / 4.0) * tail


def _k_scaled_trapezoid(order: int, x: np.ndarray) -> np.ndarray:
    # e^x K_nu(x) = int_0^inf exp(-x (cosh t - 1)) cosh(nu t) dt
    t_max = math.acosh(1.0 + 45.0 / float(np.min(x)))
    t = np.arange(0.0, t_max + _TRAP_STEP, _TRAP_STEP)
    f = np.exp(-x[:, None] * (np.cosh(t)[None, :] - 1.0)) * np.cosh(order * t)[None, :]
    return _TRAP_STEP * (f.sum(axis=1) - 0.5 * f[:, 0])


def _k_scaled_asymptotic(order: int, x: np.ndarray) -> np.ndarray:
    mu = 4.0 * order * order
    total = np.ones_like(x)
    term = np.ones_like(x)
    for k in range(1, _ASYMPTOTIC_TERMS + 1):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        total = total + term
    return np.sqrt(math.pi / (2.0 * x)) * total


def bessel_k_checked(order: int, x):
    """Return ``(K_order(x), underflowed)``; ``underflowed`` is a bool mask for arrays."""
    if order not in (0, 1):
        raise DomainError(f"bessel_k supports orders 0 and 1, got {order}")
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(~(xs > 0)):
        raise DomainError("bessel_k requires x > 0")
    out = np.empty_like(xs)
    under = np.zeros(xs.shape, dtype=bool)

    small = xs <= 2.0
    mid = (xs > 2.0) & (xs < _ASYMPTOTIC_FROM)
    large = xs >= _ASYMPTOTIC_FROM
    if small.any():
        out[small] = _k_series(order, xs[small])
    for mask, scaled in ((mid, _k_scaled_trapezoid), (large, _k_scaled_asymptotic)):
        if not mask.any():
            continue
        xm = xs[mask]
        s = scaled(order, xm)
        log_val = np.log(s) - xm
        flushed = log_val < _LOG_TINY
        vals = np.where(flushed, 0.0, s * np.exp(np.where(flushed, 0.0, -xm)))
        out[mask] = vals
        under[mask] = flushed
    if scalar:
        return float(out[0]), bool(under[0])
    return out, under


def bessel_k(order: int, x):
    """Modified Bessel function of the second kind, K_0 or K_1.

    Power series for ``x <= 2``, trapezoidal rule on the integral
    ``int_0^inf exp(-x cosh t) cosh(nu t) dt`` for ``2 < x < 40`` and a
    16-term asymptotic expansion beyond.  Accepts scalars or arrays.
    Results below the double range are returned as 0 with a
    `BesselUnderflowWarning`.
    """
    value, under = bessel_k_checked(order, x)
    if np.any(under):
        warnings.warn(f"K_{order} underflowed to zero", BesselUnderflowWarning, stacklevel=2)
    return value


# ---------------------------------------------------------------------------
# logarithm
# ---------------------------------------------------------------------------


def branch_log(z: complex, k: int = 0) -> complex:
    """Logarithm with imaginary part in (-pi + 2 pi k, pi + 2 pi k]."""
    z = complex(z)
    if z == 0:
        raise DomainError("log of zero")
    val = cmath.log(z)
    if val.imag <= -math.pi:  # -1 - 0j lands on -pi
        val += 2j * math.pi
    return val + 2j * math.pi * k


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

# Gauss-Kronrod 7/15 on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
_gauss_full = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes (1, 3, 5 and the centre)
for _pos, _w in zip((1, 3, 5, 7, 9, 11, 13), np.concatenate([_WG[:-1], _WG[::-1]])):
    _gauss_full[_pos] = _w
GK_GAUSS = _gauss_full


def _gk15(g, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    vals = np.asarray(g(mid + half * GK_NODES), dtype=complex)
    kron = half * np.dot(GK_KRONROD, vals)
    gauss = half * np.dot(GK_GAUSS, vals)
    return kron, abs(kron - gauss)


def _decay_edge(g, direction: float, tiny: float, start: float = 0.0) -> float:
    # walk outward until |g| stays below tiny on two consecutive probes
    s = start
    quiet = 0
    step = 0.5
    while abs(s) < 60.0:
        s += direction * step
        v = abs(complex(np.asarray(g(np.array([s])))[0]))
        if not np.isfinite(v):
            raise DomainError(f"integrand not finite at s = {s}")
        quiet = quiet + 1 if v < tiny else 0
        if quiet >= 2:
            return s
    return s


def ray_integral(
    integrand: Callable[[np.ndarray], np.ndarray],
    spec: QuadratureSpec = QuadratureSpec(),
    breakpoints: Sequence[float] = (),
    full_output: bool = False,
):
    """Integrate ``integrand(t)`` over t in (0, inf).

    The substitution t = e^s turns integrands decaying like
    exp(-c (t + 1/t)) into functions of s decaying like exp(-2c cosh s);
    the resulting line integral is computed by globally adaptive
    Gauss-Kronrod (7/15) bisection.  ``integrand`` must accept a numpy
    array of t values.  ``breakpoints`` are t values where the integrand
    varies sharply (near a kernel pole); they seed the partition.

    Returns the complex integral, or ``(value, error_estimate)`` when
    ``full_output`` is set.  Raises `ConvergenceError` if the
    subdivision budget runs out.
    """

    def g(s):
        t = np.exp(s)
        return np.asarray(integrand(t), dtype=complex) * t

    tiny = spec.abs_tol * 1e-3
    cuts = sorted(math.log(p) for p in breakpoints if p > 0)
    centre = cuts[len(cuts) // 2] if cuts else 0.0
    lo = _decay_edge(g, -1.0, tiny, start=min([centre] + cuts))
    hi = _decay_edge(g, +1.0, tiny, start=max([centre] + cuts))

    edges = sorted(set(np.linspace(lo, hi, 9).tolist() + [c for c in cuts if lo < c < hi]))
    heap = []
    total = 0j
    err_total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = _gk15(g, a, b)
        total += val
        err_total += err
        heapq.heappush(heap, (-err, a, b, val))

    n_sub = 0
    while err_total > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if n_sub >= spec.max_subdivisions:
            raise ConvergenceError(
                f"ray_integral did not converge in {spec.max_subdivisions} subdivisions "
                f"(estimate {total}, error {err_total:.3g})",
                estimate=total,
                error=err_total,
            )
        neg_err, a, b, val = heapq.heappop(heap)
        m = 0.5 * (a + b)
        v1, e1 = _gk15(g, a, m)
        v2, e2 = _gk15(g, m, b)
        total += v1 + v2 - val
        err_total += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, a, m, v1))
        heapq.heappush(heap, (-e2, m, b, v2))
        n_sub += 1
        if n_sub % 64 == 0:
            # resum to stop drift from incremental updates
            total = sum(item[3] for item in heap)
            err_total = -sum(item[0] for item in heap)

    total = sum(sorted((item[3] for item in heap), key=lambda v: (v.real, v.imag)))
    err_total = -sum(item[0] for item in heap)
    if full_output:
        return complex(total), float(err_total)
    return complex(total)


# ---------------------------------------------------------------------------
# finite-difference exterior calculus
# ---------------------------------------------------------------------------


def _reduce_imag(z: np.ndarray) -> np.ndarray:
    # bring imaginary parts into (-pi, pi]
    return z.real + 1j * (np.angle(np.exp(1j * z.imag)))


def fd_partials(
    field: Callable, point, spec: FiniteDifferenceSpec, log_valued: bool = False
) -> np.ndarray:
    """Partial derivatives of a form-valued field along the four chart axes.

    Returns an array of shape (4, ncoeff).  ``point`` must provide
    ``shifted(axis, delta)`` and the complex base coordinate ``b``.  With
    ``log_valued`` the field is a logarithm defined modulo 2 pi i and
    stencil values are matched to the centre value before differencing.
    """
    half, weights = _STENCILS[spec.order]
    rho = abs(point.b)
    if not spec.h < rho / 10.0 or spec.radius >= rho:
        raise StencilError(
            f"stencil of radius {spec.radius:g} too close to the singular fiber (|b| = {rho:g})"
        )
    centre = np.asarray(_coeffs(field(point)))
    parts = []
    for axis in range(DIM):
        acc = np.zeros_like(centre, dtype=complex)
        for k, w in zip(range(-half, half + 1), weights):
            if w == 0.0:
                continue
            val = np.asarray(_coeffs(field(point.shifted(axis, k * spec.h))))
            diff = val - centre
            if log_valued:
                diff = _reduce_imag(diff)
            acc = acc + w * diff
        parts.append(acc / spec.h)
    return np.array(parts)


def _coeffs(value):
    if isinstance(value, FormValue):
        return value.coefficients
    return np.atleast_1d(np.asarray(value, dtype=complex))


def fd_exterior_derivative(
    field: Callable,
    degree: int,
    point,
    spec: FiniteDifferenceSpec = FiniteDifferenceSpec(),
    log_valued: bool = False,
) -> FormValue:
    """Exterior derivative of a degree-``degree`` field by central differences.

    ``field`` maps a point to a `FormValue` (or a scalar for degree 0).
    Fiber angles are differentiated through ``point.shifted``, which wraps
    them periodically.  Raises `StencilError` if the stencil would reach
    the singular fiber b = 0 (guard: h < |b| / 10).
    """
    if degree not in (0, 1, 2, 3):
        raise DomainError("degree must be between 0 and 3")
    partials = fd_partials(field, point, spec, log_valued=log_valued)
    src = form_indices(degree)
    out = {}
    for axis in range(DIM):
        for c, idx in zip(partials[axis], src):
            if axis in idx:
                continue
            key = (axis,) + idx
            out[key] = out.get(key, 0) + c
    return FormValue.from_dict(degree + 1, out)


def fd_second_derivative(f: Callable[[float], float], x: float, h: float, order: int = 2) -> float:
    """Central second derivative of a scalar function of one variable."""
    half, weights = _SECOND_STENCILS[order]
    return sum(w * f(x + k * h) for k, w in zip(range(-half, half + 1), weights) if w) / h**2


# ---------------------------------------------------------------------------
# Hodge star
# ---------------------------------------------------------------------------

# slots: 0 -> b1, 1 -> b2, 2 -> b3; volume form db1^db2^db3
_STAR_1_TO_2 = {0: ((1, 2), 1.0), 1: ((0, 2), -1.0), 2: ((0, 1), 1.0)}
_STAR_2_TO_1 = {(1, 2): (0, 1.0), (0, 2): (1, -1.0), (0, 1): (2, 1.0)}


def hodge_star_3d(form: FormValue, epsilon: float | None = None) -> FormValue:
    """Flat Hodge star on (b1, b2, b3), oriented by db1 ^ db2 ^ db3.

    Slot 2 of the chart is read as db3 when ``epsilon`` is None.  Passing
    ``epsilon`` reads slot 2 as d theta_e with b3 = epsilon theta_e / 2 pi,
    converting on the way in and out.  Forms with a theta_m component are
    rejected.
    """
    c = 1.0 if epsilon is None else epsilon / TWO_PI
    if form.degree == 1:
        if form.coefficients[3] != 0:
            raise DomainError("hodge_star_3d: input has a theta_m component")
        db = [form.coefficients[0], form.coefficients[1], form.coefficients[2] / c]
        out = {}
        for slot, val in enumerate(db):
            (i, j), sign = _STAR_1_TO_2[slot]
            scale = (c if 2 in (i, j) else 1.0)
            out[(i, j)] = sign * val * scale
        return FormValue.from_dict(2, out)
    if form.degree == 2:
        idx = form_indices(2)
        out = np.zeros(4, dtype=complex)
        for val, (i, j) in zip(form.coefficients, idx):
            if 3 in (i, j):
                if val != 0:
                    raise DomainError("hodge_star_3d: input has a theta_m component")
                continue
            val = val / (c if 2 in (i, j) else 1.0)
            slot, sign = _STAR_2_TO_1[(i, j)]
            out[slot] += sign * val * (c if slot == 2 else 1.0)
        return FormValue(1, out)
    raise DomainError("hodge_star_3d acts on 1-forms and 2-forms")
