"""Command-line front end: ``ovforge verify | eval | jump-scan | export-grid``.

Exit codes: 0 success, 1 failed check or domain error at a requested point,
2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import cmath
import io
import math
import os
import sys
from dataclasses import dataclass, fields
from typing import Callable

import numpy as np

from . import base_geometry as bg
from . import gibbons_hawking as gh
from . import syz_mirror as sm
from . import twistor as tw
from .errors import ConfigError, OVError
from .numerics import FiniteDifferenceSpec, FormValue, QuadratureSpec, form_indices
from .verification import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

CSV_HEADER = "b_re,b_im,theta_e,theta_m,zeta_re,zeta_im,branch,quantity,value_re,value_im,residual"
CHART_NAMES = ("db1", "db2", "dte", "dtm")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    radius_r: float = 1.0
    epsilon: float = 1.0
    bessel_truncation: int = 24
    quad_rel_tol: float = 1e-10
    fd_step: float = 1e-4
    grid_n: int = 20
    seed: int = 42

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "seed":
                if v < 0:
                    raise ConfigError(f"seed: must be non-negative, got {v}")
            elif not v > 0:
                raise ConfigError(f"{f.name}: must be positive, got {v}")
        if self.grid_n < 4:
            raise ConfigError(f"grid_n: must be >= 4, got {self.grid_n}")

    def params(self) -> bg.ModelParams:
        return bg.ModelParams(
            r=self.radius_r,
            epsilon=self.epsilon,
            bessel_truncation=self.bessel_truncation,
            quad=QuadratureSpec(rel_tol=self.quad_rel_tol),
            fd=FiniteDifferenceSpec(h=self.fd_step),
        )


def parse_config_text(text: str) -> RunConfig:
    """Flat ``key = value`` lines; ``#`` starts a comment; unknown keys are errors."""
    types = {f.name: f.type for f in fields(RunConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ConfigError(f"{key}: unknown configuration key (line {lineno})")
        conv = int if types[key] in (int, "int") else float
        try:
            values[key] = conv(val)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {val!r} as {conv.__name__}") from None
    return RunConfig(**values)


def load_config(path: str | None) -> RunConfig:
    path = path or os.environ.get("OVFORGE_CONFIG")
    if not path:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text)


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class EvalContext:
    p: gh.SpacePoint
    zeta: complex | None
    params: bg.ModelParams
    chart: int


def _need_zeta(ctx: EvalContext) -> complex:
    if ctx.zeta is None:
        raise ConfigError("this quantity needs --zeta")
    return ctx.zeta


def _mirror(ctx: EvalContext):
    tec, tmc = sm.angles_from_space(ctx.p.theta_e, ctx.p.theta_m)
    return sm.mirror_coords(ctx.p.b, tec, tmc, ctx.chart, _need_zeta(ctx), ctx.params)


def _omega(i):
    return lambda c: gh.omega_triple(c.p, c.params)[i]


QUANTITIES: dict[str, Callable[[EvalContext], object]] = {
    "V": lambda c: gh.potential_V(c.p, "total", c.params),
    "A": lambda c: gh.connection_A(c.p, "total", c.params),
    "omega1": _omega(0),
    "omega2": _omega(1),
    "omega3": _omega(2),
    "omega_zeta": lambda c: gh.omega_zeta(c.p, _need_zeta(c), c.params),
    "Omega_gh": lambda c: gh.Omega_zeta_gh(c.p, _need_zeta(c), c.params),
    "Omega_coords": lambda c: tw.Omega_zeta_coords(c.p, _need_zeta(c), c.params),
    "chi_e": lambda c: tw.chi_e_sf(c.p, _need_zeta(c), c.params),
    "chi_m_sf": lambda c: tw.chi_m_sf(c.p, _need_zeta(c), c.params),
    "chi_m": lambda c: tw.chi_m(c.p, _need_zeta(c), c.params),
    "upsilon": lambda c: tw.upsilon(c.p, _need_zeta(c), c.params),
    "mu": lambda c: gh.moment_map(c.p, _need_zeta(c), c.params),
    "phi_e": lambda c: bg.affine_coords(bg.BasePoint(c.p.b, c.p.branch), _need_zeta(c), c.params)[0],
    "phi_m": lambda c: bg.affine_coords(bg.BasePoint(c.p.b, c.p.branch), _need_zeta(c), c.params)[1],
    "w": lambda c: _mirror(c)[0],
    "u": lambda c: _mirror(c)[1],
}


def value_rows(name: str, value) -> list[tuple[str, complex]]:
    """(quantity label, value) pairs; forms give one pair per coefficient."""
    if isinstance(value, FormValue):
        return [
            (f"{name}[{'^'.join(CHART_NAMES[i] for i in idx)}]", complex(c))
            for idx, c in zip(form_indices(value.degree), value.coefficients)
        ]
    return [(name, complex(value))]


def csv_row(p: gh.SpacePoint, zeta, quantity: str, value: complex, residual: float | None = None) -> str:
    z = complex("nan") if zeta is None else complex(zeta)
    zr, zi = ("", "") if zeta is None else (fmt(z.real), fmt(z.imag))
    res = "" if residual is None else fmt(residual)
    return ",".join(
        [fmt(p.b.real), fmt(p.b.imag), fmt(p.theta_e), fmt(p.theta_m), zr, zi, str(p.branch), quantity,
         fmt(value.real), fmt(value.imag), res]
    )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def parse_complex(text: str) -> complex:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected RE,IM, got {text!r}")
    try:
        return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected RE,IM, got {text!r}") from None


def cmd_verify(cfg: RunConfig, args, out) -> int:
    report = run_suite(args.suite, cfg.params(), cfg.seed)
    out.write(report.format())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_eval(cfg: RunConfig, args, out) -> int:
    params = cfg.params()
    p = gh.SpacePoint(args.b, args.theta_e, args.theta_m, args.branch)
    ctx = EvalContext(p, args.zeta, params, args.chart)
    value = QUANTITIES[args.quantity](ctx)
    out.write(CSV_HEADER + "\n")
    for label, v in value_rows(args.quantity, value):
        out.write(csv_row(p, args.zeta, label, v) + "\n")
    return EXIT_OK


def jump_scan_rows(cfg: RunConfig, ray: str, samples: int) -> list[str]:
    params = cfg.params()
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for _ in range(samples):
        rad = rng.uniform(0.15, 0.8) * params.r
        te, tm = rng.uniform(0, 2 * math.pi, 2)
        ang = rng.uniform(-math.pi, math.pi)
        if ray in ("l+", "l-"):
            p = gh.SpacePoint(rad * cmath.exp(1j * ang), te, tm)
            m = tw.verify_jump(p, ray, params)
            z0 = (-1 if ray == "l+" else 1) * p.b / abs(p.b)
            rows.append(csv_row(p, z0, f"jump_{ray}", m.measured_ratio, abs(m.measured_ratio / m.predicted - 1)))
        else:
            zeta = cmath.exp(1j * ang)
            b0 = sm.wall_point(rad, zeta, ray)
            g, j = sm.equivalence_check(b0, zeta, te, tm, 1e-3, params)
            p = gh.SpacePoint(b0, te, tm)
            rows.append(csv_row(p, zeta, f"equivalence_{ray}", j, abs(g / j - 1)))
    return rows


def cmd_jump_scan(cfg: RunConfig, args, out) -> int:
    if args.samples < 1:
        raise ConfigError("--samples must be >= 1")
    out.write(CSV_HEADER + "\n")
    for row in jump_scan_rows(cfg, args.ray, args.samples):
        out.write(row + "\n")
    return EXIT_OK


def grid_points(cfg: RunConfig, nx: int, ny: int, bounds) -> list[complex]:
    re_lo, re_hi, im_lo, im_hi = bounds
    xs = np.linspace(re_lo, re_hi, nx)
    ys = np.linspace(im_lo, im_hi, ny)
    pts = [complex(x, y) for x in xs for y in ys]
    for b in pts:
        if not 0 < abs(b) < cfg.radius_r:
            raise ConfigError(f"grid point b = {b} is outside 0 < |b| < r")
    return pts


def cmd_export_grid(cfg: RunConfig, args, out) -> int:
    nx = args.nx or cfg.grid_n
    ny = args.ny or cfg.grid_n
    if nx < 1 or ny < 1:
        raise ConfigError("--nx and --ny must be >= 1")
    half = 0.7 * cfg.radius_r
    bounds = (
        -half if args.re_min is None else args.re_min,
        half if args.re_max is None else args.re_max,
        -half if args.im_min is None else args.im_min,
        half if args.im_max is None else args.im_max,
    )
    pts = grid_points(cfg, nx, ny, bounds)
    params = cfg.params()
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for b in pts:
        p = gh.SpacePoint(b, args.theta_e, args.theta_m, args.branch)
        value = QUANTITIES[args.quantity](EvalContext(p, args.zeta, params, args.chart))
        for label, v in value_rows(args.quantity, value):
            buf.write(csv_row(p, args.zeta, label, v) + "\n")
    try:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(buf.getvalue())
    except OSError as exc:
        raise ConfigError(f"cannot write {args.out}: {exc.strerror}") from None
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _point_args(sp, with_point=True):
    if with_point:
        sp.add_argument("--b", type=parse_complex, required=True, help="base point RE,IM")
    sp.add_argument("--theta-e", type=float, default=0.0)
    sp.add_argument("--theta-m", type=float, default=0.0)
    sp.add_argument("--zeta", type=parse_complex, default=None, help="twistor parameter RE,IM")
    sp.add_argument("--branch", type=int, default=0, help="sheet of log(b/r)")
    sp.add_argument("--chart", type=int, choices=(1, 2), default=1, help="mirror chart for w, u")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ovforge", description="Numerical checks of the Ooguri-Vafa geometry.")
    parser.add_argument("--config", default=None, help="key = value config file (fallback: $OVFORGE_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("verify", help="run verification suites")
    sp.add_argument("--suite", choices=("all",) + SUITES, default="all")
    sp.add_argument("--config", dest="sub_config", default=None)

    sp = sub.add_parser("eval", help="evaluate one quantity at a point")
    sp.add_argument("quantity", choices=sorted(QUANTITIES))
    _point_args(sp)
    sp.add_argument("--config", dest="sub_config", default=None)

    sp = sub.add_parser("jump-scan", help="tabulate wall-crossing residuals")
    sp.add_argument("--ray", choices=("l+", "l-", "R+", "R-"), required=True)
    sp.add_argument("--samples", type=int, required=True)
    sp.add_argument("--config", dest="sub_config", default=None)

    sp = sub.add_parser("export-grid", help="evaluate a quantity on a (Re b, Im b) grid")
    sp.add_argument("quantity", choices=sorted(QUANTITIES))
    sp.add_argument("--nx", type=int, default=None)
    sp.add_argument("--ny", type=int, default=None)
    sp.add_argument("--out", required=True)
    for key in ("re-min", "re-max", "im-min", "im-max"):
        sp.add_argument(f"--{key}", type=float, default=None)
    _point_args(sp, with_point=False)
    sp.add_argument("--config", dest="sub_config", default=None)
    return parser


COMMANDS = {
    "verify": cmd_verify,
    "eval": cmd_eval,
    "jump-scan": cmd_jump_scan,
    "export-grid": cmd_export_grid,
}


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = load_config(args.sub_config or args.config)
        return COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        sys.stderr.write(f"ovforge: configuration error: {exc}\n")
        return EXIT_USAGE
    except OVError as exc:
        sys.stderr.write(f"ovforge: {type(exc).__name__}: {exc}\n")
        return EXIT_FAIL


def entry() -> None:
    sys.exit(main())
