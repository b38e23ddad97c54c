import io
import os
import stat
import subprocess
import sys

import pytest

from ovforge.base_geometry import ModelParams
from ovforge.cli import CSV_HEADER, RunConfig, main, parse_config_text
from ovforge.errors import ConfigError
from ovforge.gibbons_hawking import SpacePoint, potential_V
from ovforge.numerics import FiniteDifferenceSpec, QuadratureSpec
from ovforge.twistor import verify_jump


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), buf)
    return code, buf.getvalue()


def rows(text):
    lines = text.strip().splitlines()
    assert lines[0] == CSV_HEADER
    return [dict(zip(CSV_HEADER.split(","), ln.split(","))) for ln in lines[1:]]


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# --- eval ----------------------------------------------------------------------------


def test_eval_V_bit_for_bit():
    code, text = run("eval", "V", "--b=0.3,0.2", "--theta-e", "1.0")
    assert code == 0
    (row,) = rows(text)
    params = RunConfig().params()
    assert float(row["value_re"]) == potential_V(SpacePoint(0.3 + 0.2j, 1.0), "total", params)
    assert float(row["value_im"]) == 0


def test_eval_chi_e_on_wall_is_one():
    code, text = run("eval", "chi_e", "--b=0,0.4", "--theta-e", "0", "--zeta=1,0")
    assert code == 0
    (row,) = rows(text)
    assert complex(float(row["value_re"]), float(row["value_im"])) == 1


def test_eval_form_rows_and_negative_coordinates():
    code, text = run("eval", "omega1", "--b=-0.3,-0.2")
    assert code == 0
    labels = [r["quantity"] for r in rows(text)]
    assert len(labels) == 6 and labels[2] == "omega1[db1^dtm]"


def test_eval_moment_map_off_circle():
    code, _ = run("eval", "mu", "--b=0.4,0", "--zeta=2,0")
    assert code == 1


def test_eval_moment_map_message(capsys):
    main(["eval", "mu", "--b=0.4,0", "--zeta=2,0"], io.StringIO())
    assert "Hamiltonian" in capsys.readouterr().err


def test_eval_domain_errors_exit_one():
    assert run("eval", "V", "--b=0,0")[0] == 1
    assert run("eval", "V", "--b=1.5,0")[0] == 1


def test_eval_missing_zeta_is_usage():
    assert run("eval", "chi_e", "--b=0.3,0")[0] == 2


def test_usage_errors():
    assert run()[0] == 2
    assert run("frobnicate")[0] == 2
    assert run("eval", "nonsense", "--b=0.3,0")[0] == 2
    assert run("eval", "V", "--b=0.3")[0] == 2


# --- jump-scan ----------------------------------------------------------------------


def test_jump_scan_equivalence_rows():
    code, text = run("jump-scan", "--ray", "R+", "--samples", "10")
    assert code == 0
    data = rows(text)
    assert len(data) == 10
    assert max(float(r["residual"]) for r in data) <= 1e-5


def test_jump_scan_single_row_matches_direct_call():
    code, text = run("jump-scan", "--ray", "l+", "--samples", "1")
    (row,) = rows(text)
    p = SpacePoint(complex(float(row["b_re"]), float(row["b_im"])), float(row["theta_e"]), float(row["theta_m"]))
    m = verify_jump(p, "l+", RunConfig().params())
    assert float(row["value_re"]) == m.measured_ratio.real
    assert float(row["residual"]) == abs(m.measured_ratio / m.predicted - 1)
    assert code == 0


def test_jump_scan_requires_samples():
    assert run("jump-scan", "--ray", "l+", "--samples", "0")[0] == 2


def test_jump_scan_deterministic():
    assert run("jump-scan", "--ray", "l-", "--samples", "3") == run("jump-scan", "--ray", "l-", "--samples", "3")


# --- export-grid ---------------------------------------------------------------------


def test_export_grid_shape(tmp_path):
    out = tmp_path / "V.csv"
    code, _ = run("export-grid", "V", "--nx", "20", "--ny", "20", "--theta-e", "1.0", "--out", str(out))
    assert code == 0
    assert len(out.read_text().splitlines()) == 401


def test_export_grid_rejects_origin(tmp_path):
    out = tmp_path / "odd.csv"
    code, _ = run("export-grid", "V", "--nx", "21", "--ny", "21", "--out", str(out))
    assert code == 2
    assert not out.exists()


def test_export_grid_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert run("export-grid", "chi_e", "--nx", "6", "--ny", "6", "--zeta=0.6,0.8", "--out", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_export_grid_unwritable_permissions(tmp_path):
    d = tmp_path / "ro"
    d.mkdir()
    d.chmod(stat.S_IRUSR | stat.S_IXUSR)
    assert run("export-grid", "V", "--nx", "4", "--ny", "4", "--out", str(d / "x.csv"))[0] == 2


def test_export_grid_unwritable_path(tmp_path):
    target = tmp_path / "missing_dir" / "x.csv"
    assert run("export-grid", "V", "--nx", "4", "--ny", "4", "--out", str(target))[0] == 2


# --- configuration --------------------------------------------------------------------


def test_config_unknown_key(tmp_path):
    cfg = write_cfg(tmp_path, "colour = 3\n")
    assert run("--config", cfg, "eval", "V", "--b=0.3,0")[0] == 2


def test_config_bad_epsilon(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "epsilon = -1\n")
    assert run("eval", "V", "--b=0.3,0", "--config", cfg)[0] == 2
    assert "epsilon" in capsys.readouterr().err


def test_config_missing_file(tmp_path):
    assert run("--config", str(tmp_path / "nope.cfg"), "eval", "V", "--b=0.3,0")[0] == 2


def test_config_env_fallback(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, "radius_r = 2.0\n")
    monkeypatch.setenv("OVFORGE_CONFIG", cfg)
    # |b| = 1.5 lies inside the larger disc only
    assert run("eval", "V", "--b=1.5,0", "--theta-e", "1")[0] == 0
    monkeypatch.delenv("OVFORGE_CONFIG")
    assert run("eval", "V", "--b=1.5,0", "--theta-e", "1")[0] == 1


def test_config_parsing():
    cfg = parse_config_text("# comment\nseed = 7\nfd_step = 1e-3  # trailing\n")
    assert cfg.seed == 7 and cfg.fd_step == 1e-3
    for bad in ("grid_n = 2", "seed = -1", "bessel_truncation = x", "just words"):
        with pytest.raises(ConfigError):
            parse_config_text(bad)
    p = RunConfig(quad_rel_tol=1e-8, fd_step=1e-3).params()
    assert p.quad == QuadratureSpec(rel_tol=1e-8) and p.fd == FiniteDifferenceSpec(h=1e-3)
    assert isinstance(p, ModelParams)


def test_degraded_quadrature_fails_verification(tmp_path):
    # a loose quadrature tolerance is expected to push the jump residual past its threshold;
    # in practice adaptive Gauss-Kronrod still lands below it, see the decisions ledger
    cfg = write_cfg(tmp_path, "quad_rel_tol = 1e-2\n")
    code, _ = run("--config", cfg, "verify", "--suite", "twistor")
    assert code == 1


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "ovforge", "eval", "phi_m", "--b=0.4,0", "--zeta=1,0"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    (row,) = rows(proc.stdout)
    assert abs(float(row["value_re"])) <= 1e-16
