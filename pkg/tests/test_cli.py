"""End-to-end tests of the command line front end: config validation
(every offending key reported), exit-code contract (0 pass / 2 flagged /
1 usage), per-command report schemas, determinism modulo the timestamp,
and the frozen CSV headers downstream tooling depends on.
"""

import json

import pytest

from kappamu.cli import (
    ConfigError,
    main,
    parse_config,
    parse_interval,
    sample_points,
)

PKG_HEADER = "c,criterion_residual,lambda,lambda_prime,bitension_norm"


def write_config(tmp_path, name="cfg.json", **doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def power_config(tmp_path, **extra):
    doc = {"family": {"kind": "power", "n": 0.5}, "sign": "plus"}
    doc.update(extra)
    return write_config(tmp_path, **doc)


def run_json(tmp_path, argv):
    out = tmp_path / "report.json"
    code = main(argv + ["--out", str(out)])
    return code, json.loads(out.read_text())


# --- config handling -------------------------------------------------------


def test_interval_parsing():
    assert parse_interval("0.5:2") == (0.5, 2.0)
    assert parse_interval("-3:0.9") == (-3.0, 0.9)
    for bad in ("1", "2:1", "a:b", "1:1"):
        with pytest.raises(ConfigError):
            parse_interval(bad)


def test_config_errors_are_collected_not_first_only():
    doc = {
        "family": {"kind": "power", "m": 0.5, "extra": 1},
        "sign": "sideways",
        "frobnicate": True,
        "tolerance": 1e-9,
    }
    with pytest.raises(ConfigError) as err:
        parse_config("verify", doc)
    text = "\n".join(err.value.problems)
    for fragment in ("frobnicate", "tolerance", "'m'", "'extra'", "missing key 'n'", "sign"):
        assert fragment in text
    assert len(err.value.problems) >= 5


def test_command_specific_requirements():
    with pytest.raises(ConfigError, match="requires a family"):
        parse_config("verify", {})
    with pytest.raises(ConfigError, match="requires the first-integral constant"):
        parse_config("foliate", {"sign": "minus"})
    with pytest.raises(ConfigError, match="requires a leaf height"):
        parse_config("leaf-report", {"family": {"kind": "constant", "value": 1.0}})
    with pytest.raises(ConfigError, match="command"):
        parse_config("polish", {"family": {"kind": "power", "n": 0.5}})


def test_usage_errors_exit_1(tmp_path, capsys):
    # no command anywhere
    assert main(["--config", power_config(tmp_path)]) == 1
    # config file is not JSON
    bad = tmp_path / "bad.json"
    bad.write_text("not json {")
    assert main(["--config", str(bad), "--command", "verify"]) == 1
    # unknown flag value
    assert main(["--command", "verify", "--format", "xml"]) == 1
    err = capsys.readouterr().err
    assert "kappamu:" in err


def test_every_offending_key_reaches_stderr(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        family={"kind": "power"},
        sign="diagonal",
        frobnicate=1,
        command="verify",
    )
    assert main(["--config", cfg]) == 1
    err = capsys.readouterr().err
    for fragment in ("frobnicate", "missing key 'n'", "sign"):
        assert fragment in err


def test_unwritable_output_path_exits_1(tmp_path, capsys):
    cfg = power_config(tmp_path, command="audit", points=2)
    assert main(["--config", cfg, "--out", str(tmp_path / "no-dir" / "x.json")]) == 1
    assert "no-dir" in capsys.readouterr().err


def test_sampling_is_seeded_and_interior(tmp_path):
    cfg = parse_config(
        "verify",
        {"family": {"kind": "power", "n": 0.5}, "seed": 3, "points": 50, "interval": [0.01, 10.0]},
    )
    pts = sample_points(cfg)
    assert pts == sample_points(cfg)
    width = 10.0 - 0.01
    for p in pts:
        assert -1.0 <= p.x <= 1.0 and -1.0 <= p.y <= 1.0
        assert 0.01 + 0.1 * width <= p.z <= 10.0 - 0.1 * width
    shifted = parse_config(
        "verify", {"family": {"kind": "power", "n": 0.5}, "seed": 4, "points": 50}
    )
    assert pts != sample_points(shifted)


def test_interval_must_meet_family_domain(tmp_path):
    cfg = write_config(
        tmp_path,
        family={"kind": "sqrt_linear", "a": 1.0, "b": 0.0},
        sign="plus",
        interval="2:9",  # the family lives on z < 1
        command="verify",
    )
    assert main(["--config", cfg]) == 1


# --- verify / audit --------------------------------------------------------


def test_verify_all_residuals_pass(tmp_path):
    cfg = power_config(tmp_path, points=100, seed=42)
    code, env = run_json(tmp_path, ["--config", cfg, "--command", "verify"])
    assert code == 0
    assert env["summary"] == {"pass_count": 100, "flag_count": 0}
    assert len(env["rows"]) == 100
    for row in env["rows"]:
        for key, value in row.items():
            if key in ("index", "x", "y", "z", "status"):
                continue
            assert value < 1e-9, (key, value)


def test_audit_flags_the_gradient_coefficient(tmp_path):
    cfg = power_config(tmp_path, points=15, seed=1)
    code, env = run_json(tmp_path, ["--config", cfg, "--command", "audit"])
    assert code == 2
    by_name = {r["name"]: r for r in env["rows"]}
    assert by_name["scalar_curvature_rewrite"]["status"] == "flagged"
    assert by_name["phi_plane_curvature"]["status"] == "pass"
    assert by_name["scalar_curvature_sum"]["status"] == "pass"
    assert env["summary"]["flag_count"] == 1
    detail = by_name["scalar_curvature_rewrite"]["detail"]
    assert detail["printed_gradient_coefficient"] == -0.75
    assert detail["alternative_abs_residual"] < 1e-8


def test_audit_passes_on_constant_family(tmp_path):
    cfg = write_config(
        tmp_path,
        family={"kind": "constant", "value": 1.5},
        sign="minus",
        points=5,
        command="audit",
    )
    code, env = run_json(tmp_path, ["--config", cfg])
    assert code == 0
    assert env["summary"]["flag_count"] == 0


# --- root searches ---------------------------------------------------------


def test_curve_roots_csv_schema_and_value(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        family={"kind": "power", "n": 0.5},
        sign="minus",
        command="curve-roots",
    )
    code = main(["--config", cfg, "--format", "csv"])
    out = capsys.readouterr().out.splitlines()
    assert code == 0
    assert out[0] == PKG_HEADER
    assert len(out) == 2
    c, resid, lam, lam_p, oracle = (float(v) for v in out[1].split(","))
    assert abs(c - 1.05824) < 1e-4
    assert resid < 1e-9 and oracle < 1e-7
    # 17 significant digits: cells round-trip to the exact float
    assert format(c, ".17g") == out[1].split(",")[0]


def test_surface_roots_empty_for_sqrt_linear(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        family={"kind": "sqrt_linear", "a": 1.0, "b": 0.0},
        sign="plus",
        interval="-3:0.9",
        command="surface-roots",
    )
    code = main(["--config", cfg, "--format", "csv"])
    out = capsys.readouterr().out.splitlines()
    assert code == 0
    assert out == [PKG_HEADER]  # header-only CSV, nothing found


def test_interval_flag_narrows_the_scan(tmp_path):
    cfg = write_config(
        tmp_path,
        family={"kind": "power", "n": 0.5},
        sign="minus",
        command="surface-roots",
    )
    code, env = run_json(tmp_path, ["--config", cfg])
    assert code == 0 and len(env["rows"]) == 3
    code, env = run_json(tmp_path, ["--config", cfg, "--interval", "0.4:0.8"])
    assert code == 0 and len(env["rows"]) == 1
    assert abs(env["rows"][0]["c"] - 0.593821) < 1e-4


# --- foliate / leaf-report -------------------------------------------------


def test_foliate_report_and_csv(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        sign="minus",
        beta=-10.0,
        branch="decreasing",
        span=0.05,
        command="foliate",
    )
    code, env = run_json(tmp_path, ["--config", cfg])
    assert code == 0
    assert env["summary"]["termination"] == "span_exhausted"
    assert env["summary"]["samples"] == 51 == len(env["rows"])
    assert env["summary"]["invariant_drift"] < 1e-9
    assert env["rows"][0]["lambda"] == 1.0
    assert all(abs(r["F_surf"]) < 1e-6 for r in env["rows"])

    code = main(["--config", cfg, "--format", "csv"])
    out = capsys.readouterr().out.splitlines()
    assert code == 0
    assert out[0] == "z,lambda,lambda_prime,rhs,F_surf"
    assert len(out) == 52


def test_foliate_empty_trajectory(tmp_path, capsys):
    cfg = write_config(tmp_path, sign="minus", beta=-100.0, command="foliate")
    code, env = run_json(tmp_path, ["--config", cfg])
    assert code == 0
    assert env["rows"] == []
    assert env["summary"]["termination"] == "rhs_nonpositive"
    code = main(["--config", cfg, "--format", "csv"])
    assert capsys.readouterr().out.splitlines() == ["z,lambda,lambda_prime,rhs,F_surf"]
    assert code == 0


def test_foliate_flag_overrides(tmp_path):
    cfg = write_config(tmp_path, sign="minus", beta=-10.0, command="foliate")
    code, env = run_json(
        tmp_path,
        ["--config", cfg, "--branch", "decreasing", "--span", "0.02", "--step", "2e-3",
         "--beta", "-12.0", "--lambda0", "1.5", "--z0", "3.0"],
    )
    assert code == 0
    assert env["config"]["beta"] == -12.0
    assert env["config"]["lambda0"] == 1.5
    assert env["rows"][0]["z"] == 3.0
    assert env["summary"]["samples"] == 11


def test_leaf_report_verdicts(tmp_path):
    surface_root = 0.59382135477636488  # power(0.5), minus choice
    cfg = write_config(
        tmp_path,
        family={"kind": "power", "n": 0.5},
        sign="minus",
        c=surface_root,
        command="leaf-report",
    )
    code, env = run_json(tmp_path, ["--config", cfg])
    assert code == 0
    (row,) = env["rows"]
    assert row["verdict"] == "proper_biharmonic"
    assert row["bitension_norm"] < 1e-7

    off = write_config(
        tmp_path,
        name="off.json",
        family={"kind": "power", "n": 0.5},
        sign="minus",
        c=2.0,
        command="leaf-report",
    )
    code, env = run_json(tmp_path, ["--config", off])
    assert code == 2
    assert env["rows"][0]["verdict"] == "not_biharmonic"

    outside = write_config(
        tmp_path,
        name="outside.json",
        family={"kind": "power", "n": 0.5},
        sign="minus",
        c=-1.0,
        command="leaf-report",
    )
    assert main(["--config", outside]) == 1


# --- envelope contract -----------------------------------------------------


def test_reports_are_deterministic_modulo_timestamp(tmp_path):
    cfg = power_config(tmp_path, points=10, seed=9, command="verify")
    _, first = run_json(tmp_path, ["--config", cfg])
    _, second = run_json(tmp_path, ["--config", cfg])
    first.pop("generated_at")
    second.pop("generated_at")
    assert json.dumps(first, sort_keys=True) == json.dumps(second, sort_keys=True)


def test_envelope_carries_tool_and_config_echo(tmp_path):
    cfg = power_config(tmp_path, points=3, seed=0, command="audit")
    _, env = run_json(tmp_path, ["--config", cfg])
    assert env["tool"] == "kappamu"
    assert env["version"]
    assert env["command"] == "audit"
    assert env["config"]["family"] == {"kind": "power", "n": 0.5}
    assert env["config"]["sign"] == "plus"
    assert env["config"]["seed"] == 0
