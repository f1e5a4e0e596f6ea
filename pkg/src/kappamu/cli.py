"""Batch entry point: configure a model space from a JSON document, run
verification / audit / root-search / profile-integration commands, and
emit machine-readable reports.

The contract scripts rely on:

* exit 0 -- command completed, nothing flagged;
* exit 2 -- command completed, at least one row flagged (reports are
  still written in full: a flag is a finding, not a crash);
* exit 1 -- usage or configuration error; every offending config key is
  listed, not just the first one.

JSON reports are sorted-key dumps of the full envelope; repeated runs
with the same config and seed are byte-identical apart from the
``generated_at`` timestamp.  CSV reports carry just the per-command rows
with numbers at 17 significant digits (round-trippable float64).
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import sys
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import __version__
from .biharmonic import AntiInvariantSurface, find_roots, surface_report
from .foliation import FoliationParams, integrate_foliation
from .jets import (
    ConstantFamily,
    DomainError,
    LambdaFamily,
    PowerFamily,
    SqrtLinearFamily,
)
from .manifold import (
    GaugeFunctions,
    ModelSpace,
    Point,
    PolyGauge,
    Sign,
    SinGauge,
    ZeroGauge,
    verify_structure,
)
from .tensor_kernel import (
    audit_identities,
    connection_coeffs,
    extract_kappa_mu,
    point_kernel,
    xi_kappa_derivative,
)

COMMANDS = ("verify", "audit", "curve-roots", "surface-roots", "foliate", "leaf-report")

#: Meaning of --tol per command: verify/audit -> residual threshold,
#: roots -> oracle bitension threshold, foliate -> per-sample criterion
#: bound, leaf-report -> biharmonicity verdict threshold.
DEFAULT_TOL = {
    "verify": 1e-9,
    "audit": 1e-8,
    "curve-roots": 1e-7,
    "surface-roots": 1e-7,
    "foliate": 1e-6,
    "leaf-report": 1e-7,
}

#: Fallback scan window; intersected with the family domain before use.
DEFAULT_INTERVAL = (0.01, 10.0)

_TOP_KEYS = {
    "command",
    "family",
    "sign",
    "gauges",
    "seed",
    "points",
    "tol",
    "interval",
    "grid",
    "c",
    "format",
    "beta",
    "lambda0",
    "z0",
    "step",
    "span",
    "branch",
}

_SPACE_COMMANDS = ("verify", "audit", "curve-roots", "surface-roots", "leaf-report")

CSV_COLUMNS = {
    "verify": [
        "index",
        "x",
        "y",
        "z",
        "structure",
        "metricity",
        "torsion",
        "curvature_symmetry",
        "reeb_fit",
        "kappa_closed_form",
        "mu_closed_form",
        "h_action",
        "xi_kappa",
        "status",
    ],
    "audit": ["name", "lhs", "rhs", "abs_residual", "tolerance", "status"],
    "curve-roots": ["c", "criterion_residual", "lambda", "lambda_prime", "bitension_norm"],
    "surface-roots": ["c", "criterion_residual", "lambda", "lambda_prime", "bitension_norm"],
    "foliate": ["z", "lambda", "lambda_prime", "rhs", "F_surf"],
    "leaf-report": ["c", "criterion_value", "lambda_prime", "bitension_norm", "curvature", "verdict"],
}


class ConfigError(Exception):
    """Raised with the complete list of configuration problems."""

    def __init__(self, problems: Sequence[str]):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


# --- configuration ---------------------------------------------------------


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def parse_interval(text: str) -> tuple[float, float]:
    """Parse 'lo:hi' into an ordered pair."""
    parts = text.split(":")
    try:
        lo, hi = (float(p) for p in parts)
    except ValueError:
        raise ConfigError([f"interval must look like 'lo:hi', got {text!r}"]) from None
    if not lo < hi:
        raise ConfigError([f"interval must have lo < hi, got {text!r}"])
    return lo, hi


def build_family(spec: Any, problems: list[str]) -> LambdaFamily | None:
    if not isinstance(spec, dict) or "kind" not in spec:
        problems.append("family: expected an object with a 'kind' key")
        return None
    kind = spec["kind"]
    required = {"power": {"n"}, "sqrt_linear": {"a", "b"}, "constant": {"value"}}
    if kind not in required:
        problems.append(f"family: unknown kind {kind!r}")
        return None
    missing = required[kind] - spec.keys()
    extra = spec.keys() - required[kind] - {"kind"}
    for key in sorted(missing):
        problems.append(f"family: missing key '{key}' for kind '{kind}'")
    for key in sorted(extra):
        problems.append(f"family: unknown key '{key}' for kind '{kind}'")
    bad_values = [k for k in sorted(required[kind] & spec.keys()) if not _is_number(spec[k])]
    for key in bad_values:
        problems.append(f"family: key '{key}' must be a number")
    if missing or extra or bad_values:
        return None
    try:
        if kind == "power":
            return PowerFamily(float(spec["n"]))
        if kind == "sqrt_linear":
            return SqrtLinearFamily(float(spec["a"]), float(spec["b"]))
        return ConstantFamily(float(spec["value"]))
    except (ValueError, DomainError) as exc:
        problems.append(f"family: {exc}")
        return None


def build_gauge(spec: Any, label: str, problems: list[str]):
    if spec == "zero":
        return ZeroGauge()
    if not isinstance(spec, dict) or "kind" not in spec:
        problems.append(f"gauges.{label}: expected 'zero' or an object with a 'kind' key")
        return None
    kind = spec["kind"]
    if kind == "zero" and spec.keys() == {"kind"}:
        return ZeroGauge()
    if kind == "poly":
        extra = spec.keys() - {"kind", "coeffs"}
        coeffs = spec.get("coeffs")
        if extra or not isinstance(coeffs, list) or not all(_is_number(c) for c in coeffs):
            problems.append(f"gauges.{label}: poly gauge needs a numeric 'coeffs' list")
            return None
        return PolyGauge(tuple(float(c) for c in coeffs))
    if kind == "sin":
        extra = spec.keys() - {"kind", "amplitude"}
        if extra or not _is_number(spec.get("amplitude")):
            problems.append(f"gauges.{label}: sin gauge needs a numeric 'amplitude'")
            return None
        return SinGauge(float(spec["amplitude"]))
    problems.append(f"gauges.{label}: unknown kind {kind!r}")
    return None


@dataclass(frozen=True)
class RunConfig:
    """Validated, default-filled inputs for one command run."""

    command: str
    family: LambdaFamily | None
    sign: Sign
    gauges: GaugeFunctions
    seed: int = 0
    points: int = 100
    tol: float = 1e-9
    interval: tuple[float, float] = DEFAULT_INTERVAL
    grid: int = 10000
    fmt: str = "json"
    c: float | None = None
    beta: float | None = None
    lambda0: float = 1.0
    z0: float = 0.0
    step: float = 1e-3
    span: float = 1.0
    branch: str = "increasing"
    echo: dict = field(default_factory=dict)

    def space(self) -> ModelSpace:
        return ModelSpace(self.family, self.sign, self.gauges)


def parse_config(command: Any, data: dict) -> RunConfig:
    """Validate the merged config document; collect *all* problems."""
    problems: list[str] = []
    if command not in COMMANDS:
        problems.append(
            f"command must be one of {', '.join(COMMANDS)}, got {command!r}"
        )
    for key in sorted(data.keys() - _TOP_KEYS):
        problems.append(f"unknown config key: {key}")

    family = None
    if "family" in data:
        family = build_family(data["family"], problems)
    elif command in _SPACE_COMMANDS:
        problems.append(f"'{command}' requires a family")

    sign = Sign.PLUS
    if "sign" in data:
        try:
            sign = Sign.parse(str(data["sign"]))
        except ValueError as exc:
            problems.append(str(exc))

    f_gauge, h_gauge = ZeroGauge(), ZeroGauge()
    if "gauges" in data:
        gspec = data["gauges"]
        if not isinstance(gspec, dict):
            problems.append("gauges: expected an object with 'f' and 'h' keys")
        else:
            for key in sorted(gspec.keys() - {"f", "h"}):
                problems.append(f"gauges: unknown key '{key}'")
            if "f" in gspec:
                f_gauge = build_gauge(gspec["f"], "f", problems) or f_gauge
            if "h" in gspec:
                h_gauge = build_gauge(gspec["h"], "h", problems) or h_gauge

    def number(key: str, default: float | None, positive: bool = False) -> float | None:
        if key not in data:
            return default
        value = data[key]
        if not _is_number(value):
            problems.append(f"{key} must be a number")
            return default
        if positive and not value > 0:
            problems.append(f"{key} must be positive")
            return default
        return float(value)

    def integer(key: str, default: int, minimum: int) -> int:
        if key not in data:
            return default
        value = data[key]
        if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
            problems.append(f"{key} must be an integer >= {minimum}")
            return default
        return value

    seed = integer("seed", 0, 0)
    points = integer("points", 100, 1)
    grid = integer("grid", 10000, 2)
    tol = number("tol", DEFAULT_TOL.get(command, 1e-9), positive=True)

    interval = DEFAULT_INTERVAL
    if "interval" in data:
        raw = data["interval"]
        try:
            if isinstance(raw, str):
                interval = parse_interval(raw)
            elif (
                isinstance(raw, list)
                and len(raw) == 2
                and all(_is_number(v) for v in raw)
                and raw[0] < raw[1]
            ):
                interval = (float(raw[0]), float(raw[1]))
            else:
                problems.append("interval must be 'lo:hi' or [lo, hi] with lo < hi")
        except ConfigError as exc:
            problems.extend(exc.problems)

    fmt = data.get("format", "json")
    if fmt not in ("json", "csv"):
        problems.append(f"format must be 'json' or 'csv', got {fmt!r}")

    c = number("c", None)
    if command == "leaf-report" and c is None and "c" not in data:
        problems.append("'leaf-report' requires a leaf height 'c'")

    beta = number("beta", None)
    if command == "foliate" and beta is None and "beta" not in data:
        problems.append("'foliate' requires the first-integral constant 'beta'")
    lambda0 = number("lambda0", 1.0, positive=True)
    z0 = number("z0", 0.0)
    step = number("step", 1e-3, positive=True)
    span = number("span", 1.0, positive=True)
    branch = data.get("branch", "increasing")
    if branch not in ("increasing", "decreasing"):
        problems.append(f"branch must be 'increasing' or 'decreasing', got {branch!r}")

    if problems:
        raise ConfigError(problems)

    echo = {
        "command": command,
        "sign": sign.value,
        "seed": seed,
        "points": points,
        "tol": tol,
        "grid": grid,
        "interval": list(interval),
        "format": fmt,
    }
    if family is not None:
        echo["family"] = family.describe()
        echo["gauges"] = {"f": f_gauge.describe(), "h": h_gauge.describe()}
    if command == "leaf-report":
        echo["c"] = c
    if command == "foliate":
        echo.update(
            beta=beta, lambda0=lambda0, z0=z0, step=step, span=span, branch=branch
        )

    return RunConfig(
        command=command,
        family=family,
        sign=sign,
        gauges=GaugeFunctions(f_gauge, h_gauge),
        seed=seed,
        points=points,
        tol=tol,
        interval=interval,
        grid=grid,
        fmt=fmt,
        c=c,
        beta=beta,
        lambda0=lambda0,
        z0=z0,
        step=step,
        span=span,
        branch=branch,
        echo=echo,
    )


# --- sampling --------------------------------------------------------------


def _z_window(cfg: RunConfig) -> tuple[float, float]:
    dom = cfg.family.domain
    lo = max(dom[0], cfg.interval[0])
    hi = min(dom[1], cfg.interval[1])
    if not lo < hi:
        raise ConfigError(
            [
                f"interval [{cfg.interval[0]}, {cfg.interval[1]}] does not "
                f"intersect the family domain ({dom[0]}, {dom[1]})"
            ]
        )
    return lo, hi


def sample_points(cfg: RunConfig) -> list[Point]:
    """Seeded points in [-1,1]^2 x the interior 80% of the z-window."""
    lo, hi = _z_window(cfg)
    width = hi - lo
    rng = np.random.default_rng(cfg.seed)
    xs = rng.uniform(-1.0, 1.0, cfg.points)
    ys = rng.uniform(-1.0, 1.0, cfg.points)
    zs = rng.uniform(lo + 0.1 * width, hi - 0.1 * width, cfg.points)
    return [Point(float(x), float(y), float(z)) for x, y, z in zip(xs, ys, zs)]


# --- command bodies --------------------------------------------------------


def _curvature_symmetry(R: np.ndarray) -> float:
    pair = np.max(np.abs(R - R.transpose(2, 3, 0, 1)))
    anti_front = np.max(np.abs(R + R.transpose(1, 0, 2, 3)))
    anti_back = np.max(np.abs(R + R.transpose(0, 1, 3, 2)))
    bianchi = np.max(np.abs(R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)))
    return float(max(pair, anti_front, anti_back, bianchi))


def _verify_rows(cfg: RunConfig) -> list[dict]:
    space = cfg.space()
    rows = []
    for i, p in enumerate(sample_points(cfg)):
        kernel = point_kernel(space, p)
        lam = kernel.lam.v0
        s = space.s
        structure = max(verify_structure(space, p).contact_residuals().values())
        conn = connection_coeffs(space, p)
        km = extract_kappa_mu(space, p)
        kappa_cf = abs(km.kappa - (1.0 - lam**2))
        mu_cf = abs(km.mu - 2.0 * (1.0 + s * lam)) if km.mu is not None else float("inf")
        h = kernel.h_matrix
        h_action = max(
            float(np.max(np.abs(h @ np.array([1.0, 0.0, 0.0])))),
            float(np.max(np.abs(h @ np.array([0.0, 1.0, 0.0]) - s * lam * np.array([0.0, 1.0, 0.0])))),
            float(np.max(np.abs(h @ np.array([0.0, 0.0, 1.0]) + s * lam * np.array([0.0, 0.0, 1.0])))),
        )
        row = {
            "index": i,
            "x": p.x,
            "y": p.y,
            "z": p.z,
            "structure": structure,
            "metricity": conn.metricity_residual(),
            "torsion": conn.torsion_residual(kernel.c0),
            "curvature_symmetry": _curvature_symmetry(kernel.riemann_tensor),
            "reeb_fit": km.residual,
            "kappa_closed_form": kappa_cf,
            "mu_closed_form": mu_cf,
            "h_action": h_action,
            "xi_kappa": abs(xi_kappa_derivative(space, p)),
        }
        residuals = [v for k, v in row.items() if k not in ("index", "x", "y", "z")]
        row["status"] = "pass" if max(residuals) < cfg.tol else "flagged"
        rows.append(row)
    return rows


def _audit_rows(cfg: RunConfig) -> list[dict]:
    space = cfg.space()
    report = audit_identities(space, sample_points(cfg), tol=cfg.tol)
    return [
        {
            "name": e.name,
            "lhs": e.lhs,
            "rhs": e.rhs,
            "abs_residual": e.abs_residual,
            "tolerance": e.tolerance,
            "status": e.status,
            "detail": e.detail,
        }
        for e in report.entries
    ]


def _root_rows(cfg: RunConfig, which: str) -> list[dict]:
    space = cfg.space()
    window = _z_window(cfg)
    records = find_roots(space, which, window, grid_n=cfg.grid)
    return [
        {
            "c": r.root,
            "criterion_residual": r.criterion_residual,
            "lambda": r.lam,
            "lambda_prime": r.lambda_prime,
            "bitension_norm": r.oracle_bitension_norm,
            "bracket": list(r.bracket),
            "status": "pass" if r.oracle_bitension_norm < cfg.tol else "flagged",
        }
        for r in records
    ]


def _foliate(cfg: RunConfig) -> tuple[list[dict], dict]:
    try:
        params = FoliationParams(
            beta_const=cfg.beta,
            sign=cfg.sign,
            lambda0=cfg.lambda0,
            z0=cfg.z0,
            step=cfg.step,
            span=cfg.span,
            branch=cfg.branch,
        )
    except (ValueError, DomainError) as exc:
        raise ConfigError([str(exc)]) from None
    solution = integrate_foliation(params)
    rows = [
        {
            "z": z,
            "lambda": lam,
            "lambda_prime": v,
            "rhs": g,
            "F_surf": f,
            "status": "pass" if abs(f) < cfg.tol else "flagged",
        }
        for z, lam, v, g, f in solution.csv_rows()
    ]
    extra = {
        "termination": solution.termination,
        "samples": len(solution.samples),
        "invariant_drift": solution.invariant_drift(),
    }
    return rows, extra


def _leaf_report_rows(cfg: RunConfig) -> list[dict]:
    space = cfg.space()
    try:
        space.family.require(cfg.c)
    except DomainError as exc:
        raise ConfigError([f"c: {exc}"]) from None
    rep = surface_report(space, AntiInvariantSurface(cfg.c), tol=cfg.tol)
    return [
        {
            "c": rep.c,
            "criterion_value": rep.criterion_value,
            "lambda_prime": rep.lambda_prime,
            "bitension_norm": rep.bitension_norm,
            "curvature": rep.curvature,
            "verdict": rep.verdict,
            "status": "pass" if rep.verdict != "not_biharmonic" else "flagged",
        }
    ]


def run(command: str, cfg: RunConfig) -> tuple[dict, int]:
    """Execute one command; return (report envelope, exit code)."""
    extra: dict = {}
    if command == "verify":
        rows = _verify_rows(cfg)
    elif command == "audit":
        rows = _audit_rows(cfg)
    elif command in ("curve-roots", "surface-roots"):
        rows = _root_rows(cfg, command.split("-")[0])
    elif command == "foliate":
        rows, extra = _foliate(cfg)
    elif command == "leaf-report":
        rows = _leaf_report_rows(cfg)
    else:  # pragma: no cover - parse_config already rejects this
        raise ConfigError([f"unknown command {command!r}"])

    flag_count = sum(1 for r in rows if r.get("status") == "flagged")
    pass_count = sum(1 for r in rows if r.get("status") == "pass")
    envelope = {
        "tool": "kappamu",
        "version": __version__,
        "command": command,
        "config": cfg.echo,
        "generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "rows": rows,
        "summary": {"pass_count": pass_count, "flag_count": flag_count, **extra},
    }
    return envelope, (2 if flag_count else 0)


# --- output ----------------------------------------------------------------


def _format_cell(value: Any) -> str:
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render(envelope: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(envelope, sort_keys=True, indent=2) + "\n"
    columns = CSV_COLUMNS[envelope["command"]]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in envelope["rows"]:
        writer.writerow([_format_cell(row[col]) for col in columns])
    return buf.getvalue()


def emit(envelope: dict, fmt: str, path: str | None) -> None:
    text = render(envelope, fmt)
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as handle:
            handle.write(text)
    except OSError as exc:
        raise ConfigError([f"cannot write report to {path}: {exc}"]) from None


# --- entry point -----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # keep exit codes under our control
        raise ConfigError([message])


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="kappamu",
        description="verify contact-metric model spaces and their biharmonic leaves",
    )
    parser.add_argument("--config", help="path to a JSON config document")
    parser.add_argument("--command", choices=COMMANDS, help="what to run")
    parser.add_argument("--out", help="write the report here instead of stdout")
    parser.add_argument("--format", choices=("json", "csv"), dest="fmt")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--interval", help="scan window lo:hi")
    parser.add_argument("--grid", type=int)
    parser.add_argument("--beta", type=float, help="first-integral constant (foliate)")
    parser.add_argument("--lambda0", type=float)
    parser.add_argument("--z0", type=float)
    parser.add_argument("--step", type=float)
    parser.add_argument("--span", type=float)
    parser.add_argument("--branch", choices=("increasing", "decreasing"))
    return parser


def _merge_flags(data: dict, args: argparse.Namespace) -> dict:
    overrides = {
        "seed": args.seed,
        "tol": args.tol,
        "grid": args.grid,
        "format": args.fmt,
        "beta": args.beta,
        "lambda0": args.lambda0,
        "z0": args.z0,
        "step": args.step,
        "span": args.span,
        "branch": args.branch,
    }
    merged = dict(data)
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    if args.interval is not None:
        merged["interval"] = list(parse_interval(args.interval))
    return merged


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        data: dict = {}
        if args.config is not None:
            try:
                with open(args.config) as handle:
                    data = json.load(handle)
            except OSError as exc:
                raise ConfigError([f"cannot read config {args.config}: {exc}"]) from None
            except json.JSONDecodeError as exc:
                raise ConfigError([f"config {args.config} is not valid JSON: {exc}"]) from None
            if not isinstance(data, dict):
                raise ConfigError([f"config {args.config} must be a JSON object"])
        data = _merge_flags(data, args)
        command = args.command or data.pop("command", None)
        data.pop("command", None)
        if command is None:
            raise ConfigError(["no command given (use --command or a 'command' config key)"])
        cfg = parse_config(command, data)
        envelope, code = run(command, cfg)
        emit(envelope, cfg.fmt, args.out)
        return code
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"kappamu: {problem}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
