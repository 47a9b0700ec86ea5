"""Command-line front end.

Every subcommand reads an optional JSON config (``--config``) whose keys
mirror the long flag names (dashes become underscores); flags given on the
command line win.  ``--dry-run`` prints the resolved configuration and exits.

Exit status: 0 on success, 1 when a verification fails, 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from typing import Optional, Sequence

import numpy as np

from .comparison import comparison_sweep
from .density import (
    boundary_value,
    closed_form_constant,
    density,
    paraboloid_closed_form,
)
from .errors import ConfigurationError, ContractViolation, ConvergenceError, DomainError
from .extension import (
    DEFAULT_A_LIST,
    ExtremizerSpec,
    QGrid,
    case_ii_family,
    default_center,
    sharp_constant_sweep,
)
from .oracle import root_sum_density_1d, thin_shell_density
from .quadrature import default_rule, philox
from .surfaces import WEIGHTS, make_surface

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
NEGATIVE_VALUE = re.compile(r"^-\.?\d")

COMMON = {
    "dim": 1,
    "n": 3,
    "perturbation": "zero",
    "params": [],
    "seed": 0,
    "nodes": None,
    "workers": None,
    "output": None,
    "format": None,
}

DEFAULTS = {
    "density": {"xi": [0.0], "tau": 1.0, "weight": None, "format": "json"},
    "oracle": {"xi": [0.0], "tau": 1.0, "method": "thin-shell", "epsilon": 1e-3,
               "box_radius": None, "samples": 1_000_000, "format": "json"},
    "verify-comparison": {"xi_grid": [-2.0, 2.0, 9], "offsets": [0.1, 1.0, 10.0],
                          "format": "csv"},
    "verify-closed-form": {"points": 50, "tol": 1e-8, "format": "csv"},
    "extension-sweep": {"case": "i", "centers": None, "a_list": list(DEFAULT_A_LIST),
                        "auto_a": False, "indices": [1, 2, 3], "tol": 1e-12,
                        "format": "csv"},
    "boundary": {"xi": [0.0], "tau": None, "weight": None, "format": "json"},
}


class UsageError(Exception):
    pass


def number(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def vector(text: str) -> list:
    """``"1.5,0.0"`` -> ``[1.5, 0.0]``."""
    return [number(part) for part in str(text).split(",") if part.strip()]


def grid_spec(text: str) -> list:
    """``"start:stop:count"`` -> ``[start, stop, count]``."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must be start:stop:count, got {text!r}")
    try:
        count = int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid count must be an integer: {text!r}") from None
    return [number(parts[0]), number(parts[1]), count]


def _default(sub, key):
    return DEFAULTS[sub].get(key, COMMON.get(key))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convomeasure",
        description="Densities of convolutions of surface measure on perturbed paraboloids.",
        argument_default=argparse.SUPPRESS)
    subs = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, help_text):
        p = subs.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        # let values such as "-2:2:9" or "-1.5,0" through as arguments
        p._negative_number_matcher = NEGATIVE_VALUE

        def opt(flag, **kw):
            key = flag.lstrip("-").replace("-", "_")
            kw.setdefault("help", "")
            kw["help"] += f" (default: {_default(name, key)!r})"
            p.add_argument(flag, **kw)

        p.add_argument("--config", help="JSON file with default values for any flag")
        p.add_argument("--dry-run", action="store_true", help="print the resolved config")
        opt("--dim", type=int, help="base dimension d")
        opt("--n", type=int, help="number of convolution factors")
        opt("--perturbation", help="zero | quartic | soft-hyperbola | exponential")
        opt("--params", type=vector, help="perturbation parameters, comma separated")
        opt("--seed", type=int, help="master seed for Monte Carlo rules")
        opt("--nodes", type=int, help="sphere rule resolution")
        opt("--workers", type=int, help="worker threads (capped by CONVOMEASURE_THREADS)")
        opt("--output", help="output path; stdout when omitted")
        opt("--format", choices=["csv", "json"], help="output format")
        return opt

    opt = add("density", "evaluate the n-fold convolution density at one point")
    opt("--xi", type=vector, help="base point, comma separated")
    opt("--tau", type=number, help="height")
    opt("--weight", choices=sorted(WEIGHTS), help="product weight")

    opt = add("oracle", "brute-force density estimate at one point")
    opt("--xi", type=vector, help="base point, comma separated")
    opt("--tau", type=number, help="height")
    opt("--method", choices=["thin-shell", "root-sum"], help="oracle to run")
    opt("--epsilon", type=number, help="shell half-width")
    opt("--box-radius", type=number, help="sampling cube radius (auto when omitted)")
    opt("--samples", type=int, help="Monte Carlo sample count")

    opt = add("verify-comparison", "check the shifted comparison inequality over a grid")
    opt("--xi-grid", type=grid_spec, help="per-coordinate grid start:stop:count")
    opt("--offsets", type=vector, help="heights above the support floor")

    opt = add("verify-closed-form", "check the unperturbed density against its closed form")
    opt("--points", type=int, help="random interior points")
    opt("--tol", type=number, help="relative tolerance for deterministic rules")

    opt = add("extension-sweep", "tabulate Q along an extremizing family")
    opt("--case", choices=["i", "ii"], help="flat centre (i) or drifting centres (ii)")
    opt("--centers", type=vector, help="centres (case ii; default from the perturbation)")
    opt("--a-list", type=vector, help="exponents (case i, or case ii without --auto-a)")
    opt("--auto-a", action="store_true", help="pick exponents with the a_n search")
    opt("--indices", type=lambda s: [int(v) for v in vector(s)],
        help="sequence indices k for case ii")
    opt("--tol", type=number, help="relative tail cut-off for the level integral")

    opt = add("boundary", "boundary value of the density at (xi, n*psi(xi/n))")
    opt("--xi", type=vector, help="base point, comma separated")
    opt("--tau", type=number, help="height for the d=1, n=2 asymptotic comparator")
    opt("--weight", choices=sorted(WEIGHTS), help="product weight")
    return parser


def resolve(argv: Optional[Sequence[str]] = None) -> dict:
    """Merge defaults, the config file and explicit flags, in that order."""
    args = vars(build_parser().parse_args(argv))
    sub = args.pop("subcommand")
    config = {**COMMON, **DEFAULTS[sub]}
    path = args.pop("config", None)
    dry = args.pop("dry_run", False)
    if path:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        loaded = {k.replace("-", "_"): v for k, v in loaded.items()}
        pert = loaded.get("perturbation")
        if isinstance(pert, dict):
            loaded["perturbation"] = pert.get("name", "zero")
            loaded["params"] = pert.get("params", [])
        unknown = set(loaded) - set(config) - {"subcommand"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        if loaded.get("subcommand", sub) != sub:
            raise UsageError(f"config is for {loaded['subcommand']!r}, not {sub!r}")
        loaded.pop("subcommand", None)
        for key in ("xi", "offsets", "params", "a_list", "centers"):
            if isinstance(loaded.get(key), str):
                loaded[key] = vector(loaded[key])
        if isinstance(loaded.get("xi_grid"), str):
            loaded["xi_grid"] = grid_spec(loaded["xi_grid"])
        config.update(loaded)
    config.update(args)
    config["subcommand"] = sub
    config["dry_run"] = dry
    return config


def fmt(x) -> str:
    return f"{float(x):.16e}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def emit(config: dict, text: str) -> None:
    path = config.get("output")
    if path:
        try:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise UsageError(f"cannot write {path}: {exc}") from None
    else:
        sys.stdout.write(text)


def dumps(payload) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(r) for r in rows]
    return "\n".join(lines) + "\n"


def _surface(config):
    return make_surface(config["perturbation"], config["params"], config["dim"])


def _weight(config):
    name = config.get("weight")
    return WEIGHTS[name]() if name else None


def _rule(config):
    m = config["dim"] * (config["n"] - 1)
    return default_rule(m, config.get("nodes"), config["seed"])


def run_density(config) -> int:
    res = density(_surface(config), config["n"], config["xi"], config["tau"],
                  weight=_weight(config), rule=_rule(config))
    payload = {"value": res.value, "error_estimate": res.error_estimate,
               "regime": res.regime.value, "nodes_used": res.nodes_used}
    if config["format"] == "csv":
        emit(config, _csv(["value", "error_estimate", "regime", "nodes_used"],
                          [[fmt(res.value), fmt(res.error_estimate), res.regime.value,
                            str(res.nodes_used)]]))
    else:
        emit(config, dumps(payload))
    return EXIT_OK


def run_oracle(config) -> int:
    surface = _surface(config)
    if config["method"] == "root-sum":
        if config["dim"] != 1 or config["n"] != 2:
            raise UsageError("root-sum needs --dim 1 --n 2")
        est = root_sum_density_1d(surface, config["xi"][0], config["tau"])
    else:
        est = thin_shell_density(surface, config["n"], config["xi"], config["tau"],
                                 epsilon=config["epsilon"], N=config["samples"],
                                 seed=config["seed"], box_radius=config["box_radius"])
    payload = {"value": est.value, "standard_error": est.standard_error, "method": est.method,
               "refined_value": est.refined_value,
               "refined_standard_error": est.refined_standard_error, "samples": est.samples}
    emit(config, dumps(payload))
    return EXIT_OK


def run_verify_comparison(config) -> int:
    start, stop, count = config["xi_grid"]
    grid = np.linspace(start, stop, int(count))
    report = comparison_sweep(_surface(config), config["n"], grid, config["offsets"],
                              rule=_rule(config), workers=config.get("workers"))
    if config["format"] == "json":
        rows = [{"xi": list(r.xi), "tau": r.tau, "lhs": r.lhs, "lhs_err": r.lhs_err,
                 "rhs": r.rhs, "margin": r.margin, "strict": r.strict} for r in report.rows]
        emit(config, dumps({"rows": rows, "summary": report.summary}))
    else:
        emit(config, report.to_csv())
    summary = report.summary
    print(f"rows={summary['rows']} violations={summary['violations']} "
          f"min_margin={summary['min_margin']:.6e}", file=sys.stderr)
    return report.exit_status


def closed_form_points(config) -> list:
    """Deterministic random interior points ``(xi, tau)`` for the closed-form check."""
    rng = philox(config["seed"], stream=1)
    d, n = config["dim"], config["n"]
    pts = []
    for _ in range(config["points"]):
        xi = rng.uniform(-2.0, 2.0, size=d)
        tau = float(xi @ xi) / n + rng.uniform(0.05, 5.0)
        pts.append((xi, tau))
    return pts


def run_verify_closed_form(config) -> int:
    d, n = config["dim"], config["n"]
    surface = make_surface("zero", (), d)
    rule = _rule(config)
    const = closed_form_constant(d, n)
    rows, failures = [], 0
    for xi, tau in closed_form_points(config):
        res = density(surface, n, xi, tau, rule=rule)
        exact = paraboloid_closed_form(d, n, xi, tau)
        rel = abs(res.value - exact) / abs(exact)
        if rule.kind == "monte-carlo":
            ok = abs(res.value - exact) <= 3.0 * res.error_estimate + 1e-12 * abs(exact)
        else:
            ok = rel <= config["tol"]
        failures += not ok
        rows.append([fmt(v) for v in xi] + [fmt(tau), fmt(res.value), fmt(res.error_estimate),
                                             fmt(exact), fmt(const), fmt(rel), str(ok).lower()])
    xi_cols = ["xi"] if d == 1 else [f"xi{k + 1}" for k in range(d)]
    header = xi_cols + ["tau", "numeric", "numeric_err", "closed_form", "constant",
                        "rel_err", "ok"]
    if config["format"] == "json":
        emit(config, dumps({"constant": const, "failures": failures,
                            "rows": [dict(zip(header, r)) for r in rows]}))
    else:
        emit(config, _csv(header, rows))
    return EXIT_FAIL if failures else EXIT_OK


def run_extension_sweep(config) -> int:
    surface = _surface(config)
    if config["dim"] != 1:
        raise UsageError("extension-sweep needs --dim 1")
    grid = QGrid(tail=config["tol"])
    if config["case"] == "i":
        family = None
        table = sharp_constant_sweep(surface, family, config["a_list"], grid,
                                     config.get("workers"))
    else:
        indices = config["indices"]
        centers = config.get("centers")
        if centers is None:
            centers = [default_center(surface.name, k) for k in indices]
        if len(centers) != len(indices):
            raise UsageError("--centers and --indices must have the same length")
        if config["auto_a"]:
            specs = case_ii_family(surface, indices, dict(zip(indices, centers)).__getitem__,
                                   grid)
        else:
            a_list = config["a_list"]
            if len(a_list) != len(centers):
                raise UsageError("case ii without --auto-a needs one exponent per centre")
            specs = [ExtremizerSpec(surface, c, a, case="ii") for c, a in zip(centers, a_list)]
        table = sharp_constant_sweep(surface, specs, grids=grid, workers=config.get("workers"))
    if config["format"] == "json":
        rows = [{"a": r.a, "center": r.center, "q_value": r.q_value, "q_err": r.q_err,
                 "gap": r.gap, "flag": r.flag} for r in table.rows]
        emit(config, dumps({"rows": rows, "gaps_positive": table.gaps_positive}))
    else:
        emit(config, table.to_csv())
    return EXIT_OK if table.gaps_positive else EXIT_FAIL


def run_boundary(config) -> int:
    surface = _surface(config)
    value = boundary_value(surface, config["n"], config["xi"], _weight(config))
    payload = {"xi": config["xi"]}
    if callable(value):
        payload["value"] = math.inf
        if config.get("tau") is not None:
            payload["asymptotic"] = value(config["tau"])
    else:
        payload["value"] = value
    emit(config, dumps(payload))
    return EXIT_OK


RUNNERS = {
    "density": run_density,
    "oracle": run_oracle,
    "verify-comparison": run_verify_comparison,
    "verify-closed-form": run_verify_closed_form,
    "extension-sweep": run_extension_sweep,
    "boundary": run_boundary,
}


def run(config: dict) -> int:
    """Execute a resolved configuration; returns the exit status."""
    if config.get("dry_run"):
        shown = {k: v for k, v in config.items() if k != "dry_run"}
        sys.stdout.write(dumps(shown))
        return EXIT_OK
    try:
        return RUNNERS[config["subcommand"]](config)
    except (UsageError, ContractViolation, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = resolve(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
