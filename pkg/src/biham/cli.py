"""
Command-line front end.

    biham simulate --config run.yaml [--seed N] [--out DIR]
    biham check {involution,recursion,jacobi,madelung} --config run.yaml
    biham hierarchy TN "-i*psi" 4 [--golden flows.txt]
    biham report [--out DIR] [--only 1,4,7]

Exit status: 0 when every threshold passes, 1 on a threshold failure and
2 on a configuration or runtime error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import acceptance
from .config import ConfigError, ExperimentConfig, parse_config
from .dynamics import madelung_consistency, run
from .functionals import K0, K1, Hn, Kminus1, involution_matrix, recursion_consistency
from .grid import Grid1D, random_state
from .hierarchy import OPERATORS, generate_hierarchy, parse, render
from .structures import Canonical, NlsNonlocal, SchrodingerWeighted

log = logging.getLogger("biham")

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2

CHECK_TOLERANCES = {
    "involution": 1e-8,
    "involution-nls": 1e-5,
    "recursion": 1e-9,
    "recursion-nls": 1e-5,
    "jacobi": 1e-5,
    "madelung": 1e-5,
}


class UsageError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)) and not isinstance(obj, bool):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _atomic_write(path: Path, text: str) -> None:
    """Write via a temporary file so a failure never leaves a partial file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def dump_json(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"


def trajectory_csv(times, values: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = list(values)
    writer.writerow(["t"] + names)
    for i, t in enumerate(times):
        writer.writerow([f"{t:.17g}"] + [f"{values[n][i]:.17g}" for n in names])
    return buf.getvalue()


def _load(args) -> ExperimentConfig:
    if not args.config:
        raise UsageError("--config is required")
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.output.dir = args.out
    return cfg


def _base_report(command: str, cfg: ExperimentConfig) -> dict:
    return {
        "command": command,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "drift": None,
        "involution": None,
        "recursion": None,
        "thresholds": {},
        "passed": True,
    }


def _threshold(report: dict, name: str, value: float, bound: float) -> None:
    ok = bool(np.isfinite(value) and value < bound)
    report["thresholds"][name] = {"value": value, "max": bound, "passed": ok}
    report["passed"] = report["passed"] and ok


# --- simulate ----------------------------------------------------------------

def cmd_simulate(cfg: ExperimentConfig) -> dict:
    grid = cfg.build_grid()
    u0 = cfg.build_state(grid)
    params = cfg.build_operator(grid) if cfg.equation == "lse" else cfg.build_nls()
    monitors = cfg.build_monitors(grid)
    rec = run(cfg.equation, u0, params, cfg.build_integrator(), monitors, keep_states=False)

    report = _base_report("simulate", cfg)
    report["drift"] = rec.drift
    report["checkpoints"] = len(rec.times)
    report["final_time"] = float(rec.times[-1])
    report["final_values"] = {k: float(v[-1]) for k, v in rec.values.items()}
    for name, bound in cfg.thresholds.items():
        _threshold(report, f"drift {name}", rec.drift[name], bound)

    out = Path(cfg.output.dir)
    _atomic_write(out / cfg.output.csv, trajectory_csv(rec.times, rec.values))
    _atomic_write(out / cfg.output.json, dump_json(report))
    return report


# --- check -------------------------------------------------------------------

def _check_involution(cfg: ExperimentConfig, report: dict) -> None:
    grid = cfg.build_grid()
    rng = np.random.default_rng(cfg.seed)
    ph = cfg.physics
    if cfg.equation == "lse":
        op = cfg.build_operator(grid)
        specs = [Hn(n, op) for n in range(4)]
        structures = {"Lambda1": Canonical(ph.hbar), "Lambda0": SchrodingerWeighted(op)}
        tol = CHECK_TOLERANCES["involution"]
    else:
        specs = [Kminus1(), K0(ph.hbar, ph.mass), K1(ph.hbar, ph.mass, ph.b)]
        structures = {"Lambda1": Canonical(ph.hbar),
                      "Lambda2": NlsNonlocal.from_coupling(ph.hbar, ph.mass, ph.b)}
        tol = CHECK_TOLERANCES["involution-nls"]
    # the quartic density term of K1 needs four times the state bandwidth
    # to be alias free on a periodic grid
    band = 0.25 if cfg.equation == "nls" and grid.periodic else None
    worst = {k: np.zeros((len(specs), len(specs))) for k in structures}
    for _ in range(cfg.check.states):
        u = random_state(grid, rng, band)
        for key, P in structures.items():
            mat, scale = involution_matrix(specs, P, u, with_scale=True)
            worst[key] = np.maximum(worst[key], np.abs(mat) / scale)
    report["involution"] = {"functionals": [s.name for s in specs], "states": cfg.check.states,
                            "max_relative": worst}
    for key, mat in worst.items():
        _threshold(report, f"involution {key}", float(mat.max()), tol)


def _check_recursion(cfg: ExperimentConfig, report: dict) -> None:
    grid = cfg.build_grid()
    ph = cfg.physics
    if cfg.equation == "lse":
        rng = np.random.default_rng(cfg.seed)
        op = cfg.build_operator(grid)
        worst = [0.0] * 4
        for _ in range(cfg.check.states):
            rep = recursion_consistency(random_state(grid, rng), "linear", op)
            worst = [max(a, b) for a, b in zip(worst, rep.residuals)]
        report["recursion"] = {"chain": "linear", "residuals": worst, "constant": None}
        _threshold(report, "recursion linear", max(worst), CHECK_TOLERANCES["recursion"])
    else:
        rep = recursion_consistency(cfg.build_state(grid), "nls", hbar=ph.hbar,
                                    mass=ph.mass, b=ph.b)
        report["recursion"] = {"chain": "nls", "residuals": rep.residuals,
                               "constant": rep.constant}
        _threshold(report, "recursion nls", max(rep.residuals),
                   CHECK_TOLERANCES["recursion-nls"])


def _check_jacobi(cfg: ExperimentConfig, report: dict) -> None:
    ph = cfg.physics
    grid = Grid1D(cfg.check.jacobi_L, cfg.check.jacobi_N, "decaying")
    u = acceptance.jacobi_state(grid)
    b = ph.b if ph.b != 0 else 1.0
    lam2 = NlsNonlocal.from_coupling(ph.hbar, ph.mass, b)
    details = {}
    for key, P in (("Lambda2", lam2), ("Lambda1+Lambda2", Canonical(ph.hbar) + lam2)):
        rel, res, scale = acceptance.jacobi_relative(P, u)
        details[key] = {"residual": res, "scale": scale}
        _threshold(report, f"jacobi {key}", rel, CHECK_TOLERANCES["jacobi"])
    report["jacobi"] = {"N": grid.N, "L": grid.L, **details}


def _check_madelung(cfg: ExperimentConfig, report: dict) -> None:
    if cfg.equation != "lse":
        raise ConfigError("equation: the madelung check needs equation lse")
    grid = cfg.build_grid()
    chk = madelung_consistency(cfg.build_state(grid), cfg.build_operator(grid))
    report["madelung"] = {"chi_residual": chk.chi_residual, "pi_residual": chk.pi_residual,
                          "mask_fraction": chk.mask_fraction}
    _threshold(report, "madelung residual", chk.residual, CHECK_TOLERANCES["madelung"])
    _threshold(report, "madelung continuity", chk.continuity, CHECK_TOLERANCES["madelung"])


CHECKS = {
    "involution": _check_involution,
    "recursion": _check_recursion,
    "jacobi": _check_jacobi,
    "madelung": _check_madelung,
}


def cmd_check(kind: str, cfg: ExperimentConfig) -> dict:
    report = _base_report(f"check {kind}", cfg)
    CHECKS[kind](cfg, report)
    _atomic_write(Path(cfg.output.dir) / f"check_{kind}.json", dump_json(report))
    return report


# --- hierarchy ---------------------------------------------------------------

def cmd_hierarchy(operator: str, seed: str, depth: int) -> str:
    if operator not in OPERATORS:
        raise UsageError(f"unknown operator {operator!r}; choose from {', '.join(OPERATORS)}")
    if depth < 1:
        raise UsageError("depth must be >= 1")
    if operator in ("TG", "TK") and depth > 1:
        raise UsageError(f"{operator} is applied to depth 1 only")
    try:
        start = parse(seed)
    except ValueError as exc:
        raise UsageError(f"cannot parse seed {seed!r}: {exc}") from None
    flows = generate_hierarchy(OPERATORS[operator], start, depth)
    lines = []
    for n, flow in enumerate(flows, start=1):
        tag = "" if flow.is_local else "  [nonlocal]"
        lines.append(f"{n}: {render(flow)}{tag}")
    return "\n".join(lines) + "\n"


# --- report ------------------------------------------------------------------

def cmd_report(out: Path, only=None) -> list:
    results = acceptance.run_all(only)
    rows = io.StringIO()
    writer = csv.writer(rows, lineterminator="\n")
    writer.writerow(["criterion", "title", "measurement", "value", "comparison", "bound", "passed"])
    for crit in results:
        for m in crit.measurements:
            writer.writerow([crit.number, crit.title, m.label, f"{m.value:.17g}",
                             ">" if m.above else "<", f"{m.bound:g}", m.passed])
    _atomic_write(out / "acceptance.csv", rows.getvalue())
    _atomic_write(out / "acceptance.json", dump_json(
        {"criteria": [c.to_dict() for c in results],
         "passed": all(c.passed for c in results)}))
    return results


# --- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biham", description=__doc__.split("\n")[1])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="experiment config (YAML)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory (overrides output.dir)")

    common(sub.add_parser("simulate", help="integrate and write CSV + JSON report"))
    p = sub.add_parser("check", help="run a structural check over seeded random states")
    p.add_argument("kind", choices=sorted(CHECKS))
    common(p)
    p = sub.add_parser("hierarchy", help="print a symbolic flow hierarchy")
    p.add_argument("operator", help=", ".join(OPERATORS))
    p.add_argument("seed", help="seed polynomial, e.g. '-i*psi'")
    p.add_argument("depth", type=int)
    p.add_argument("--golden", help="compare the listing with this file")
    p = sub.add_parser("report", help="run the acceptance suite")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--only", help="comma separated criterion numbers")
    return parser


def _print_thresholds(report: dict) -> None:
    for name, entry in report["thresholds"].items():
        status = "PASS" if entry["passed"] else "FAIL"
        print(f"[{status}] {name}: {entry['value']:.3e} (< {entry['max']:.0e})")


def _protect_seed(argv: list) -> list:
    """Seeds such as ``-i*psi`` start with a dash; move the hierarchy
    positionals behind ``--`` so argparse does not read them as options."""
    if "hierarchy" not in argv or "--" in argv:
        return argv
    at = argv.index("hierarchy") + 1
    head, rest = argv[:at], argv[at:]
    options, positionals = [], []
    it = iter(rest)
    for tok in it:
        if tok in ("-h", "--help") or tok.startswith("--golden="):
            options.append(tok)
        elif tok == "--golden":
            options += [tok, next(it, "")]
        else:
            positionals.append(tok)
    return head + options + ["--"] + positionals


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(_protect_seed(argv))
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "hierarchy":
            text = cmd_hierarchy(args.operator, args.seed, args.depth)
            sys.stdout.write(text)
            if args.golden:
                golden = Path(args.golden).read_text()
                if golden != text:
                    print(f"listing differs from {args.golden}", file=sys.stderr)
                    return EXIT_FAIL
            return EXIT_OK
        if args.command == "report":
            only = None
            if args.only:
                try:
                    only = [int(s) for s in args.only.split(",")]
                except ValueError:
                    raise UsageError(f"--only expects numbers, got {args.only!r}") from None
                if any(n < 1 or n > len(acceptance.CRITERIA) for n in only):
                    raise UsageError(f"criteria are numbered 1..{len(acceptance.CRITERIA)}")
            results = cmd_report(Path(args.out), only)
            for crit in results:
                print(crit.line())
            return EXIT_OK if all(c.passed for c in results) else EXIT_FAIL
        cfg = _load(args)
        if args.command == "simulate":
            report = cmd_simulate(cfg)
        else:
            report = cmd_check(args.kind, cfg)
        _print_thresholds(report)
        return EXIT_OK if report["passed"] else EXIT_FAIL
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"biham: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ConfigError, ValueError, FloatingPointError, OSError) as exc:
        print(f"biham: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
