"""Command-line front end.

Exit codes: 0 success, 1 a checked claim failed (theorem or bound), 2 usage
or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bell_expressions import (
    CHSH_BOUND,
    CHSH_FACTOR,
    RATIO_FORM_FACTOR,
    ardehali_lhs,
    chsh_value,
    expression22_lhs,
    qm_bundle,
    violation_margin_ratio,
)
from .errors import BellRatioError
from .lhv import corner_check, lhv_bound, verify_theorem, z_min_analytic, z_min_bruteforce
from .optimizer import check_grid_step, optimize_ardehali, optimize_chsh
from .outcomes import PAIR_NAMES, SETTING_PAIRS
from .qm_model import ExperimentConfig, full_outcome_distribution, require_valid
from .simulator import DEFAULT_BOOTSTRAP, simulate

SEED_ENV = "BELLRATIO_SEED"
GRID_CHECK_STEP = 0.25


class UsageError(Exception):
    """Bad flags or an unusable config file; maps to exit status 2."""


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 42
    try:
        seed = int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None
    if not 0 <= seed < 2**64:
        raise UsageError(f"{SEED_ENV} must be an unsigned 64-bit integer")
    return seed


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def grid_step_type(text: str) -> float:
    try:
        value = float(text)
        check_grid_step(value)
    except (ValueError, BellRatioError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return value


def load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig(seed=default_seed())
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    data.setdefault("seed", default_seed())
    try:
        return ExperimentConfig.from_dict(data)
    except (BellRatioError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid config {path}: {exc}") from None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


class Reporter:
    """Collects outputs of one invocation and writes them with an embedded manifest."""

    def __init__(self, args, seed: int | None):
        self.subcommand = args.command
        self.output_dir = Path(args.output_dir) if args.output_dir else None
        self.plots = self.output_dir is not None and not args.no_plots
        self.manifest = {
            "subcommand": args.command,
            "config_path": getattr(args, "config", None),
            "seed": seed,
            "tool_version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "outputs": [],
        }
        if self.output_dir:
            self.output_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path | None:
        if self.output_dir is None:
            return None
        p = self.output_dir / name
        self.manifest["outputs"].append(str(p))
        return p

    def write_csv(self, name: str, text: str) -> None:
        p = self.path(name)
        if p is not None:
            header = "manifest: " + json.dumps(self.manifest, sort_keys=True)
            p.write_text(f"# {header}\n{text}")

    def emit(self, report: dict) -> dict:
        json_path = self.path(f"{self.subcommand}.json")
        doc = _jsonable({**report, "manifest": self.manifest})
        text = json.dumps(doc, indent=2, sort_keys=True)
        if json_path is not None:
            json_path.write_text(text + "\n")
        print(text)
        return doc


def cmd_verify_theorem(args, rep: Reporter) -> int:
    start = time.perf_counter()
    report = verify_theorem(args.samples, args.seed, workers=args.workers)
    corners = corner_check()
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([args.seed, 2])))
    worst = 0.0
    for _ in range(args.grid_checks):
        U, V = 1.0 - rng.random(2)
        ys = rng.random(4) * V
        analytic = z_min_analytic(*ys, U, V)[0]
        brute = z_min_bruteforce(*ys, U, V, GRID_CHECK_STEP)[0]
        worst = max(worst, abs(analytic - brute))
    ok = report.ok and corners["failures"] == 0 and worst <= 1e-9
    rep.emit({
        **report.to_dict(),
        "corners": corners,
        "grid_checks": args.grid_checks,
        "grid_check_step": GRID_CHECK_STEP,
        "max_analytic_bruteforce_gap": worst,
        "ok": ok,
        "runtime_s": time.perf_counter() - start,
    })
    return 0 if ok else 1


def cmd_lhv_bound(args, rep: Reporter) -> int:
    report = lhv_bound(args.expression)
    if rep.plots:
        from .plotting import plot_vertex_values

        plot_vertex_values(report.values, args.expression, rep.path(f"lhv-bound-{args.expression}.png"))
    rep.emit(report.to_dict())
    return 0 if report.ok else 1


def cmd_qm_eval(args, rep: Reporter, config: ExperimentConfig) -> int:
    try:
        require_valid(config)
    except BellRatioError as exc:
        raise UsageError(f"inconsistent-config: {exc}") from None
    bundle = qm_bundle(config)
    st = config.settings
    distributions = {
        name: full_outcome_distribution(config, st[first], st[second]).ordered().tolist()
        for name, first, second in SETTING_PAIRS
    }
    chsh = chsh_value(config, st.a, st.a_prime, st.b, st.b_prime)
    if rep.plots:
        from .plotting import plot_correlation_curve

        plot_correlation_curve(config.visibility, rep.path("qm-eval-correlation.png"))
    rep.emit({
        "config": config.to_dict(),
        "ardehali_lhs": ardehali_lhs(bundle).to_dict(),
        "expression22_lhs": expression22_lhs(bundle).to_dict(),
        "chsh": {"value": chsh, "bound": CHSH_BOUND, "violated": abs(chsh) > CHSH_BOUND + 1e-12},
        "bundle": bundle.to_dict(),
        "distributions": distributions,
    })
    return 0


def cmd_simulate(args, rep: Reporter, config: ExperimentConfig) -> int:
    try:
        result = simulate(config, bootstrap_resamples=args.bootstrap, workers=args.workers)
    except BellRatioError as exc:
        raise UsageError(f"inconsistent-config: {exc}") from None
    rep.write_csv("counts.csv", result.counts.to_csv())
    if rep.plots:
        from .plotting import plot_counts

        st = config.settings
        expected = np.stack([
            full_outcome_distribution(config, st[first], st[second]).cells for _, first, second in SETTING_PAIRS
        ])
        plot_counts(result.counts, expected, rep.path("simulate-counts.png"))
    counts = {name: result.counts.table[k].tolist() for k, name in enumerate(PAIR_NAMES)}
    rep.emit({**result.to_dict(), "counts": counts})
    return 0


def cmd_optimize(args, rep: Reporter, config: ExperimentConfig) -> int:
    result = optimize_ardehali(config, args.grid_step, args.starts, args.refine_iters, workers=args.workers)
    rows = "iteration,value\n" + "".join(f"{i},{v!r}\n" for i, v in result.trace)
    rep.write_csv("optimize-trace.csv", rows)
    if rep.plots:
        from .plotting import plot_landscape, plot_trace

        plot_trace(result, rep.path("optimize-trace.png"))
        plot_landscape(config, result, rep.path("optimize-landscape.png"))
    rep.emit({**result.to_dict(), "config": config.to_dict(), "violated": result.best_value < -1.0 - 1e-12})
    return 0


def cmd_compare(args, rep: Reporter) -> int:
    sweep = optimize_chsh(ExperimentConfig(visibility=1.0), args.grid_step)
    ratio = violation_margin_ratio()
    rep.emit({
        "ardehali_factor": RATIO_FORM_FACTOR,
        "chsh_factor": CHSH_FACTOR,
        "margin_ratio": ratio,
        "percent_larger": 100.0 * (ratio - 1.0),
        "chsh_optimum": sweep.best_value,
        "chsh_optimum_settings": sweep.best_settings,
    })
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellratio",
        description="Ratio-form Bell inequality toolkit: quantum predictions, local bounds, Monte Carlo and angle search.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--output-dir", help="write JSON, CSV and PNG outputs here")
    parser.add_argument("--no-plots", action="store_true", help="skip figures when writing outputs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-theorem", help="random and exhaustive checks of Z >= 0")
    p.add_argument("--samples", type=positive_int, default=1_000_000)
    p.add_argument("--seed", type=non_negative_int, default=None)
    p.add_argument("--grid-checks", type=non_negative_int, default=10_000)
    p.add_argument("--workers", type=positive_int, default=1)

    p = sub.add_parser("lhv-bound", help="exhaustive local-vertex sweep")
    p.add_argument("--expression", choices=["22", "28"], required=True)

    for name, help_text in (
        ("qm-eval", "quantum predictions at the configured angles"),
        ("simulate", "Monte Carlo counts and the counts-form statistic"),
        ("optimize", "angle search for the largest ratio-form violation"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file (defaults used when omitted)")
        if name == "simulate":
            p.add_argument("--bootstrap", type=non_negative_int, default=DEFAULT_BOOTSTRAP)
            p.add_argument("--workers", type=positive_int, default=1)
        if name == "optimize":
            p.add_argument("--grid-step", type=grid_step_type, default=5.0)
            p.add_argument("--starts", type=positive_int, default=8)
            p.add_argument("--refine-iters", type=non_negative_int, default=40)
            p.add_argument("--workers", type=positive_int, default=1)

    p = sub.add_parser("compare", help="violation margin against the CHSH family")
    p.add_argument("--grid-step", type=grid_step_type, default=5.0)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify-theorem":
            if args.seed is None:
                args.seed = default_seed()
            return cmd_verify_theorem(args, Reporter(args, args.seed))
        if args.command == "lhv-bound":
            return cmd_lhv_bound(args, Reporter(args, None))
        if args.command == "compare":
            return cmd_compare(args, Reporter(args, None))
        config = load_config(args.config)
        rep = Reporter(args, config.seed)
        handler = {"qm-eval": cmd_qm_eval, "simulate": cmd_simulate, "optimize": cmd_optimize}[args.command]
        return handler(args, rep, config)
    except UsageError as exc:
        print(f"bellratio {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
