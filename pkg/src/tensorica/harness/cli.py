"""Command line entry point: ``tensorica <subcommand> [options]``.

Exit codes: 0 success, 1 usage error, 2 infeasible config, 3 runtime or
numerical error, 4 validation-suite failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from ..errors import (
    ConfigError,
    DegenerateVectorError,
    EstimateFailedError,
    FitFailedError,
    InfeasibleDimensionError,
    InvalidDimensionError,
    InvalidDistributionError,
    ScheduleInfeasibleError,
    TensoricaError,
)
from .config import ExperimentConfig, load_config

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_RUNTIME, EXIT_VALIDATION = 0, 1, 2, 3, 4

DEFAULT_T_SWEEP = [10_000, 50_000, 200_000, 1_000_000]
DEFAULT_D_SWEEP = [7, 12, 20, 33, 54]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(float(p)) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common(p):
    p.add_argument("--seed", type=int, help="base random seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--quiet", action="store_true", help="only print errors")


def _experiment_flags(p):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--name")
    p.add_argument("--distribution", help="gaussian_bernoulli or mixture_gaussian")
    p.add_argument("--schedule", help="two_phase_practical, two_phase, constant_warm, "
                                      "constant_uniform or fixed")
    p.add_argument("--eta", type=float, help="stepsize for the fixed schedule")
    p.add_argument("--B", type=float, dest="B", help="sub-Gaussian constant for log schedules")
    p.add_argument("--replications", type=int)
    p.add_argument("--stride", type=int, dest="record_stride", help="record every N iterations")
    p.add_argument("--window", type=float, dest="window_fraction",
                   help="final-window fraction for mean errors (default 0.6)")
    p.add_argument("--workers", type=int)
    _common(p)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tensorica", description="Online tensorial ICA experiments and checks.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="single or replicated runs")
    _experiment_flags(p)
    p.add_argument("--d", type=int)
    p.add_argument("--T", type=lambda s: int(float(s)))

    p = sub.add_parser("scaling", help="d- or T-sweep with log-log slope fit")
    _experiment_flags(p)
    p.add_argument("--axis", choices=("d", "T"), required=True)
    p.add_argument("--d", type=_int_list, help="dimension (list when --axis d)")
    p.add_argument("--T", type=_int_list, help="sample size (list when --axis T)")
    p.add_argument("--max-regime-ratio", type=float, dest="max_regime_ratio",
                   help="exclude points with d^4/T above this from the fit")

    p = sub.add_parser("validate", help="run the structural and numerical property suite")
    p.add_argument("--structural-only", action="store_true")
    _common(p)

    p = sub.add_parser("psi2", aliases=["psi2-estimate"], help="Orlicz psi_alpha norm estimate")
    p.add_argument("--distribution", default="normal",
                   help="normal, gaussian_bernoulli or mixture_gaussian")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--n", type=lambda s: int(float(s)), default=1_000_000)
    _common(p)

    p = sub.add_parser("spacing", aliases=["spacing-experiment"],
                       help="gap between top two squared coordinates at uniform init")
    p.add_argument("--d", type=int, default=50)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--trials", type=lambda s: int(float(s)), default=10_000)
    _common(p)

    p = sub.add_parser("gronwall-audit", help="randomized reversed Gronwall audit")
    p.add_argument("--n", type=int, default=10_000)
    _common(p)
    return parser


def _experiment_config(args, **extra) -> ExperimentConfig:
    keys = ("name", "distribution", "schedule", "eta", "B", "replications",
            "record_stride", "window_fraction", "workers", "seed")
    overrides = {k: getattr(args, k) for k in keys}
    overrides["output_dir"] = args.out
    overrides.update(extra)
    if args.config:
        return load_config(args.config, **overrides)
    return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})


def cmd_simulate(args, say):
    from .experiment import run_experiment

    cfg = _experiment_config(args, d=args.d, T=args.T)
    result = run_experiment(cfg)
    for rec in result.runs:
        tr = rec.trace
        say(f"{rec.run_id}: final error {tr.final_error:.4g}, window mean {tr.window_mean_error:.4g}, "
            f"component {tr.final_index}, warm at t={tr.first_warm_t}")
    say(f"wrote {len(result.files)} files under {cfg.output_dir}")
    return EXIT_OK


def cmd_scaling(args, say):
    from .experiment import scaling_sweep

    if args.axis == "T":
        d = args.d[0] if args.d else 20
        T = args.T or DEFAULT_T_SWEEP
    else:
        T = args.T[0] if args.T else 1_000_000
        d = args.d or DEFAULT_D_SWEEP
    extra = {"d": d, "T": T, "max_regime_ratio": args.max_regime_ratio}
    if not args.config and args.name is None:
        extra["name"] = f"scaling-{args.axis}"
    cfg = _experiment_config(args, **extra)
    values = getattr(cfg, args.axis)
    if cfg.axis != args.axis or len(values) < 3:
        raise ConfigError(f"--axis {args.axis} needs at least 3 comma-separated {args.axis} values")
    s = scaling_sweep(cfg)
    say(f"{'value':>10} {'mean_error':>12} {'stderr':>10} n_runs")
    for p in s.points:
        say(f"{p.value:>10} {p.mean_error:>12.5g} {p.stderr:>10.3g} {p.n_runs}")
    say(f"fitted slope vs {s.axis}: {s.fitted_slope:+.4f} (stderr {s.slope_stderr:.4f})")
    return EXIT_OK


def cmd_validate(args, say):
    from ..validate import run_suite

    results = run_suite(seed=args.seed or 0, structural_only=args.structural_only, report=say)
    failed = [r for r in results if not r.passed]
    say(f"{len(results) - len(failed)}/{len(results)} properties passed")
    return EXIT_VALIDATION if failed else EXIT_OK


def cmd_psi2(args, say):
    from .. import mathkit as mk
    from ..datagen import SourceDistribution

    if args.distribution == "normal":
        sampler = lambda rng, n: rng.standard_normal(n)  # noqa: E731
    else:
        try:
            sampler = SourceDistribution.from_name(args.distribution)
        except InvalidDistributionError as exc:
            raise ConfigError(str(exc)) from None
    est = mk.estimate_psi_alpha_norm(sampler, args.alpha, args.n, args.seed or 0)
    say(f"psi_{args.alpha:g} norm estimate: {est.K_hat:.6f} (n={est.n_samples}, "
        f"bracket [{est.bracket[0]:.6f}, {est.bracket[1]:.6f}])")
    if args.alpha == 2.0:
        say(f"implied B = sqrt(8/3) * K_hat = {est.K_hat * mk.PSI2_TO_B:.6f}")
    return EXIT_OK


def cmd_spacing(args, say):
    from .. import mathkit as mk

    res = mk.spacing_experiment(args.d, args.epsilon, args.trials, args.seed or 0)
    say(f"d={args.d} eps={args.epsilon}: P(min_k W_k >= {res.threshold:.6g}) = "
        f"{res.empirical_prob:.4f} +- {res.stderr:.4f} (bound: >= {1 - 3 * args.epsilon:.4f})")
    return EXIT_OK


def cmd_gronwall(args, say):
    from .. import mathkit as mk

    failures, worst = mk.gronwall_audit(args.n, args.seed or 0)
    say(f"{failures} failures in {args.n} instances; max LHS - 2 alpha = {worst:.3e}")
    return EXIT_OK if failures == 0 else EXIT_VALIDATION


COMMANDS = {
    "simulate": cmd_simulate,
    "scaling": cmd_scaling,
    "validate": cmd_validate,
    "psi2": cmd_psi2,
    "psi2-estimate": cmd_psi2,
    "spacing": cmd_spacing,
    "spacing-experiment": cmd_spacing,
    "gronwall-audit": cmd_gronwall,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if args.command is None:
        print(parser.format_help(), file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    say = (lambda *a: None) if args.quiet else print
    try:
        return COMMANDS[args.command](args, say)
    except (ConfigError, ScheduleInfeasibleError, InfeasibleDimensionError,
            InvalidDimensionError, InvalidDistributionError) as exc:
        print(f"infeasible configuration: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DegenerateVectorError, EstimateFailedError, FitFailedError, TensoricaError,
            OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"infeasible configuration: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
