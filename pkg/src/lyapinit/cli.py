"""Command-line front end.

Subcommands: ``exponent`` (closed-form report for one ensemble), ``table``
(the seven-column lookup grid over a width list), ``simulate`` (Monte Carlo
experiments), and ``init`` (weight-stack files at the critical scale).

Exit status: 0 success, 1 usage error, 2 numerical accuracy error,
3 input/output error.
"""

import argparse
import math
import secrets
import sys

import numpy as np

from . import analytic, dynamics, initgen, jsonio
from .analytic import GAUSSIAN, ORTHOGONAL, EnsembleSpec
from .ensembles import RngStream, weight_stack_to_dict
from .errors import AccuracyError, DomainError
from .quad import ActivationSlopes, activation_log_norm

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3

# Width list of the reference tables: 1-10, then coarser steps to 1024.
DEFAULT_TABLE_DIMS = (
    list(range(1, 11))
    + [16, 20, 30, 32, 40, 50, 60, 64, 70, 80, 90, 100]
    + [128, 200, 256, 300, 400, 500, 512, 600, 700, 800, 900, 1000, 1024]
)

TABLE_COLUMNS = (
    "d",
    "activation_log_norm",
    "linear_log_norm",
    "he_lyapunov",
    "orthogonal_lyapunov",
    "he_sigma",
    "critical_sigma",
    "critical_eta",
)

EXPERIMENTS = ("lln", "clt", "single-step", "stationarity", "relu-zero", "positive-cone")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the artifact contract
    # reserves 2 for numerical errors, so remap to 1.
    def error(self, message):
        raise _UsageError(message)


def _fresh_seed() -> int:
    return secrets.randbits(64)


def _table_row(d: int, alpha: float) -> dict:
    value = activation_log_norm(d, ActivationSlopes.leaky_relu(alpha))
    linear = activation_log_norm(d, ActivationSlopes.leaky_relu(1.0))
    sig_he = analytic.he_sigma(d, alpha)
    return {
        "d": d,
        "activation_log_norm": value,
        "linear_log_norm": linear,
        "he_lyapunov": math.log(sig_he) + value,
        "orthogonal_lyapunov": value - linear,
        "he_sigma": sig_he,
        "critical_sigma": math.exp(-value),
        "critical_eta": math.exp(linear - value),
    }


def _format_cell(x) -> str:
    # Seven-decimal rounding with trailing zeros dropped, the layout the
    # reference tables use.
    if isinstance(x, int):
        return str(x)
    return repr(round(x, 7))


def _write_output(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")


def _cmd_exponent(args) -> int:
    spec = EnsembleSpec(args.ensemble, args.d, args.scale)
    report = analytic.exponent_report(spec, args.alpha)
    _write_output(jsonio.dumps(report.as_dict()), None)
    return EXIT_OK


def _cmd_table(args) -> int:
    if args.alpha == 0.0:
        raise _UsageError("--alpha must be nonzero")
    dims = args.dims if args.dims else DEFAULT_TABLE_DIMS
    rows = [_table_row(d, args.alpha) for d in dims]
    if args.format == "json":
        text = jsonio.dumps({"alpha": args.alpha, "rows": rows})
    elif args.format == "csv":
        lines = [",".join(TABLE_COLUMNS)]
        for row in rows:
            lines.append(",".join(_format_cell(row[c]) for c in TABLE_COLUMNS))
        text = "\n".join(lines)
    else:
        header = "| " + " | ".join(TABLE_COLUMNS) + " |"
        rule = "|" + "|".join(["---"] * len(TABLE_COLUMNS)) + "|"
        lines = [header, rule]
        for row in rows:
            lines.append("| " + " | ".join(_format_cell(row[c]) for c in TABLE_COLUMNS) + " |")
        text = "\n".join(lines)
    _write_output(text, args.out)
    return EXIT_OK


def _resolve_scale(args) -> float:
    token = args.scale
    if token == "crit":
        if args.ensemble == GAUSSIAN:
            return analytic.critical_sigma(args.d, args.alpha)
        return analytic.critical_eta(args.d, args.alpha)
    if token == "he":
        if args.ensemble != GAUSSIAN:
            raise _UsageError("--scale he applies to the gaussian ensemble only")
        return analytic.he_sigma(args.d, args.alpha)
    try:
        return float(token)
    except ValueError:
        raise _UsageError(f"--scale must be a number, 'crit', or 'he', got {token!r}") from None


def _numeric_scale(args, name: str) -> float:
    try:
        return float(args.scale)
    except ValueError:
        raise _UsageError(f"{args.experiment} needs a numeric --scale ({name})") from None


def _write_per_trial_csv(path, header: str, values) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for v in values:
            fh.write(format(float(v), ".17g") + "\n")


def _cmd_simulate(args) -> int:
    if args.seed is None:
        args.seed = _fresh_seed()
    stream = RngStream(args.seed, args.stream)
    slopes = ActivationSlopes.leaky_relu(args.alpha) if args.alpha != 0.0 else None
    params = {
        "d": args.d,
        "alpha": args.alpha,
        "ensemble": args.ensemble,
        "scale": args.scale,
        "depth": args.depth,
        "trials": args.trials,
    }
    details = {}
    per_trial = None
    csv_header = "value"

    if args.experiment in ("lln", "clt", "single-step", "stationarity"):
        if slopes is None:
            raise _UsageError("--alpha must be nonzero for this experiment")
        scale = _resolve_scale(args)
        params["scale_value"] = scale
        spec = EnsembleSpec(args.ensemble, args.d, scale)

    if args.experiment == "single-step":
        est = dynamics.estimate_lambda_single_step(
            spec, slopes, args.trials, stream, args.workers, keep_values=True
        )
        mean, std_error = est.mean, est.std_error
        per_trial = est.per_trial_values
    elif args.experiment == "lln":
        est = dynamics.estimate_lambda_deep(
            spec, slopes, args.depth, args.trials, stream, args.workers, keep_values=True
        )
        mean, std_error = est.mean, est.std_error
        per_trial = est.per_trial_values
    elif args.experiment == "clt":
        lam = analytic.lyapunov(spec, args.alpha)
        report = dynamics.estimate_clt(
            spec, slopes, args.depth, args.trials, lam, stream, args.workers
        )
        normalized = report.normalized_samples
        mean = float(normalized.mean())
        std_error = float(normalized.std(ddof=1) / math.sqrt(len(normalized)))
        details = report.as_dict()
        details["lambda"] = lam
        per_trial = normalized
        csv_header = "normalized_log_norm"
    elif args.experiment == "stationarity":
        report = dynamics.stationarity_check(
            spec, slopes, args.depth, args.trials, stream, args.workers
        )
        mean = report.max_mean_deviation()
        std_error = report.max_isotropy_deviation()
        details = report.as_dict()
    elif args.experiment == "relu-zero":
        if args.ensemble != GAUSSIAN:
            raise _UsageError("relu-zero runs Gaussian weights; drop --ensemble orthogonal")
        sigma = _numeric_scale(args, "sigma")
        report = dynamics.counterexample_relu(
            args.d, sigma, args.depth, args.trials, stream, args.workers
        )
        mean = report.zero_fraction_layer1
        std_error = report.std_error_layer1
        details = report.as_dict()
    else:  # positive-cone
        if args.ensemble != GAUSSIAN:
            raise _UsageError("positive-cone draws Uniform[0, a] weights; drop --ensemble orthogonal")
        a = _numeric_scale(args, "a, the upper bound of the uniform entries")
        report = dynamics.counterexample_positive_cone(
            args.d, a, args.alpha, args.depth, args.trials, stream, args.workers
        )
        mean = report.gap
        std_error = report.gap_std_error
        details = report.as_dict()

    record = {
        "experiment": args.experiment,
        "params": params,
        "mean": mean,
        "std_error": std_error,
        "trials": args.trials,
        "seed": stream.as_dict(),
        "details": details,
    }
    _write_output(jsonio.dumps(record), args.out)
    if args.per_trial_csv is not None:
        if per_trial is None:
            raise _UsageError(f"{args.experiment} has no per-trial values to export")
        _write_per_trial_csv(args.per_trial_csv, csv_header, per_trial)
    return EXIT_OK


def _parse_input_dist(token: str, d: int) -> initgen.InputDistribution:
    if token == "sphere":
        return initgen.InputDistribution.uniform_sphere(d)
    if token.startswith("box:"):
        parts = token.split(":")
        if len(parts) != 3:
            raise _UsageError("--input-dist box takes the form box:LOW:HIGH")
        try:
            low, high = float(parts[1]), float(parts[2])
        except ValueError:
            raise _UsageError("box bounds must be numbers") from None
        return initgen.InputDistribution.uniform_box([low] * d, [high] * d)
    if token.startswith("file:"):
        payload = jsonio.load(token[len("file:"):])
        return initgen.InputDistribution.fixed_set(np.asarray(payload, dtype=np.float64))
    raise _UsageError(f"--input-dist must be sphere, box:LOW:HIGH, or file:PATH, got {token!r}")


def _cmd_init(args) -> int:
    if args.seed is None:
        args.seed = _fresh_seed()
    stream = RngStream(args.seed, args.stream)
    if args.sampled:
        input_dist = _parse_input_dist(args.input_dist, args.d)
        stack, _ = initgen.sampled_lyapunov_init(
            args.d,
            args.depth,
            args.alpha,
            args.kind,
            stream,
            input_dist=input_dist,
            candidate_count=args.candidates,
            probe_inputs=args.probe_inputs,
            linear_metric=args.linear_metric,
        )
    else:
        stack = initgen.lyapunov_init(args.d, args.depth, args.alpha, args.kind, stream)
    _write_output(jsonio.dumps(weight_stack_to_dict(stack)), args.out)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="lyapinit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_exp = sub.add_parser("exponent", help="closed-form exponent report for one ensemble")
    p_exp.add_argument("--d", type=int, required=True, help="network width")
    p_exp.add_argument("--alpha", type=float, required=True, help="second activation slope")
    p_exp.add_argument("--ensemble", choices=(GAUSSIAN, ORTHOGONAL), required=True)
    p_exp.add_argument("--scale", type=float, required=True, help="sigma or eta of the ensemble")
    p_exp.set_defaults(func=_cmd_exponent)

    p_table = sub.add_parser("table", help="seven-column lookup grid over a width list")
    p_table.add_argument("--alpha", type=float, required=True)
    p_table.add_argument(
        "--dims", type=int, nargs="+", default=None, help="widths (default: the reference list)"
    )
    p_table.add_argument("--format", choices=("csv", "md", "json"), default="csv")
    p_table.add_argument("--out", default=None, help="output file (default stdout)")
    p_table.set_defaults(func=_cmd_table)

    p_sim = sub.add_parser("simulate", help="Monte Carlo experiments")
    p_sim.add_argument("--experiment", choices=EXPERIMENTS, required=True)
    p_sim.add_argument("--d", type=int, default=2)
    p_sim.add_argument("--alpha", type=float, default=0.1)
    p_sim.add_argument("--ensemble", choices=(GAUSSIAN, ORTHOGONAL), default=GAUSSIAN)
    p_sim.add_argument(
        "--scale",
        default="crit",
        help="ensemble scale: a number, 'crit', or 'he' (for relu-zero: sigma; "
        "for positive-cone: the uniform upper bound a)",
    )
    p_sim.add_argument("--depth", type=int, default=100, help="layers (steps for stationarity)")
    p_sim.add_argument("--trials", type=int, default=1000)
    p_sim.add_argument("--seed", type=int, default=None, help="64-bit master seed (default: entropy)")
    p_sim.add_argument("--stream", type=int, default=0, help="base stream id")
    p_sim.add_argument("--workers", type=int, default=None, help=f"threads (default ${dynamics.WORKERS_ENV_VAR} or 1)")
    p_sim.add_argument("--out", default=None, help="result JSON file (default stdout)")
    p_sim.add_argument("--per-trial-csv", default=None, help="also write per-trial values as CSV")
    p_sim.set_defaults(func=_cmd_simulate)

    p_init = sub.add_parser("init", help="write a critical-scale weight stack")
    p_init.add_argument("--d", type=int, required=True)
    p_init.add_argument("--alpha", type=float, required=True)
    p_init.add_argument("--depth", type=int, required=True)
    p_init.add_argument("--kind", choices=(GAUSSIAN, ORTHOGONAL), required=True)
    p_init.add_argument("--sampled", action="store_true", help="pick the best of several candidates")
    p_init.add_argument("--candidates", type=int, default=None, help="candidate count (default ceil(2 sqrt(depth)))")
    p_init.add_argument("--probe-inputs", type=int, default=256)
    p_init.add_argument("--input-dist", default="sphere", help="sphere | box:LOW:HIGH | file:PATH")
    p_init.add_argument("--linear-metric", action="store_true", help="score candidates by |m - 1| instead of |log m|")
    p_init.add_argument("--seed", type=int, default=None)
    p_init.add_argument("--stream", type=int, default=0)
    p_init.add_argument("--out", default=None, help="weight-stack JSON file (default stdout)")
    p_init.set_defaults(func=_cmd_init)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"lyapinit: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"lyapinit: invalid argument: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AccuracyError as exc:
        print(
            f"lyapinit: accuracy failure: {exc} "
            f"(best estimate {exc.best_estimate!r}, bound {exc.error_bound!r})",
            file=sys.stderr,
        )
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"lyapinit: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
