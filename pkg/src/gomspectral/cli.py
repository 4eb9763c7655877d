"""Command line interface: ``gomspectral <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or invalid
input), 3 numerical failure.  Failures print a one-line JSON object to
standard error; results go to files or standard output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from .data import MembershipMatrix, ItemParams, read_matrix, read_real_csv, read_result, write_result
from .errors import DataError, GomError, NumericalError
from .estimators import FITTERS, FitConfig, fit
from .metrics import hamming_error, purity_proportions, relative_error
from .selection import DEFAULT_K_MAX, modularity, select_k, write_curve
from .simulation import ExperimentConfig, run_experiment, summarize, write_summary, write_table

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3
THREADS_ENV = "GOMSPECTRAL_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {v}")
    return v


def _tau(text):
    if text == "auto":
        return text
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tau must be 'auto' or a number, got {text!r}") from None
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"tau must be >= 0, got {v}")
    return v


def _slack(text):
    return text if text == "auto" else float(text)


def _method(text):
    if text.upper() not in FITTERS:
        raise argparse.ArgumentTypeError(f"invalid method {text!r}; choose from srsc, crsc, ssc, srm")
    return text.upper()


def _add_input(p):
    p.add_argument("--input", required=True, help="response matrix file")
    p.add_argument("--format", default="csv", choices=["csv", "matrix-market", "triplets"])
    p.add_argument("--m-max", type=_positive_int, default=None, help="response ceiling M (default: largest entry)")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=_positive_int, default=None,
                        help=f"BLAS/OpenMP threads (default: ${THREADS_ENV} or all cores)")

    parser = _Parser(prog="gomspectral", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("fit", parents=[common], help="fit one estimator")
    _add_input(p)
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--method", type=_method, default="CRSC")
    p.add_argument("--tau", type=_tau, default="auto")
    p.add_argument("--margin-slack", type=_slack, default="auto")
    p.add_argument("--output", required=True, help="result document (JSON)")

    p = sub.add_parser("select-k", parents=[common], help="choose K by fuzzy modularity")
    _add_input(p)
    p.add_argument("--method", type=_method, default="CRSC")
    p.add_argument("--k-min", type=_positive_int, default=1)
    p.add_argument("--k-max", type=_positive_int, default=DEFAULT_K_MAX)
    p.add_argument("--tau", type=_tau, default="auto")
    p.add_argument("--curve-out", default=None, help="CSV of (k, Q)")
    p.add_argument("--exclude-diagonal", action="store_true", help="drop self-loops of A = R R' from Q")

    p = sub.add_parser("simulate", parents=[common], help="run a simulation study")
    p.add_argument("--experiment", type=int, choices=[1, 2, 3, 4], required=True)
    p.add_argument("--reps", type=_positive_int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("metrics", parents=[common], help="error of an estimate against the truth")
    p.add_argument("--est", required=True, help="result document or CSV")
    p.add_argument("--truth", required=True, help="result document or CSV")
    p.add_argument("--kind", choices=["pi", "theta"], default="pi")

    p = sub.add_parser("modularity", parents=[common], help="fuzzy modularity of a membership matrix")
    _add_input(p)
    p.add_argument("--pi", required=True, help="result document or CSV of memberships")
    p.add_argument("--exclude-diagonal", action="store_true", help="drop self-loops of A = R R' from Q")
    return parser


def _load_matrix(path, kind):
    if str(path).endswith(".json"):
        res = read_result(path)
        return res.pi_hat.weights if kind == "pi" else res.theta_hat.theta
    return read_real_csv(path)


def _cmd_fit(args):
    r = read_matrix(args.input, args.format, args.m_max)
    cfg = FitConfig(args.k, tau=args.tau, margin_slack=args.margin_slack)
    res = fit(r, args.method, cfg)
    write_result(res, args.output)
    mu, nu = purity_proportions(res.pi_hat)
    print(f"method={res.method} K={res.k} sigma_K={float(res.singular_values[-1])!r} "
          f"mu={mu!r} nu={nu!r} elapsed={res.elapsed:.6f}")
    for note in res.warnings:
        print(f"warning: {note}", file=sys.stderr)


def _cmd_select_k(args):
    if args.k_min > args.k_max:
        raise UsageError(f"--k-min {args.k_min} exceeds --k-max {args.k_max}")
    r = read_matrix(args.input, args.format, args.m_max)
    curve = select_k(r, args.method, args.k_min, args.k_max, FitConfig(args.k_min, tau=args.tau),
                     include_diagonal=not args.exclude_diagonal)
    if args.curve_out:
        write_curve(curve, args.curve_out)
    for k, why in sorted(curve.failures.items()):
        print(f"k={k} failed: {why}", file=sys.stderr)
    print(curve.argmax_k)


def _cmd_simulate(args):
    cfg = ExperimentConfig.standard(args.experiment, reps=args.reps, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    total = len(cfg.grid) * cfg.reps

    def progress(gi, rep):
        done = gi * cfg.reps + rep + 1
        print(f"\r{done}/{total} cells", end="", file=sys.stderr, flush=True)

    rows = run_experiment(cfg, progress=progress)
    print(file=sys.stderr)
    # runtimes vary between runs, so they live in their own files
    write_table(rows, out / "results.csv", timing=False)
    write_table(rows, out / "timings.csv", timing=True)
    summary = summarize(rows, k_true=cfg.k if cfg.estimate_k else None)
    write_summary(summary, out / "summary.csv", timing=False)
    print(f"wrote {len(rows)} rows to {out}")


def _cmd_metrics(args):
    est = _load_matrix(args.est, args.kind)
    truth = _load_matrix(args.truth, args.kind)
    if args.kind == "pi":
        err = hamming_error(MembershipMatrix(est), MembershipMatrix(truth))
    else:
        err = relative_error(ItemParams(est), ItemParams(truth))
    print(f"value={err.value!r} permutation={','.join(map(str, err.permutation))}")


def _cmd_modularity(args):
    r = read_matrix(args.input, args.format, args.m_max)
    pi = _load_matrix(args.pi, "pi")
    if pi.shape[0] == len(r.row_ids) + len(r.dropped_rows) and r.dropped_rows:
        pi = pi[r.row_ids]
    print(repr(modularity(r, MembershipMatrix(pi), include_diagonal=not args.exclude_diagonal)))


COMMANDS = {
    "fit": _cmd_fit,
    "select-k": _cmd_select_k,
    "simulate": _cmd_simulate,
    "metrics": _cmd_metrics,
    "modularity": _cmd_modularity,
}


def _thread_limit(n):
    if n is None:
        env = os.environ.get(THREADS_ENV)
        if not env:
            return nullcontext()
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _fail(kind, exc, code):
    doc = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    stage = getattr(exc, "stage", None)
    if stage:
        doc["stage"] = stage
    print(json.dumps(doc), file=sys.stderr)
    return code


def main(argv=None):
    """Entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        with _thread_limit(args.threads):
            COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    except NumericalError as exc:
        return _fail("numerical", exc, EXIT_NUMERICAL)
    except (DataError, OSError) as exc:
        return _fail("data", exc, EXIT_DATA)
    except GomError as exc:
        return _fail("numerical", exc, EXIT_NUMERICAL)
    except np.linalg.LinAlgError as exc:
        return _fail("numerical", exc, EXIT_NUMERICAL)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
