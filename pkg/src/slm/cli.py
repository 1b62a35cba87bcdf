"""Command-line front end.

Subcommands: simulate, classify, defect, tail, moment-scan, mean-match.
Expressions use the library's grammar with conventional variable names:
coefficients a(x) and integrands g(x) over x, mean targets m(t) over t,
derivative expressions F'(y) over y.

Outputs are deterministic: CSV floats carry 17 significant digits, line
endings are '\\n', and --threads never changes a byte.  Verdict commands
print MARTINGALE, STRICT_LOCAL or INCONCLUSIVE as the final stdout line.
Exit codes: 0 success, 2 usage error, 3 invalid model, 4 estimation
failure.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from . import classifier, estimators, samplers
from .core import (
    Besq,
    BesselPower,
    Brownian,
    EstimationFailedError,
    GenericDiffusion,
    INCONCLUSIVE,
    InvalidArgumentError,
    InverseBes3,
    ItoIntegral,
    MARTINGALE,
    PrescribedMean,
    ProcessModel,
    STRICT_LOCAL,
    SlmError,
    uniform_grid,
)
from .expr import eval_expr, parse_expr

_VERDICT_WORDS = {
    MARTINGALE: "MARTINGALE",
    STRICT_LOCAL: "STRICT_LOCAL",
    INCONCLUSIVE: "INCONCLUSIVE",
}

_FMOMENT_WORDS = {
    classifier.FINITE: "FINITE",
    classifier.INFINITE: "INFINITE",
    "Inconclusive": "INCONCLUSIVE",
}

MODEL_NAMES = (
    "brownian",
    "besq",
    "bessel-power",
    "inverse-bes3",
    "diffusion",
    "integral",
    "prescribed-mean",
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2) on its own
        raise _UsageError(message)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise _UsageError(f"{flag} expects a comma-separated list of numbers")


def _parse_ints(text: str, flag: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise _UsageError(f"{flag} expects a comma-separated list of integers")


def build_parser() -> _Parser:
    p = _Parser(prog="slm", description="strict local martingale toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def add_model_flags(sp, default_x0: Optional[float] = None):
        sp.add_argument("--model", required=True, choices=MODEL_NAMES)
        sp.add_argument("--a", help="diffusion coefficient a(x)")
        sp.add_argument("--g", help="integrand g(x)")
        sp.add_argument("--m", help="mean target m(t)")
        sp.add_argument("--x0", type=float, default=default_x0)
        sp.add_argument("--delta", type=float, help="Bessel dimension")
        sp.add_argument(
            "--positivity", choices=("reflect", "absorb"), default="reflect",
            help="Euler policy when an update crosses zero",
        )

    def add_run_flags(sp, paths=True):
        sp.add_argument("--t", type=float, required=True, help="time horizon")
        sp.add_argument("--steps", type=int, required=True, help="grid steps")
        if paths:
            sp.add_argument("--paths", type=int, required=True)
        sp.add_argument("--seed", type=int, default=42)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--out", required=True, help="output CSV path")

    sp = sub.add_parser("simulate", help="write sampled paths to CSV")
    add_model_flags(sp)
    add_run_flags(sp)

    sp = sub.add_parser("classify", help="analytic martingale classification")
    sp.add_argument("--kotani", help="coefficient a(x) for the tail-integral test")
    sp.add_argument("--integrand", help="integrand g(x) for the small-moment test")
    sp.add_argument("--Fprime", dest="fprime", help="F'(y) for the sup-moment dichotomy")
    sp.add_argument("--F", dest="f", help="F(y); informational only")
    sp.add_argument("--eps", type=float, default=1.0)
    sp.add_argument("--t", type=float)
    sp.add_argument("--alphas", default="0.25,0.5,0.9")
    sp.add_argument("--threads", type=int, default=1)  # accepted; quadrature is serial

    sp = sub.add_parser("defect", help="martingale defect curve")
    add_model_flags(sp)
    add_run_flags(sp)

    sp = sub.add_parser("tail", help="lambda * P(sup >= lambda) scan")
    add_model_flags(sp)
    add_run_flags(sp)
    sp.add_argument("--lambdas", required=True, help="increasing comma list")

    sp = sub.add_parser("moment-scan", help="small-moment divergence diagnostic")
    add_model_flags(sp)
    add_run_flags(sp, paths=False)
    sp.add_argument("--alphas", default="0.5")
    sp.add_argument("--sizes", required=True, help="increasing sample sizes")
    sp.add_argument("--eps", type=float, default=1.0)

    sp = sub.add_parser("mean-match", help="prescribed-mean construction check")
    sp.add_argument("--m", required=True, help="mean target m(t)")
    add_run_flags(sp)

    return p


def _make_model(args) -> ProcessModel:
    name = args.model
    if name == "brownian":
        return Brownian(x0=args.x0 if args.x0 is not None else 0.0)
    x0 = args.x0 if args.x0 is not None else 1.0
    if name == "besq":
        if args.delta is None:
            raise _UsageError("--model besq requires --delta")
        return Besq(delta=args.delta, x0=x0)
    if name == "bessel-power":
        if args.delta is None:
            raise _UsageError("--model bessel-power requires --delta")
        return BesselPower(delta=args.delta, x0=x0)
    if name == "inverse-bes3":
        return InverseBes3(x0=x0)
    if name == "diffusion":
        if not args.a:
            raise _UsageError("--model diffusion requires --a")
        return GenericDiffusion(a=parse_expr(args.a, "x"), x0=x0,
                                positivity=args.positivity)
    if name == "integral":
        if not args.g:
            raise _UsageError("--model integral requires --g")
        return ItoIntegral(g=parse_expr(args.g, "x"),
                           x0=args.x0 if args.x0 is not None else 0.0)
    if name == "prescribed-mean":
        if not args.m:
            raise _UsageError("--model prescribed-mean requires --m")
        return PrescribedMean(m=parse_expr(args.m, "t"))
    raise _UsageError(f"unknown model {name!r}")


def _write_csv(path: str, header: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _print_integral_evidence(name: str, iv) -> None:
    print(f"# {name}: {iv.status}" + (f" value={_fmt(iv.value)}" if iv.value is not None else ""))
    if iv.fast_path:
        print("# (log fast path: no blocks computed)")
        return
    print("block,k,lower,upper,integral")
    for k, lo, hi, ik in iv.blocks:
        print(f"block,{k},{_fmt(lo)},{_fmt(hi)},{_fmt(ik)}")


def _print_verdict_evidence(verdict) -> None:
    for name, trace in verdict.evidence:
        if isinstance(trace, classifier.IntegralVerdict):
            _print_integral_evidence(name, trace)
        else:
            print(f"# {name}: {trace}")
    if verdict.notes:
        print(f"# note: {verdict.notes}")


def _analytic_verdict(model: ProcessModel, t: float, eps: float, alphas) -> str:
    if isinstance(model, Brownian):
        return MARTINGALE
    if isinstance(model, GenericDiffusion):
        return classifier.kotani_classify(model.a, eps).status
    if isinstance(model, ItoIntegral):
        return classifier.integrand_small_moment_classify(model.g, t, alphas).status
    if isinstance(model, (InverseBes3, BesselPower)):
        return STRICT_LOCAL
    if isinstance(model, PrescribedMean):
        return STRICT_LOCAL if eval_expr(model.m, t) < 1.0 - 1e-9 else MARTINGALE
    return INCONCLUSIVE  # e.g. BESQ, which is not a local martingale


def _cmd_simulate(args) -> int:
    model = _make_model(args)
    grid = uniform_grid(args.t, args.steps)
    if args.paths < 1:
        raise _UsageError("--paths must be >= 1")
    estimators._set_worker_threads(args.threads)
    nodes = grid.nodes()
    with open(args.out, "w", newline="") as fh:
        fh.write("path_id,t,value\n")
        for start, count in estimators._iter_blocks(args.paths):
            blk = samplers.sample_block(model, grid, args.seed, start, count, args.threads)
            for r in range(count):
                pid = start + r
                for j, tj in enumerate(nodes):
                    fh.write(f"{pid},{_fmt(tj)},{_fmt(blk.values[r, j])}\n")
    print(f"wrote {args.paths} paths on {args.steps} steps to {args.out}")
    return 0


def _cmd_classify(args) -> int:
    modes = [m for m in (args.kotani, args.integrand, args.fprime) if m]
    if len(modes) != 1:
        raise _UsageError("classify needs exactly one of --kotani, --integrand, --Fprime")
    if args.kotani:
        verdict = classifier.kotani_classify(parse_expr(args.kotani, "x"), args.eps)
        _print_verdict_evidence(verdict)
        print(_VERDICT_WORDS[verdict.status])
        return 0
    if args.integrand:
        if args.t is None:
            raise _UsageError("--integrand requires --t")
        alphas = _parse_floats(args.alphas, "--alphas")
        verdict = classifier.integrand_small_moment_classify(
            parse_expr(args.integrand, "x"), args.t, alphas
        )
        _print_verdict_evidence(verdict)
        print(_VERDICT_WORDS[verdict.status])
        return 0
    res = classifier.dichotomy_f_moment(parse_expr(args.fprime, "y"), args.eps)
    if args.f:
        print(f"# F(y) = {args.f}")
    _print_integral_evidence("tail integral of F'(y)/y", res.integral)
    print(_FMOMENT_WORDS[res.status])
    return 0


def _defect_rows(curve) -> list[list[str]]:
    rows = []
    for i, t in enumerate(curve.times):
        rows.append([
            _fmt(t),
            _fmt(curve.mean_est[i]),
            _fmt(curve.stderr[i]),
            _fmt(curve.defect_est[i]),
            _fmt(curve.ci_low[i]),
            _fmt(curve.ci_high[i]),
            str(curve.n_paths),
            str(int(curve.n_overflowed[i])),
        ])
    return rows


_DEFECT_HEADER = "t,mean_est,stderr,defect_est,ci_low,ci_high,n_paths,n_overflowed"


def _cmd_defect(args) -> int:
    model = _make_model(args)
    grid = uniform_grid(args.t, args.steps)
    times = grid.nodes()[1:]
    curve = estimators.mean_curve(model, grid, times, args.paths, args.seed, args.threads)
    _write_csv(args.out, _DEFECT_HEADER, _defect_rows(curve))
    last = len(curve.times) - 1
    print(
        f"t={_fmt(curve.times[last])}: mean={_fmt(curve.mean_est[last])} "
        f"defect={_fmt(curve.defect_est[last])} stderr={_fmt(curve.stderr[last])} "
        f"overflowed={int(curve.n_overflowed[last])}"
    )
    return 0


def _cmd_tail(args) -> int:
    model = _make_model(args)
    grid = uniform_grid(args.t, args.steps)
    lambdas = _parse_floats(args.lambdas, "--lambdas")
    scan = estimators.tail_scan(
        model, grid, args.t, lambdas, args.paths, args.seed, args.threads
    )
    rows = [
        [_fmt(scan.lambdas[i]), _fmt(scan.prob_est[i]), _fmt(scan.stderr[i]),
         _fmt(scan.lambda_prob[i])]
        for i in range(scan.lambdas.size)
    ]
    _write_csv(args.out, "lambda,prob_est,stderr,lambda_prob", rows)
    i = scan.lambdas.size - 1
    print(
        f"lambda={_fmt(scan.lambdas[i])}: lambda*P={_fmt(scan.lambda_prob[i])} "
        f"(grid={scan.refinement} steps; grid suprema are lower bounds)"
    )
    return 0


def _cmd_moment_scan(args) -> int:
    model = _make_model(args)
    grid = uniform_grid(args.t, args.steps)
    alphas = _parse_floats(args.alphas, "--alphas")
    sizes = _parse_ints(args.sizes, "--sizes")
    rows = []
    for alpha in alphas:
        scan = estimators.small_moment_scan(
            model, grid, args.t, alpha, sizes, args.seed, args.threads
        )
        for n_k, est in zip(scan.sample_sizes, scan.estimates):
            rows.append([_fmt(alpha), str(n_k), _fmt(est)])
        print(f"alpha={_fmt(alpha)}: diagnostic={scan.verdict} "
              f"(sampling evidence only, not a proof)")
    _write_csv(args.out, "alpha,n_paths,estimate", rows)
    verdict = _analytic_verdict(model, args.t, args.eps, alphas)
    print("# analytic classification; the diagnostic above is only corroboration")
    print(_VERDICT_WORDS[verdict])
    return 0


def _cmd_mean_match(args) -> int:
    m = parse_expr(args.m, "t")
    model = PrescribedMean(m=m)
    grid = uniform_grid(args.t, args.steps)
    times = grid.nodes()[1:]
    curve = estimators.mean_curve(model, grid, times, args.paths, args.seed, args.threads)
    _write_csv(args.out, _DEFECT_HEADER, _defect_rows(curve))
    for i, t in enumerate(curve.times):
        target = eval_expr(m, float(t))
        gap = curve.mean_est[i] - target
        z = gap / curve.stderr[i] if curve.stderr[i] > 0 else 0.0
        print(
            f"t={_fmt(t)}: mean={_fmt(curve.mean_est[i])} target={_fmt(target)} "
            f"z={_fmt(z)}"
        )
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "classify": _cmd_classify,
    "defect": _cmd_defect,
    "tail": _cmd_tail,
    "moment-scan": _cmd_moment_scan,
    "mean-match": _cmd_mean_match,
}


def run(argv: list[str]) -> int:
    """Parse argv and execute; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as e:
        print(f"error: usage: {e}")
        return 2
    except InvalidArgumentError as e:
        print(f"error: usage: {e}")
        return 2
    except EstimationFailedError as e:
        print(f"error: estimation-failed: {e}")
        return 4
    except SlmError as e:
        print(f"error: model-invalid: {e}")
        return 3


def main() -> None:  # console entry point
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
