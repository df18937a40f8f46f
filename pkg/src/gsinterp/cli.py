"""Batch experiment driver.

Three subcommands: ``synth`` sweeps reconstruction SNR over sampling rate
and sparsity, ``probe`` checks the estimator statistics against their
predicted values, and ``recsys`` runs the cross-validated recommendation
benchmark. Every command writes versioned CSV plus a PNG figure next to
it, and is byte-reproducible from (argv, seed, input files). The
GSR_THREADS environment variable caps the worker count.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import experiments, plots, recsys
from .errors import DataError, NumericalError
from .imatgi import ImatgiConfig

_EXIT_USAGE, _EXIT_DATA, _EXIT_NUMERIC = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on bad usage; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(_EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("#schema=v1\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return x


def _sibling(out, suffix):
    out = Path(out)
    return out.with_name(out.stem + suffix)


def build_parser():
    parser = _Parser(prog="gsinterp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="SNR sweep over sampling rate and sparsity")
    synth.add_argument("--n", type=int, default=1000, help="graph size")
    synth.add_argument("--p", type=float, nargs="+",
                       default=[0.45, 0.50, 0.55, 0.60, 0.65],
                       help="sampling rates")
    synth.add_argument("--sparsity", type=float, nargs="+",
                       default=[0.10, 0.20, 0.30, 0.40, 0.50, 0.60],
                       help="sparsity fractions k/N")
    synth.add_argument("--trials", type=int, default=100)
    synth.add_argument("--iters", type=int, default=20)
    synth.add_argument("--alpha", type=float, default=0.35)
    synth.add_argument("--beta", type=float, default=None,
                       help="initial threshold (default: adaptive)")
    synth.add_argument("--lambda", dest="lam", type=float, default=1.0)
    synth.add_argument("--epsilon", type=float, default=1e-6)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--fixed-graph", action="store_true",
                       help="one graph for all trials instead of one per trial")
    synth.add_argument("--out", required=True, help="detail CSV path")
    synth.add_argument("--no-plot", action="store_true")

    probe = sub.add_parser("probe", help="estimator-statistics checks")
    probe.add_argument("--kind", required=True,
                       choices=["lemma1", "contraction", "variance"])
    probe.add_argument("--n", type=int, default=None)
    probe.add_argument("--p", type=float, default=None)
    probe.add_argument("--trials", type=int, default=None)
    probe.add_argument("--iters", type=int, default=None)
    probe.add_argument("--gamma", type=float, default=2.0,
                       help="variance-guard factor (variance probe)")
    probe.add_argument("--seed", type=int, default=0)
    probe.add_argument("--out", required=True)
    probe.add_argument("--no-plot", action="store_true")

    rec = sub.add_parser("recsys", help="cross-validated recommendation benchmark")
    rec.add_argument("--dataset", required=True,
                     help="ratings file path, or 'synthetic' for the built-in fixture")
    rec.add_argument("--format", default="movielens-tab",
                     choices=sorted(recsys._FORMATS))
    rec.add_argument("--method", required=True, choices=["imatgi", "ilsr", "knn"])
    rec.add_argument("--scale-min", type=float, default=1.0)
    rec.add_argument("--scale-max", type=float, default=5.0)
    rec.add_argument("--seed", type=int, default=0)
    rec.add_argument("--folds", type=int, default=5)
    rec.add_argument("--subsample", type=int, default=100_000,
                     help="triple count cap before splitting")
    rec.add_argument("--max-users", type=int, default=None)
    rec.add_argument("--top-m", type=int, default=10)
    rec.add_argument("--alpha", type=float, default=0.2)
    rec.add_argument("--beta", type=float, default=None)
    rec.add_argument("--lambda", dest="lam", type=float, default=1.0)
    rec.add_argument("--epsilon", type=float, default=1e-7)
    rec.add_argument("--iters", type=int, default=30)
    rec.add_argument("--out", required=True)
    rec.add_argument("--no-plot", action="store_true")
    return parser


def _cmd_synth(args):
    if args.n < 2 or args.trials < 1:
        raise ValueError("--n must be >= 2 and --trials >= 1")
    for p in args.p:
        if not 0 < p <= 1:
            raise ValueError(f"sampling rate {p} outside (0, 1]")
    for s in args.sparsity:
        if not 0 < s <= 1:
            raise ValueError(f"sparsity fraction {s} outside (0, 1]")
    cfg = experiments.SynthConfig(
        n=args.n,
        p_list=tuple(args.p),
        sparsity_list=tuple(args.sparsity),
        trials=args.trials,
        imatgi=ImatgiConfig(alpha=args.alpha, beta=args.beta, lam=args.lam,
                            epsilon=args.epsilon, max_iters=args.iters),
        seed=args.seed,
        fixed_graph=args.fixed_graph,
    )
    result = experiments.run_synth(cfg)
    _write_csv(args.out,
               ["p", "sparsity", "trial", "snr_ratio", "snr_db", "iters_used"],
               [tuple(map(_fmt, r)) for r in result.rows])
    _write_csv(_sibling(args.out, ".agg.csv"),
               ["p", "sparsity", "mean_snr_ratio", "mean_snr_db", "n_inf", "n_trials"],
               [tuple(map(_fmt, r)) for r in result.aggregate])
    if not args.no_plot:
        plots.render_synth(result, _sibling(args.out, ".png"))
    print(f"synth: {len(result.rows)} rows -> {args.out}")
    return 0


def _probe_lemma1(args):
    cfg = experiments.Lemma1Config(
        n=args.n or 64, p=args.p or 0.5, trials=args.trials or 100_000,
        seed=args.seed,
    )
    r = experiments.run_lemma1(cfg)
    rows = [("mean", int(i), _fmt(float(r.empirical_mean[i])),
             _fmt(float(r.expected_mean[i])), _fmt(float(r.z_scores[i])),
             int(r.mean_within_bound[i]))
            for i in range(cfg.n)]
    var_ratio = (r.trace_variance / r.expected_trace_variance
                 if r.expected_trace_variance > 0 else r.trace_variance)
    rows.append(("trace_variance", "", _fmt(r.trace_variance),
                 _fmt(r.expected_trace_variance), _fmt(var_ratio),
                 int(r.variance_ok)))
    _write_csv(args.out, ["quantity", "component", "estimate", "theory", "metric", "pass"], rows)
    if not args.no_plot:
        plots.render_lemma1(r, _sibling(args.out, ".png"))
    print(f"lemma1: mean {'PASS' if r.mean_ok else 'FAIL'}, "
          f"variance {'PASS' if r.variance_ok else 'FAIL'}")
    return 0


def _probe_contraction(args):
    cfg = experiments.ContractionConfig(
        n=args.n or 32, p=args.p or 0.5, trials=args.trials or 5000,
        iters=args.iters or 12, seed=args.seed,
    )
    r = experiments.run_contraction(cfg)
    rows = []
    for case in r.cases:
        rows.append(("ratio", _fmt(case.lam_p), _fmt(case.mean_ratio),
                     _fmt(case.expected_ratio), _fmt(case.fraction_within),
                     int(case.ok)))
    rows.append(("divergence", _fmt(r.divergence_lam * cfg.p),
                 _fmt(float(r.divergence_norms[-1])),
                 _fmt(float(r.divergence_norms[1])), "growth",
                 int(r.divergence_ok)))
    _write_csv(args.out,
               ["quantity", "lam_p", "estimate", "theory", "metric", "pass"], rows)
    if not args.no_plot:
        plots.render_contraction(r, _sibling(args.out, ".png"))
    for case in r.cases:
        print(f"contraction lam*p={case.lam_p:g}: ratio {case.mean_ratio:.4f} "
              f"vs {case.expected_ratio:.4f} {'PASS' if case.ok else 'FAIL'}")
    print(f"divergence at lam=2.5/p: {'PASS' if r.divergence_ok else 'FAIL'}")
    return 0


def _probe_variance(args):
    cfg = experiments.VarianceConfig(
        n=args.n or 128, p=args.p or 0.9, trials=args.trials or 4000,
        iters=args.iters or 15, gamma=args.gamma, seed=args.seed,
    )
    r = experiments.run_variance(cfg)
    rows = [(k + 1, _fmt(float(r.mse[k])), _fmt(float(r.mse_stderr[k])),
             _fmt(float(r.sigma2[k])), _fmt(float(r.thresholds[k])),
             _fmt(float(r.guard_sigma[k])))
            for k in range(cfg.iters)]
    _write_csv(args.out,
               ["k", "mse", "mse_stderr", "sigma2", "threshold", "guard_sigma"], rows)
    if not args.no_plot:
        plots.render_variance(r, _sibling(args.out, ".png"))
    print(f"variance: MSE non-increasing {'PASS' if r.monotone_ok else 'FAIL'}")
    return 0


def _cmd_recsys(args):
    if args.dataset == "synthetic":
        table = recsys.make_synthetic_ratings(
            seed=args.seed, scale=(args.scale_min, args.scale_max)
        )
        dataset_name = "synthetic"
    else:
        table = recsys.ingest(args.dataset, args.format,
                              (args.scale_min, args.scale_max))
        dataset_name = Path(args.dataset).name
    table = recsys.cap_users(table, args.max_users)
    table = recsys.subsample_100k(table, args.seed, count=args.subsample)
    split = recsys.make_cv_split(table, n_folds=args.folds, seed=args.seed)
    params = recsys.PipelineParams(
        top_m=args.top_m,
        imatgi=ImatgiConfig(alpha=args.alpha, beta=args.beta, lam=args.lam,
                            epsilon=args.epsilon, max_iters=args.iters),
        max_users=args.max_users,
    )
    report = recsys.evaluate(recsys.get_method(args.method), table, split,
                             params, dataset=dataset_name)
    report.write_csv(args.out)
    if not args.no_plot:
        plots.render_recsys(report, _sibling(args.out, ".png"))
    print(f"recsys {dataset_name}/{args.method}: mean nRMSE {report.mean:.4f} "
          f"(std {report.std:.4f}, cold starts {report.cold_start})")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "synth": _cmd_synth,
        "recsys": _cmd_recsys,
    }
    try:
        if args.command == "probe":
            handler = {"lemma1": _probe_lemma1, "contraction": _probe_contraction,
                       "variance": _probe_variance}[args.kind]
            return handler(args)
        return handlers[args.command](args)
    except ValueError as exc:
        print(f"gsinterp: error: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except DataError as exc:
        print(f"gsinterp: data error: {exc}", file=sys.stderr)
        return _EXIT_DATA
    except OSError as exc:
        print(f"gsinterp: data error: {exc}", file=sys.stderr)
        return _EXIT_DATA
    except NumericalError as exc:
        print(f"gsinterp: numerical failure: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
