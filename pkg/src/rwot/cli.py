"""Command-line entry point.

Subcommands: ``dist``, ``bench shift-sweep``, ``classify knn``,
``search topk`` and ``diag``. Exit status is 0 on success, 1 on bad input
and 2 when a solver did not converge (the value is still printed).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import (
    FAMILIES,
    SamplerSpec,
    load_grid_image,
    load_point_cloud,
    load_sequence,
    synthetic_digits,
)
from .diagnostics import (
    kernel_stability,
    shifted_norm_comparison,
    stability_report,
    support_mean_gap,
)
from .errors import KernelUnderflow, NumericalError, RWOTError
from .experiments import METRICS, knn_classify, shift_sweep, topk_search, write_csv
from .relative import ShiftSearchConfig, rw_p_distance
from .transport import SinkhornConfig, build_cost_matrix, solve

EXIT_OK, EXIT_INPUT, EXIT_NOCONV = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for non-convergence here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _global_flags(parser, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    g = parser.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=default(42))
    g.add_argument("--lambda", dest="lam", type=_positive_float, default=default(0.1),
                   help="entropic regularization (default 0.1)")
    g.add_argument("--epsilon", type=_positive_float, default=default(0.01),
                   help="squared marginal residual threshold (default 0.01)")
    g.add_argument("--max-iter", dest="max_iter", type=_positive_int, default=default(100_000))
    g.add_argument("--out", default=default(None), help="output path (default: stdout)")


def build_parser():
    parser = _Parser(prog="rwot", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(subparsers, name, **kw):
        p = subparsers.add_parser(name, **kw)
        _global_flags(p, suppress=True)
        return p

    p = add(sub, "dist", help="distance between two point-cloud CSV files")
    p.add_argument("src")
    p.add_argument("dst")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--metric", choices=("wp", "rwp"), default="wp")
    p.add_argument("--solver", choices=("sinkhorn", "exact"), default="sinkhorn")
    p.add_argument("--starts", type=_positive_int, default=10)
    p.add_argument("--tol", type=_positive_float, default=1e-6)
    p.add_argument("--budget", type=_positive_int, default=500)

    bench = sub.add_parser("bench", help="benchmarks").add_subparsers(dest="bench_cmd", required=True)
    p = add(bench, "shift-sweep", help="classic vs RW2 Sinkhorn under translation")
    p.add_argument("--family", choices=FAMILIES, default="gaussian")
    p.add_argument("--dim", type=_positive_int, default=1)
    p.add_argument("--m", type=_positive_int, default=200)
    p.add_argument("--lengths", type=_float_list, default=[0.0, 1.0, 2.0, 3.0])
    p.add_argument("--trials", type=_positive_int, default=5)
    p.add_argument("--timing-repeats", type=_positive_int, default=1)

    classify = sub.add_parser("classify", help="classification").add_subparsers(dest="classify_cmd", required=True)
    p = add(classify, "knn", help="kNN accuracy under image translation")
    p.add_argument("--corpus", default="synthetic",
                   help="'synthetic' or a manifest of 'path,label' lines")
    p.add_argument("--lengths", type=_int_list, default=[0, 4, 8, 12, 16, 20, 24, 28])
    p.add_argument("--metrics", default=",".join(METRICS))
    p.add_argument("--k", type=_positive_int, default=1)
    p.add_argument("--repeats", type=_positive_int, default=10)
    p.add_argument("--test-ratio", type=_positive_float, default=0.25)
    p.add_argument("--canvas", type=_positive_int, default=84)

    search = sub.add_parser("search", help="similarity search").add_subparsers(dest="search_cmd", required=True)
    p = add(search, "topk", help="rank a corpus by distance to a query")
    p.add_argument("--corpus", required=True,
                   help="manifest of image paths (or sequence manifests with --sequence)")
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=_positive_int, default=5)
    p.add_argument("--metric", choices=("W2", "RW2"), default="RW2")
    p.add_argument("--sequence", action="store_true")

    p = add(sub, "diag", help="kernel stability diagnostics")
    p.add_argument("--src", required=True)
    p.add_argument("--dst", required=True)
    p.add_argument("--shifts", type=int, default=20)
    return parser


def _cfg(args, epsilon=None):
    return SinkhornConfig(lam=args.lam, epsilon=args.epsilon if epsilon is None else epsilon,
                          max_iterations=args.max_iter)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _json(doc):
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _header(args, config):
    return {"tool": "rwot", "version": __version__, "seed": args.seed, "config": config}


def _read_manifest_lines(path):
    path = Path(path)
    lines = []
    for raw in path.read_text(encoding="utf-8").splitlines():
        raw = raw.strip()
        if raw and not raw.startswith("#"):
            lines.append(raw)
    return path.parent, lines


def _resolve(base, p):
    p = Path(p)
    return p if p.is_absolute() else base / p


# --------------------------------------------------------------------------

def cmd_dist(args):
    src, dst = load_point_cloud(args.src), load_point_cloud(args.dst)
    if src.dim != dst.dim:
        raise UsageError(f"dimension mismatch: {src.dim} vs {dst.dim}")
    if args.p < 1:
        raise UsageError("--p must be >= 1")
    solver = "exact" if args.solver == "exact" else _cfg(args)
    config = {"metric": args.metric, "p": args.p, "solver": args.solver,
              "lambda": args.lam, "epsilon": args.epsilon, "max_iter": args.max_iter,
              "src": str(args.src), "dst": str(args.dst)}
    lam = args.lam
    if args.metric == "wp":
        cost = build_cost_matrix(src, dst, args.p)
        rep = solve(cost, src.masses, dst.masses, solver)
        doc = {"distance": max(rep.transport_cost, 0.0) ** (1.0 / args.p)}
    else:
        search = ShiftSearchConfig(args.starts, args.tol, args.budget, args.seed)
        config.update({"starts": args.starts, "tol": args.tol, "budget": args.budget})
        rw = rw_p_distance(src, dst, args.p, solver, search)
        rep = rw.inner
        cost = build_cost_matrix(src, dst, args.p, rw.shift)
        doc = {"distance": rw.rw_distance, "shift": rw.shift.tolist()}
        if rw.w_distance is not None:
            doc["w_distance"] = rw.w_distance
            doc["mean_gap"] = rw.mean_gap
        if rw.budget_exhausted:
            doc["budget_exhausted"] = True
    doc.update({
        "iterations": rep.iterations,
        "converged": rep.converged,
        "log_g": kernel_stability(cost, lam),
        **_header(args, config),
    })
    _emit(_json(doc), args.out)
    return EXIT_OK if rep.converged else EXIT_NOCONV


def cmd_shift_sweep(args):
    spec = SamplerSpec(args.family, args.dim, {}, args.m, args.seed)
    cfg = _cfg(args)
    rows = shift_sweep(spec, args.lengths, args.trials, cfg, seed=args.seed,
                       timing_repeats=args.timing_repeats)
    meta = _header(args, {"family": args.family, "dim": args.dim, "m": args.m,
                          "lengths": args.lengths, "trials": args.trials,
                          "lambda": cfg.lam, "epsilon": cfg.epsilon, "max_iter": cfg.max_iterations,
                          "timing_repeats": args.timing_repeats,
                          "desk_scale": args.m < 1000})
    _write_table(rows, args.out, meta)
    return EXIT_OK


def _load_corpus(spec, seed):
    if spec == "synthetic":
        return synthetic_digits(20, 3, 28, seed=seed)
    base, lines = _read_manifest_lines(spec)
    corpus = []
    for lineno, line in enumerate(lines, start=1):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise UsageError(f"{spec}: entry {lineno}: expected 'path,label'")
        corpus.append((load_grid_image(_resolve(base, parts[0])), int(parts[1])))
    return corpus


def cmd_knn(args):
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    bad = [m for m in metrics if m not in METRICS]
    if bad:
        raise UsageError(f"unknown metrics {bad}; choose from {list(METRICS)}")
    if args.k % 2 == 0:
        raise UsageError("--k must be odd")
    corpus = _load_corpus(args.corpus, args.seed)
    cfg = _cfg(args)
    rows = knn_classify(corpus, args.lengths, metrics, args.k, args.test_ratio, args.repeats,
                        args.seed, cfg, canvas=(args.canvas, args.canvas))
    meta = _header(args, {"corpus": args.corpus, "lengths": args.lengths, "metrics": metrics,
                          "k": args.k, "repeats": args.repeats, "test_ratio": args.test_ratio,
                          "canvas": args.canvas, "lambda": cfg.lam, "epsilon": cfg.epsilon,
                          "max_iter": cfg.max_iterations, "desk_scale": len(corpus) < 100})
    _write_table(rows, args.out, meta)
    return EXIT_OK


def cmd_topk(args):
    base, lines = _read_manifest_lines(args.corpus)
    corpus = {}
    for line in lines:
        p = _resolve(base, line)
        corpus[p.stem] = load_sequence(p) if args.sequence else load_grid_image(p)
    query = load_sequence(args.query) if args.sequence else load_grid_image(args.query)
    cfg = _cfg(args)
    res = topk_search(corpus, query, args.k, args.metric, cfg, query_id=Path(args.query).stem)
    doc = res.to_dict()
    doc.update(_header(args, {"corpus": str(args.corpus), "query": str(args.query), "k": args.k,
                              "metric": args.metric, "sequence": args.sequence,
                              "lambda": cfg.lam, "epsilon": cfg.epsilon,
                              "max_iter": cfg.max_iterations}))
    _emit(_json(doc), args.out)
    return EXIT_OK


def cmd_diag(args):
    src, dst = load_point_cloud(args.src), load_point_cloud(args.dst)
    if src.dim != dst.dim:
        raise UsageError(f"dimension mismatch: {src.dim} vs {dst.dim}")
    if args.shifts < 0:
        raise UsageError("--shifts must be >= 0")
    rep = stability_report(src, dst, args.lam)
    s_star = support_mean_gap(src, dst)
    rng = np.random.default_rng(args.seed)
    scale = float(np.linalg.norm(s_star)) + 1.0
    random_shifts = []
    for _ in range(args.shifts):
        s = rng.normal(0.0, scale, src.dim)
        random_shifts.append({
            "shift": s.tolist(),
            "log_g": kernel_stability(build_cost_matrix(src, dst, 2.0, s), args.lam),
        })
    cmp = shifted_norm_comparison(src.points, dst.points)
    best = max([rep.log_g, rep.log_g_unshifted] + [r["log_g"] for r in random_shifts])
    doc = {
        "zero_shift": {"log_g": rep.log_g_unshifted, "c_inf_norm": rep.c_inf_norm},
        "mean_shift": {"log_g": rep.log_g, "c_inf_norm": rep.c_inf_norm_shifted,
                       "shift": rep.shift.tolist()},
        "random_shifts": random_shifts,
        "mean_shift_is_max": rep.log_g >= best,
        "shifted_norm_comparison": cmp._asdict(),
        **_header(args, {"src": str(args.src), "dst": str(args.dst), "lambda": args.lam,
                         "shifts": args.shifts}),
    }
    _emit(_json(doc), args.out)
    return EXIT_OK


def _write_table(rows, out, meta):
    """CSV rows to ``out`` plus a ``<out>.meta.json`` sidecar; without
    ``out`` the CSV goes to stdout and the metadata to stderr."""
    if out is None:
        write_csv(rows, sys.stdout)
        sys.stderr.write(_json(meta))
    else:
        write_csv(rows, out)
        Path(str(out) + ".meta.json").write_text(_json(meta), encoding="utf-8")


COMMANDS = {
    ("dist",): cmd_dist,
    ("bench", "shift-sweep"): cmd_shift_sweep,
    ("classify", "knn"): cmd_knn,
    ("search", "topk"): cmd_topk,
    ("diag",): cmd_diag,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    key = (args.command,) + tuple(
        v for v in (getattr(args, "bench_cmd", None), getattr(args, "classify_cmd", None),
                    getattr(args, "search_cmd", None)) if v
    )
    try:
        return COMMANDS[key](args)
    except (KernelUnderflow, NumericalError) as exc:
        print(f"rwot: solver failure: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except (UsageError, RWOTError, OSError, ValueError) as exc:
        print(f"rwot: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
