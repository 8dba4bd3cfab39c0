"""Command-line interface.

Subcommands: train, eval, oracle-check, export-metrics, fetch. A flat
``key = value`` config file can seed any train/eval option; explicit flags
win over the file, which wins over built-in defaults. All outputs are
deterministic for a fixed config and seed.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .combinatorics import load_ordering_set, parse_query_dist, save_ordering_set
from .datasets import FetchError, fetch_dataset, load_dataset
from .evaluation import evaluate_query_set, generate_query_set, load_query_set, save_query_set
from .model import init_model, load_checkpoint, save_checkpoint
from .oracles import run_oracle_suite
from .training import MetricTrace, TrainConfig, train


def load_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; '#' starts a comment; blank lines ignored."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


class _Resolver:
    """Fold together defaults, config-file values, and explicit flags."""

    def __init__(self, args: argparse.Namespace, defaults: dict):
        self.flags = vars(args)
        self.file = load_config_file(args.config) if getattr(args, "config", None) else {}
        self.defaults = defaults

    def get(self, key: str, cast):
        if self.flags.get(key) is not None:
            return self.flags[key]
        if key in self.file:
            raw = self.file[key]
            return cast(raw)
        return self.defaults[key]


def _int_budget(s: str) -> int:
    return int(float(s))


def _write_atomic(path, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


# --- train -------------------------------------------------------------------

TRAIN_DEFAULTS = dict(
    procedure="oapp", k=1, query_dist="uniform", valid_query_dist=None,
    batch_size=16, lr=1e-3, optimizer="adam", hidden1=256, hidden2=256,
    budget=200_000, eval_every=10_000, patience=20, n_valid_queries=200, seed=0,
)


def cmd_train(args) -> int:
    r = _Resolver(args, TRAIN_DEFAULTS)
    dataset = load_dataset(args.dataset)
    D = dataset.D

    query_dist = parse_query_dist(r.get("query_dist", str), D)
    valid_spec = r.get("valid_query_dist", str)
    valid_dist = parse_query_dist(valid_spec, D) if valid_spec else None

    config = TrainConfig(
        procedure=r.get("procedure", str),
        K=r.get("k", int),
        query_dist=query_dist,
        batch_size=r.get("batch_size", int),
        learning_rate=r.get("lr", float),
        optimizer=r.get("optimizer", str),
        budget=r.get("budget", _int_budget),
        eval_every=r.get("eval_every", _int_budget),
        seed=r.get("seed", int),
        early_stop_patience=r.get("patience", int),
        n_valid_queries=r.get("n_valid_queries", int),
        valid_query_dist=valid_dist,
    )
    model = init_model(D, r.get("hidden1", int), r.get("hidden2", int), seed=config.seed)

    result = train(model, dataset, config)

    os.makedirs(args.out, exist_ok=True)
    save_checkpoint(result.model, os.path.join(args.out, "model.ckpt"))
    result.trace.to_csv(os.path.join(args.out, "trace.csv"))
    save_ordering_set(result.ordering_set, os.path.join(args.out, "orderings.txt"))
    save_query_set(result.valid_queries, os.path.join(args.out, "valid_queries.txt"))

    best_x, best_nll = result.trace.best_valid()
    print(f"dataset {dataset.name}: D={D}, {dataset.train.shape[0]} train rows")
    print(
        f"trained {config.procedure} for {result.train_inferences} inferences "
        f"({result.train_inferences / D:.1f} per-D), {result.eval_inferences} spent on evals"
    )
    print(f"best validation NLL {best_nll:.4f} at {best_x:.1f} computations/D")
    print(f"artifacts written to {args.out}")
    return 0


# --- eval --------------------------------------------------------------------

EVAL_DEFAULTS = dict(split="test", n_queries=1000, query_seed=1234)


def cmd_eval(args) -> int:
    r = _Resolver(args, EVAL_DEFAULTS)
    model = load_checkpoint(args.checkpoint)
    ordering_set = load_ordering_set(args.orderings)
    if ordering_set.D != model.D:
        print(f"error: orderings are for D={ordering_set.D}, model is D={model.D}", file=sys.stderr)
        return 1
    dataset = load_dataset(args.dataset)
    split = dataset.split(r.get("split", str))

    query_sets = []
    for path in args.query_set or []:
        query_sets.append(load_query_set(path, split))
    for spec in args.query_dist or []:
        dist = parse_query_dist(spec, model.D)
        query_sets.append(
            generate_query_set(split, dist, r.get("n_queries", int), r.get("query_seed", int))
        )
    if not query_sets:
        print("error: give at least one --query-set or --query-dist", file=sys.stderr)
        return 1

    results = [(qs.descriptor, evaluate_query_set(model, qs, ordering_set), len(qs))
               for qs in query_sets]

    print(f"model {args.checkpoint} (D={model.D}, K={ordering_set.K}) on split '{r.get('split', str)}'")
    print(f"{'query set':<24}{'mean NLL':>12}{'queries':>10}")
    for desc, res, n in results:
        print(f"{desc:<24}{res.mean_nll:>12.4f}{n:>10}")
    if len(results) == 2:
        print(f"summary: {results[0][1].mean_nll:.4f} / {results[1][1].mean_nll:.4f}")

    if args.csv:
        lines = ["query_set,mean_nll,n_queries"]
        for desc, res, n in results:
            lines.append(f"{desc},{res.mean_nll!r},{n}")
        _write_atomic(args.csv, "\n".join(lines) + "\n")
    return 0


# --- oracle-check --------------------------------------------------------------


def cmd_oracle_check(args) -> int:
    checks = run_oracle_suite(seed=args.seed)
    failed = 0
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"[{status}] {c.name}: {c.detail}")
        failed += 0 if c.passed else 1
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else 1


# --- export-metrics -------------------------------------------------------------


def cmd_export_metrics(args) -> int:
    labels = args.labels.split(",") if args.labels else None
    if labels and len(labels) != len(args.traces):
        print("error: --labels must name each trace once", file=sys.stderr)
        return 1
    lines = ["run,computations_over_D,train_loss,valid_nll"]
    for i, path in enumerate(args.traces):
        trace = MetricTrace.from_csv(path)
        label = labels[i] if labels else os.path.splitext(os.path.basename(path))[0]
        for c, tl, vn in trace.rows:
            lines.append(f"{label},{c!r},{tl!r},{vn!r}")
    _write_atomic(args.out, "\n".join(lines) + "\n")
    print(f"merged {len(args.traces)} traces into {args.out}")
    return 0


# --- fetch ----------------------------------------------------------------------


def cmd_fetch(args) -> int:
    expected = None
    if args.expect_lines:
        expected = [int(t) for t in args.expect_lines.split(",")]
        if len(expected) != 3:
            print("error: --expect-lines needs train,valid,test counts", file=sys.stderr)
            return 1
    try:
        paths = fetch_dataset(args.name, args.url_base, args.dir, expected_lines=expected)
    except FetchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(f"fetched {p}")
    return 0


# --- wiring ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nadecomplete",
        description="Order-agnostic autoregressive density estimation for binary data completion",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model under a computation budget")
    p.add_argument("--dataset", required=True, help="directory with train/valid/test.txt")
    p.add_argument("--out", required=True, help="output directory for artifacts")
    p.add_argument("--config", help="flat key = value config file; flags override it")
    p.add_argument("--procedure", choices=("oa", "oapp"))
    p.add_argument("--k", type=int, help="number of fixed orderings (ensemble size)")
    p.add_argument("--query-dist", dest="query_dist",
                   help="training query distribution (oapp), e.g. uniform, fixed-size:half")
    p.add_argument("--valid-query-dist", dest="valid_query_dist",
                   help="validation query distribution; defaults to --query-dist")
    p.add_argument("--budget", type=_int_budget, help="training inferences, e.g. 2e5")
    p.add_argument("--eval-every", dest="eval_every", type=_int_budget)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--optimizer", choices=("adam", "sgd"))
    p.add_argument("--hidden1", type=int)
    p.add_argument("--hidden2", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--n-valid-queries", dest="n_valid_queries", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint on completion query sets")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--orderings", required=True, help="ordering-set file from training")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--split")
    p.add_argument("--query-set", action="append", help="frozen query-set file (repeatable)")
    p.add_argument("--query-dist", dest="query_dist", action="append",
                   help="generate a query set from this distribution (repeatable)")
    p.add_argument("--n-queries", dest="n_queries", type=int)
    p.add_argument("--query-seed", dest="query_seed", type=int)
    p.add_argument("--csv", help="also write the report as CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oracle-check", help="run unbiasedness, reduction, and counting checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("export-metrics", help="merge metric traces into one CSV")
    p.add_argument("traces", nargs="+", help="trace.csv files from training runs")
    p.add_argument("--out", required=True)
    p.add_argument("--labels", help="comma-separated run labels (default: file stems)")
    p.set_defaults(func=cmd_export_metrics)

    p = sub.add_parser("fetch", help="download a dataset's split files")
    p.add_argument("--name", required=True)
    p.add_argument("--url-base", dest="url_base", required=True,
                   help="expects <url-base>/<name>/{train,valid,test}.txt")
    p.add_argument("--dir", required=True)
    p.add_argument("--expect-lines", dest="expect_lines",
                   help="verify line counts, e.g. 5000,1000,1000")
    p.set_defaults(func=cmd_fetch)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
