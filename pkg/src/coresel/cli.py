"""Command line front end.

Subcommands: gen (synthetic benchmark), select (one method over one pool),
eval (repeated select+evaluate, emits a report), report (re-emit a report's
CSV table). Results go to --out/--csv or stdout; diagnostics go to stderr.
Exit codes: 0 on success, 2 for configuration problems, 3 for unreadable or
invalid data. Outputs are byte-identical across reruns with the same
arguments; the only opt-out is --timings, which embeds wall time.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import fileio
from .datagen import BenchmarkSpec, gen_benchmark
from .evaluate import run_experiment
from .fileio import EmbeddingFileError, ReportParseError, ScoreFileError
from .objectives import ObjectiveWeights
from .selection import METHODS, SelectionConfig, distill


class _DataError(Exception):
    pass


def _add_selection_args(p: argparse.ArgumentParser):
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--vpc", required=True, type=int, help="items to keep per class")
    p.add_argument("--scores", help="score file for top_score/knapsack")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--lambda-div", type=float, default=None, help="diversity weight")
    p.add_argument("--lambda-rep", type=float, default=None, help="representativeness weight")
    p.add_argument("--pca-dims", type=int, default=32)
    p.add_argument("--birch-threshold-scale", type=float, default=0.5)
    p.add_argument("--birch-branching", type=int, default=50)
    p.add_argument("--sweeps", type=int, default=20, help="local search sweep cap")


def _build_config(args) -> SelectionConfig:
    if (args.lambda_div is None) != (args.lambda_rep is None):
        raise ValueError("--lambda-div and --lambda-rep must be given together")
    weights = None
    if args.lambda_div is not None:
        weights = ObjectiveWeights(lambda_d=args.lambda_div, lambda_r=args.lambda_rep)
    config = SelectionConfig(
        method=args.method,
        vpc=args.vpc,
        weights=weights,
        pca_dims=args.pca_dims,
        birch_threshold_scale=args.birch_threshold_scale,
        birch_branching=args.birch_branching,
        master_seed=args.seed,
        local_search_max_sweeps=args.sweeps,
    )
    if config.method in ("top_score", "knapsack") and not args.scores:
        raise ValueError(f"method {config.method!r} requires --scores")
    return config


def _load_scores(args, n: int):
    if not args.scores:
        return None
    return fileio.read_scores(args.scores, n)


def _config_echo(config: SelectionConfig, runs: int, temperature: float) -> dict:
    w = config.effective_weights()
    return {
        "method": config.method,
        "vpc": config.vpc,
        "seed": config.master_seed,
        "runs": runs,
        "temperature": temperature,
        "lambda_d": w.lambda_d,
        "lambda_r": w.lambda_r,
        "pca_dims": config.pca_dims,
        "birch_threshold_scale": config.birch_threshold_scale,
        "birch_branching": config.birch_branching,
        "sweeps": config.local_search_max_sweeps,
    }


_SPEC_KEYS = (
    "num_classes",
    "per_class",
    "dim",
    "modes_per_class",
    "class_separation",
    "mode_spread",
    "noise_sigma",
    "test_per_class",
    "seed",
    "test_seed",
)


def _build_benchmark_spec(args) -> BenchmarkSpec:
    values: dict = {}
    if args.spec:
        try:
            with open(args.spec, "r", encoding="utf-8") as f:
                doc = json.load(f)
        except json.JSONDecodeError as e:
            raise _DataError(f"spec file {args.spec}: {e}") from e
        if not isinstance(doc, dict):
            raise _DataError(f"spec file {args.spec}: expected a JSON object")
        unknown = set(doc) - set(_SPEC_KEYS)
        if unknown:
            raise ValueError(f"unknown spec keys: {sorted(unknown)}")
        values.update(doc)
    for key in _SPEC_KEYS:
        flag = getattr(args, key)
        if flag is not None:
            values[key] = flag
    return BenchmarkSpec(**values)


def cmd_gen(args) -> int:
    spec = _build_benchmark_spec(args)
    train, test = gen_benchmark(spec)
    paths = {}
    for name, ds in (("train", train), ("test", test)):
        path = f"{args.out}.{name}.emb"
        fileio.write_embeddings(path, ds)
        paths[name] = path
        print(f"wrote {path} (N={ds.n}, D={ds.dim}, C={ds.num_classes})")
    if args.manifest:
        manifest = fileio.Manifest(
            class_names=[f"class{c:03d}" for c in range(spec.num_classes)],
            source="coresel gen synthetic benchmark",
            created=fileio.manifest_timestamp(),
            seed_lineage={
                "seed": spec.seed,
                "test_seed": spec.test_seed,
                "streams": "per-class substreams derived from (seed, purpose_base + class)",
            },
            outputs=[fileio.output_entry(paths["train"]), fileio.output_entry(paths["test"])],
        )
        fileio.write_manifest(args.manifest, manifest)
        print(f"wrote {args.manifest}")
    return 0


def cmd_select(args) -> int:
    config = _build_config(args)  # config errors surface before any file IO
    ds = fileio.read_embeddings(args.data)
    scores = _load_scores(args, ds.n)
    result = distill(ds, config, scores=scores)
    if args.out:
        fileio.write_selection(args.out, result, config.master_seed)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(fileio.render_selection(result, config.master_seed))
    return 0


def cmd_eval(args) -> int:
    config = _build_config(args)
    if args.runs < 1:
        raise ValueError("--runs must be >= 1")
    if not (args.temperature > 0):
        raise ValueError("--temperature must be positive")
    train = fileio.read_embeddings(args.data)
    test = fileio.read_embeddings(args.test)
    if train.dim != test.dim:
        raise _DataError(f"pool dim {train.dim} != test dim {test.dim}")
    if train.num_classes != test.num_classes:
        raise _DataError(
            f"pool classes {train.num_classes} != test classes {test.num_classes}"
        )
    if test.n == 0:
        raise _DataError("test set is empty")
    scores = _load_scores(args, train.n)
    result = run_experiment(
        train,
        test,
        config,
        scores=scores,
        runs=args.runs,
        temperature=args.temperature,
        collect_timings=args.timings,
    )
    params = _config_echo(config, args.runs, args.temperature)
    text = fileio.render_report(result, params, run_times=result.run_times)
    if args.out:
        fileio.atomic_write_text(args.out, text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_report(args) -> int:
    try:
        doc = fileio.read_report(args.input)
    except ReportParseError as e:
        raise _DataError(f"{args.input}: {e}") from e
    # cross-check the rendered aggregates against the per-run rows; the
    # parsed values are 6-digit renderings, so compare loosely
    for m, (mean, std) in doc["aggregate"].items():
        vals = np.array([run[m] for run in doc["runs"]])
        re_mean = float(vals.mean())
        re_std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        if abs(re_mean - mean) > 1e-4 or abs(re_std - std) > 1e-4:
            raise _DataError(
                f"aggregate {m} = {fileio.fmt_mean_std(mean, std)} does not match "
                f"per-run rows ({fileio.fmt_mean_std(re_mean, re_std)})"
            )
    csv_text = fileio.CSV_HEADER + "\n" + "\n".join(doc["table"]) + "\n"
    if args.csv:
        fileio.atomic_write_text(args.csv, csv_text)
        print(f"wrote {args.csv}")
    else:
        sys.stdout.write(csv_text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coresel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic benchmark")
    p.add_argument("--out", required=True, help="output prefix; writes .train.emb/.test.emb")
    p.add_argument("--spec", help="JSON file with benchmark parameters (flags override)")
    p.add_argument("--classes", dest="num_classes", type=int, default=None)
    p.add_argument("--per-class", dest="per_class", type=int, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--modes", dest="modes_per_class", type=int, default=None)
    p.add_argument("--separation", dest="class_separation", type=float, default=None)
    p.add_argument("--spread", dest="mode_spread", type=float, default=None)
    p.add_argument("--sigma", dest="noise_sigma", type=float, default=None)
    p.add_argument("--test-per-class", dest="test_per_class", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--test-seed", dest="test_seed", type=int, default=None)
    p.add_argument("--manifest", help="also write a provenance manifest here")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("select", help="select a per-class coreset")
    p.add_argument("--data", required=True, help="EMB1 pool to select from")
    p.add_argument("--out", help="selection JSON destination (stdout if omitted)")
    _add_selection_args(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("eval", help="repeated select+evaluate, emits a report")
    p.add_argument("--data", required=True, help="EMB1 training pool")
    p.add_argument("--test", required=True, help="EMB1 test set")
    p.add_argument("--out", help="report destination (stdout if omitted)")
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--timings", action="store_true", help="record wall time (nondeterministic)")
    _add_selection_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="re-emit a report's CSV table")
    p.add_argument("--in", dest="input", required=True, help="report file to parse")
    p.add_argument("--csv", help="CSV destination (stdout if omitted)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (EmbeddingFileError, ScoreFileError, _DataError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
