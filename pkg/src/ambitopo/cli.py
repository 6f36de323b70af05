"""Command-line surface: simulate, sweep, ingest, analyze, calibrate, report.

Every command writes its data files plus a manifest.json capturing the
resolved arguments and master seed; `ambitopo rerun manifest.json --out D`
replays the command. Data files carry no timestamps, so a rerun with the
mock embedder reproduces them byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from argparse import Namespace
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import (
    calibrate,
    chunk_documents,
    embed_chunks,
    get_embedder,
    load_corpus_dir,
    read_embeddings_jsonl,
    retrieval_experiment,
    write_embeddings_jsonl,
    write_experiment_csv,
)
from .errors import DegenerateInputError, DimensionMismatchError, EmbedderError
from .manifest import RunManifest
from .neighborhood import DEFAULT_EPSILON_GRID, DEFAULT_K
from .report import gaussian_kde_curve, histogram
from .simulation import (
    ScenarioConfig,
    epsilon_sweep,
    projection_robustness,
    run_simulation,
    summarize,
    write_trials_csv,
)
from .svgplot import Series, line_plot


def _parse_floats(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _parse_ints(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _load_config(args) -> ScenarioConfig:
    if getattr(args, "config", None):
        config = ScenarioConfig.from_json(Path(args.config).read_text())
    else:
        config = ScenarioConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "epsilon", None) is not None:
        overrides["epsilon"] = args.epsilon
    if overrides:
        config = ScenarioConfig(**{**asdict(config), **overrides})
    return config


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(args, command: str, seed, out: Path, outputs: list[str]) -> int:
    stored = {k: v for k, v in vars(args).items() if k != "func"}
    RunManifest(
        command=command,
        args=stored,
        seed=seed,
        package_version=__version__,
        outputs=sorted(outputs),
    ).write(out)
    return 0


def _write_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _print_metric_line(label: str, stats: dict) -> None:
    print(
        f"{label}: mean={stats['mean']:.4f} "
        f"IQR=[{stats['q25']:.4f}, {stats['q75']:.4f}] median={stats['median']:.4f}"
    )


def cmd_simulate(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    result = run_simulation(config, args.scenario, args.trials, jobs=args.jobs)
    write_trials_csv(out / "trials.csv", [(t.trial, t.scenario, t.score) for t in result.trials])
    summary = {"config": asdict(config), "scenario": args.scenario, "metrics": result.summary()}
    _write_json(out / "summary.json", summary)
    print(f"scenario {args.scenario}, {args.trials} trials, epsilon={config.epsilon}")
    _print_metric_line("W1(H0)", summary["metrics"]["w1_h0"])
    _print_metric_line("LT_max(H1)", summary["metrics"]["lt_max_h1"])
    return _finish(args, "simulate", config.seed, out, ["trials.csv", "summary.json"])


def cmd_sweep(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    outputs: list[str] = []
    if args.epsilon_grid is not None:
        grid = args.epsilon_grid
        sweep = epsilon_sweep(config, args.scenario, grid, n_trials=args.trials, jobs=args.jobs)
        with open(out / "sweep.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("trial_id", "scenario", "epsilon", "w1_h0", "lt_max_h1"))
            for trial_id, profile in enumerate(sweep.profiles):
                for score in profile:
                    writer.writerow(
                        [
                            trial_id,
                            args.scenario,
                            repr(float(score.epsilon)),
                            repr(float(score.w1_h0)),
                            repr(float(score.lt_max_h1)),
                        ]
                    )
        curves = {name: sweep.curve(name) for name in ("w1_h0", "lt_max_h1")}
        _write_json(
            out / "sweep_summary.json",
            {
                "config": asdict(config),
                "scenario": args.scenario,
                "curves": {
                    name: {key: [float(v) for v in vals] for key, vals in curve.items()}
                    for name, curve in curves.items()
                },
            },
        )
        outputs += ["sweep.csv", "sweep_summary.json"]
        if args.svg:
            for name, curve in curves.items():
                svg_name = f"sweep_{name}.svg"
                line_plot(
                    out / svg_name,
                    [
                        Series(
                            x=curve["epsilon"],
                            y=curve["mean"],
                            label=f"scenario {args.scenario} mean",
                            band=(curve["q25"], curve["q75"]),
                        )
                    ],
                    title=f"{name} vs neighborhood scale",
                    xlabel="epsilon",
                    ylabel=name,
                )
                outputs.append(svg_name)
        for name, curve in curves.items():
            print(f"{name}: " + " ".join(f"{e:g}:{m:.3f}" for e, m in zip(curve["epsilon"], curve["mean"])))
    else:
        dims = args.dims
        result = projection_robustness(
            config, args.scenario, dims, n_trials=args.trials, jobs=args.jobs
        )
        with open(out / "projection.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("trial_id", "scenario", "dim", "epsilon", "w1_h0", "lt_max_h1"))
            for dim in sorted(result.by_dim, reverse=True):
                for trial_id, score in enumerate(result.by_dim[dim]):
                    writer.writerow(
                        [
                            trial_id,
                            args.scenario,
                            dim,
                            repr(float(score.epsilon)),
                            repr(float(score.w1_h0)),
                            repr(float(score.lt_max_h1)),
                        ]
                    )
        summary = result.summary()
        _write_json(
            out / "projection_summary.json",
            {"config": asdict(config), "scenario": args.scenario,
             "by_dim": {str(d): s for d, s in summary.items()}},
        )
        outputs += ["projection.csv", "projection_summary.json"]
        if args.svg:
            dims_sorted = sorted(summary)
            for name in ("w1_h0", "lt_max_h1"):
                svg_name = f"projection_{name}.svg"
                line_plot(
                    out / svg_name,
                    [
                        Series(
                            x=np.array(dims_sorted, dtype=float),
                            y=np.array([summary[d][name]["mean"] for d in dims_sorted]),
                            label=f"scenario {args.scenario} mean",
                            band=(
                                np.array([summary[d][name]["q25"] for d in dims_sorted]),
                                np.array([summary[d][name]["q75"] for d in dims_sorted]),
                            ),
                        )
                    ],
                    title=f"{name} vs projected dimension",
                    xlabel="dimension",
                    ylabel=name,
                )
                outputs.append(svg_name)
        for dim in sorted(summary, reverse=True):
            _print_metric_line(f"dim {dim} W1(H0)", summary[dim]["w1_h0"])
    return _finish(args, "sweep", config.seed, out, outputs)


def cmd_ingest(args) -> int:
    out = _out_dir(args)
    docs = load_corpus_dir(args.corpus)
    embedder = get_embedder(
        args.embedder, dim=args.dim, seed=args.seed,
        cache_path=out / "service_cache.jsonl" if args.embedder == "service" else None,
    )
    outputs: list[str] = []
    for granularity in args.granularities:
        chunks = chunk_documents(docs, granularity)
        records = embed_chunks(chunks, embedder)
        chunks_name = f"chunks_{granularity}.csv"
        with open(out / chunks_name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("doc_id", "chunk_id", "token_start", "token_end", "n_tokens"))
            for c in chunks.chunks:
                writer.writerow([c.doc_id, c.chunk_id, c.token_span[0], c.token_span[1], c.n_tokens])
        emb_name = f"embeddings_{granularity}.jsonl"
        write_embeddings_jsonl(out / emb_name, records)
        outputs += [chunks_name, emb_name]
        print(f"granularity {granularity}: {len(chunks)} chunks from {len(docs)} documents")
    return _finish(args, "ingest", args.seed, out, outputs)


def cmd_analyze(args) -> int:
    out = _out_dir(args)
    queries = read_embeddings_jsonl(args.queries)
    corpus = read_embeddings_jsonl(args.corpus)
    result = retrieval_experiment(
        queries,
        corpus,
        k=args.k,
        epsilon_grid=args.epsilon_grid,
        direction=args.direction,
        jobs=args.jobs,
    )
    write_experiment_csv(out / "scores.csv", [result])
    _write_json(
        out / "analysis_summary.json",
        {
            "direction": result.direction,
            "n_queries": result.n_queries,
            "skipped": result.skipped,
            "per_epsilon": result.summary(),
        },
    )
    print(f"direction {result.direction}: {result.n_queries} queries kept, skipped {result.skipped or 0}")
    for row in result.summary():
        if row["epsilon"] == 0.4 or len(result.epsilon_grid) == 1:
            _print_metric_line(f"W1(H0) @ eps={row['epsilon']:g}", row["w1_h0"])
            _print_metric_line(f"LT_max(H1) @ eps={row['epsilon']:g}", row["lt_max_h1"])
    return _finish(args, "analyze", None, out, ["scores.csv", "analysis_summary.json"])


def cmd_calibrate(args) -> int:
    out = _out_dir(args)
    docs = load_corpus_dir(args.corpus)
    chunks = chunk_documents(docs, args.granularity)
    embedder = get_embedder(
        args.embedder, dim=args.dim, seed=args.seed,
        cache_path=out / "service_cache.jsonl" if args.embedder == "service" else None,
    )
    baseline = calibrate(
        chunks,
        embedder,
        cluster_count=args.clusters,
        queries_per_kind=args.queries_per_kind,
        epsilon=args.epsilon if args.epsilon is not None else 0.4,
        k=args.k,
        seed=args.seed,
    )
    with open(out / "calibration_scores.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("kind", "query_index", "epsilon", "w1_h0", "lt_max_h1", "points_used", "degenerate_flag"))
        for kind, scores in (("multi_factual", baseline.multi_factual),
                             ("single_cluster", baseline.single_cluster)):
            for i, s in enumerate(scores):
                writer.writerow([kind, i, repr(float(s.epsilon)), repr(float(s.w1_h0)),
                                 repr(float(s.lt_max_h1)), s.points_used, int(s.degenerate)])
    _write_json(out / "calibration.json", baseline.summary())
    summary = baseline.summary()
    _print_metric_line("multi-factual W1(H0)", summary["multi_factual"]["w1_h0"])
    _print_metric_line("single-cluster W1(H0)", summary["single_cluster"]["w1_h0"])
    return _finish(args, "calibrate", args.seed, out, ["calibration_scores.csv", "calibration.json"])


def _report_groups(rows: list[dict]) -> tuple[str, list[str]]:
    for column in ("direction", "scenario", "kind", "dim"):
        if column in rows[0]:
            groups = sorted({r[column] for r in rows})
            return column, groups
    return "", ["all"]


def cmd_report(args) -> int:
    out = _out_dir(args)
    with open(args.results, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DegenerateInputError(f"results file {args.results} is empty")
    metrics = [m for m in ("w1_h0", "lt_max_h1") if m in rows[0]]
    if not metrics:
        raise DegenerateInputError("results file carries no known metric columns")
    group_col, groups = _report_groups(rows)
    outputs = ["report_hist.csv", "report_kde.csv", "report_summary.json"]
    summary: dict = {"group_column": group_col or None, "groups": {}}
    kde_curves: dict[str, dict[str, tuple[np.ndarray, np.ndarray]]] = {m: {} for m in metrics}
    with open(out / "report_hist.csv", "w", newline="") as hist_fh, open(
        out / "report_kde.csv", "w", newline=""
    ) as kde_fh:
        hist_writer = csv.writer(hist_fh)
        hist_writer.writerow(("group", "metric", "bin_left", "bin_right", "count", "density"))
        kde_writer = csv.writer(kde_fh)
        kde_writer.writerow(("group", "metric", "x", "density"))
        for group in groups:
            selected = rows if not group_col else [r for r in rows if r[group_col] == group]
            summary["groups"][str(group)] = {"n": len(selected)}
            for metric in metrics:
                values = np.array([float(r[metric]) for r in selected])
                summary["groups"][str(group)][metric] = summarize(values)
                hist = histogram(values, bins=args.bins)
                for left, right, count, density in zip(
                    hist["edges"][:-1], hist["edges"][1:], hist["counts"], hist["density"]
                ):
                    hist_writer.writerow(
                        [group, metric, repr(float(left)), repr(float(right)), int(count), repr(float(density))]
                    )
                xs, density = gaussian_kde_curve(values)
                kde_curves[metric][str(group)] = (xs, density)
                for x, d in zip(xs, density):
                    kde_writer.writerow([group, metric, repr(float(x)), repr(float(d))])
    _write_json(out / "report_summary.json", summary)
    if args.svg:
        for metric in metrics:
            svg_name = f"report_{metric}.svg"
            series = [
                Series(x=xs, y=density, label=str(group))
                for group, (xs, density) in kde_curves[metric].items()
            ]
            line_plot(out / svg_name, series, title=f"{metric} density", xlabel=metric, ylabel="density")
            outputs.append(svg_name)
    for group in groups:
        for metric in metrics:
            _print_metric_line(f"{group} {metric}", summary["groups"][str(group)][metric])
    return _finish(args, "report", None, out, outputs)


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "ingest": cmd_ingest,
    "analyze": cmd_analyze,
    "calibrate": cmd_calibrate,
    "report": cmd_report,
}


def cmd_rerun(args) -> int:
    manifest = RunManifest.load(args.manifest)
    if manifest.command not in COMMANDS:
        raise ValueError(f"manifest names unknown command {manifest.command!r}")
    replay = Namespace(**manifest.args)
    replay.out = args.out
    print(f"replaying {manifest.command} (recorded {manifest.created_at})")
    return COMMANDS[manifest.command](replay)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ambitopo",
        description="Topological ambiguity metrics for semantic-search queries",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common_sim(p):
        p.add_argument("--config", help="ScenarioConfig JSON file")
        p.add_argument("--scenario", type=int, choices=(1, 2, 3), required=True)
        p.add_argument("--trials", type=int, default=200)
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--jobs", type=int, default=1, help="parallel trial workers")
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("simulate", help="score scenario trials at one neighborhood scale")
    common_sim(p)
    p.add_argument("--epsilon", type=float, default=None, help="override config epsilon")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="sweep the scale grid or projection dimensions")
    common_sim(p)
    p.add_argument("--epsilon", type=float, default=None, help="override config epsilon")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--epsilon-grid", type=_parse_floats, default=None,
                       help="comma-separated ascending scales")
    group.add_argument("--dims", type=_parse_ints, default=None,
                       help="comma-separated projection target dimensions")
    p.add_argument("--svg", action="store_true", help="also write SVG line plots")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ingest", help="chunk and embed a plain-text corpus directory")
    p.add_argument("--corpus", required=True, help="directory of plain-text documents")
    p.add_argument("--granularities", type=_parse_ints, default=[250, 750],
                   help="comma-separated tokens-per-chunk values")
    p.add_argument("--embedder", choices=("mock", "service"), default="mock")
    p.add_argument("--dim", type=int, default=256, help="mock embedder dimension")
    p.add_argument("--seed", type=int, default=0, help="mock embedder seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("analyze", help="run the retrieval experiment on embedded chunk sets")
    p.add_argument("--queries", required=True, help="query embeddings JSONL")
    p.add_argument("--corpus", required=True, help="corpus embeddings JSONL")
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--epsilon-grid", type=_parse_floats, default=list(DEFAULT_EPSILON_GRID))
    p.add_argument("--direction", default=None, help="label for this (Q;C) pairing")
    p.add_argument("--jobs", type=int, default=1, help="parallel query workers")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("calibrate", help="estimate ambiguity baselines from corpus clusters")
    p.add_argument("--corpus", required=True, help="directory of plain-text documents")
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--granularity", type=int, default=250)
    p.add_argument("--queries-per-kind", type=int, default=20)
    p.add_argument("--epsilon", type=float, default=0.4)
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--embedder", choices=("mock", "service"), default="mock")
    p.add_argument("--dim", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("report", help="histogram + KDE export of a results CSV")
    p.add_argument("--results", required=True, help="results CSV from simulate/sweep/analyze")
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--svg", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("rerun", help="replay a command from its manifest")
    p.add_argument("manifest", help="path to a manifest.json")
    p.add_argument("--out", required=True, help="new output directory")
    p.set_defaults(func=cmd_rerun)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "epsilon_grid", None) == []:
        parser.error("--epsilon-grid must name at least one scale")
    if getattr(args, "dims", None) == []:
        parser.error("--dims must name at least one dimension")
    try:
        return args.func(args)
    except (DegenerateInputError, DimensionMismatchError, EmbedderError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
