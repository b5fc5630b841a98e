"""Command-line entry point.

Every subcommand writes its artifact(s) plus a JSON run manifest
(``<first output>.manifest.json`` unless ``--manifest`` is given) holding the
full argument echo, sha256 digests of inputs and outputs, the seed and
library versions. Exit status: 0 success, 1 data/parameter error, 2 usage.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import pickle
import platform
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .cascade import DEFAULT_LAMBDA, DEFAULT_SIZES, snapshot_series
from .community import load_partition, louvain, save_partition
from .errors import CascadeDiversityError, ParameterError
from .features import (
    FeatureMatrix,
    assemble_features,
    extract_measures,
    measurement_report,
    report_csv,
)
from .graph import build_graph, graph_stats, load_graph, save_graph
from .ingest import Window, filter_window, group_cascades, read_events, write_events
from .learn import (
    ForestParams,
    MetricsReport,
    SmoteParams,
    cross_validate,
    predict,
    smote,
    stability_weights,
    sweep_csv,
    sweep_metrics_csv,
    sweep_thresholds,
    threshold_pairs,
    train_forest,
)
from .pipeline import SWEEP_THRESHOLDS, PipelineConfig, build_cascades
from .pipeline import run as run_pipeline
from .synth import DAY, SynthConfig, generate

logger = logging.getLogger("cascade_diversity")

GRAPH_WINDOW = f"0:{90 * DAY}"
CASCADE_WINDOW = f"{90 * DAY}:{121 * DAY}"


# --- argument types -----------------------------------------------------------

def int_list(text: str) -> list[int]:
    try:
        out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def window(text: str) -> Window:
    try:
        return Window.parse(text)
    except ParameterError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def flag(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


# --- manifest -------------------------------------------------------------------

def sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def versions() -> dict[str, str]:
    import numba
    import scipy
    import sklearn

    return {
        "cascade_diversity": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "scikit-learn": sklearn.__version__,
        "numba": numba.__version__,
    }


def _jsonable(v):
    if isinstance(v, (Window, Path)):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def write_manifest(args, argv: Sequence[str], inputs: Sequence, outputs: Sequence) -> Path:
    skip = {"func", "manifest"}
    config = {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in skip}
    manifest = {
        "command": args.command_name,
        "argv": list(argv),
        "config": config,
        "seed": getattr(args, "seed", None),
        "inputs": {str(p): sha256(p) for p in inputs},
        "outputs": {str(p): sha256(p) for p in outputs},
        "versions": versions(),
    }
    path = Path(args.manifest) if args.manifest else Path(str(outputs[0]) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def _write_text(path: str | Path, text: str) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return Path(path)


# --- shared loading -------------------------------------------------------------

def _events(path, max_error_rate):
    res = read_events(path, max_error_rate)
    logger.info("%s: %d lines, %d events, %d malformed", path, res.lines_read, len(res.events), res.malformed)
    return res


def _cascades(args, g):
    events = _events(args.events, args.max_error_rate).events
    return build_cascades(filter_window(events, args.cascade_window), g, args.allow_rootless)


def _forest(args) -> ForestParams:
    return ForestParams(args.trees, args.max_depth, args.min_leaf, args.features_per_split)


def _cv_kwargs(args) -> dict:
    return dict(
        folds=args.folds,
        repeats=args.repeats,
        params=_forest(args),
        smote_params=SmoteParams(args.smote_k, not args.no_smote),
        seed=args.seed,
        threads=args.threads,
    )


# --- commands -------------------------------------------------------------------

def cmd_ingest(args, argv):
    res = _events(args.events, args.max_error_rate)
    events = filter_window(res.events, args.window) if args.window else res.events
    grouped = group_cascades(events, allow_rootless=args.allow_rootless)
    write_events(events, args.out)
    outputs = [Path(args.out)]
    if args.report:
        summary = {
            "lines_read": res.lines_read,
            "malformed": res.malformed,
            "events": len(res.events),
            "events_in_window": len(events),
            **grouped.summary(),
        }
        outputs.append(_write_text(args.report, "".join(f"{k}={v}\n" for k, v in summary.items())))
    return [args.events], outputs


def cmd_graph_build(args, argv):
    events = _events(args.events, args.max_error_rate).events
    g = build_graph(filter_window(events, args.window), args.edge_source)
    save_graph(g, args.out)
    logger.info("graph |V|=%d |E|=%d", g.node_count, g.edge_count)
    return [args.events], [Path(args.out)]


def cmd_graph_stats(args, argv):
    st = graph_stats(load_graph(args.graph))
    outputs = [_write_text(args.out, st.report())]
    if args.histogram:
        outputs.append(_write_text(args.histogram, st.histogram_csv()))
    return [args.graph], outputs


def cmd_communities(args, argv):
    g = load_graph(args.graph)
    p = louvain(
        g,
        seed=args.seed,
        resolution=args.resolution,
        max_passes=args.max_passes,
        allow_edgeless=args.allow_edgeless,
    )
    save_partition(p, args.out)
    logger.info("k=%d Q=%.6f", p.k, p.modularity)
    return [args.graph], [Path(args.out)]


def _snapshot_dump(path, cascades, g, sizes, lam, semantics):
    def ids(nodes):
        return ";".join(g.uids[v] for v in nodes)

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            "mid,m,n_adopters,n_frontiers,n_lambda_frontiers,n_lambda_nonadopters,"
            "adopters,lambda_frontiers,lambda_nonadopters\n"
        )
        for c in cascades:
            for s in snapshot_series(c, g, sizes, lam, semantics):
                fh.write(
                    f"{c.mid},{s.m},{s.adopters.size},{s.frontiers.size},"
                    f"{s.lambda_frontiers.size},{s.lambda_nonadopters.size},"
                    f"{ids(s.adopters)},{ids(s.lambda_frontiers)},{ids(s.lambda_nonadopters)}\n"
                )
    return Path(path)


def _measures(args):
    g = load_graph(args.graph)
    p = load_partition(args.partition, g, args.resolution)
    cascades = _cascades(args, g)
    measures = extract_measures(
        cascades, g, p, args.sizes, args.lam, args.semantics, threads=args.threads
    )
    return g, cascades, measures


def cmd_features_extract(args, argv):
    g, cascades, measures = _measures(args)
    fm = assemble_features(cascades, measures, args.group)
    fm.to_csv(args.out, threshold=args.threshold)
    logger.info("%d rows, %d cascades excluded (too small)", len(fm), fm.excluded)
    outputs = [Path(args.out)]
    if args.snapshot_dump:
        outputs.append(
            _snapshot_dump(args.snapshot_dump, cascades, g, args.sizes, args.lam, args.semantics)
        )
    return [args.events, args.graph, args.partition], outputs


def cmd_features_report(args, argv):
    _, cascades, measures = _measures(args)
    rows = measurement_report(cascades, measures, args.threshold, args.sizes)
    return [args.events, args.graph, args.partition], [_write_text(args.out, report_csv(rows))]


def cmd_learn_train(args, argv):
    fm = FeatureMatrix.from_csv(args.features)
    x, y = fm.values, fm.labels(args.th_tr)
    n_pos = int(y.sum())
    if not args.no_smote and 2 <= n_pos < y.size - n_pos:
        k = min(args.smote_k, n_pos - 1)
        extra = smote(x[y == 1], y.size - 2 * n_pos, k, seed=args.seed, scale=x.std(axis=0)).rows
        x = np.vstack([x, extra])
        y = np.concatenate([y, np.ones(extra.shape[0], dtype=np.int64)])
    model = train_forest(x, y, _forest(args), seed=args.seed)
    with open(args.out, "wb") as fh:
        pickle.dump({"names": fm.names, "model": model}, fh, protocol=4)
    outputs = [Path(args.out)]
    inputs = [args.features]
    if args.predict:
        target = FeatureMatrix.from_csv(args.predict)
        if target.names != fm.names:
            raise ParameterError("prediction features do not match the training columns")
        labels, score = predict(model, target.values)
        lines = ["mid,final_size,predicted,viral_vote_fraction"]
        lines += [
            f"{mid},{size},{lab},{format(float(s), '.17g')}"
            for mid, size, lab, s in zip(target.mids, target.final_sizes, labels, score)
        ]
        outputs.append(_write_text(args.predictions, "\n".join(lines) + "\n"))
        inputs.append(args.predict)
    return inputs, outputs


def cmd_learn_cv(args, argv):
    fm = FeatureMatrix.from_csv(args.features)
    rep = cross_validate(fm.values, fm.final_sizes, args.th_tr, args.th_ts, **_cv_kwargs(args))
    return [args.features], [_write_text(args.out, rep.to_csv())]


def _pairs(args):
    th_ts = args.th_ts[0] if len(args.th_ts) == 1 else args.th_ts
    return threshold_pairs(args.th_tr, th_ts)


def cmd_learn_sweep(args, argv):
    fm = FeatureMatrix.from_csv(args.features)
    rows = sweep_thresholds(fm.values, fm.final_sizes, _pairs(args), **_cv_kwargs(args))
    outputs = [_write_text(args.out, sweep_csv(rows))]
    if args.metrics:
        outputs.append(_write_text(args.metrics, sweep_metrics_csv(rows)))
    return [args.features], outputs


def cmd_learn_weights(args, argv):
    fm = FeatureMatrix.from_csv(args.features)
    rep = stability_weights(
        fm.values,
        fm.labels(args.th),
        fm.names,
        runs=args.runs,
        subsample=args.subsample,
        scale_low=args.scale_low,
        l1_strength=args.l1_strength,
        threshold=args.select_threshold,
        seed=args.seed,
    )
    return [args.features], [_write_text(args.out, rep.to_csv())]


def cmd_synth(args, argv):
    cfg = SynthConfig(
        k=args.k,
        nodes_per_community=args.nodes_per_community,
        p_in=args.p_in,
        p_out=args.p_out,
        n_cascades=args.cascades,
        beta=args.beta,
        gamma=args.gamma,
        viral_fraction=args.viral_fraction,
        tau=args.tau,
        appeal_sigma=args.appeal_sigma,
        seed=args.seed,
    )
    generate(cfg).write(args.out, args.truth)
    return [], [Path(args.out), Path(args.truth)]


def _summary_csv(reports: dict[str, MetricsReport]) -> str:
    keys = ("precision", "recall", "f1", "recalled_avg_size", "nonrecalled_avg_size")
    cols = [k for key in keys for k in (key, key + "_sd")]
    lines = [",".join(("group",) + tuple(cols))]
    for grp, rep in reports.items():
        s = rep.summary()
        lines.append(",".join([grp] + [format(float(s[c]), ".17g") for c in cols]))
    return "\n".join(lines) + "\n"


def cmd_pipeline(args, argv):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    events = _events(args.events, args.max_error_rate).events
    cfg = PipelineConfig(
        graph_window=args.graph_window,
        cascade_window=args.cascade_window,
        edge_source=args.edge_source,
        allow_rootless=args.allow_rootless,
        louvain_seed=args.seed,
        resolution=args.resolution,
        max_passes=args.max_passes,
        lam=args.lam,
        semantics=args.semantics,
        sizes=tuple(args.sizes),
        th=args.threshold,
        th_tr=tuple(args.th_tr),
        th_ts=args.th_ts,
        folds=args.folds,
        repeats=args.repeats,
        forest=_forest(args),
        smote=SmoteParams(args.smote_k, not args.no_smote),
        weight_runs=args.runs,
        l1_strength=args.l1_strength,
        seed=args.seed,
        threads=args.threads,
    )
    res = run_pipeline(events, cfg, learn=not args.skip_learn)
    outputs = []
    save_graph(res.graph, out / "graph.cfg")
    save_partition(res.partition, out / "partition.tsv")
    outputs += [out / "graph.cfg", out / "partition.tsv"]
    for grp, fm in res.features.items():
        fm.to_csv(out / f"features_{grp}.csv", threshold=cfg.th)
        outputs.append(out / f"features_{grp}.csv")
    outputs.append(_write_text(out / "report.csv", report_csv(res.report)))
    if not args.skip_learn:
        header = "group," + MetricsReport().to_csv()
        outputs.append(_write_text(out / "metrics.csv", header + _tag_rows(res.baseline)))
        outputs.append(_write_text(out / "summary.csv", _summary_csv(res.baseline)))
        outputs.append(_write_text(out / "sweep_fixed.csv", sweep_csv(res.fixed_test_sweep)))
        outputs.append(_write_text(out / "sweep_matched.csv", sweep_csv(res.matched_sweep)))
        outputs.append(
            _write_text(out / "sweep_metrics.csv", sweep_metrics_csv(res.fixed_test_sweep))
        )
        outputs.append(_write_text(out / "weights.csv", res.weights.to_csv()))
    if args.manifest is None:
        args.manifest = str(out / "manifest.json")
    return [args.events], outputs


def _tag_rows(reports: dict[str, MetricsReport]) -> str:
    out = []
    for grp, rep in reports.items():
        out += [f"{grp},{line}" for line in rep.to_csv().splitlines()[1:]]
    return "".join(line + "\n" for line in out)


# --- parser ---------------------------------------------------------------------

def _common(p, seed=False, threads=False):
    p.add_argument("--manifest", help="manifest path (default: <output>.manifest.json)")
    p.add_argument("--config", help="file of key=value lines overriding flag defaults")
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    if seed:
        p.add_argument("--seed", type=int, default=0, help="master seed (default: %(default)s)")
    if threads:
        p.add_argument("--threads", type=positive_int, default=1,
                       help="worker threads; results do not depend on it (default: %(default)s)")


def _events_opts(p):
    p.add_argument("--max-error-rate", type=float, default=0.01,
                   help="abort when malformed lines exceed this fraction (default: %(default)s)")


def _snapshot_opts(p):
    p.add_argument("--cascade-window", type=window, default=window(CASCADE_WINDOW),
                   help="START:END seconds for cascades (default: %(default)s)")
    p.add_argument("--allow-rootless", action="store_true",
                   help="keep cascades without an original post, earliest event as root")
    p.add_argument("--lam", type=int, default=DEFAULT_LAMBDA,
                   help="lambda in seconds (default: %(default)s)")
    p.add_argument("--semantics", choices=("recency", "absolute"), default="recency",
                   help="lambda-frontier rule (default: %(default)s)")
    p.add_argument("--sizes", type=int_list, default=list(DEFAULT_SIZES),
                   help="snapshot sizes m (default: 10,30,50,100,200)")
    p.add_argument("--resolution", type=float, default=1.0,
                   help="modularity resolution used to score the partition (default: %(default)s)")


def _forest_opts(p):
    p.add_argument("--trees", type=positive_int, default=100, help="(default: %(default)s)")
    p.add_argument("--max-depth", type=positive_int, default=None, help="(default: unlimited)")
    p.add_argument("--min-leaf", type=positive_int, default=1, help="(default: %(default)s)")
    p.add_argument("--features-per-split", type=positive_int, default=None,
                   help="(default: ceil(sqrt(d)))")


def _cv_opts(p):
    p.add_argument("--folds", type=positive_int, default=10, help="(default: %(default)s)")
    p.add_argument("--repeats", type=positive_int, default=10, help="(default: %(default)s)")
    p.add_argument("--smote-k", type=positive_int, default=5,
                   help="SMOTE neighbours (default: %(default)s)")
    p.add_argument("--no-smote", action="store_true", help="train without oversampling")


def _weight_opts(p):
    p.add_argument("--runs", type=positive_int, default=100,
                   help="randomized L1 fits (default: %(default)s)")
    p.add_argument("--l1-strength", type=float, default=0.01, help="(default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cascade-diversity",
        description="Cascade virality prediction from community structural diversity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate, window and re-emit an events TSV")
    p.add_argument("events")
    p.add_argument("--out", required=True, help="canonical events TSV")
    p.add_argument("--window", type=window, help="keep events in START:END")
    p.add_argument("--report", help="key=value summary counts")
    p.add_argument("--allow-rootless", action="store_true")
    _events_opts(p)
    _common(p)
    p.set_defaults(func=cmd_ingest, command_name="ingest")

    graph = sub.add_parser("graph", help="influence graph").add_subparsers(dest="action", required=True)
    p = graph.add_parser("build", help="build the influence graph from a graph window")
    p.add_argument("events")
    p.add_argument("--out", required=True, help="binary graph file")
    p.add_argument("--window", type=window, default=window(GRAPH_WINDOW),
                   help="START:END seconds (default: %(default)s)")
    p.add_argument("--edge-source", choices=("parent", "root"), default="parent",
                   help="influencer of a repost (default: %(default)s)")
    _events_opts(p)
    _common(p)
    p.set_defaults(func=cmd_graph_build, command_name="graph build")
    p = graph.add_parser("stats", help="graph statistics")
    p.add_argument("graph")
    p.add_argument("--out", required=True, help="key=value report")
    p.add_argument("--histogram", help="degree histogram CSV")
    _common(p)
    p.set_defaults(func=cmd_graph_stats, command_name="graph stats")

    comm = sub.add_parser("communities", help="community detection").add_subparsers(
        dest="action", required=True
    )
    p = comm.add_parser("detect", help="Louvain partition of the undirected projection")
    p.add_argument("graph")
    p.add_argument("--out", required=True, help="partition TSV")
    p.add_argument("--resolution", type=float, default=1.0, help="(default: %(default)s)")
    p.add_argument("--max-passes", type=positive_int, default=100, help="(default: %(default)s)")
    p.add_argument("--allow-edgeless", action="store_true",
                   help="return singletons for a graph with no edges instead of failing")
    _common(p, seed=True)
    p.set_defaults(func=cmd_communities, command_name="communities detect")

    feats = sub.add_parser("features", help="snapshot measures").add_subparsers(
        dest="action", required=True
    )
    for name, func, helptext in (
        ("extract", cmd_features_extract, "feature matrix CSV for one group"),
        ("report", cmd_features_report, "per-class quartile table of every measure"),
    ):
        p = feats.add_parser(name, help=helptext)
        p.add_argument("events")
        p.add_argument("--graph", required=True)
        p.add_argument("--partition", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--threshold", type=int, default=500,
                       help="viral label threshold (default: %(default)s)")
        _snapshot_opts(p)
        _events_opts(p)
        _common(p, threads=True)
        if name == "extract":
            p.add_argument("--group", choices=("A", "C"), default="A", help="(default: %(default)s)")
            p.add_argument("--snapshot-dump", help="debug CSV of snapshot set members")
        p.set_defaults(func=func, command_name=f"features {name}")

    learn = sub.add_parser("learn", help="classification").add_subparsers(
        dest="action", required=True
    )
    p = learn.add_parser("train", help="fit a forest on SMOTE-balanced training data")
    p.add_argument("features")
    p.add_argument("--out", required=True, help="pickled model")
    p.add_argument("--th-tr", type=int, default=500, help="(default: %(default)s)")
    p.add_argument("--predict", help="features CSV to score with the model")
    p.add_argument("--predictions", default="predictions.csv", help="(default: %(default)s)")
    p.add_argument("--smote-k", type=positive_int, default=5, help="(default: %(default)s)")
    p.add_argument("--no-smote", action="store_true", help="train without oversampling")
    _forest_opts(p)
    _common(p, seed=True)
    p.set_defaults(func=cmd_learn_train, command_name="learn train")

    p = learn.add_parser("cv", help="stratified cross-validation at one threshold pair")
    p.add_argument("features")
    p.add_argument("--out", required=True, help="per-fold metrics CSV")
    p.add_argument("--th-tr", type=int, default=500, help="(default: %(default)s)")
    p.add_argument("--th-ts", type=int, default=500, help="(default: %(default)s)")
    _forest_opts(p)
    _cv_opts(p)
    _common(p, seed=True, threads=True)
    p.set_defaults(func=cmd_learn_cv, command_name="learn cv")

    p = learn.add_parser("sweep", help="cross-validation over TH_tr (and TH_ts) lists")
    p.add_argument("features")
    p.add_argument("--out", required=True, help="sweep table CSV")
    p.add_argument("--metrics", help="per-fold metrics of every pair")
    p.add_argument("--th-tr", type=int_list, default=list(SWEEP_THRESHOLDS),
                   help="(default: 300,400,500,600,700)")
    p.add_argument("--th-ts", type=int_list, default=[500],
                   help="one value (fixed) or a list zipped with --th-tr (default: 500)")
    _forest_opts(p)
    _cv_opts(p)
    _common(p, seed=True, threads=True)
    p.set_defaults(func=cmd_learn_sweep, command_name="learn sweep")

    p = learn.add_parser("weights", help="randomized L1 logistic regression feature weights")
    p.add_argument("features")
    p.add_argument("--out", required=True, help="weights CSV")
    p.add_argument("--th", type=int, default=500, help="(default: %(default)s)")
    p.add_argument("--subsample", type=float, default=0.5, help="(default: %(default)s)")
    p.add_argument("--scale-low", type=float, default=0.5, help="(default: %(default)s)")
    p.add_argument("--select-threshold", type=float, default=0.01, help="(default: %(default)s)")
    _weight_opts(p)
    _common(p, seed=True)
    p.set_defaults(func=cmd_learn_weights, command_name="learn weights")

    synth = sub.add_parser("synth", help="synthetic corpora").add_subparsers(
        dest="action", required=True
    )
    p = synth.add_parser("generate", help="planted SBM corpus with simulated cascades")
    p.add_argument("--out", required=True, help="events TSV")
    p.add_argument("--truth", required=True, help="mid,planted_viral,final_size CSV")
    d = SynthConfig()
    p.add_argument("--k", type=int, default=d.k, help="(default: %(default)s)")
    p.add_argument("--nodes-per-community", type=int, default=d.nodes_per_community,
                   help="(default: %(default)s)")
    p.add_argument("--p-in", type=float, default=d.p_in, help="(default: %(default)s)")
    p.add_argument("--p-out", type=float, default=d.p_out, help="(default: %(default)s)")
    p.add_argument("--cascades", type=int, default=d.n_cascades, help="(default: %(default)s)")
    p.add_argument("--beta", type=float, default=d.beta, help="(default: %(default)s)")
    p.add_argument("--gamma", type=float, default=d.gamma, help="(default: %(default)s)")
    p.add_argument("--viral-fraction", type=float, default=d.viral_fraction,
                   help="(default: %(default)s)")
    p.add_argument("--tau", type=float, default=d.tau, help="(default: %(default)s)")
    p.add_argument("--appeal-sigma", type=float, default=d.appeal_sigma,
                   help="lognormal sd of home-community appeal (default: %(default)s)")
    _common(p, seed=True)
    p.set_defaults(func=cmd_synth, command_name="synth generate")

    pipe = sub.add_parser("pipeline", help="end-to-end run").add_subparsers(
        dest="action", required=True
    )
    p = pipe.add_parser("run", help="graph, communities, features, CV, sweeps and weights")
    p.add_argument("events")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--graph-window", type=window, default=window(GRAPH_WINDOW),
                   help="START:END seconds (default: %(default)s)")
    p.add_argument("--edge-source", choices=("parent", "root"), default="parent",
                   help="(default: %(default)s)")
    p.add_argument("--max-passes", type=positive_int, default=100, help="(default: %(default)s)")
    p.add_argument("--threshold", type=int, default=500,
                   help="TH for the baseline CV and weights (default: %(default)s)")
    p.add_argument("--th-tr", type=int_list, default=list(SWEEP_THRESHOLDS),
                   help="(default: 300,400,500,600,700)")
    p.add_argument("--th-ts", type=int, default=500,
                   help="fixed TH_ts of the first sweep (default: %(default)s)")
    p.add_argument("--skip-learn", action="store_true", help="stop after features and report")
    _snapshot_opts(p)
    _forest_opts(p)
    _cv_opts(p)
    _weight_opts(p)
    _events_opts(p)
    _common(p, seed=True, threads=True)
    p.set_defaults(func=cmd_pipeline, command_name="pipeline run")
    return parser


def _chosen_subparser(parser: argparse.ArgumentParser, args) -> argparse.ArgumentParser:
    node = parser
    for dest in ("command", "action"):
        name = getattr(args, dest, None)
        if name is None:
            break
        sub = next(a for a in node._actions if isinstance(a, argparse._SubParsersAction))
        node = sub.choices[name]
        if not any(isinstance(a, argparse._SubParsersAction) for a in node._actions):
            break
    return node


def _apply_config(parser, argv):
    """Re-parse with defaults taken from a ``--config`` file of key=value lines."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    sub = _chosen_subparser(parser, args)
    by_dest = {a.dest: a for a in sub._actions}
    defaults = {}
    text = Path(args.config).read_text(encoding="utf-8")
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        dest = key.strip().replace("-", "_")
        if not sep or dest not in by_dest or dest in ("config", "help"):
            sub.error(f"{args.config}:{n}: unknown setting {key.strip()!r}")
        action = by_dest[dest]
        value = value.strip()
        try:
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                defaults[dest] = flag(value)
            else:
                defaults[dest] = action.type(value) if action.type else value
        except (argparse.ArgumentTypeError, ValueError) as exc:
            sub.error(f"{args.config}:{n}: {exc}")
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = _apply_config(parser, argv)
    logging.basicConfig(
        level=(logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)],
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        inputs, outputs = args.func(args, argv)
        write_manifest(args, argv, inputs, outputs)
    except CascadeDiversityError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
