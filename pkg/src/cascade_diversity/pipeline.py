"""End-to-end flow: events -> graph -> communities -> cascades -> features -> models."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .cascade import DEFAULT_LAMBDA, DEFAULT_SIZES, Cascade, build_cascade
from .community import CommunityPartition, louvain
from .features import (
    FeatureMatrix,
    MeasureSet,
    assemble_features,
    extract_measures,
    measurement_report,
)
from .graph import InfluenceGraph, build_graph
from .ingest import RepostEvent, Window, filter_window, group_cascades
from .learn import (
    ForestParams,
    MetricsReport,
    SmoteParams,
    SweepRow,
    WeightReport,
    cross_validate,
    stability_weights,
    sweep_thresholds,
    threshold_pairs,
)

logger = logging.getLogger(__name__)

SWEEP_THRESHOLDS = (300, 400, 500, 600, 700)


@dataclass(frozen=True)
class PipelineConfig:
    graph_window: Window
    cascade_window: Window
    edge_source: str = "parent"
    allow_rootless: bool = False
    louvain_seed: int = 0
    resolution: float = 1.0
    max_passes: int = 100
    lam: int = DEFAULT_LAMBDA
    semantics: str = "recency"
    sizes: tuple[int, ...] = DEFAULT_SIZES
    th: int = 500
    th_tr: tuple[int, ...] = SWEEP_THRESHOLDS
    th_ts: int = 500
    folds: int = 10
    repeats: int = 10
    forest: ForestParams = ForestParams()
    smote: SmoteParams = SmoteParams()
    weight_runs: int = 100
    l1_strength: float = 0.01
    seed: int = 0
    threads: int = 1


@dataclass
class PipelineResult:
    graph: InfluenceGraph
    partition: CommunityPartition
    cascades: list[Cascade]
    measures: dict[str, dict[int, MeasureSet]]
    features: dict[str, FeatureMatrix]
    report: list[dict]
    baseline: dict[str, MetricsReport] = field(default_factory=dict)
    fixed_test_sweep: list[SweepRow] = field(default_factory=list)
    matched_sweep: list[SweepRow] = field(default_factory=list)
    weights: Optional[WeightReport] = None


def build_cascades(
    events: Sequence[RepostEvent], g: InfluenceGraph, allow_rootless: bool = False
) -> list[Cascade]:
    grouped = group_cascades(events, allow_rootless=allow_rootless)
    logger.info("cascade grouping: %s", grouped.summary())
    return [build_cascade(evs, g, allow_rootless) for evs in grouped.groups.values()]


def prepare(events: Sequence[RepostEvent], cfg: PipelineConfig):
    """Graph, partition and cascades from a raw event stream."""
    g = build_graph(filter_window(events, cfg.graph_window), cfg.edge_source)
    p = louvain(g, seed=cfg.louvain_seed, resolution=cfg.resolution, max_passes=cfg.max_passes)
    cascades = build_cascades(filter_window(events, cfg.cascade_window), g, cfg.allow_rootless)
    logger.info("graph |V|=%d |E|=%d, k=%d, %d cascades", g.node_count, g.edge_count, p.k, len(cascades))
    return g, p, cascades


def featurize(cascades, g, p, cfg: PipelineConfig):
    measures = extract_measures(
        cascades, g, p, cfg.sizes, cfg.lam, cfg.semantics, threads=cfg.threads
    )
    features = {grp: assemble_features(cascades, measures, grp) for grp in ("A", "C")}
    return measures, features


def run(events: Sequence[RepostEvent], cfg: PipelineConfig, learn: bool = True) -> PipelineResult:
    g, p, cascades = prepare(events, cfg)
    measures, features = featurize(cascades, g, p, cfg)
    result = PipelineResult(
        g, p, cascades, measures, features,
        measurement_report(cascades, measures, cfg.th, cfg.sizes),
    )
    if not learn:
        return result
    cv = dict(
        folds=cfg.folds,
        repeats=cfg.repeats,
        params=cfg.forest,
        smote_params=cfg.smote,
        seed=cfg.seed,
        threads=cfg.threads,
    )
    fa = features["A"]
    for grp, fm in features.items():
        result.baseline[grp] = cross_validate(fm.values, fm.final_sizes, cfg.th, cfg.th, **cv)
    result.fixed_test_sweep = sweep_thresholds(
        fa.values, fa.final_sizes, threshold_pairs(cfg.th_tr, cfg.th_ts), **cv
    )
    result.matched_sweep = sweep_thresholds(
        fa.values, fa.final_sizes, threshold_pairs(cfg.th_tr, list(cfg.th_tr)), **cv
    )
    result.weights = stability_weights(
        fa.values,
        fa.labels(cfg.th),
        fa.names,
        runs=cfg.weight_runs,
        l1_strength=cfg.l1_strength,
        seed=cfg.seed,
    )
    return result


def class_balance(fm: FeatureMatrix, th: int) -> tuple[int, int]:
    y = fm.labels(th)
    return int(y.sum()), int(y.shape[0] - y.sum())

