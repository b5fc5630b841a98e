"""Structural-diversity measures over snapshot node sets, feature assembly
and the per-class distribution report.

Node sets are arrays of graph indices; entries < 0 (users outside the graph)
are ignored by every community-based measure.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .cascade import DEFAULT_LAMBDA, DEFAULT_SIZES, Cascade, CascadeSnapshot, snapshot
from .community import CommunityPartition
from .errors import ParameterError
from .graph import InfluenceGraph


def _labels_of(nodes, p: CommunityPartition) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=np.int64)
    return p.assignment[nodes[nodes >= 0]]


def count_communities(nodes, p: CommunityPartition) -> int:
    return int(np.unique(_labels_of(nodes, p)).shape[0])


def gini_impurity(nodes, p: CommunityPartition) -> float:
    """``1 - sum_i (|C_i & V|/|V|)^2``; 0.0 for an empty set."""
    labels = _labels_of(nodes, p)
    if labels.shape[0] == 0:
        return 0.0
    _, counts = np.unique(labels, return_counts=True)
    frac = counts / labels.shape[0]
    return float(1.0 - np.dot(frac, frac))


def overlap(nodes_a, nodes_b, p: CommunityPartition) -> int:
    a = np.unique(_labels_of(nodes_a, p))
    b = np.unique(_labels_of(nodes_b, p))
    return int(np.intersect1d(a, b, assume_unique=True).shape[0])


def avg_time_to_adoption(c: Cascade, m: int) -> float:
    """Mean adoption offset of the m-1 non-originator adopters among the first m."""
    if m < 2:
        raise ParameterError("average time to adoption needs m >= 2")
    if m > c.final_size:
        raise ParameterError(f"cascade {c.mid} has fewer than {m} adopters")
    return float(c.offsets[1:m].mean())


MEASURES = (
    "k_adopters",
    "k_frontiers",
    "k_nonadopters",
    "gini_adopters",
    "gini_frontiers",
    "gini_nonadopters",
    "overlap_af",
    "overlap_an",
    "overlap_fn",
    "size_frontiers",
    "size_nonadopters",
    "avgtime",
)


@dataclass(frozen=True)
class MeasureSet:
    k_adopters: int
    k_frontiers: int
    k_nonadopters: int
    gini_adopters: float
    gini_frontiers: float
    gini_nonadopters: float
    overlap_af: int
    overlap_an: int
    overlap_fn: int
    size_frontiers: int
    size_nonadopters: int
    avgtime: float
    # names of gini measures evaluated on an empty set
    degenerate: tuple[str, ...] = field(default=())

    def get(self, name: str) -> float:
        return getattr(self, name)


def measure_snapshot(s: CascadeSnapshot, c: Cascade, p: CommunityPartition) -> MeasureSet:
    """Compute all measures for one snapshot.

    ``avgtime`` is 0.0 for ``m = 1`` (no reposts yet).
    """
    ca = np.unique(_labels_of(s.adopters, p))
    cf = np.unique(_labels_of(s.lambda_frontiers, p))
    cn = np.unique(_labels_of(s.lambda_nonadopters, p))
    degenerate = tuple(
        name
        for name, nodes in (
            ("gini_adopters", s.adopters),
            ("gini_frontiers", s.lambda_frontiers),
            ("gini_nonadopters", s.lambda_nonadopters),
        )
        if _labels_of(nodes, p).shape[0] == 0
    )
    return MeasureSet(
        k_adopters=int(ca.shape[0]),
        k_frontiers=int(cf.shape[0]),
        k_nonadopters=int(cn.shape[0]),
        gini_adopters=gini_impurity(s.adopters, p),
        gini_frontiers=gini_impurity(s.lambda_frontiers, p),
        gini_nonadopters=gini_impurity(s.lambda_nonadopters, p),
        overlap_af=int(np.intersect1d(ca, cf, assume_unique=True).shape[0]),
        overlap_an=int(np.intersect1d(ca, cn, assume_unique=True).shape[0]),
        overlap_fn=int(np.intersect1d(cf, cn, assume_unique=True).shape[0]),
        size_frontiers=int(s.lambda_frontiers.shape[0]),
        size_nonadopters=int(s.lambda_nonadopters.shape[0]),
        avgtime=avg_time_to_adoption(c, s.m) if s.m >= 2 else 0.0,
        degenerate=degenerate,
    )


def extract_measures(
    cascades: Sequence[Cascade],
    g: InfluenceGraph,
    p: CommunityPartition,
    sizes: Iterable[int] = DEFAULT_SIZES,
    lam: int = DEFAULT_LAMBDA,
    semantics: str = "recency",
    threads: int = 1,
) -> dict[str, dict[int, MeasureSet]]:
    """Measures for every cascade at every size it reaches, keyed by mid.

    Results are merged in input order regardless of ``threads``.
    """
    sizes = sorted(set(sizes))

    def one(c: Cascade) -> dict[int, MeasureSet]:
        return {
            m: measure_snapshot(snapshot(c, g, m, lam, semantics), c, p)
            for m in sizes
            if m <= c.final_size
        }

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, cascades, chunksize=64))
    else:
        results = [one(c) for c in cascades]
    return {c.mid: r for c, r in zip(cascades, results)}


# column order of the structural features for one size
A_FEATURES = (
    "k_frontiers",
    "k_nonadopters",
    "gini_adopters",
    "gini_frontiers",
    "gini_nonadopters",
    "overlap_af",
    "overlap_an",
    "overlap_fn",
    "size_frontiers",
    "size_nonadopters",
    "avgtime",
)
GROUPS: dict[str, tuple[tuple[int, ...], tuple[str, ...]]] = {
    "A": ((30, 50), A_FEATURES),
    "C": ((50,), ("avgtime",)),
}


def feature_names(group: str) -> tuple[str, ...]:
    sizes, names = GROUPS[group]
    return tuple(f"{name}_m{m}" for m in sizes for name in names)


@dataclass(eq=False)
class FeatureMatrix:
    group: str
    names: tuple[str, ...]
    mids: tuple[str, ...]
    final_sizes: np.ndarray
    values: np.ndarray
    excluded: int = 0

    def labels(self, threshold: int) -> np.ndarray:
        return (self.final_sizes >= threshold).astype(np.int64)

    def __len__(self) -> int:
        return len(self.mids)

    def to_csv(self, path: str | Path, threshold: int = 500) -> None:
        labels = self.labels(threshold)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(("mid", "final_size", "label") + self.names) + "\n")
            for i, mid in enumerate(self.mids):
                vals = ",".join(format(float(v), ".17g") for v in self.values[i])
                fh.write(f"{mid},{self.final_sizes[i]},{labels[i]},{vals}\n")

    @classmethod
    def from_csv(cls, path: str | Path, group: str = "custom") -> "FeatureMatrix":
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if header[:3] != ["mid", "final_size", "label"]:
            raise ParameterError(f"{path}: not a features CSV")
        names = tuple(header[3:])
        for g_name in GROUPS:
            if names == feature_names(g_name):
                group = g_name
        values = np.array([[float(v) for v in r[3:]] for r in body], dtype=np.float64)
        return cls(
            group,
            names,
            tuple(r[0] for r in body),
            np.array([int(r[1]) for r in body], dtype=np.int64),
            values.reshape(len(body), len(names)),
        )


def assemble_features(
    cascades: Sequence[Cascade],
    measures: Mapping[str, Mapping[int, MeasureSet]],
    group: str = "A",
) -> FeatureMatrix:
    """Feature rows for ``group`` ("A" structural or "C" baseline).

    Columns are size-major in ``A_FEATURES`` order. Cascades lacking a snapshot at any
    required size are dropped and counted in ``excluded``.
    """
    if group not in GROUPS:
        raise ParameterError(f"unknown feature group {group!r}; choose from {sorted(GROUPS)}")
    sizes, names = GROUPS[group]
    mids, finals, rows = [], [], []
    excluded = 0
    for c in cascades:
        per_m = measures.get(c.mid, {})
        if any(m not in per_m for m in sizes):
            excluded += 1
            continue
        mids.append(c.mid)
        finals.append(c.final_size)
        rows.append([float(per_m[m].get(n)) for m in sizes for n in names])
    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(sizes) * len(names))
    return FeatureMatrix(
        group, feature_names(group), tuple(mids), np.array(finals, dtype=np.int64), values, excluded
    )


_TIME_MEASURES = {"avgtime"}


def measurement_report(
    cascades: Sequence[Cascade],
    measures: Mapping[str, Mapping[int, MeasureSet]],
    threshold: int = 500,
    sizes: Iterable[int] = DEFAULT_SIZES,
) -> list[dict]:
    """Five-number summary plus mean per (measure, m, class).

    Time measures are reported in minutes.
    """
    final = {c.mid: c.final_size for c in cascades}
    rows = []
    for name in MEASURES:
        scale = 1 / 60 if name in _TIME_MEASURES else 1.0
        for m in sorted(set(sizes)):
            for cls_name, want in (("viral", True), ("nonviral", False)):
                vals = np.array(
                    [
                        per_m[m].get(name) * scale
                        for mid, per_m in measures.items()
                        if m in per_m and (final[mid] >= threshold) == want
                    ],
                    dtype=np.float64,
                )
                if vals.size == 0:
                    continue
                q = np.percentile(vals, [0, 25, 50, 75, 100])
                rows.append(
                    {
                        "measure": name,
                        "m": m,
                        "class": cls_name,
                        "n": int(vals.size),
                        "min": q[0],
                        "q1": q[1],
                        "median": q[2],
                        "q3": q[3],
                        "max": q[4],
                        "mean": float(vals.mean()),
                    }
                )
    return rows


REPORT_COLUMNS = ("measure", "m", "class", "min", "q1", "median", "q3", "max", "mean")


def report_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write("# time measures in minutes\n")
    buf.write(",".join(REPORT_COLUMNS) + "\n")
    for r in rows:
        cells = [str(r["measure"]), str(r["m"]), r["class"]]
        cells += [format(float(r[k]), ".10g") for k in REPORT_COLUMNS[3:]]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()
