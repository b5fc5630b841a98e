"""Stratified cross-validation with separate training and test thresholds.

Folds are stratified on the test labels (``final_size >= th_ts``). Inside a
training fold the labels are recomputed with ``th_tr`` and SMOTE brings the
viral class up to parity; test folds are never relabelled or resampled.

Seeding: repeat ``r`` shuffles folds with ``SeedSequence([seed, r])`` and
fold ``f`` of that repeat trains with ``SeedSequence([seed, r, f])``, so
results do not depend on thread scheduling, and every threshold pair of a
sweep sees the same splits.
"""
from __future__ import annotations

import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Iterable, Optional, Sequence

import numpy as np
from sklearn.model_selection import StratifiedKFold

from ..errors import CascadeDiversityError, ParameterError
from .forest import ForestParams, predict, train_forest
from .smote import smote

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SmoteParams:
    k_neighbors: int = 5
    enabled: bool = True


@dataclass(frozen=True)
class FoldResult:
    th_tr: int
    th_ts: int
    fold: int
    repeat: int
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    recalled_avg_size: float
    nonrecalled_avg_size: float


METRIC_COLUMNS = tuple(f.name for f in fields(FoldResult))


def binary_metrics(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision, recall and F1 of the positive class; 0 where undefined."""
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if np.isnan(v) else format(v, ".17g")
    return str(v)


@dataclass
class MetricsReport:
    folds: list[FoldResult] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.folds], dtype=np.float64)

    def mean(self, name: str) -> float:
        col = self.column(name)
        col = col[~np.isnan(col)]
        return float(col.mean()) if col.size else float("nan")

    def std(self, name: str) -> float:
        col = self.column(name)
        col = col[~np.isnan(col)]
        return float(col.std(ddof=1)) if col.size > 1 else 0.0

    def summary(self) -> dict[str, float]:
        out = {}
        for name in ("precision", "recall", "f1", "recalled_avg_size", "nonrecalled_avg_size"):
            out[name] = self.mean(name)
            out[name + "_sd"] = self.std(name)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(METRIC_COLUMNS) + "\n")
        for r in self.folds:
            buf.write(",".join(_fmt(getattr(r, c)) for c in METRIC_COLUMNS) + "\n")
        return buf.getvalue()


def _fold_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence([seed, *key]).generate_state(1)[0])


def _run_fold(x, sizes, train, test, th_tr, th_ts, params, smote_params, seed, repeat, fold):
    fseed = _fold_seed(seed, repeat, fold)
    x_tr, y_tr = x[train], (sizes[train] >= th_tr).astype(np.int64)
    n_pos = int(y_tr.sum())
    n_neg = y_tr.shape[0] - n_pos
    if smote_params.enabled and 2 <= n_pos < n_neg:
        k = min(smote_params.k_neighbors, n_pos - 1)
        scale = x_tr.std(axis=0)
        synth = smote(x_tr[y_tr == 1], n_neg - n_pos, k, seed=fseed, scale=scale)
        x_tr = np.vstack([x_tr, synth.rows])
        y_tr = np.concatenate([y_tr, np.ones(synth.rows.shape[0], dtype=np.int64)])
    x_ts = x[test]
    y_ts = (sizes[test] >= th_ts).astype(np.int64)
    if np.unique(y_tr).shape[0] < 2:
        # degenerate training fold; predict its only class
        pred = np.full(test.shape[0], int(y_tr[0]) if y_tr.size else 0, dtype=np.int64)
    else:
        pred, _ = predict(train_forest(x_tr, y_tr, params, seed=fseed), x_ts)
    tp = int(np.sum((pred == 1) & (y_ts == 1)))
    fp = int(np.sum((pred == 1) & (y_ts == 0)))
    fn = int(np.sum((pred == 0) & (y_ts == 1)))
    precision, recall, f1 = binary_metrics(tp, fp, fn)
    pos_sizes = sizes[test][y_ts == 1]
    hit = pred[y_ts == 1] == 1
    rec = float(pos_sizes[hit].mean()) if hit.any() else float("nan")
    nonrec = float(pos_sizes[~hit].mean()) if (~hit).any() else float("nan")
    return FoldResult(th_tr, th_ts, fold, repeat, precision, recall, f1, tp, fp, fn, rec, nonrec)


def stratified_folds(labels: np.ndarray, folds: int, seed: int, repeat: int):
    skf = StratifiedKFold(n_splits=folds, shuffle=True, random_state=_fold_seed(seed, repeat))
    return list(skf.split(np.zeros((labels.shape[0], 1)), labels))


def cross_validate(
    x,
    final_sizes,
    th_tr: int = 500,
    th_ts: int = 500,
    folds: int = 10,
    repeats: int = 10,
    params: ForestParams = ForestParams(),
    smote_params: SmoteParams = SmoteParams(),
    seed: int = 0,
    threads: int = 1,
) -> MetricsReport:
    x = np.asarray(x, dtype=np.float64)
    sizes = np.asarray(final_sizes, dtype=np.int64)
    y_ts = (sizes >= th_ts).astype(np.int64)
    n_pos = int(y_ts.sum())
    if n_pos < folds:
        raise ParameterError(
            f"{n_pos} viral samples at TH_ts={th_ts}; need at least {folds} for {folds}-fold CV"
        )
    if x.shape[0] - n_pos < folds:
        raise ParameterError(f"need at least {folds} non-viral samples for {folds}-fold CV")
    tasks = []
    for r in range(repeats):
        for f, (train, test) in enumerate(stratified_folds(y_ts, folds, seed, r)):
            tasks.append((train, test, r, f))

    def run(task):
        train, test, r, f = task
        return _run_fold(x, sizes, train, test, th_tr, th_ts, params, smote_params, seed, r, f)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]
    return MetricsReport(results)


@dataclass
class SweepRow:
    th_tr: int
    th_ts: int
    report: Optional[MetricsReport]
    error: Optional[str] = None


SWEEP_COLUMNS = (
    "th_tr",
    "th_ts",
    "precision",
    "precision_sd",
    "recall",
    "recall_sd",
    "f1",
    "f1_sd",
    "recalled_avg_size",
    "nonrecalled_avg_size",
    "error",
)


def threshold_pairs(th_tr: Sequence[int], th_ts) -> list[tuple[int, int]]:
    """Fixed ``th_ts`` (an int) pairs it with every ``th_tr``; a list is zipped."""
    if isinstance(th_ts, (int, np.integer)):
        return [(int(a), int(th_ts)) for a in th_tr]
    th_ts = list(th_ts)
    if len(th_ts) != len(th_tr):
        raise ParameterError("TH_tr and TH_ts lists must have equal length")
    return [(int(a), int(b)) for a, b in zip(th_tr, th_ts)]


def sweep_thresholds(
    x, final_sizes, pairs: Iterable[tuple[int, int]], **cv_kwargs
) -> list[SweepRow]:
    """Cross-validate every ``(th_tr, th_ts)`` pair; failures are kept as rows."""
    rows = []
    for th_tr, th_ts in pairs:
        try:
            rep = cross_validate(x, final_sizes, th_tr=th_tr, th_ts=th_ts, **cv_kwargs)
            rows.append(SweepRow(th_tr, th_ts, rep))
        except CascadeDiversityError as exc:
            logger.warning("TH_tr=%d TH_ts=%d failed: %s", th_tr, th_ts, exc)
            rows.append(SweepRow(th_tr, th_ts, None, str(exc)))
    return rows


def sweep_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    buf.write(",".join(SWEEP_COLUMNS) + "\n")
    for row in rows:
        s = row.report.summary() if row.report else {}
        cells = [str(row.th_tr), str(row.th_ts)]
        cells += [_fmt(float(s.get(c, float("nan")))) for c in SWEEP_COLUMNS[2:-1]]
        cells.append((row.error or "").replace(",", ";"))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def sweep_metrics_csv(rows: list[SweepRow]) -> str:
    """Per-fold metrics of every successful sweep row in one CSV."""
    header = ",".join(METRIC_COLUMNS) + "\n"
    body = "".join(r.report.to_csv()[len(header):] for r in rows if r.report)
    return header + body
