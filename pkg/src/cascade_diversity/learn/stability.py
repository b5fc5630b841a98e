"""Randomized L1 logistic regression (stability selection) feature weights.

Each run fits an L1-penalised logistic regression on a random half of the
rows with every standardised column multiplied by an independent
``U[scale_low, 1]`` factor. A feature's weight is the fraction of
converged runs in which its coefficient is nonzero.
"""
from __future__ import annotations

import io
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from ..errors import ParameterError

logger = logging.getLogger(__name__)


def l1_logistic(
    x: np.ndarray,
    y: np.ndarray,
    l1_strength: float,
    max_iter: int = 5000,
    tol: float = 1e-7,
) -> tuple[np.ndarray, float, bool]:
    """FISTA for ``mean log-loss + l1_strength * ||w||_1``; intercept unpenalised.

    Returns ``(w, b, converged)``; ``y`` holds 0/1 labels.
    """
    n, d = x.shape
    xa = np.hstack([x, np.ones((n, 1))])
    lip = np.linalg.norm(xa, 2) ** 2 / (4.0 * n)
    step = 1.0 / max(lip, 1e-12)
    thresh = np.full(d + 1, step * l1_strength)
    thresh[-1] = 0.0
    theta = np.zeros(d + 1)
    z = theta.copy()
    t = 1.0
    for _ in range(max_iter):
        grad = xa.T @ (expit(xa @ z) - y) / n
        v = z - step * grad
        new = np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)
        t_next = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
        z = new + ((t - 1.0) / t_next) * (new - theta)
        delta = np.linalg.norm(new - theta)
        theta, t = new, t_next
        if delta <= tol * max(1.0, np.linalg.norm(theta)):
            return theta[:-1], float(theta[-1]), True
    return theta[:-1], float(theta[-1]), False


@dataclass
class WeightReport:
    names: tuple[str, ...]
    weights: np.ndarray
    threshold: float
    runs: int
    discarded: int

    @property
    def selected(self) -> np.ndarray:
        return self.weights > self.threshold

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("feature,weight,selected\n")
        for name, w, s in zip(self.names, self.weights, self.selected):
            buf.write(f"{name},{format(float(w), '.17g')},{int(s)}\n")
        return buf.getvalue()


def stability_weights(
    x,
    y,
    names: Sequence[str] | None = None,
    runs: int = 100,
    subsample: float = 0.5,
    scale_low: float = 0.5,
    l1_strength: float = 0.01,
    threshold: float = 0.01,
    seed: int = 0,
    max_iter: int = 5000,
) -> WeightReport:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = x.shape
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(d))
    if np.unique(y).shape[0] < 2:
        raise ParameterError("stability selection needs both classes present")
    if not 0.0 < subsample <= 1.0 or not 0.0 < scale_low <= 1.0:
        raise ParameterError("subsample and scale_low must lie in (0, 1]")
    counts = np.zeros(d)
    done = discarded = 0
    m = max(2, int(round(subsample * n)))
    for r in range(runs):
        rng = np.random.default_rng([seed, r])
        rows = rng.choice(n, size=m, replace=False)
        xs, ys = x[rows], y[rows]
        if np.unique(ys).shape[0] < 2:
            discarded += 1
            continue
        sd = xs.std(axis=0)
        z = (xs - xs.mean(axis=0)) / np.where(sd > 0, sd, 1.0)
        z *= rng.uniform(scale_low, 1.0, size=d)
        w, _, ok = l1_logistic(z, ys.astype(np.float64), l1_strength, max_iter=max_iter)
        if not ok:
            discarded += 1
            continue
        counts += w != 0
        done += 1
    if discarded > 0.2 * runs:
        raise ParameterError(
            f"{discarded} of {runs} randomized fits failed (non-convergence or one class)"
        )
    if discarded:
        logger.warning("discarded %d of %d randomized fits", discarded, runs)
    return WeightReport(names, counts / max(done, 1), threshold, runs, discarded)
