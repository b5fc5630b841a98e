"""Synthetic corpora with known ground truth.

A directed stochastic block model provides the network. The graph window
holds background activity: every user posts once and each out-neighbour
reposts that post, so building the graph from the window reproduces the
SBM edge set exactly. The cascade window holds independent-cascade
diffusions with exponential delays; a planted fraction of cascades gets a
boosted transmission probability on cross-community edges.
"""
from __future__ import annotations

import heapq
import io
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .graph import InfluenceGraph
from .ingest import RepostEvent, Window, write_events

DAY = 86_400


@dataclass(frozen=True)
class SynthConfig:
    k: int = 20
    nodes_per_community: int = 500
    p_in: float = 0.02
    p_out: float = 0.0005
    n_cascades: int = 10_000
    beta: float = 0.05
    gamma: float = 4.0
    viral_fraction: float = 0.02
    tau: float = 600.0
    appeal_sigma: float = 0.5
    seed: int = 0
    graph_window: tuple[int, int] = (0, 90 * DAY)
    cascade_window: tuple[int, int] = (90 * DAY, 121 * DAY)

    def __post_init__(self):
        for name in ("p_in", "p_out", "beta", "viral_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name}={v} is not a probability")
        if not 0.0 <= self.beta * self.gamma <= 1.0:
            raise ParameterError("beta * gamma must be a probability")
        if self.k < 2:
            raise ParameterError("need k >= 2 communities")
        if self.appeal_sigma < 0:
            raise ParameterError("appeal_sigma must be non-negative")
        if self.tau <= 0:
            raise ParameterError("tau must be positive")
        if self.nodes_per_community < 1 or self.n_cascades < 0:
            raise ParameterError("sizes must be positive")
        Window(*self.graph_window)
        Window(*self.cascade_window)

    @property
    def n_nodes(self) -> int:
        return self.k * self.nodes_per_community

    def to_dict(self) -> dict:
        return asdict(self)


def _rng(cfg: SynthConfig, *key: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, *key])


def gen_sbm(cfg: SynthConfig) -> tuple[InfluenceGraph, np.ndarray]:
    """Directed SBM over ``k`` equal blocks; returns the graph and planted labels.

    Each ordered pair ``(u, v)``, ``u != v``, is an edge independently with
    probability ``p_in`` inside a block and ``p_out`` across blocks.
    """
    rng = _rng(cfg, 0)
    b = cfg.nodes_per_community
    n = cfg.n_nodes
    labels = np.repeat(np.arange(cfg.k), b)
    src_parts, dst_parts = [], []
    for a in range(cfg.k):
        for c in range(cfg.k):
            p = cfg.p_in if a == c else cfg.p_out
            pairs = b * b
            count = rng.binomial(pairs, p)
            if count == 0:
                continue
            flat = rng.choice(pairs, size=count, replace=False)
            u, v = np.divmod(flat, b)
            if a == c:
                # iid Bernoulli over b*b pairs; dropping the diagonal leaves the valid ones
                keep = u != v
                u, v = u[keep], v[keep]
            src_parts.append(u + a * b)
            dst_parts.append(v + c * b)
    src = np.concatenate(src_parts) if src_parts else np.zeros(0, dtype=np.int64)
    dst = np.concatenate(dst_parts) if dst_parts else np.zeros(0, dtype=np.int64)
    uids = [f"u{i}" for i in range(n)]
    return InfluenceGraph.from_edges(uids, src, dst), labels


@dataclass
class SimulatedCascade:
    mid: str
    planted_viral: bool
    # (uid, ts, parent uid) in adoption order
    adoptions: list[tuple[str, int, str | None]]

    @property
    def final_size(self) -> int:
        return len(self.adoptions)


def _simulate_one(g, labels, seed_node, start_ts, end_ts, p_same, p_cross, p_home, tau, rng):
    offsets, targets = g.out_offsets, g.out_targets
    home = labels[seed_node]
    adopted: dict[int, int] = {}
    out = []
    heap = [(0.0, seed_node, -1)]
    while heap:
        t, v, parent = heapq.heappop(heap)
        if v in adopted:
            continue
        ts = start_ts + int(t)
        if ts >= end_ts:
            break
        adopted[v] = ts
        out.append((v, ts, parent))
        nbrs = targets[offsets[v] : offsets[v + 1]]
        if nbrs.shape[0] == 0:
            continue
        lv = labels[v]
        ln = labels[nbrs]
        probs = np.where(ln == lv, p_home if lv == home else p_same, p_cross)
        hits = nbrs[rng.random(nbrs.shape[0]) < probs]
        if hits.shape[0] == 0:
            continue
        delays = rng.exponential(tau, size=hits.shape[0])
        for w, d in zip(hits.tolist(), delays.tolist()):
            if w not in adopted:
                heapq.heappush(heap, (t + d, w, v))
    return out


def simulate_cascades(
    g: InfluenceGraph, labels: np.ndarray, cfg: SynthConfig
) -> list[SimulatedCascade]:
    """Independent-cascade diffusions in the cascade window.

    Each cascade starts at a uniformly random node at a uniformly random time
    in the first 30 days of the window. Every adopter tries each out-neighbour
    once, succeeding with ``beta`` (``beta * gamma`` across communities for
    planted cascades) after an exponential delay of mean ``tau`` seconds.
    Adoptions at or after the window end are not emitted.
    """
    start, end = cfg.cascade_window
    span = max(1, min(30 * DAY, end - start))
    out = []
    n = g.node_count
    for i in range(cfg.n_cascades):
        rng = _rng(cfg, 1, i)
        planted = bool(rng.random() < cfg.viral_fraction)
        seed_node = int(rng.integers(n))
        t0 = start + int(rng.integers(span))
        p_cross = cfg.beta * cfg.gamma if planted else cfg.beta
        appeal = rng.lognormal(0.0, cfg.appeal_sigma) if cfg.appeal_sigma > 0 else 1.0
        p_home = min(1.0, cfg.beta * appeal)
        adoptions = _simulate_one(
            g, labels, seed_node, t0, end, cfg.beta, p_cross, p_home, cfg.tau, rng
        )
        uids = g.uids
        out.append(
            SimulatedCascade(
                f"c{i}",
                planted,
                [(uids[v], ts, uids[p] if p >= 0 else None) for v, ts, p in adoptions],
            )
        )
    return out


def background_events(g: InfluenceGraph, cfg: SynthConfig) -> list[RepostEvent]:
    """Graph-window activity that realises every graph edge as one repost."""
    rng = _rng(cfg, 2)
    start, end = cfg.graph_window
    span = end - start
    post_ts = start + rng.integers(0, max(1, span // 2), size=g.node_count)
    events = []
    for v in range(g.node_count):
        uid = g.uids[v]
        mid = f"g{v}"
        ts0 = int(post_ts[v])
        events.append(RepostEvent(mid, uid, ts0, None))
        nbrs = g.out_neighbors(v)
        delays = 1 + rng.exponential(cfg.tau, size=nbrs.shape[0]).astype(np.int64)
        for w, d in zip(nbrs.tolist(), delays.tolist()):
            events.append(RepostEvent(mid, g.uids[w], min(ts0 + d, end - 1), uid))
    return events


@dataclass
class SynthCorpus:
    config: SynthConfig
    graph: InfluenceGraph
    planted_labels: np.ndarray
    background: list[RepostEvent]
    cascades: list[SimulatedCascade]

    def cascade_events(self) -> list[RepostEvent]:
        return [
            RepostEvent(c.mid, uid, ts, parent)
            for c in self.cascades
            for uid, ts, parent in c.adoptions
        ]

    def events(self) -> list[RepostEvent]:
        return self.background + self.cascade_events()

    def truth_csv(self) -> str:
        buf = io.StringIO()
        buf.write("mid,planted_viral,final_size\n")
        for c in self.cascades:
            buf.write(f"{c.mid},{int(c.planted_viral)},{c.final_size}\n")
        return buf.getvalue()

    def write(self, events_path: str | Path, truth_path: str | Path) -> None:
        write_events(self.events(), events_path)
        Path(truth_path).write_text(self.truth_csv(), encoding="utf-8")


def generate(cfg: SynthConfig) -> SynthCorpus:
    g, labels = gen_sbm(cfg)
    return SynthCorpus(cfg, g, labels, background_events(g, cfg), simulate_cascades(g, labels, cfg))
