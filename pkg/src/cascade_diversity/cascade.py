"""Adopter sequences and size-m snapshots with frontier sets."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import CascadeError, ParameterError
from .graph import InfluenceGraph
from .ingest import RepostEvent

DEFAULT_SIZES = (10, 30, 50, 100, 200)
DEFAULT_LAMBDA = 1800

Semantics = Literal["recency", "absolute"]


@dataclass(frozen=True, eq=False)
class Cascade:
    """One cascade; adopter 0 is the originator at offset 0.

    ``nodes[i]`` is the graph index of adopter ``i`` or -1 when the user is
    not in the graph.
    """

    mid: str
    uids: tuple[str, ...]
    offsets: np.ndarray
    nodes: np.ndarray
    root_ts: int

    @property
    def final_size(self) -> int:
        return len(self.uids)

    @property
    def originator(self) -> str:
        return self.uids[0]


def build_cascade(
    events: Sequence[RepostEvent], g: InfluenceGraph, allow_rootless: bool = False
) -> Cascade:
    if not events:
        raise CascadeError("empty event group")
    root = next((ev for ev in events if ev.parent_uid is None), None)
    if root is None:
        if not allow_rootless:
            raise CascadeError(f"cascade {events[0].mid} has no original post")
        root = min(events, key=lambda ev: (ev.ts, ev.uid))
    rest = sorted(
        (ev for ev in events if ev is not root), key=lambda ev: (ev.ts, ev.uid)
    )
    seen = {root.uid}
    uids = [root.uid]
    offsets = [0]
    for ev in rest:
        if ev.uid in seen:
            raise CascadeError(f"cascade {root.mid}: duplicate adopter {ev.uid!r}")
        if ev.ts < root.ts:
            raise CascadeError(f"cascade {root.mid}: repost before original post")
        seen.add(ev.uid)
        uids.append(ev.uid)
        offsets.append(ev.ts - root.ts)
    nodes = np.fromiter((g.node_of(u) for u in uids), dtype=np.int64, count=len(uids))
    return Cascade(root.mid, tuple(uids), np.asarray(offsets, dtype=np.int64), nodes, root.ts)


@dataclass(frozen=True, eq=False)
class CascadeSnapshot:
    """State of a cascade once it has ``m`` adopters.

    Node sets are sorted arrays of graph indices. ``exposure`` is aligned with
    ``frontiers`` and holds each frontier node's first exposure offset.
    """

    mid: str
    m: int
    snapshot_time: int
    adopters: np.ndarray
    frontiers: np.ndarray
    exposure: np.ndarray
    lambda_frontiers: np.ndarray
    lambda_nonadopters: np.ndarray
    unknown_adopter_count: int
    lam: int
    semantics: str


def _gather_out(g: InfluenceGraph, sources: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Concatenated out-neighbour lists of ``sources`` plus the source position."""
    starts = g.out_offsets[sources]
    lens = g.out_offsets[sources + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    owner = np.repeat(np.arange(sources.shape[0]), lens)
    base = np.repeat(starts - (np.cumsum(lens) - lens), lens)
    pos = base + np.arange(total)
    return g.out_targets[pos].astype(np.int64), owner


def snapshot(
    c: Cascade,
    g: InfluenceGraph,
    m: int,
    lam: int = DEFAULT_LAMBDA,
    semantics: Semantics = "recency",
) -> CascadeSnapshot:
    """Snapshot at size ``m`` (adopters counted including the originator).

    Frontiers are graph nodes outside the first ``m`` adopters with at least
    one known adopter as in-neighbour. With ``recency`` semantics a frontier
    node is a lambda-frontier when ``snapshot_time - exposure <= lam``; with
    ``absolute`` semantics when ``exposure <= lam``.
    """
    if m < 1:
        raise ParameterError(f"snapshot size must be >= 1, got {m}")
    if m > c.final_size:
        raise ParameterError(f"cascade {c.mid} has {c.final_size} adopters, fewer than m={m}")
    if semantics not in ("recency", "absolute"):
        raise ParameterError(f"unknown lambda semantics {semantics!r}")
    nodes = c.nodes[:m]
    offs = c.offsets[:m]
    known_mask = nodes >= 0
    known = nodes[known_mask]
    known_offs = offs[known_mask]
    snap_time = int(offs[-1])

    targets, owner = _gather_out(g, known)
    times = known_offs[owner]
    outside = ~np.isin(targets, known)
    targets, times = targets[outside], times[outside]
    order = np.lexsort((times, targets))
    targets, times = targets[order], times[order]
    first = np.ones(targets.shape[0], dtype=bool)
    first[1:] = targets[1:] != targets[:-1]
    frontiers, exposure = targets[first], times[first]

    if semantics == "recency":
        fresh = snap_time - exposure <= lam
    else:
        fresh = exposure <= lam
    return CascadeSnapshot(
        mid=c.mid,
        m=m,
        snapshot_time=snap_time,
        adopters=np.sort(known),
        frontiers=frontiers,
        exposure=exposure,
        lambda_frontiers=frontiers[fresh],
        lambda_nonadopters=frontiers[~fresh],
        unknown_adopter_count=int((~known_mask).sum()),
        lam=lam,
        semantics=semantics,
    )


def snapshot_series(
    c: Cascade,
    g: InfluenceGraph,
    sizes: Iterable[int] = DEFAULT_SIZES,
    lam: int = DEFAULT_LAMBDA,
    semantics: Semantics = "recency",
) -> list[CascadeSnapshot]:
    return [snapshot(c, g, m, lam, semantics) for m in sorted(sizes) if m <= c.final_size]
