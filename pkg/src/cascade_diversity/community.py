"""Louvain community detection on the undirected projection of the graph.

The projection gives each unordered pair weight 1, or 2 when both
directions are present. The local-moving sweep is compiled with numba; the
aggregation step uses scipy sparse products.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numba as nb
import numpy as np
import scipy.sparse as sp

from .errors import PartitionError
from .graph import InfluenceGraph

logger = logging.getLogger(__name__)

_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class CommunityPartition:
    assignment: np.ndarray
    k: int
    modularity: float
    uids: tuple[str, ...] = ()
    pass_log: tuple[float, ...] = field(default=())

    def __len__(self) -> int:
        return int(self.assignment.shape[0])

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)


def weighted_projection(g: InfluenceGraph) -> sp.csr_matrix:
    a = g.to_scipy().astype(np.float64)
    w = (a + a.T).tocsr()
    w.sum_duplicates()
    w.sort_indices()
    return w


def modularity(w: sp.csr_matrix, assignment: np.ndarray, resolution: float = 1.0) -> float:
    """Modularity of ``assignment`` on a symmetric weight matrix.

    Diagonal entries count as internal weight already doubled.
    """
    assignment = np.asarray(assignment, dtype=np.int64)
    two_m = w.sum()
    if two_m == 0:
        return 0.0
    k = np.asarray(w.sum(axis=1)).ravel()
    coo = w.tocoo()
    same = assignment[coo.row] == assignment[coo.col]
    internal = coo.data[same].sum()
    tot = np.bincount(assignment, weights=k)
    return float(internal / two_m - resolution * np.sum((tot / two_m) ** 2))


def graph_modularity(g: InfluenceGraph, assignment, resolution: float = 1.0) -> float:
    return modularity(weighted_projection(g), assignment, resolution)


@nb.njit(cache=True)
def _local_moving(indptr, indices, weights, order, resolution):
    """Move nodes between communities until no single move gains modularity.

    Nodes are visited from a FIFO queue seeded with ``order``; when a node
    moves, its neighbours outside the queue and the target community are
    appended, so converged regions are not rescanned. A call that moves
    nothing has checked every node against an unchanged state.
    """
    n = indptr.shape[0] - 1
    comm = np.arange(n)
    k = np.zeros(n)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            k[i] += weights[p]
    two_m = k.sum()
    tot = k.copy()
    neigh_w = np.zeros(n)
    neigh_seen = np.zeros(n, dtype=np.bool_)
    neigh_list = np.empty(n, dtype=np.int64)
    # ring buffer of n slots; a node is queued at most once at a time
    queue = order.copy()
    queued = np.ones(n, dtype=np.bool_)
    head = 0
    size = n
    moves = 0
    while size > 0:
        i = queue[head]
        head = (head + 1) % n
        size -= 1
        queued[i] = False
        ci = comm[i]
        ki = k[i]
        n_neigh = 0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j == i:
                continue
            c = comm[j]
            if not neigh_seen[c]:
                neigh_seen[c] = True
                neigh_list[n_neigh] = c
                n_neigh += 1
            neigh_w[c] += weights[p]
        tot[ci] -= ki
        stay = neigh_w[ci] - resolution * tot[ci] * ki / two_m
        best_c = -1
        best = -np.inf
        for q in range(n_neigh):
            c = neigh_list[q]
            if c == ci:
                continue
            gain = neigh_w[c] - resolution * tot[c] * ki / two_m
            if gain > best + _EPS or (abs(gain - best) <= _EPS and c < best_c):
                best = gain
                best_c = c
        target = ci
        if best_c >= 0 and best > stay + _EPS:
            target = best_c
            moves += 1
        tot[target] += ki
        comm[i] = target
        for q in range(n_neigh):
            c = neigh_list[q]
            neigh_w[c] = 0.0
            neigh_seen[c] = False
        if target != ci:
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                if j != i and not queued[j] and comm[j] != target:
                    queue[(head + size) % n] = j
                    size += 1
                    queued[j] = True
    return comm, moves


def _dense_labels(labels: np.ndarray) -> np.ndarray:
    """Relabel to 0..k-1 ordered by each label's smallest member index."""
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first, kind="stable")
    remap = np.empty(order.shape[0], dtype=np.int64)
    remap[order] = np.arange(order.shape[0])
    _, inv = np.unique(labels, return_inverse=True)
    return remap[inv]


def _aggregate(w: sp.csr_matrix, labels: np.ndarray, k: int) -> sp.csr_matrix:
    n = w.shape[0]
    p = sp.csr_matrix((np.ones(n), (np.arange(n), labels)), shape=(n, k))
    agg = (p.T @ w @ p).tocsr()
    agg.sum_duplicates()
    agg.sort_indices()
    return agg


def louvain(
    g: InfluenceGraph,
    seed: int = 0,
    resolution: float = 1.0,
    max_passes: int = 100,
    allow_edgeless: bool = False,
) -> CommunityPartition:
    """Louvain modularity optimisation.

    Each pass runs queue-based local moving from a seeded random node order
    and then aggregates communities into super-nodes. A node moves only on a
    strict modularity gain; among equally good targets the lowest community
    id wins. Stops when a pass moves nothing or after ``max_passes``.
    ``pass_log`` holds the modularity after each pass, starting with the
    singleton partition.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    n = g.node_count
    if n == 0:
        raise PartitionError("cannot detect communities on an empty graph")
    w = weighted_projection(g)
    if w.nnz == 0:
        if not allow_edgeless:
            raise PartitionError("graph has no edges; pass allow_edgeless for singletons")
        return CommunityPartition(np.arange(n, dtype=np.int64), n, 0.0, g.uids, (0.0,))

    rng = np.random.default_rng(seed)
    membership = np.arange(n, dtype=np.int64)
    level = w
    log = [modularity(w, membership, resolution)]
    for _ in range(max_passes):
        order = rng.permutation(level.shape[0]).astype(np.int64)
        comm, moves = _local_moving(
            level.indptr.astype(np.int64),
            level.indices.astype(np.int64),
            level.data.astype(np.float64),
            order,
            float(resolution),
        )
        if moves == 0:
            break
        labels = _dense_labels(comm)
        k = int(labels.max()) + 1
        membership = labels[membership]
        level = _aggregate(level, labels, k)
        log.append(modularity(w, membership, resolution))
        logger.debug("louvain pass %d: %d communities, Q=%.6f", len(log) - 1, k, log[-1])
        if k == 1:
            break
    membership = _dense_labels(membership)
    q = modularity(w, membership, resolution)
    return CommunityPartition(membership, int(membership.max()) + 1, q, g.uids, tuple(log))


def community_of(p: CommunityPartition, node: int) -> int:
    if not 0 <= node < len(p):
        raise IndexError(f"node {node} out of range [0, {len(p)})")
    return int(p.assignment[node])


def communities_of(p: CommunityPartition, nodes: Iterable[int]) -> set[int]:
    idx = np.fromiter(nodes, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= len(p)):
        raise IndexError("node index out of range")
    return set(np.unique(p.assignment[idx]).tolist())


def save_partition(p: CommunityPartition, path: str | Path) -> None:
    if len(p.uids) != len(p):
        raise PartitionError("partition has no uid table to write")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for uid, c in zip(p.uids, p.assignment.tolist()):
            fh.write(f"{uid}\t{c}\n")


def load_partition(path: str | Path, g: InfluenceGraph, resolution: float = 1.0) -> CommunityPartition:
    """Read a ``uid<TAB>community`` file; every graph node must appear once."""
    assignment = np.full(g.node_count, -1, dtype=np.int64)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                uid, cid = line.split("\t")
                cid = int(cid)
            except ValueError:
                raise PartitionError(f"{path}:{lineno}: malformed line {line!r}") from None
            v = g.node_of(uid)
            if v < 0:
                raise PartitionError(f"{path}:{lineno}: unknown node {uid!r}")
            if assignment[v] >= 0:
                raise PartitionError(f"{path}:{lineno}: duplicate node {uid!r}")
            if cid < 0:
                raise PartitionError(f"{path}:{lineno}: negative community id")
            assignment[v] = cid
    missing = np.flatnonzero(assignment < 0)
    if missing.size:
        raise PartitionError(
            f"{path}: {missing.size} graph nodes missing, e.g. {g.uids[missing[0]]!r}"
        )
    if g.node_count == 0:
        return CommunityPartition(assignment, 0, 0.0, g.uids)
    assignment = _dense_labels(assignment)
    q = graph_modularity(g, assignment, resolution)
    return CommunityPartition(assignment, int(assignment.max()) + 1, q, g.uids)
