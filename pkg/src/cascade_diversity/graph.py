"""Static directed influence graph stored as a pair of CSR adjacency arrays.

An edge ``(v, w)`` means ``w`` reposted something attributed to ``v`` at
least once during the graph window. Node indices are dense and assigned in
first-seen order of the user id.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Literal

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import GraphCorruptError, GraphFormatError
from .ingest import RepostEvent

MAGIC = b"CFG1"
FORMAT_VERSION = 1

EdgeSource = Literal["parent", "root"]


@dataclass(frozen=True, eq=False)
class InfluenceGraph:
    uids: tuple[str, ...]
    out_offsets: np.ndarray
    out_targets: np.ndarray
    in_offsets: np.ndarray
    in_targets: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.uids)

    @property
    def edge_count(self) -> int:
        return int(self.out_targets.shape[0])

    @cached_property
    def index(self) -> dict[str, int]:
        return {uid: i for i, uid in enumerate(self.uids)}

    def node_of(self, uid: str) -> int:
        """Dense index for ``uid``, or -1 when the user is not in the graph."""
        return self.index.get(uid, -1)

    def _check(self, v: int) -> None:
        if not 0 <= v < self.node_count:
            raise IndexError(f"node {v} out of range [0, {self.node_count})")

    def out_neighbors(self, v: int) -> np.ndarray:
        self._check(v)
        return self.out_targets[self.out_offsets[v] : self.out_offsets[v + 1]]

    def in_neighbors(self, v: int) -> np.ndarray:
        self._check(v)
        return self.in_targets[self.in_offsets[v] : self.in_offsets[v + 1]]

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_offsets)

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_offsets)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Edge list ``(src, dst)`` sorted by source then target."""
        src = np.repeat(np.arange(self.node_count, dtype=np.int64), self.out_degree())
        return src, self.out_targets.astype(np.int64)

    def to_scipy(self) -> sp.csr_matrix:
        n = self.node_count
        data = np.ones(self.edge_count, dtype=np.int8)
        return sp.csr_matrix((data, self.out_targets, self.out_offsets), shape=(n, n))

    def __eq__(self, other) -> bool:
        if not isinstance(other, InfluenceGraph):
            return NotImplemented
        return (
            self.uids == other.uids
            and np.array_equal(self.out_offsets, other.out_offsets)
            and np.array_equal(self.out_targets, other.out_targets)
            and np.array_equal(self.in_offsets, other.in_offsets)
            and np.array_equal(self.in_targets, other.in_targets)
        )

    @classmethod
    def from_edges(cls, uids, src, dst) -> "InfluenceGraph":
        """Build from parallel edge arrays; self-loops and duplicates are dropped."""
        uids = tuple(uids)
        n = len(uids)
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if src.size and (src.min() < 0 or dst.min() < 0 or max(src.max(), dst.max()) >= n):
            raise IndexError("edge endpoint outside node range")
        keep = src != dst
        keys = np.unique(src[keep] * n + dst[keep])
        s, d = np.divmod(keys, n) if n else (keys, keys)
        out_offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(s, minlength=n), out=out_offsets[1:])
        rkeys = np.sort(d * n + s)
        rd, rs = np.divmod(rkeys, n) if n else (rkeys, rkeys)
        in_offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rd, minlength=n), out=in_offsets[1:])
        return cls(
            uids,
            out_offsets,
            d.astype(np.int32),
            in_offsets,
            rs.astype(np.int32),
        )


def build_graph(
    events: Iterable[RepostEvent], edge_source: EdgeSource = "parent"
) -> InfluenceGraph:
    """Build the influence graph from graph-window events.

    With ``edge_source="parent"`` the influencer of a repost is its parent
    user, falling back to the cascade's root author when the parent is
    missing. With ``"root"`` it is always the root author. Every user seen in
    the events becomes a node, even without edges.
    """
    if edge_source not in ("parent", "root"):
        raise ValueError(f"edge_source must be 'parent' or 'root', not {edge_source!r}")
    events = list(events)
    root_of: dict[str, tuple[int, str]] = {}
    for ev in events:
        if ev.parent_uid is None:
            prev = root_of.get(ev.mid)
            if prev is None or ev.ts < prev[0]:
                root_of[ev.mid] = (ev.ts, ev.uid)

    index: dict[str, int] = {}
    src: list[int] = []
    dst: list[int] = []
    use_parent = edge_source == "parent"
    for ev in events:
        root = root_of.get(ev.mid)
        if root is not None and ev.parent_uid is None and root[1] == ev.uid:
            index.setdefault(ev.uid, len(index))
            continue
        infl = ev.parent_uid if use_parent and ev.parent_uid else (root[1] if root else None)
        if infl is None:
            index.setdefault(ev.uid, len(index))
            continue
        a = index.setdefault(infl, len(index))
        b = index.setdefault(ev.uid, len(index))
        src.append(a)
        dst.append(b)
    return InfluenceGraph.from_edges(list(index), src, dst)


@dataclass
class GraphStats:
    node_count: int
    edge_count: int
    wcc_count: int
    avg_clustering: float
    avg_clustering_deg2: float
    clustering_nodes: int
    in_degree_hist: np.ndarray
    out_degree_hist: np.ndarray

    def report(self) -> str:
        lines = [
            f"node_count={self.node_count}",
            f"edge_count={self.edge_count}",
            f"wcc_count={self.wcc_count}",
            # nodes with undirected degree < 2 contribute 0 to avg_clustering
            f"avg_clustering={self.avg_clustering:.12g}",
            f"avg_clustering_deg2={self.avg_clustering_deg2:.12g}",
            f"clustering_nodes={self.clustering_nodes}",
            "clustering_note=undirected projection; avg_clustering averages over all "
            "nodes with degree<2 nodes counted as 0; avg_clustering_deg2 averages "
            "over degree>=2 nodes only",
        ]
        return "\n".join(lines) + "\n"

    def histogram_csv(self) -> str:
        buf = io.StringIO()
        buf.write("direction,degree,count\n")
        for name, hist in (("in", self.in_degree_hist), ("out", self.out_degree_hist)):
            for deg in np.flatnonzero(hist):
                buf.write(f"{name},{deg},{hist[deg]}\n")
        return buf.getvalue()


def undirected_adjacency(g: InfluenceGraph) -> sp.csr_matrix:
    """Binary symmetric adjacency of the undirected projection."""
    a = g.to_scipy().astype(np.int32)
    u = ((a + a.T) > 0).astype(np.int32)
    return sp.csr_matrix(u)


def local_clustering(g: InfluenceGraph) -> np.ndarray:
    n = g.node_count
    if n == 0:
        return np.zeros(0)
    u = undirected_adjacency(g).astype(np.float64)
    deg = np.asarray(u.sum(axis=1)).ravel()
    tri = np.asarray((u @ u).multiply(u).sum(axis=1)).ravel() / 2.0
    denom = deg * (deg - 1) / 2.0
    cc = np.zeros(n)
    ok = deg >= 2
    cc[ok] = tri[ok] / denom[ok]
    return cc


def graph_stats(g: InfluenceGraph) -> GraphStats:
    n = g.node_count
    if n == 0:
        empty = np.zeros(1, dtype=np.int64)
        return GraphStats(0, 0, 0, 0.0, 0.0, 0, empty, empty.copy())
    wcc, _ = connected_components(g.to_scipy(), directed=True, connection="weak")
    cc = local_clustering(g)
    udeg = np.diff(undirected_adjacency(g).indptr)
    ok = udeg >= 2
    return GraphStats(
        node_count=n,
        edge_count=g.edge_count,
        wcc_count=int(wcc),
        avg_clustering=float(cc.mean()),
        avg_clustering_deg2=float(cc[ok].mean()) if ok.any() else 0.0,
        clustering_nodes=int(ok.sum()),
        in_degree_hist=np.bincount(g.in_degree()),
        out_degree_hist=np.bincount(g.out_degree()),
    )


# ---------------------------------------------------------------------------
# binary format: CFG1 | u32 version | u64 |V| | u64 |E| | uid table |
# u64 out_offsets[|V|+1] | u32 out_targets[|E|] | u64 in_offsets | u32 in_targets
# uid table entries are u32 byte length + UTF-8 bytes. All little-endian.


def save_graph(g: InfluenceGraph, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQQ", FORMAT_VERSION, g.node_count, g.edge_count))
        for uid in g.uids:
            raw = uid.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
        fh.write(g.out_offsets.astype("<u8").tobytes())
        fh.write(g.out_targets.astype("<u4").tobytes())
        fh.write(g.in_offsets.astype("<u8").tobytes())
        fh.write(g.in_targets.astype("<u4").tobytes())


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise GraphCorruptError(
                f"graph file truncated at byte {len(self.data)} (needed {self.pos + n})"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def array(self, dtype: str, count: int) -> np.ndarray:
        width = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(width * count), dtype=dtype)


def load_graph(path: str | Path) -> InfluenceGraph:
    data = Path(path).read_bytes()
    if len(data) == 0:
        raise GraphCorruptError(f"{path}: empty graph file")
    r = _Reader(data)
    magic = data[:4]
    if len(magic) == 4 and magic != MAGIC:
        raise GraphFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    r.take(4)
    version, n, m = struct.unpack("<IQQ", r.take(20))
    if version != FORMAT_VERSION:
        raise GraphFormatError(f"{path}: unsupported graph format version {version}")
    uids = []
    for _ in range(n):
        (length,) = struct.unpack("<I", r.take(4))
        try:
            uids.append(r.take(length).decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise GraphCorruptError(f"{path}: invalid UTF-8 in uid table") from exc
    out_off = r.array("<u8", n + 1).astype(np.int64)
    out_tgt = r.array("<u4", m).astype(np.int32)
    in_off = r.array("<u8", n + 1).astype(np.int64)
    in_tgt = r.array("<u4", m).astype(np.int32)
    if r.pos != len(data):
        raise GraphCorruptError(f"{path}: {len(data) - r.pos} trailing bytes")
    for off in (out_off, in_off):
        if off[0] != 0 or off[-1] != m or np.any(np.diff(off) < 0):
            raise GraphCorruptError(f"{path}: inconsistent CSR offsets")
    if m and (out_tgt.max() >= n or in_tgt.max() >= n):
        raise GraphCorruptError(f"{path}: edge target out of range")
    return InfluenceGraph(tuple(uids), out_off, out_tgt, in_off, in_tgt)
