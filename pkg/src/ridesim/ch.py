"""Contraction hierarchies: preprocessing, exact queries and search spaces."""

import hashlib
import heapq
import logging
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .network import Graph
from .search import INFINITY, LanePrune, SearchCounters, dijkstra

logger = logging.getLogger(__name__)

CACHE_MAGIC = b"RSCH"
CACHE_VERSION = 1


class CHCacheError(ValueError):
    """Raised when a contraction hierarchy cache file is unusable."""
    pass


class SearchDirection(Enum):
    """Direction of a CH search space."""
    UP = "up"        # forward search in the upward graph
    DOWN = "down"    # backward search in the downward graph


@dataclass
class ContractionHierarchy:
    """Vertex ranks plus upward and (reversed) downward search graphs.

    ``up[u]`` holds (v, len) with rank(u) < rank(v). ``down_rev[v]`` holds
    (u, len) for down edges u -> v with rank(u) > rank(v), which is what a
    backward search from a target relaxes.
    """
    vertex_count: int
    rank: List[int]
    edges: Dict[Tuple[int, int], int]
    middle: Dict[Tuple[int, int], int] = field(default_factory=dict)
    up: List[List[Tuple[int, int]]] = field(default_factory=list)
    down_rev: List[List[Tuple[int, int]]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.up:
            self.up = [[] for _ in range(self.vertex_count)]
            self.down_rev = [[] for _ in range(self.vertex_count)]
            for (u, w), length in sorted(self.edges.items()):
                if self.rank[u] < self.rank[w]:
                    self.up[u].append((w, length))
                else:
                    self.down_rev[w].append((u, length))

    @property
    def shortcut_count(self) -> int:
        return len(self.middle)

    def adjacency(self, direction: SearchDirection) -> List[List[Tuple[int, int]]]:
        return self.up if direction is SearchDirection.UP else self.down_rev


class _Contractor:
    """Mutable remaining-graph state while vertices are contracted."""

    def __init__(self, graph: Graph, witness_settle_limit: int):
        n = graph.vertex_count
        self.out: List[Dict[int, int]] = [{} for _ in range(n)]
        self.inn: List[Dict[int, int]] = [{} for _ in range(n)]
        self.edges: Dict[Tuple[int, int], int] = {}
        self.middle: Dict[Tuple[int, int], int] = {}
        self.contracted_neighbors = [0] * n
        self.witness_settle_limit = witness_settle_limit
        for tail, head, weight in graph.edges:
            if tail == head:
                continue
            if weight < self.edges.get((tail, head), INFINITY):
                self.edges[(tail, head)] = weight
                self.out[tail][head] = weight
                self.inn[head][tail] = weight

    def _witness(self, source: int, skip: int, limit: float) -> Dict[int, int]:
        dist = {source: 0}
        heap = [(0, source)]
        settled = 0
        while heap and settled < self.witness_settle_limit:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            if d > limit:
                break
            settled += 1
            for v, w in self.out[u].items():
                if v == skip:
                    continue
                nd = d + w
                if nd <= limit and nd < dist.get(v, INFINITY):
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return dist

    def needed_shortcuts(self, v: int) -> List[Tuple[int, int, int]]:
        shortcuts = []
        for u, w_in in self.inn[v].items():
            targets = [(w, w_in + w_out) for w, w_out in self.out[v].items() if w != u]
            if not targets:
                continue
            witness = self._witness(u, v, max(length for _, length in targets))
            for w, length in targets:
                if witness.get(w, INFINITY) > length:
                    shortcuts.append((u, w, length))
        return shortcuts

    def priority(self, v: int) -> int:
        degree = len(self.inn[v]) + len(self.out[v])
        return len(self.needed_shortcuts(v)) - degree + self.contracted_neighbors[v]

    def contract(self, v: int) -> None:
        for u, w, length in self.needed_shortcuts(v):
            if length < self.edges.get((u, w), INFINITY):
                self.edges[(u, w)] = length
                self.middle[(u, w)] = v
                self.out[u][w] = length
                self.inn[w][u] = length
        for u in self.inn[v]:
            del self.out[u][v]
            self.contracted_neighbors[u] += 1
        for w in self.out[v]:
            del self.inn[w][v]
            self.contracted_neighbors[w] += 1
        self.inn[v] = {}
        self.out[v] = {}


def build_ch(
    graph: Graph,
    order: Optional[Sequence[int]] = None,
    witness_settle_limit: int = 500,
) -> ContractionHierarchy:
    """Contract every vertex of graph and return the hierarchy.

    Args:
        graph: Input graph
        order: Forced contraction order (first entry gets rank 0); when
            omitted a lazy edge-difference heuristic picks the order
        witness_settle_limit: Settled-vertex cap of each witness search

    Returns:
        Hierarchy preserving every shortest-path distance
    """
    n = graph.vertex_count
    contractor = _Contractor(graph, witness_settle_limit)
    rank = [0] * n

    if order is not None:
        if sorted(order) != list(range(n)):
            raise ValueError("contraction order must be a permutation of all vertices")
        for position, v in enumerate(order):
            contractor.contract(v)
            rank[v] = position
    else:
        heap = [(contractor.priority(v), v) for v in range(n)]
        heapq.heapify(heap)
        position = 0
        while heap:
            _, v = heapq.heappop(heap)
            current = (contractor.priority(v), v)
            if heap and current > heap[0]:
                heapq.heappush(heap, current)
                continue
            contractor.contract(v)
            rank[v] = position
            position += 1

    ch = ContractionHierarchy(
        vertex_count=n, rank=rank, edges=contractor.edges, middle=contractor.middle
    )
    logger.debug("Built CH: %d vertices, %d edges, %d shortcuts", n, len(ch.edges), ch.shortcut_count)
    return ch


def _query(
    ch: ContractionHierarchy, s: int, t: int, counters: Optional[SearchCounters] = None
) -> Tuple[float, Optional[int], Dict[int, int], Dict[int, int]]:
    dist = ({s: 0}, {t: 0})
    parent: Tuple[Dict[int, int], Dict[int, int]] = ({}, {})
    heaps = ([(0, s)], [(0, t)])
    graphs = (ch.up, ch.down_rev)
    best, meeting = (0, s) if s == t else (INFINITY, None)

    while True:
        live = [side for side in (0, 1) if heaps[side] and heaps[side][0][0] < best]
        if not live:
            break
        side = min(live, key=lambda x: heaps[x][0])
        d, u = heapq.heappop(heaps[side])
        if d > dist[side][u]:
            continue
        if counters is not None:
            counters.settled_vertices += 1
        other = dist[1 - side].get(u)
        if other is not None and d + other < best:
            best, meeting = d + other, u
        for v, w in graphs[side][u]:
            if counters is not None:
                counters.relaxed_edges += 1
            nd = d + w
            if nd < dist[side].get(v, INFINITY):
                dist[side][v] = nd
                parent[side][v] = u
                heapq.heappush(heaps[side], (nd, v))
    return best, meeting, parent[0], parent[1]


def ch_query(
    ch: ContractionHierarchy, s: int, t: int, counters: Optional[SearchCounters] = None
) -> float:
    """Exact shortest-path distance from s to t, or INFINITY if unreachable."""
    return _query(ch, s, t, counters)[0]


def _unpack_edge(ch: ContractionHierarchy, u: int, w: int, out: List[int]) -> None:
    via = ch.middle.get((u, w))
    if via is None:
        out.append(w)
        return
    _unpack_edge(ch, u, via, out)
    _unpack_edge(ch, via, w, out)


def unpack_path(ch: ContractionHierarchy, s: int, t: int) -> List[Tuple[int, int]]:
    """Shortest s-t path in the input graph as (vertex, time from s) pairs.

    Returns an empty list when t is unreachable.
    """
    best, meeting, fwd_parent, bwd_parent = _query(ch, s, t)
    if meeting is None:
        return []
    upward = [meeting]
    while upward[-1] != s:
        upward.append(fwd_parent[upward[-1]])
    upward.reverse()
    hierarchy_path = list(upward)
    v = meeting
    while v != t:
        v = bwd_parent[v]
        hierarchy_path.append(v)

    vertices = [s]
    for u, w in zip(hierarchy_path, hierarchy_path[1:]):
        _unpack_edge(ch, u, w, vertices)

    timed = [(s, 0)]
    for u, w in zip(vertices, vertices[1:]):
        timed.append((w, timed[-1][1] + ch.edges[(u, w)]))
    return timed


def ch_search_space(
    ch: ContractionHierarchy,
    v: int,
    direction: SearchDirection,
    radius: float = INFINITY,
    prune: Optional[LanePrune] = None,
    counters: Optional[SearchCounters] = None,
) -> List[Tuple[int, int]]:
    """All vertices of the upward (or reverse downward) space of v with d↑/d↓.

    Sorted by distance then vertex id. ``radius`` and ``prune`` truncate the
    space monotonically.
    """
    result = dijkstra(ch.adjacency(direction), [v], radius=radius, prune=prune, counters=counters)[0]
    return sorted(result.items(), key=lambda item: (item[1], item[0]))


def _graph_fingerprint(graph: Graph) -> bytes:
    digest = hashlib.sha256(str(graph.vertex_count).encode())
    for edge in graph.edges:
        digest.update(struct.pack("<3q", *edge))
    return digest.digest()[:16]


def save_ch(ch: ContractionHierarchy, graph: Graph, path: Union[str, Path]) -> None:
    """Write the hierarchy to a binary cache file keyed by graph contents."""
    items = sorted(ch.edges.items())
    with open(path, "wb") as f:
        f.write(CACHE_MAGIC)
        f.write(struct.pack("<HQQ", CACHE_VERSION, ch.vertex_count, len(items)))
        f.write(_graph_fingerprint(graph))
        f.write(struct.pack(f"<{ch.vertex_count}q", *ch.rank))
        for (u, w), length in items:
            f.write(struct.pack("<4q", u, w, length, ch.middle.get((u, w), -1)))


def load_ch(graph: Graph, path: Union[str, Path]) -> ContractionHierarchy:
    """Read a cached hierarchy, checking magic, version and graph fingerprint."""
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError:
        raise FileNotFoundError(f"CH cache not found: {path}")
    header = struct.calcsize("<HQQ")
    if data[:4] != CACHE_MAGIC:
        raise CHCacheError(f"{path}: not a CH cache file")
    try:
        version, n, m = struct.unpack_from("<HQQ", data, 4)
        if version != CACHE_VERSION:
            raise CHCacheError(f"{path}: unsupported cache version {version}")
        offset = 4 + header
        if data[offset:offset + 16] != _graph_fingerprint(graph):
            raise CHCacheError(f"{path}: cache was built for a different graph")
        offset += 16
        rank = list(struct.unpack_from(f"<{n}q", data, offset))
        offset += 8 * n
        edges: Dict[Tuple[int, int], int] = {}
        middle: Dict[Tuple[int, int], int] = {}
        for _ in range(m):
            u, w, length, via = struct.unpack_from("<4q", data, offset)
            offset += 32
            edges[(u, w)] = length
            if via >= 0:
                middle[(u, w)] = via
    except struct.error as e:
        raise CHCacheError(f"{path}: truncated cache file ({e})")
    return ContractionHierarchy(vertex_count=n, rank=rank, edges=edges, middle=middle)
