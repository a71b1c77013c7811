"""Shared search machinery: bundled Dijkstra, sorted buckets and counters."""

import heapq
import math
from bisect import bisect_right
from dataclasses import dataclass, fields
from enum import Enum
from typing import Callable, Dict, Hashable, Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

INFINITY = math.inf

Adjacency = Sequence[Sequence[Tuple[int, int]]]
# (global source indices of the lanes, candidate values) -> mask of lanes to discard
LanePrune = Callable[[np.ndarray, np.ndarray], np.ndarray]
# (vertex, global source indices of the lanes, settled values or INFINITY)
SettleHook = Callable[[int, np.ndarray, np.ndarray], None]


@dataclass
class SearchCounters:
    """Work counters for one search phase."""
    relaxed_edges: int = 0
    settled_vertices: int = 0
    scanned_entries: int = 0
    settled_labels: int = 0
    pruned_labels: int = 0
    dominated_labels: int = 0
    exact_queries: int = 0

    def add(self, other: "SearchCounters") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))

    def as_dict(self) -> Dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def as_distance(value) -> Union[int, float]:
    """Integer distance, or INFINITY when unreachable."""
    return INFINITY if value == INFINITY else int(value)


def _finite_map(labels: Dict[int, np.ndarray], lane: int) -> Dict[int, int]:
    return {v: int(lab[lane]) for v, lab in labels.items() if lab[lane] != INFINITY}


def _bundled_search(
    adjacency: Adjacency,
    batch: Sequence[int],
    lane_ids: np.ndarray,
    radius: float,
    prune: Optional[LanePrune],
    counters: SearchCounters,
    targets: Optional[Set[int]],
    on_settle: Optional[SettleHook] = None,
) -> List[Dict[int, int]]:
    """Advance len(batch) searches together over one label block.

    Lanes whose label improves after a vertex was relaxed are re-propagated
    (label-correcting), so every lane ends with the single-source result.
    """
    k = len(batch)
    labels: Dict[int, np.ndarray] = {}
    relaxed: Dict[int, np.ndarray] = {}
    heap: List[Tuple[float, int]] = []

    for lane, source in enumerate(batch):
        labels.setdefault(source, np.full(k, INFINITY))[lane] = 0.0
    for source in sorted(set(batch)):
        heapq.heappush(heap, (0.0, source))

    while heap:
        key, u = heapq.heappop(heap)
        current = labels[u]
        done = relaxed.get(u)
        if done is not None and np.array_equal(done, current):
            continue
        if targets and key >= _max_target_label(labels, targets):
            break
        active = current.copy() if done is None else np.where(current < done, current, INFINITY)
        relaxed[u] = current.copy()
        counters.settled_vertices += 1
        if on_settle is not None:
            on_settle(u, lane_ids, active)

        for v, weight in adjacency[u]:
            counters.relaxed_edges += 1
            candidate = active + weight
            candidate[candidate > radius] = INFINITY
            if prune is not None:
                candidate[prune(lane_ids, candidate)] = INFINITY
            label = labels.get(v)
            if label is None:
                label = labels[v] = np.full(k, INFINITY)
            improved = candidate < label
            if improved.any():
                label[improved] = candidate[improved]
                heapq.heappush(heap, (float(candidate[improved].min()), v))

    return [_finite_map(labels, lane) for lane in range(k)]


def _max_target_label(labels: Dict[int, np.ndarray], targets: Set[int]) -> float:
    worst = 0.0
    for t in targets:
        label = labels.get(t)
        if label is None:
            return INFINITY
        worst = max(worst, float(label.max()))
    return worst


def dijkstra(
    adjacency: Adjacency,
    sources: Sequence[int],
    radius: float = INFINITY,
    prune: Optional[LanePrune] = None,
    k: int = 1,
    counters: Optional[SearchCounters] = None,
    targets: Optional[Iterable[int]] = None,
    on_settle: Optional[SettleHook] = None,
) -> List[Dict[int, int]]:
    """Bounded, optionally bundled, Dijkstra from every source.

    Args:
        adjacency: Adjacency lists in search direction; pass reversed lists
            for backward searches
        sources: Root vertices, one result map per entry
        radius: Distances above the radius are never recorded
        prune: Monotone per-lane discard rule evaluated on tentative values;
            receives the indices of the lanes' sources within ``sources``
        k: Number of lanes advanced together
        counters: Work counters to update
        targets: Stop once all targets are final in every lane; other
            vertices are then only exact up to the final queue key
        on_settle: Called whenever a vertex is settled with the lane values
            just propagated; a lane may be settled again at a smaller value

    Returns:
        Per-source maps vertex -> exact distance
    """
    if not sources:
        raise ValueError("dijkstra requires at least one source")
    counters = counters if counters is not None else SearchCounters()
    target_set = set(targets) if targets is not None else None
    width = max(1, k)

    results: List[Dict[int, int]] = []
    for offset in range(0, len(sources), width):
        batch = list(sources[offset:offset + width])
        lane_ids = np.arange(offset, offset + len(batch))
        results.extend(
            _bundled_search(adjacency, batch, lane_ids, radius, prune, counters, target_set, on_settle)
        )
    return results


class BucketOrder(Enum):
    """Sort discipline of a bucket store."""
    LEEWAY = "leeway"  # remaining leeway, descending
    DIST = "dist"      # distance, ascending


@dataclass(frozen=True)
class BucketEntry:
    """An (owner, distance) pair stored at a vertex, with its sort key."""
    owner: Hashable
    dist: int
    key: int


StopRule = Callable[[BucketEntry, float], bool]


class BucketStore:
    """Per-vertex entry lists kept sorted by key with stable ties."""

    def __init__(self, order: BucketOrder, sorted_buckets: bool = True):
        self.order = order
        self.sorted_buckets = sorted_buckets
        self._entries: Dict[int, List[BucketEntry]] = {}
        self._keys: Dict[int, List[int]] = {}
        self._owner_vertices: Dict[Hashable, Set[int]] = {}

    def _sort_value(self, key: int) -> int:
        return -key if self.order is BucketOrder.LEEWAY else key

    def insert(self, vertex: int, entry: BucketEntry) -> None:
        if entry.key == INFINITY or entry.key != entry.key:
            raise ValueError("bucket entry sort key must be finite")
        entries = self._entries.setdefault(vertex, [])
        keys = self._keys.setdefault(vertex, [])
        value = self._sort_value(entry.key)
        pos = bisect_right(keys, value) if self.sorted_buckets else len(keys)
        entries.insert(pos, entry)
        keys.insert(pos, value)
        self._owner_vertices.setdefault(entry.owner, set()).add(vertex)

    def remove_owner(self, owner: Hashable, vertices: Optional[Iterable[int]] = None) -> None:
        known = self._owner_vertices.get(owner)
        if not known:
            return
        targets = set(known) if vertices is None else known & set(vertices)
        for vertex in targets:
            entries = self._entries[vertex]
            keep = [i for i, e in enumerate(entries) if e.owner != owner]
            self._entries[vertex] = [entries[i] for i in keep]
            self._keys[vertex] = [self._keys[vertex][i] for i in keep]
            if not keep:
                del self._entries[vertex]
                del self._keys[vertex]
        known -= targets
        if not known:
            del self._owner_vertices[owner]

    def entries(self, vertex: int) -> List[BucketEntry]:
        return self._entries.get(vertex, [])

    def owners(self) -> List[Hashable]:
        return list(self._owner_vertices)

    def vertices_of(self, owner: Hashable) -> Set[int]:
        return set(self._owner_vertices.get(owner, ()))

    def __len__(self) -> int:
        return sum(len(e) for e in self._entries.values())


def bucket_insert(store: BucketStore, vertex: int, entry: BucketEntry) -> None:
    store.insert(vertex, entry)


def bucket_remove_owner(store: BucketStore, owner: Hashable, vertices: Optional[Iterable[int]] = None) -> None:
    """Remove every entry of owner at the given vertices; unknown owners are a no-op."""
    store.remove_owner(owner, vertices)


def bucket_scan(
    store: BucketStore,
    vertex: int,
    query_dist: float,
    stop_rule: StopRule,
    visit: Optional[Callable[[BucketEntry], None]] = None,
    counters: Optional[SearchCounters] = None,
) -> List[BucketEntry]:
    """Visit the bucket at vertex until stop_rule fires.

    With sorted buckets the scan ends at the first entry the (monotone) rule
    rejects. Unsorted stores are scanned completely and rejected entries are
    skipped, which visits the same set.
    """
    visited: List[BucketEntry] = []
    for entry in store.entries(vertex):
        if counters is not None:
            counters.scanned_entries += 1
        if stop_rule(entry, query_dist):
            if store.sorted_buckets:
                break
            continue
        visited.append(entry)
        if visit is not None:
            visit(entry)
    return visited


def never(entry: BucketEntry, query_dist: float) -> bool:
    return False
