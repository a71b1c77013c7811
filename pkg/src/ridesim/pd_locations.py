"""Pickup/dropoff candidates within walking radius and their vehicle distances."""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .ch import ContractionHierarchy, ch_query
from .fleet import PDLocation, Request
from .network import RoadNetworkPair
from .search import INFINITY, BucketEntry, BucketOrder, BucketStore, SearchCounters, as_distance, bucket_scan, dijkstra

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PDSet:
    """Pickup and dropoff candidates of one request, sorted by walk then vertex."""
    request: Request
    pickups: Tuple[PDLocation, ...]
    dropoffs: Tuple[PDLocation, ...]

    @property
    def empty(self) -> bool:
        return not self.pickups or not self.dropoffs

    @property
    def min_pickup_walk(self) -> float:
        return min((p.walk for p in self.pickups), default=INFINITY)

    @property
    def min_dropoff_walk(self) -> float:
        return min((d.walk for d in self.dropoffs), default=INFINITY)


@dataclass
class PDDistanceMatrix:
    """Vehicle distances from every pickup (rows) to every dropoff (columns)."""
    distances: np.ndarray

    def get(self, pickup: int, dropoff: int):
        return as_distance(self.distances[pickup, dropoff])

    @property
    def min_dist(self) -> float:
        return float(self.distances.min()) if self.distances.size else INFINITY

    def min_for_pickup(self, pickup: int) -> float:
        row = self.distances[pickup]
        return float(row.min()) if row.size else INFINITY


def _to_locations(walks: dict, network: RoadNetworkPair) -> Tuple[PDLocation, ...]:
    ordered = sorted(
        ((walk, v) for v, walk in walks.items() if network.is_boardable(v)),
    )
    return tuple(PDLocation(index=i, vertex=v, walk=walk) for i, (walk, v) in enumerate(ordered))


def find_pd_locations(network: RoadNetworkPair, request: Request, radius: int) -> PDSet:
    """Boardable vertices within walking radius of the origin and destination.

    Dropoffs use the reverse pedestrian graph so walks are measured towards
    the destination.
    """
    forward = dijkstra(network.psg.adjacency(), [request.origin], radius=radius)[0]
    backward = dijkstra(network.psg.adjacency(reverse=True), [request.destination], radius=radius)[0]
    pd_set = PDSet(
        request=request,
        pickups=_to_locations(forward, network),
        dropoffs=_to_locations(backward, network),
    )
    if pd_set.empty:
        logger.warning(
            "Request %d has %d pickups and %d dropoffs; only walking is possible",
            request.id, len(pd_set.pickups), len(pd_set.dropoffs),
        )
    return pd_set


def max_pd_dist(
    network: RoadNetworkPair,
    ch: ContractionHierarchy,
    pd_set: PDSet,
    counters: Optional[SearchCounters] = None,
) -> float:
    """Upper bound on every pickup-to-dropoff vehicle distance via origin and destination."""
    request = pd_set.request
    if pd_set.empty:
        return INFINITY
    pickups = [p.vertex for p in pd_set.pickups]
    dropoffs = [d.vertex for d in pd_set.dropoffs]
    to_origin = dijkstra(
        network.veh.adjacency(reverse=True), [request.origin], targets=pickups, counters=counters
    )[0]
    from_destination = dijkstra(
        network.veh.adjacency(), [request.destination], targets=dropoffs, counters=counters
    )[0]
    direct = ch_query(ch, request.origin, request.destination, counters)
    head = max(to_origin.get(v, INFINITY) for v in pickups)
    tail = max(from_destination.get(v, INFINITY) for v in dropoffs)
    return head + direct + tail


def pd_distance_search(
    ch: ContractionHierarchy,
    pd_set: PDSet,
    bound: float = INFINITY,
    k: int = 32,
    radius_pruning: bool = True,
    counters: Optional[SearchCounters] = None,
) -> PDDistanceMatrix:
    """All pickup-to-dropoff distances by one bucket many-to-many search.

    Dropoffs deposit entries over their reverse downward spaces; pickups scan
    them from their upward spaces. Both sides are truncated at ``bound``.
    """
    pickups = [p.vertex for p in pd_set.pickups]
    dropoffs = [d.vertex for d in pd_set.dropoffs]
    matrix = np.full((len(pickups), len(dropoffs)), INFINITY)
    if not pickups or not dropoffs:
        return PDDistanceMatrix(matrix)
    radius = bound if radius_pruning else INFINITY
    counters = counters if counters is not None else SearchCounters()

    store = BucketStore(BucketOrder.DIST)
    down_spaces = dijkstra(ch.down_rev, dropoffs, radius=radius, k=k, counters=counters)
    for column, space in enumerate(down_spaces):
        for vertex, dist in space.items():
            store.insert(vertex, BucketEntry(owner=column, dist=dist, key=dist))

    def beyond(entry: BucketEntry, query_dist: float) -> bool:
        return query_dist + entry.dist > radius

    up_spaces = dijkstra(ch.up, pickups, radius=radius, k=k, counters=counters)
    for row, space in enumerate(up_spaces):
        for vertex, dist in space.items():
            for entry in bucket_scan(store, vertex, dist, beyond, counters=counters):
                if dist + entry.dist < matrix[row, entry.owner]:
                    matrix[row, entry.owner] = dist + entry.dist
    return PDDistanceMatrix(matrix)

