"""Elliptic bucket entries, stop-to-PD-location queries and insertion enumeration.

Each route leg (s_i, s_{i+1}) keeps source entries for s_i and target entries
for s_{i+1} only where a detour through the vertex can still fit the leg's
leeway. Entries are keyed by their remaining leeway.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

from .ch import ContractionHierarchy, SearchDirection, ch_search_space
from .cost import BestInsertion, insertion_cost
from .fleet import FleetState, Insertion, PDLocation, Request, leeway, pickup_merges
from .pd_locations import PDDistanceMatrix, PDSet
from .search import (
    INFINITY,
    BucketEntry,
    BucketOrder,
    BucketStore,
    SearchCounters,
    bucket_remove_owner,
    bucket_scan,
    dijkstra,
    never,
)

logger = logging.getLogger(__name__)


def generate_elliptic_entries(
    ch: ContractionHierarchy,
    store: BucketStore,
    owner: int,
    location: int,
    budget: float,
    direction: SearchDirection,
    truncate: bool = True,
    counters: Optional[SearchCounters] = None,
) -> int:
    """Insert entries for one stop over its (truncated) search space.

    ``budget`` is the leg's leeway minus the stop time; an entry at distance
    d gets key budget - d. Returns the number of entries written.
    """
    if truncate and budget < 0:
        return 0
    radius = budget if truncate else INFINITY
    space = ch_search_space(ch, location, direction, radius=radius, counters=counters)
    for vertex, dist in space:
        store.insert(vertex, BucketEntry(owner=owner, dist=dist, key=budget - dist))
    return len(space)


def remove_elliptic_entries(store: BucketStore, owner: int) -> None:
    bucket_remove_owner(store, owner)


class EllipticBuckets:
    """Route listener that keeps source and target buckets in sync with the fleet."""

    def __init__(
        self,
        ch: ContractionHierarchy,
        stop_time: int,
        sorted_buckets: bool = True,
        truncate: bool = True,
    ):
        self.ch = ch
        self.stop_time = stop_time
        self.truncate = truncate
        self.sources = BucketStore(BucketOrder.LEEWAY, sorted_buckets)
        self.targets = BucketStore(BucketOrder.LEEWAY, sorted_buckets)
        self.stop_index: Dict[int, Tuple[int, int]] = {}
        self.stops_at: Dict[int, Set[int]] = defaultdict(set)
        self.counters = SearchCounters()
        self._sources: Dict[int, Tuple[int, float]] = {}
        self._targets: Dict[int, Tuple[int, float]] = {}
        self._vehicle_stops: Dict[int, Dict[int, int]] = {}

    def on_route_changed(self, state: FleetState, vehicle_id: int) -> None:
        route = state.routes[vehicle_id]
        n = len(route) - 1
        wanted_sources = {}
        wanted_targets = {}
        for a in range(n):
            budget = leeway(route, a) - self.stop_time
            wanted_sources[route[a].uid] = (route[a].location, budget)
            wanted_targets[route[a + 1].uid] = (route[a + 1].location, budget)

        old_stops = self._vehicle_stops.get(vehicle_id, {})
        current = {stop.uid: stop.location for stop in route}
        for uid, location in old_stops.items():
            if uid not in current:
                self.stop_index.pop(uid, None)
                self.stops_at[location].discard(uid)
                self._sync(self.sources, self._sources, uid, None, SearchDirection.UP)
                self._sync(self.targets, self._targets, uid, None, SearchDirection.DOWN)
        for a, stop in enumerate(route):
            self.stop_index[stop.uid] = (vehicle_id, a)
            self.stops_at[stop.location].add(stop.uid)
            self._sync(self.sources, self._sources, stop.uid, wanted_sources.get(stop.uid), SearchDirection.UP)
            self._sync(self.targets, self._targets, stop.uid, wanted_targets.get(stop.uid), SearchDirection.DOWN)
        self._vehicle_stops[vehicle_id] = current

    def _sync(
        self,
        store: BucketStore,
        known: Dict[int, Tuple[int, float]],
        uid: int,
        wanted: Optional[Tuple[int, float]],
        direction: SearchDirection,
    ) -> None:
        if known.get(uid) == wanted:
            return
        if uid in known:
            remove_elliptic_entries(store, uid)
            del known[uid]
        if wanted is not None:
            location, budget = wanted
            generate_elliptic_entries(
                self.ch, store, uid, location, budget, direction, self.truncate, self.counters
            )
            known[uid] = wanted

    def max_budget(self) -> float:
        budgets = [b for _, b in self._sources.values()]
        return max(budgets, default=-INFINITY)

    def vehicles_with_stop_at(self, vertices: Iterable[int]) -> Set[int]:
        return {self.stop_index[uid][0] for v in vertices for uid in self.stops_at.get(v, ())}


@dataclass
class EllipticDistances:
    """(dist(s_i, x), dist(x, s_{i+1})) per (vehicle, i) and PD-location index."""
    legs: Dict[Tuple[int, int], Dict[int, Tuple[int, int]]] = field(default_factory=dict)

    def get(self, vehicle_id: int, i: int, index: int) -> Optional[Tuple[int, int]]:
        return self.legs.get((vehicle_id, i), {}).get(index)

    def vehicles(self) -> Set[int]:
        return {vehicle_id for vehicle_id, _ in self.legs}


def _exceeds_leeway(entry: BucketEntry, query_dist: float) -> bool:
    return query_dist > entry.key


def elliptic_query(
    buckets: EllipticBuckets,
    state: FleetState,
    locations: Sequence[PDLocation],
    k: int = 16,
    counters: Optional[SearchCounters] = None,
) -> EllipticDistances:
    """Distances between PD-locations and every stop pair whose ellipse contains them."""
    result = EllipticDistances()
    radius = buckets.max_budget()
    if not locations or radius < 0:
        return result
    vertices = [loc.vertex for loc in locations]
    ch = buckets.ch

    to_location: Dict[Tuple[int, int], int] = {}
    down_spaces = dijkstra(ch.down_rev, vertices, radius=radius, k=k, counters=counters)
    for loc, space in zip(locations, down_spaces):
        for vertex, dist in space.items():
            for entry in bucket_scan(buckets.sources, vertex, dist, _exceeds_leeway, counters=counters):
                key = (entry.owner, loc.index)
                to_location[key] = min(to_location.get(key, INFINITY), entry.dist + dist)

    from_location: Dict[Tuple[int, int], int] = {}
    up_spaces = dijkstra(ch.up, vertices, radius=radius, k=k, counters=counters)
    for loc, space in zip(locations, up_spaces):
        for vertex, dist in space.items():
            for entry in bucket_scan(buckets.targets, vertex, dist, _exceeds_leeway, counters=counters):
                key = (entry.owner, loc.index)
                from_location[key] = min(from_location.get(key, INFINITY), entry.dist + dist)

    for (uid, index), to_dist in sorted(to_location.items()):
        vehicle_id, a = buckets.stop_index[uid]
        route = state.routes[vehicle_id]
        from_dist = from_location.get((route[a + 1].uid, index))
        if from_dist is None:
            continue
        if to_dist + buckets.stop_time + from_dist > leeway(route, a):
            continue
        result.legs.setdefault((vehicle_id, a), {})[index] = (to_dist, from_dist)
    return result


@dataclass(frozen=True)
class PickupOption:
    """A pickup after stop i; inexact options carry dist(l(s_0), p) as a lower bound."""
    location: PDLocation
    i: int
    to_pickup: int = 0
    from_pickup: int = 0
    merged: bool = False
    exact: bool = True


@dataclass(frozen=True)
class DropoffOption:
    """A dropoff after stop j; at_stop marks d = l(s_j), which merges when j > i."""
    location: PDLocation
    j: int
    to_dropoff: Optional[int] = None
    from_dropoff: Optional[int] = None
    at_stop: bool = False


def pickup_options(
    state: FleetState, vehicle_id: int, pickups: Sequence[PDLocation], distances: EllipticDistances
) -> Dict[int, List[PickupOption]]:
    """Pickup candidates after each stop i < n of one vehicle."""
    route = state.routes[vehicle_id]
    rerouted = state.departure_base(vehicle_id)[1] != route[0].departure
    options: Dict[int, List[PickupOption]] = defaultdict(list)
    for i in range(len(route) - 1):
        for loc in pickups:
            if pickup_merges(route, i, loc.vertex, state.now):
                options[i].append(PickupOption(loc, i, merged=True))
                continue
            found = distances.get(vehicle_id, i, loc.index)
            if found is not None:
                options[i].append(
                    PickupOption(loc, i, found[0], found[1], exact=not (i == 0 and rerouted))
                )
    return options


def dropoff_options(
    state: FleetState, vehicle_id: int, dropoffs: Sequence[PDLocation], distances: EllipticDistances
) -> Dict[int, List[DropoffOption]]:
    """Dropoff candidates after each stop j < n of one vehicle."""
    route = state.routes[vehicle_id]
    options: Dict[int, List[DropoffOption]] = defaultdict(list)
    for j in range(len(route) - 1):
        for loc in dropoffs:
            at_stop = route[j].location == loc.vertex
            found = distances.get(vehicle_id, j, loc.index)
            if found is None and not at_stop:
                continue
            to_d, from_d = found if found is not None else (None, None)
            options[j].append(DropoffOption(loc, j, to_d, from_d, at_stop))
    return options


def paired_insertions(
    request: Request,
    vehicle_id: int,
    pickup: PickupOption,
    dropoffs: Dict[int, List[DropoffOption]],
    matrix: PDDistanceMatrix,
    last_j: int,
) -> Iterator[Insertion]:
    """Insertions combining one pickup option with dropoffs after stops i..last_j."""
    i = pickup.i
    for j in range(i, last_j + 1):
        for drop in dropoffs.get(j, ()):
            if j == i:
                if drop.from_dropoff is None:
                    continue
                pd = matrix.get(pickup.location.index, drop.location.index)
                if pd == INFINITY:
                    continue
                yield Insertion(
                    request, vehicle_id, pickup.location, drop.location, i, j,
                    to_pickup=pickup.to_pickup, pickup_dropoff=pd, from_dropoff=drop.from_dropoff,
                )
            elif drop.at_stop:
                yield Insertion(
                    request, vehicle_id, pickup.location, drop.location, i, j,
                    to_pickup=pickup.to_pickup, from_pickup=pickup.from_pickup,
                )
            elif drop.to_dropoff is not None:
                yield Insertion(
                    request, vehicle_id, pickup.location, drop.location, i, j,
                    to_pickup=pickup.to_pickup, from_pickup=pickup.from_pickup,
                    to_dropoff=drop.to_dropoff, from_dropoff=drop.from_dropoff,
                )


def candidate_vehicles(
    buckets: EllipticBuckets, pd_set: PDSet, pickup_distances: EllipticDistances
) -> List[int]:
    """Vehicles with an elliptic pickup distance or a stop at a pickup vertex."""
    merge_candidates = buckets.vehicles_with_stop_at(p.vertex for p in pd_set.pickups)
    return sorted(pickup_distances.vehicles() | merge_candidates)


def enumerate_ord_op(
    state: FleetState,
    buckets: EllipticBuckets,
    pd_set: PDSet,
    pickup_distances: EllipticDistances,
    dropoff_distances: EllipticDistances,
    matrix: PDDistanceMatrix,
    max_trip: float,
    best: BestInsertion,
) -> BestInsertion:
    """Offer every Ordinary and OP insertion (0 < i <= j < n) to best."""
    request = pd_set.request
    for vehicle_id in candidate_vehicles(buckets, pd_set, pickup_distances):
        n = state.stop_count(vehicle_id)
        if n < 2:
            continue
        pickups = pickup_options(state, vehicle_id, pd_set.pickups, pickup_distances)
        dropoffs = dropoff_options(state, vehicle_id, pd_set.dropoffs, dropoff_distances)
        for i in range(1, n):
            for option in pickups.get(i, ()):
                for insertion in paired_insertions(request, vehicle_id, option, dropoffs, matrix, n - 1):
                    best.offer(insertion, insertion_cost(state, insertion, max_trip))
    return best


class CurrentLocationDistances:
    """Exact distances from vehicles' current locations to pickups.

    Current locations deposit transient entries over their upward spaces;
    pickups scan them from their reverse downward spaces. Results are cached
    for the duration of one dispatch.
    """

    def __init__(
        self,
        ch: ContractionHierarchy,
        state: FleetState,
        k: int = 16,
        counters: Optional[SearchCounters] = None,
    ):
        self.ch = ch
        self.state = state
        self.k = k
        self.counters = counters if counters is not None else SearchCounters()
        self._cache: Dict[Tuple[int, int], float] = {}

    def resolve(self, pairs: Iterable[Tuple[int, PDLocation]]) -> Dict[Tuple[int, int], float]:
        pairs = list(pairs)
        missing = sorted(
            {(vid, loc.index): loc for vid, loc in pairs if (vid, loc.index) not in self._cache}.items()
        )
        if missing:
            store = BucketStore(BucketOrder.DIST)
            for vehicle_id in sorted({vid for (vid, _), _ in missing}):
                location, _ = self.state.departure_base(vehicle_id)
                space = ch_search_space(self.ch, location, SearchDirection.UP, counters=self.counters)
                for vertex, dist in space:
                    store.insert(vertex, BucketEntry(owner=vehicle_id, dist=dist, key=dist))
            targets = sorted({loc.index: loc for _, loc in missing}.values(), key=lambda loc: loc.index)
            spaces = dijkstra(self.ch.down_rev, [loc.vertex for loc in targets], k=self.k, counters=self.counters)
            found: Dict[Tuple[int, int], float] = {}
            for loc, space in zip(targets, spaces):
                for vertex, dist in space.items():
                    for entry in bucket_scan(store, vertex, dist, never, counters=self.counters):
                        key = (entry.owner, loc.index)
                        found[key] = min(found.get(key, INFINITY), entry.dist + dist)
            for key, _ in missing:
                self._cache[key] = found.get(key, INFINITY)
            self.counters.exact_queries += len(missing)
        return {(vid, loc.index): self._cache[(vid, loc.index)] for vid, loc in pairs}


def resolve_first_leg(
    state: FleetState,
    resolver: CurrentLocationDistances,
    candidates: Sequence[Tuple[int, PickupOption, float]],
    best: BestInsertion,
) -> List[Tuple[int, PickupOption]]:
    """Exact pickup options for inexact first-leg candidates whose bound survives."""
    survivors = [(vid, option) for vid, option, bound in candidates if not best.prunes(bound)]
    if not survivors:
        return []
    exact = resolver.resolve((vid, option.location) for vid, option in survivors)
    resolved = []
    for vid, option in survivors:
        dist = exact[(vid, option.location.index)]
        if dist != INFINITY:
            resolved.append((vid, replace(option, to_pickup=int(dist), exact=True)))
    return resolved


def enumerate_pbns(
    state: FleetState,
    buckets: EllipticBuckets,
    pd_set: PDSet,
    pickup_distances: EllipticDistances,
    dropoff_distances: EllipticDistances,
    matrix: PDDistanceMatrix,
    max_trip: float,
    best: BestInsertion,
    resolver: CurrentLocationDistances,
) -> BestInsertion:
    """Offer every pickup-before-next-stop insertion (i = 0, j < n) to best.

    For vehicles already under way the cost is first bounded with the
    departure from s_0 and dist(l(s_0), p); only survivors get an exact
    distance from the current location.
    """
    request = pd_set.request
    deferred: List[Tuple[int, PickupOption, float]] = []
    dropoffs_by_vehicle = {}
    for vehicle_id in candidate_vehicles(buckets, pd_set, pickup_distances):
        n = state.stop_count(vehicle_id)
        if n < 1:
            continue
        dep_s0 = state.routes[vehicle_id][0].departure
        dropoffs = dropoff_options(state, vehicle_id, pd_set.dropoffs, dropoff_distances)
        dropoffs_by_vehicle[vehicle_id] = dropoffs
        for option in pickup_options(state, vehicle_id, pd_set.pickups, pickup_distances).get(0, ()):
            insertions = paired_insertions(request, vehicle_id, option, dropoffs, matrix, n - 1)
            if option.exact:
                for insertion in insertions:
                    best.offer(insertion, insertion_cost(state, insertion, max_trip))
                continue
            bound = min(
                (insertion_cost(state, ins, max_trip, dep_base=dep_s0).total for ins in insertions),
                default=INFINITY,
            )
            if bound != INFINITY:
                deferred.append((vehicle_id, option, bound))

    for vehicle_id, option in resolve_first_leg(state, resolver, deferred, best):
        n = state.stop_count(vehicle_id)
        dropoffs = dropoffs_by_vehicle[vehicle_id]
        for insertion in paired_insertions(request, vehicle_id, option, dropoffs, matrix, n - 1):
            best.offer(insertion, insertion_cost(state, insertion, max_trip))
    return best
