"""Insertions after the last stop: last-stop buckets and three search strategies.

PALS (pickup after last stop) and DALS (dropoff after last stop) need the
distance from each vehicle's last stop to PD-locations. The distances come
from a reverse Dijkstra, an individual bucket search per location, or one
collective label search over all locations with domination pruning.
"""

import heapq
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .ch import ContractionHierarchy, SearchDirection, ch_query, ch_search_space
from .config import CostParameters, LastStopStrategy, SearchConfig
from .cost import (
    BestInsertion,
    dals_lower_bound,
    insertion_cost,
    pals_cost_c_prime,
    pals_lower_bound,
)
from .elliptic import CurrentLocationDistances, EllipticDistances, pickup_options, resolve_first_leg
from .fleet import FleetState, Insertion, PDLocation
from .network import RoadNetworkPair
from .pd_locations import PDDistanceMatrix, PDSet
from .search import (
    INFINITY,
    BucketEntry,
    BucketOrder,
    BucketStore,
    LanePrune,
    SearchCounters,
    bucket_remove_owner,
    bucket_scan,
    dijkstra,
    never,
)

logger = logging.getLogger(__name__)

LaneBound = Callable[[np.ndarray, np.ndarray], np.ndarray]


def exchange_last_stop_entries(
    ch: ContractionHierarchy,
    store: BucketStore,
    vehicle_id: int,
    old_last: Optional[int],
    new_last: int,
    counters: Optional[SearchCounters] = None,
) -> None:
    """Move a vehicle's entries from the old last-stop vertex's upward space to the new one."""
    if old_last == new_last:
        return
    if old_last is not None:
        old_space = ch_search_space(ch, old_last, SearchDirection.UP, counters=counters)
        bucket_remove_owner(store, vehicle_id, [v for v, _ in old_space])
    for vertex, dist in ch_search_space(ch, new_last, SearchDirection.UP, counters=counters):
        store.insert(vertex, BucketEntry(owner=vehicle_id, dist=dist, key=dist))


class LastStopBuckets:
    """Route listener holding one entry set per vehicle, rooted at its last stop."""

    def __init__(self, ch: ContractionHierarchy, sorted_buckets: bool = True):
        self.ch = ch
        self.store = BucketStore(BucketOrder.DIST, sorted_buckets)
        self.last_location: Dict[int, int] = {}
        self.counters = SearchCounters()

    def on_route_changed(self, state: FleetState, vehicle_id: int) -> None:
        new_last = state.routes[vehicle_id][-1].location
        old_last = self.last_location.get(vehicle_id)
        if old_last != new_last:
            exchange_last_stop_entries(self.ch, self.store, vehicle_id, old_last, new_last, self.counters)
            self.last_location[vehicle_id] = new_last


def _prune_above(bounds: LaneBound, limit: Callable[[], float]) -> LanePrune:
    return lambda lanes, values: bounds(lanes, values) > limit()


def last_stop_dijkstra(
    network: RoadNetworkPair,
    state: FleetState,
    locations: Sequence[PDLocation],
    k: int = 64,
    prune: Optional[LanePrune] = None,
    counters: Optional[SearchCounters] = None,
) -> Dict[Tuple[int, int], int]:
    """Distances from every vehicle's last stop to each location by reverse Dijkstra."""
    if not locations:
        return {}
    spaces = dijkstra(
        network.veh.adjacency(reverse=True), [loc.vertex for loc in locations],
        k=k, prune=prune, counters=counters,
    )
    result = {}
    for vehicle_id in sorted(state.routes):
        last = state.routes[vehicle_id][-1].location
        for loc, space in zip(locations, spaces):
            if last in space:
                result[(vehicle_id, loc.index)] = space[last]
    return result


def individual_last_stop_bch(
    buckets: LastStopBuckets,
    locations: Sequence[PDLocation],
    lower_bound: Optional[LaneBound],
    limit: Callable[[], float],
    visit: Optional[Callable[[int, PDLocation, int], None]] = None,
    k: int = 8,
    counters: Optional[SearchCounters] = None,
) -> Dict[Tuple[int, int], int]:
    """One reverse downward search per location scanning the last-stop buckets.

    Args:
        buckets: Last-stop buckets sorted by d↑
        locations: Pickups (PALS) or dropoffs (DALS)
        lower_bound: Vectorized cost lower bound per (lane, distance); None
            disables cost pruning
        limit: Current global cost bound; may shrink while scanning
        visit: Called with (vehicle, location, tentative distance) whenever a
            tentative distance improves, which lets PALS tighten the bound
        k: Lanes per bundled search
        counters: Work counters

    Returns:
        Smallest distance found per (vehicle, location index)
    """
    if not locations:
        return {}
    ch = buckets.ch
    prune = _prune_above(lower_bound, limit) if lower_bound is not None else None
    best: Dict[Tuple[int, int], int] = {}

    # Scans run as vertices settle so that visits tighten limit() for the rest of the search.
    def scan(vertex: int, lane_ids: np.ndarray, values: np.ndarray) -> None:
        for lane, down in zip(lane_ids.tolist(), values.tolist()):
            if down == INFINITY:
                continue
            loc = locations[lane]
            lane_id = np.array([lane])

            def too_costly(entry: BucketEntry, query_dist: float) -> bool:
                if lower_bound is None:
                    return False
                return bool(lower_bound(lane_id, np.array([query_dist + entry.dist]))[0] > limit())

            for entry in bucket_scan(buckets.store, vertex, down, too_costly, counters=counters):
                key = (entry.owner, loc.index)
                x = entry.dist + int(down)
                if x < best.get(key, INFINITY):
                    best[key] = x
                    if visit is not None:
                        visit(entry.owner, loc, x)

    dijkstra(
        ch.down_rev, [loc.vertex for loc in locations], k=k, prune=prune,
        counters=counters, on_settle=scan,
    )
    return best


@dataclass(eq=False)
class PalsLabel:
    """A pickup-dropoff pair reaching a vertex at distance dist above the pickup."""
    pickup: PDLocation
    dropoff: PDLocation
    dist_pd: int
    dist: int
    closed: bool = False
    alive: bool = True


def _max_departure_gap(a1: float, w1: float, a2: float, w2: float) -> float:
    """Supremum over u >= 0 of max(u + a1, w1) - max(u + a2, w2)."""
    points = (0.0, max(0.0, w1 - a1), max(0.0, w2 - a2))
    gap = max(max(u + a1, w1) - max(u + a2, w2) for u in points)
    return max(gap, a1 - a2)


def delta_c_max(params: CostParameters, first: PalsLabel, second: PalsLabel) -> float:
    """Upper bound on c(first) - c(second) for completions sharing the path above the vertex.

    Departure at the pickup is bounded from above for the first label (no
    merge) and from below for the second (merge when its distance is 0).
    Penalty differences are clamped at zero.
    """
    stop_time = params.stop_time
    a1 = first.dist + stop_time
    a2 = second.dist + stop_time if second.dist > 0 else 0
    departure = _max_departure_gap(a1, first.pickup.walk, a2, second.pickup.walk)
    detour = departure + first.dist_pd - second.dist_pd
    trip = departure + first.dist_pd + first.dropoff.walk - second.dist_pd - second.dropoff.walk
    walk = first.pickup.walk + first.dropoff.walk - second.pickup.walk - second.dropoff.walk
    return (
        detour
        + params.trip_weight * trip
        + params.walk_weight * walk
        + params.gamma_wait * max(departure, 0)
        + params.gamma_trip * max(trip, 0)
    )


def pals_dominates(params: CostParameters, first: PalsLabel, second: PalsLabel) -> bool:
    if first.pickup.index == second.pickup.index and first.dropoff.index == second.dropoff.index:
        return first.dist <= second.dist
    return delta_c_max(params, first, second) < 0


@dataclass(eq=False)
class DalsLabel:
    """A dropoff reaching a vertex at distance dist above it."""
    dropoff: PDLocation
    dist: int
    closed: bool = False
    alive: bool = True


def dals_dominates(params: CostParameters, first: DalsLabel, second: DalsLabel) -> bool:
    """Whether first beats second for every pickup, vehicle and trip-penalty regime.

    Both the penalty-free and the penalty-active cost differences must be
    negative, and first may not need more vehicle time. A zero distance of
    second may mean a merge at the last stop, which saves a stop time.
    """
    if first.dropoff.index == second.dropoff.index:
        return first.dist <= second.dist
    slack = params.stop_time if second.dist == 0 else 0
    detour = first.dist - second.dist + slack
    trip = first.dist + first.dropoff.walk - second.dist - second.dropoff.walk + slack
    walk = first.dropoff.walk - second.dropoff.walk
    if detour > 0:
        return False
    relaxed = detour + params.trip_weight * trip + params.walk_weight * walk
    penalized = detour + (params.trip_weight + params.gamma_trip) * trip + params.walk_weight * walk
    return relaxed < 0 and penalized < 0


class _LabelSearch:
    """Shared open/closed label bookkeeping of the collective searches."""

    def __init__(self, dominates: Callable, domination: bool, counters: SearchCounters):
        self.dominates = dominates
        self.domination = domination
        self.counters = counters
        self.labels: Dict[int, list] = {}
        self.heap: list = []
        self._sequence = 0

    def insert(self, label, vertex: int, c_min: float, tie: Tuple[int, ...], limit: float) -> None:
        if c_min > limit:
            self.counters.pruned_labels += 1
            return
        present = self.labels.setdefault(vertex, [])
        for other in present:
            if not other.alive:
                continue
            same_owner = tie[:-1] == other.owner_key
            if (same_owner or self.domination) and self.dominates(other, label):
                self.counters.dominated_labels += 1
                return
        for other in present:
            if other.alive and not other.closed:
                same_owner = tie[:-1] == other.owner_key
                if (same_owner or self.domination) and self.dominates(label, other):
                    other.alive = False
                    self.counters.dominated_labels += 1
        label.owner_key = tie[:-1]
        present.append(label)
        self._sequence += 1
        heapq.heappush(self.heap, (c_min, tie, vertex, self._sequence, label))

    def pop(self):
        while self.heap:
            c_min, _, vertex, _, label = heapq.heappop(self.heap)
            if label.alive and not label.closed:
                label.closed = True
                self.counters.settled_labels += 1
                return c_min, vertex, label
        return None


@dataclass
class CollectivePalsResult:
    insertion: Optional[Insertion] = None
    cost: float = INFINITY
    fallback: bool = False


def collective_pals(
    buckets: LastStopBuckets,
    state: FleetState,
    pd_set: PDSet,
    matrix: PDDistanceMatrix,
    max_trip: float,
    best: BestInsertion,
    cost_pruning: bool = True,
    domination: bool = True,
    counters: Optional[SearchCounters] = None,
) -> CollectivePalsResult:
    """One label search over all PD-pairs towards the last stops.

    Labels are keyed by their cost lower bound. Bucket scans evaluate c′ at
    tentative distances, which tightens the search bound. Feasible tentative
    insertions are offered to best; the recorded winner is re-resolved with
    an exact query. When the winner breaks a hard constraint the result
    signals a fallback.
    """
    counters = counters if counters is not None else SearchCounters()
    params = state.params
    request = pd_set.request
    ch = buckets.ch
    result = CollectivePalsResult()
    search = _LabelSearch(lambda a, b: pals_dominates(params, a, b), domination, counters)
    limit = best.cost if cost_pruning else INFINITY
    winner: Optional[Tuple[float, Tuple[int, ...], int]] = None

    def c_min(label: PalsLabel, dist: float) -> float:
        return pals_lower_bound(params, label.pickup.walk, label.dist_pd, label.dropoff.walk, dist, max_trip)

    def tie(label: PalsLabel, vertex: int) -> Tuple[int, ...]:
        return (label.pickup.index, label.dropoff.index, vertex)

    for pickup in pd_set.pickups:
        for dropoff in pd_set.dropoffs:
            dist_pd = matrix.get(pickup.index, dropoff.index)
            if dist_pd == INFINITY:
                continue
            label = PalsLabel(pickup, dropoff, dist_pd, 0)
            search.insert(label, pickup.vertex, c_min(label, 0), tie(label, pickup.vertex), limit)

    while True:
        popped = search.pop()
        if popped is None:
            break
        key, vertex, label = popped
        if key > limit:
            break

        def too_costly(entry: BucketEntry, query_dist: float) -> bool:
            return cost_pruning and c_min(label, query_dist + entry.dist) > limit

        for entry in bucket_scan(buckets.store, vertex, label.dist, too_costly, counters=counters):
            vehicle_id = entry.owner
            n = state.stop_count(vehicle_id)
            x = entry.dist + label.dist
            merged = x == 0 and state.pickup_merges(vehicle_id, n, label.pickup.vertex)
            tentative = pals_cost_c_prime(
                params, request, label.pickup, label.dropoff, label.dist_pd,
                state.last_stop_departure(vehicle_id), x, merged, max_trip,
            ).total
            candidate = (tentative, (vehicle_id, n, n, label.pickup.index, label.dropoff.index), x)
            if winner is None or candidate[:2] < winner[:2]:
                winner = candidate
            if tentative < best.cost:
                insertion = Insertion(
                    request, vehicle_id, label.pickup, label.dropoff, n, n,
                    to_pickup=x, pickup_dropoff=label.dist_pd,
                )
                best.offer(insertion, insertion_cost(state, insertion, max_trip))
            if cost_pruning:
                limit = min(limit, tentative)

        for parent, length in ch.down_rev[vertex]:
            grown = PalsLabel(label.pickup, label.dropoff, label.dist_pd, label.dist + length)
            search.insert(grown, parent, c_min(grown, grown.dist), tie(grown, parent), limit)

    if winner is None:
        return result
    _, (vehicle_id, n, _, p_index, d_index), _ = winner
    pickup, dropoff = pd_set.pickups[p_index], pd_set.dropoffs[d_index]
    last = state.routes[vehicle_id][-1].location
    insertion = Insertion(
        request, vehicle_id, pickup, dropoff, n, n,
        to_pickup=ch_query(ch, last, pickup.vertex),
        pickup_dropoff=matrix.get(p_index, d_index),
    )
    breakdown = insertion_cost(state, insertion, max_trip)
    if not breakdown.feasible:
        result.fallback = True
        return result
    best.offer(insertion, breakdown)
    result.insertion, result.cost = insertion, breakdown.total
    return result


def collective_dals(
    buckets: LastStopBuckets,
    state: FleetState,
    pd_set: PDSet,
    max_trip: float,
    limit: float,
    cost_pruning: bool = True,
    domination: bool = True,
    counters: Optional[SearchCounters] = None,
) -> Dict[int, Dict[int, int]]:
    """Per-vehicle surviving dropoffs with last-stop distances.

    The bound stays fixed during the search since a dropoff alone never
    fixes a full insertion.
    """
    counters = counters if counters is not None else SearchCounters()
    params = state.params
    ch = buckets.ch
    limit = limit if cost_pruning else INFINITY
    min_walk = pd_set.min_pickup_walk
    search = _LabelSearch(lambda a, b: dals_dominates(params, a, b), domination, counters)
    found: Dict[int, Dict[int, int]] = {}

    def c_min(label: DalsLabel, dist: float) -> float:
        return dals_lower_bound(params, min_walk, label.dropoff.walk, dist, max_trip)

    for dropoff in pd_set.dropoffs:
        label = DalsLabel(dropoff, 0)
        search.insert(label, dropoff.vertex, c_min(label, 0), (dropoff.index, dropoff.vertex), limit)

    while True:
        popped = search.pop()
        if popped is None:
            break
        key, vertex, label = popped
        if key > limit:
            break

        def too_costly(entry: BucketEntry, query_dist: float) -> bool:
            return c_min(label, query_dist + entry.dist) > limit

        for entry in bucket_scan(buckets.store, vertex, label.dist, too_costly, counters=counters):
            if state.stop_count(entry.owner) == 0:
                continue
            per_vehicle = found.setdefault(entry.owner, {})
            x = entry.dist + label.dist
            if x < per_vehicle.get(label.dropoff.index, INFINITY):
                per_vehicle[label.dropoff.index] = x

        for parent, length in ch.down_rev[vertex]:
            grown = DalsLabel(label.dropoff, label.dist + length)
            search.insert(grown, parent, c_min(grown, grown.dist), (label.dropoff.index, parent), limit)
    return found


@dataclass
class LastStopQuery:
    """Per-request context for the PALS and DALS phases."""
    state: FleetState
    network: RoadNetworkPair
    buckets: LastStopBuckets
    pd_set: PDSet
    matrix: PDDistanceMatrix
    max_trip: float
    search: SearchConfig
    counters: SearchCounters = field(default_factory=SearchCounters)
    fallbacks: int = 0

    @property
    def params(self) -> CostParameters:
        return self.state.params

    def _pals_bound(self) -> LaneBound:
        pickups = self.pd_set.pickups
        walks = np.array([p.walk for p in pickups], dtype=float)
        min_pd = np.array([self.matrix.min_for_pickup(p.index) for p in pickups], dtype=float)
        min_walk_d = self.pd_set.min_dropoff_walk

        def bound(lanes: np.ndarray, values: np.ndarray) -> np.ndarray:
            return np.asarray(
                pals_lower_bound(self.params, walks[lanes], min_pd[lanes], min_walk_d, values, self.max_trip)
            )
        return bound

    def _dals_bound(self) -> LaneBound:
        walks = np.array([d.walk for d in self.pd_set.dropoffs], dtype=float)
        min_walk_p = self.pd_set.min_pickup_walk

        def bound(lanes: np.ndarray, values: np.ndarray) -> np.ndarray:
            return np.asarray(dals_lower_bound(self.params, min_walk_p, walks[lanes], values, self.max_trip))
        return bound

    def _offer_pals(self, best: BestInsertion, vehicle_id: int, pickup: PDLocation, x: int) -> None:
        n = self.state.stop_count(vehicle_id)
        request = self.pd_set.request
        for dropoff in self.pd_set.dropoffs:
            dist_pd = self.matrix.get(pickup.index, dropoff.index)
            if dist_pd == INFINITY:
                continue
            insertion = Insertion(
                request, vehicle_id, pickup, dropoff, n, n, to_pickup=x, pickup_dropoff=dist_pd,
            )
            best.offer(insertion, insertion_cost(self.state, insertion, self.max_trip))

    def pals(self, best: BestInsertion, strategy: Optional[LastStopStrategy] = None) -> BestInsertion:
        """Offer the best pickup-after-last-stop insertion to best."""
        if self.pd_set.empty:
            return best
        strategy = strategy or self.search.strategy_pals
        cost_pruning = self.search.cost_pruning
        bound = self._pals_bound()
        pickups = self.pd_set.pickups

        if strategy is LastStopStrategy.COLLECTIVE_BCH:
            outcome = collective_pals(
                self.buckets, self.state, self.pd_set, self.matrix, self.max_trip, best,
                cost_pruning=cost_pruning, domination=self.search.domination_pruning,
                counters=self.counters,
            )
            if not outcome.fallback:
                return best
            self.fallbacks += 1
            logger.warning(
                "Request %d: collective last-stop winner is infeasible; falling back to individual searches",
                self.pd_set.request.id,
            )
            strategy = LastStopStrategy.INDIVIDUAL_BCH

        if strategy is LastStopStrategy.INDIVIDUAL_BCH:
            def visit(vehicle_id: int, pickup: PDLocation, x: int) -> None:
                lanes = np.array([pickup.index])
                if cost_pruning and bound(lanes, np.array([x]))[0] > best.cost:
                    return
                self._offer_pals(best, vehicle_id, pickup, x)

            individual_last_stop_bch(
                self.buckets, pickups, bound if cost_pruning else None, lambda: best.cost,
                visit=visit, k=self.search.k_last_stop_bch, counters=self.counters,
            )
            return best

        limit = best.cost
        prune = _prune_above(bound, lambda: limit) if cost_pruning else None
        distances = last_stop_dijkstra(
            self.network, self.state, pickups, k=self.search.k_last_stop_dijkstra,
            prune=prune, counters=self.counters,
        )
        for (vehicle_id, index), x in sorted(distances.items()):
            self._offer_pals(best, vehicle_id, pickups[index], x)
        return best

    def dropoff_candidates(self, best: BestInsertion, strategy: Optional[LastStopStrategy] = None) -> Dict[int, Dict[int, int]]:
        """Per-vehicle dropoffs (index -> last-stop distance) worth pairing with pickups."""
        strategy = strategy or self.search.strategy_dals
        dropoffs = self.pd_set.dropoffs
        cost_pruning = self.search.cost_pruning
        if strategy is LastStopStrategy.COLLECTIVE_BCH:
            return collective_dals(
                self.buckets, self.state, self.pd_set, self.max_trip, best.cost,
                cost_pruning=cost_pruning, domination=self.search.domination_pruning,
                counters=self.counters,
            )
        bound = self._dals_bound()
        limit = best.cost
        if strategy is LastStopStrategy.INDIVIDUAL_BCH:
            distances = individual_last_stop_bch(
                self.buckets, dropoffs, bound if cost_pruning else None, lambda: limit,
                k=self.search.k_last_stop_bch, counters=self.counters,
            )
        else:
            prune = _prune_above(bound, lambda: limit) if cost_pruning else None
            distances = last_stop_dijkstra(
                self.network, self.state, dropoffs, k=self.search.k_last_stop_dijkstra,
                prune=prune, counters=self.counters,
            )
        found: Dict[int, Dict[int, int]] = {}
        for (vehicle_id, index), x in distances.items():
            if self.state.stop_count(vehicle_id) > 0:
                found.setdefault(vehicle_id, {})[index] = x
        return found

    def dals(
        self,
        best: BestInsertion,
        pickup_distances: EllipticDistances,
        resolver: CurrentLocationDistances,
        strategy: Optional[LastStopStrategy] = None,
    ) -> BestInsertion:
        """Offer the best dropoff-after-last-stop insertion (i < j = n) to best."""
        if self.pd_set.empty:
            return best
        state = self.state
        request = self.pd_set.request
        candidates = self.dropoff_candidates(best, strategy)
        deferred = []
        pending: Dict[int, List[Tuple[PDLocation, int]]] = {}

        for vehicle_id in sorted(candidates):
            route = state.routes[vehicle_id]
            n = len(route) - 1
            drops = [
                (self.pd_set.dropoffs[index], 0 if route[n].location == self.pd_set.dropoffs[index].vertex else x)
                for index, x in sorted(candidates[vehicle_id].items())
            ]
            pending[vehicle_id] = drops
            options = pickup_options(state, vehicle_id, self.pd_set.pickups, pickup_distances)
            for i in range(n):
                for option in options.get(i, ()):
                    insertions = self._dals_insertions(request, vehicle_id, option, drops, n)
                    if option.exact:
                        for insertion in insertions:
                            best.offer(insertion, insertion_cost(state, insertion, self.max_trip))
                        continue
                    lowest = min(
                        (insertion_cost(state, ins, self.max_trip, dep_base=route[0].departure).total
                         for ins in insertions),
                        default=INFINITY,
                    )
                    if lowest != INFINITY:
                        deferred.append((vehicle_id, option, lowest))

        for vehicle_id, option in resolve_first_leg(state, resolver, deferred, best):
            n = state.stop_count(vehicle_id)
            for insertion in self._dals_insertions(request, vehicle_id, option, pending[vehicle_id], n):
                best.offer(insertion, insertion_cost(state, insertion, self.max_trip))
        return best

    @staticmethod
    def _dals_insertions(request, vehicle_id, option, drops, n):
        for dropoff, x in drops:
            yield Insertion(
                request, vehicle_id, option.location, dropoff, option.i, n,
                to_pickup=option.to_pickup, from_pickup=option.from_pickup, to_dropoff=x,
            )
