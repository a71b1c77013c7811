"""Brute-force reference dispatcher for verification runs and tests.

Enumerates every (vehicle, i, j, pickup, dropoff) insertion plus the
pseudo-insertion with plain Dijkstra distances, re-simulates each candidate
route from scratch and checks every hard constraint directly. Nothing here
uses hierarchies, buckets, leeways or incremental detour formulas.
"""

import heapq
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .config import CostParameters
from .fleet import FleetState, Request
from .network import Graph, RoadNetworkPair
from .search import INFINITY

logger = logging.getLogger(__name__)

NEW_RIDER = -1


class OracleMismatchError(RuntimeError):
    """Raised when a dispatch disagrees with the brute-force reference."""
    pass


def reference_dijkstra(graph: Graph, source: int, reverse: bool = False) -> Dict[int, int]:
    """Textbook single-source Dijkstra."""
    adjacency = graph.adjacency(reverse=reverse)
    dist = {source: 0}
    heap = [(0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in adjacency[u]:
            if d + w < dist.get(v, INFINITY):
                dist[v] = d + w
                heapq.heappush(heap, (d + w, v))
    return dist


class ReferenceDistances:
    """Lazily filled all-pairs distances of one graph."""

    def __init__(self, graph: Graph):
        self.graph = graph
        self._rows: Dict[int, Dict[int, int]] = {}

    def __call__(self, s: int, t: int) -> float:
        row = self._rows.get(s)
        if row is None:
            row = self._rows[s] = reference_dijkstra(self.graph, s)
        return row.get(t, INFINITY)


@dataclass
class _PlannedStop:
    location: int
    arrival: float = 0
    departure: float = 0
    pickups: List[int] = field(default_factory=list)
    dropoffs: List[int] = field(default_factory=list)


@dataclass(frozen=True)
class OracleChoice:
    """Best option found by brute force; key is None for the pseudo-insertion."""
    cost: float
    key: Optional[Tuple[int, int, int, int, int]] = None


class BruteForceOracle:
    """Reference dispatcher over a fleet and its network."""

    def __init__(self, network: RoadNetworkPair):
        self.network = network
        self.veh = ReferenceDistances(network.veh)
        self.psg = ReferenceDistances(network.psg)

    def walking_options(self, request: Request, radius: int) -> Tuple[List[Tuple[int, int]], List[Tuple[int, int]]]:
        """(vertex, walk) candidates around origin and destination, in index order."""
        forward = reference_dijkstra(self.network.psg, request.origin)
        backward = reference_dijkstra(self.network.psg, request.destination, reverse=True)

        def within(walks: Dict[int, int]) -> List[Tuple[int, int]]:
            found = sorted((w, v) for v, w in walks.items() if w <= radius and self.network.is_boardable(v))
            return [(v, w) for w, v in found]
        return within(forward), within(backward)

    def _plan(
        self,
        state: FleetState,
        vehicle_id: int,
        request: Request,
        pickup: int,
        dropoff: int,
        i: int,
        j: int,
    ) -> Tuple[List[_PlannedStop], int]:
        """Stop sequence after inserting the request, plus the occupancy leaving the first stop."""
        route = state.routes[vehicle_id]
        s0 = route[0]
        if i == 0:
            p_merged = s0.location == pickup and s0.is_service and state.now <= s0.departure
        else:
            p_merged = route[i].location == pickup
        d_merged = j > i and route[j].location == dropoff
        occupancy = s0.occupancy_after

        base_location, base_time = state.departure_base(vehicle_id)
        if i == 0 and not p_merged and base_time != s0.departure:
            start = _PlannedStop(base_location, base_time, base_time)
        else:
            start = _PlannedStop(s0.location, s0.arrival, s0.departure, list(s0.pickups), list(s0.dropoffs))

        plan = []
        for a, stop in enumerate(route):
            if a == 0:
                plan.append(start)
            else:
                plan.append(_PlannedStop(stop.location, pickups=list(stop.pickups), dropoffs=list(stop.dropoffs)))
            if a == i:
                if p_merged:
                    plan[-1].pickups.append(NEW_RIDER)
                    if a == 0:
                        occupancy += 1
                else:
                    plan.append(_PlannedStop(pickup, pickups=[NEW_RIDER]))
            if a == j:
                if d_merged:
                    plan[-1].dropoffs.append(NEW_RIDER)
                else:
                    plan.append(_PlannedStop(dropoff, dropoffs=[NEW_RIDER]))
        return plan, occupancy

    def evaluate(
        self,
        state: FleetState,
        request: Request,
        vehicle_id: int,
        i: int,
        j: int,
        pickup: Tuple[int, int],
        dropoff: Tuple[int, int],
        max_trip: float,
    ) -> float:
        """Cost of one insertion by from-scratch re-simulation; INFINITY when infeasible."""
        params: CostParameters = state.params
        stop_time = params.stop_time
        route = state.routes[vehicle_id]
        vehicle = state.vehicles[vehicle_id]
        riders = state.riders
        ready_new = request.time + pickup[1]
        plan, occupancy = self._plan(state, vehicle_id, request, pickup[0], dropoff[0], i, j)

        def ready(rider_id: int) -> float:
            return ready_new if rider_id == NEW_RIDER else riders[rider_id].ready_time

        start = plan[0]
        if start.pickups or start.dropoffs:
            start.departure = max(
                [start.arrival + stop_time] + [ready(r) for r in start.pickups]
            )
        for previous, stop in zip(plan, plan[1:]):
            stop.arrival = previous.departure + self.veh(previous.location, stop.location)
            stop.departure = max([stop.arrival + stop_time] + [ready(r) for r in stop.pickups])
        if plan[-1].arrival == INFINITY:
            return INFINITY

        if occupancy > vehicle.capacity:
            return INFINITY
        pickup_departure = dropoff_arrival = None
        old_arrivals = {r: stop.arrival for stop in route[1:] for r in stop.dropoffs}
        added_trip = 0
        for a, stop in enumerate(plan):
            if a > 0:
                occupancy += len(stop.pickups) - len(stop.dropoffs)
                if occupancy > vehicle.capacity:
                    return INFINITY
            for r in stop.pickups:
                if r == NEW_RIDER:
                    pickup_departure = stop.departure
                elif stop.departure > riders[r].pickup_deadline:
                    return INFINITY
            if a == 0:
                continue
            for r in stop.dropoffs:
                if r == NEW_RIDER:
                    dropoff_arrival = stop.arrival
                else:
                    if stop.arrival > riders[r].dropoff_deadline:
                        return INFINITY
                    added_trip += stop.arrival - old_arrivals[r]
        if plan[-1].arrival > vehicle.service_end:
            return INFINITY

        old_end = max(state.now, route[-1].departure)
        detour = plan[-1].departure - old_end
        wait = pickup_departure - request.time
        trip = dropoff_arrival + dropoff[1] - request.time
        return (
            detour
            + params.trip_weight * (trip + added_trip)
            + params.walk_weight * (pickup[1] + dropoff[1])
            + params.gamma_wait * max(wait - params.max_wait, 0)
            + params.gamma_trip * max(trip - max_trip, 0)
        )

    def best(self, state: FleetState, request: Request) -> OracleChoice:
        """Minimum over the pseudo-insertion and every vehicle insertion."""
        params = state.params
        direct = self.veh(request.origin, request.destination)
        max_trip = INFINITY if direct == INFINITY else int(params.alpha * direct) + params.beta
        walk = self.psg(request.origin, request.destination)
        choice = OracleChoice(INFINITY)
        if walk != INFINITY:
            pseudo = (
                params.trip_weight * walk + params.walk_weight * walk
                + params.gamma_trip * max(walk - max_trip, 0)
            )
            choice = OracleChoice(pseudo)

        pickups, dropoffs = self.walking_options(request, params.walk_radius)
        for vehicle_id in sorted(state.routes):
            n = state.stop_count(vehicle_id)
            for i in range(n + 1):
                for j in range(i, n + 1):
                    for p_index, pickup in enumerate(pickups):
                        for d_index, dropoff in enumerate(dropoffs):
                            cost = self.evaluate(state, request, vehicle_id, i, j, pickup, dropoff, max_trip)
                            key = (vehicle_id, i, j, p_index, d_index)
                            if cost < choice.cost:
                                choice = OracleChoice(cost, key)
        return choice

    def verify(self, state: FleetState, request: Request, cost: float) -> OracleChoice:
        """Raise OracleMismatchError unless cost equals the brute-force minimum."""
        expected = self.best(state, request)
        if expected.cost != cost:
            raise OracleMismatchError(
                f"request {request.id}: dispatched cost {cost} differs from brute-force cost {expected.cost}"
            )
        return expected
