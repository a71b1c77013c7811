"""Per-request dispatch pipeline.

Phases run in a fixed order, each tightening the running best insertion:
pseudo-insertion, PD-locations, PD-distances, elliptic queries, Ordinary/OP,
PBNS, PALS and DALS. The winner is applied to the fleet.
"""

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, Optional

from .ch import ContractionHierarchy, ch_query
from .config import SearchConfig
from .cost import (
    BestInsertion,
    CostBreakdown,
    insertion_cost,
    max_trip_time,
    pseudo_insertion_cost,
)
from .elliptic import CurrentLocationDistances, EllipticBuckets, elliptic_query, enumerate_ord_op, enumerate_pbns
from .fleet import FleetState, Insertion, InsertionKind, Request, apply_insertion
from .last_stop import LastStopBuckets, LastStopQuery
from .network import RoadNetworkPair
from .pd_locations import find_pd_locations, max_pd_dist, pd_distance_search
from .search import INFINITY, SearchCounters, as_distance

logger = logging.getLogger(__name__)

PHASES = ("pseudo", "pd_locations", "pd_distances", "elliptic", "ordinary", "pbns", "pals", "dals", "apply")

PSEUDO = "pseudo"
UNSERVED = "unserved"


@dataclass
class DispatchOutcome:
    """Result of dispatching one request.

    ``kind`` is ``pseudo``, ``unserved`` or an insertion kind. Timings are
    wall-clock seconds per phase and never enter the outcome log.
    """
    request: Request
    kind: str
    breakdown: CostBreakdown
    max_trip: float
    walk: float = INFINITY
    insertion: Optional[Insertion] = None
    timings: Dict[str, float] = field(default_factory=dict)
    counters: Dict[str, SearchCounters] = field(default_factory=dict)
    fallbacks: int = 0

    @property
    def cost(self) -> float:
        return self.breakdown.total

    @property
    def served(self) -> bool:
        return self.kind != UNSERVED

    def total_counters(self) -> SearchCounters:
        total = SearchCounters()
        for counters in self.counters.values():
            total.add(counters)
        return total


class Dispatcher:
    """Owns the bucket structures and evaluates requests against a fleet."""

    def __init__(
        self,
        network: RoadNetworkPair,
        veh_ch: ContractionHierarchy,
        psg_ch: ContractionHierarchy,
        state: FleetState,
        search: Optional[SearchConfig] = None,
    ):
        self.network = network
        self.veh_ch = veh_ch
        self.psg_ch = psg_ch
        self.state = state
        self.search = search or SearchConfig()
        self.elliptic = EllipticBuckets(
            veh_ch, state.stop_time, self.search.sorted_buckets, self.search.elliptic_truncation
        )
        self.last_stop = LastStopBuckets(veh_ch, self.search.sorted_buckets)
        state.add_listener(self.elliptic)
        state.add_listener(self.last_stop)

    def evaluate(self, request: Request) -> DispatchOutcome:
        """Find the minimum-cost option for request without changing the fleet."""
        state = self.state
        params = state.params
        search = self.search
        timings: Dict[str, float] = {}
        counters: Dict[str, SearchCounters] = {phase: SearchCounters() for phase in PHASES}

        @contextmanager
        def phase(name: str) -> Iterator[SearchCounters]:
            start = time.perf_counter()
            yield counters[name]
            timings[name] = timings.get(name, 0.0) + time.perf_counter() - start

        with phase("pseudo") as c:
            direct = ch_query(self.veh_ch, request.origin, request.destination, c)
            max_trip = max_trip_time(params, direct)
            walk = ch_query(self.psg_ch, request.origin, request.destination, c)
            pseudo = pseudo_insertion_cost(params, walk, max_trip)
            best = BestInsertion(pseudo)

        with phase("pd_locations"):
            pd_set = find_pd_locations(self.network, request, params.walk_radius)

        if not pd_set.empty:
            with phase("pd_distances") as c:
                bound = max_pd_dist(self.network, self.veh_ch, pd_set, c) if search.pd_radius_pruning else INFINITY
                matrix = pd_distance_search(
                    self.veh_ch, pd_set, bound, search.k_pd, search.pd_radius_pruning, c
                )

            with phase("elliptic") as c:
                pickup_distances = elliptic_query(self.elliptic, state, pd_set.pickups, search.k_elliptic, c)
                dropoff_distances = elliptic_query(self.elliptic, state, pd_set.dropoffs, search.k_elliptic, c)

            with phase("ordinary"):
                enumerate_ord_op(
                    state, self.elliptic, pd_set, pickup_distances, dropoff_distances, matrix, max_trip, best
                )

            resolver = CurrentLocationDistances(self.veh_ch, state, search.k_elliptic, counters["pbns"])
            with phase("pbns"):
                enumerate_pbns(
                    state, self.elliptic, pd_set, pickup_distances, dropoff_distances,
                    matrix, max_trip, best, resolver,
                )

            query = LastStopQuery(
                state, self.network, self.last_stop, pd_set, matrix, max_trip, search,
                counters=counters["pals"],
            )
            with phase("pals"):
                query.pals(best)
            query.counters = counters["dals"]
            resolver.counters = counters["dals"]
            with phase("dals"):
                query.dals(best, pickup_distances, resolver)
            fallbacks = query.fallbacks
        else:
            fallbacks = 0

        insertion, breakdown = best.insertion, best.breakdown
        if insertion is not None:
            insertion, breakdown = self._resolve_last_stop_leg(insertion, breakdown, max_trip)
            if not breakdown.feasible:
                insertion, breakdown = None, pseudo

        if not breakdown.feasible:
            kind = UNSERVED
            logger.warning("Request %d cannot be served by any vehicle or on foot", request.id)
        elif insertion is None:
            kind = PSEUDO
        else:
            kind = insertion.kind(len(state.routes[insertion.vehicle_id])).value
        logger.debug("Request %d: %s with cost %s", request.id, kind, breakdown.total)
        return DispatchOutcome(
            request=request,
            kind=kind,
            breakdown=breakdown,
            max_trip=max_trip,
            walk=walk,
            insertion=insertion,
            timings=timings,
            counters=counters,
            fallbacks=fallbacks,
        )

    def _resolve_last_stop_leg(self, insertion: Insertion, breakdown: CostBreakdown, max_trip: float):
        """Recompute a PALS/DALS winner's last-stop leg with an exact query."""
        state = self.state
        n = state.stop_count(insertion.vehicle_id)
        if insertion.j != n:
            return insertion, breakdown
        last = state.routes[insertion.vehicle_id][-1].location
        if insertion.i == n:
            exact = replace(insertion, to_pickup=as_distance(ch_query(self.veh_ch, last, insertion.pickup.vertex)))
        else:
            if last == insertion.dropoff.vertex:
                return insertion, breakdown
            exact = replace(insertion, to_dropoff=as_distance(ch_query(self.veh_ch, last, insertion.dropoff.vertex)))
        if exact == insertion:
            return insertion, breakdown
        resolved = insertion_cost(state, exact, max_trip)
        logger.warning(
            "Request %d: last-stop distance corrected, cost %s -> %s",
            insertion.request.id, breakdown.total, resolved.total,
        )
        return exact, resolved

    def commit(self, outcome: DispatchOutcome, check: bool = True) -> None:
        """Apply the outcome's insertion to the fleet; pseudo and unserved change nothing."""
        if outcome.insertion is None:
            return
        start = time.perf_counter()
        apply_insertion(self.state, outcome.insertion, outcome.max_trip, check=check)
        outcome.timings["apply"] = time.perf_counter() - start

    def dispatch(self, request: Request) -> DispatchOutcome:
        """Evaluate request and apply the winning option."""
        outcome = self.evaluate(request)
        self.commit(outcome)
        return outcome
