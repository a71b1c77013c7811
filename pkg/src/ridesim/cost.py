"""Cost model: detours, trip times, penalties and last-stop bounds.

All times are integer deciseconds. Weights are integers, so every finite
cost is an exact integer and comparisons never drift.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from .config import CostParameters
from .fleet import FleetState, Insertion, PDLocation, Request, Route, dropoff_merges, pickup_merges
from .search import INFINITY

Number = Union[int, float]


@dataclass(frozen=True)
class CostBreakdown:
    """Components of an insertion cost; total is INFINITY when infeasible."""
    detour: Number = INFINITY
    trip: Number = INFINITY
    added_trip: Number = 0
    walk: Number = 0
    wait_violation: Number = 0
    trip_violation: Number = 0
    total: Number = INFINITY
    pickup_departure: Number = INFINITY
    dropoff_arrival: Number = INFINITY

    @property
    def feasible(self) -> bool:
        return self.total != INFINITY

    def as_dict(self) -> dict:
        return {
            "detour": self.detour,
            "trip": self.trip,
            "added_trip": self.added_trip,
            "walk": self.walk,
            "wait_violation": self.wait_violation,
            "trip_violation": self.trip_violation,
            "total": self.total,
        }


INFEASIBLE = CostBreakdown()


def max_trip_time(params: CostParameters, direct: Number) -> Number:
    """Trip-time limit floor(alpha * direct) + beta; unbounded when unreachable."""
    if direct == INFINITY:
        return INFINITY
    return math.floor(params.alpha * direct) + params.beta


def departure_at_pickup(dep_i: int, to_pickup: int, t_req: int, walk: int, stop_time: int) -> int:
    """Earliest departure at a new pickup stop; the vehicle may wait for the rider."""
    return max(dep_i + to_pickup + stop_time, t_req + walk)


def initial_detours(
    t_pickup_departure: int,
    dep_i: int,
    leg_i: int,
    from_pickup: int,
    pickup_dropoff: int,
    to_dropoff: int,
    from_dropoff: int,
    leg_j: int,
    same_leg: bool,
    dropoff_last: bool,
    dropoff_merged: bool,
    stop_time: int,
) -> Tuple[int, int]:
    """Detours caused at the pickup and at the dropoff before any buffer absorbs them.

    ``leg_i``/``leg_j`` are the old leg times out of s_i/s_j and are ignored
    when that stop is the last one.
    """
    if same_leg:
        dp = t_pickup_departure - dep_i
    else:
        dp = t_pickup_departure - dep_i + from_pickup - leg_i

    if dropoff_merged:
        dd = 0
    elif same_leg and dropoff_last:
        dd = pickup_dropoff + stop_time
    elif same_leg:
        dd = pickup_dropoff + stop_time + from_dropoff - leg_i
    elif dropoff_last:
        dd = to_dropoff + stop_time
    else:
        dd = to_dropoff + stop_time + from_dropoff - leg_j
    return dp, dd


def residual_detours(route: Route, i: int, j: int, dp: int, dd: int, stop_time: int) -> List[int]:
    """Arrival-time shift at every existing stop a = 0..n after the insertion."""
    n = len(route) - 1
    shifts = [0] * (n + 1)
    for a in range(i + 1, n + 1):
        if a == i + 1 and i != j:
            shifts[a] = dp
        elif a == j + 1 and i == j:
            shifts[a] = dp + dd
        elif a == j + 1:
            shifts[a] = max(shifts[j] - route[j].vehicle_wait(stop_time), 0) + dd
        else:
            shifts[a] = max(shifts[a - 1] - route[a - 1].vehicle_wait(stop_time), 0)
    return shifts


def residual_detour(route: Route, i: int, j: int, dp: int, dd: int, stop_time: int, a: int) -> int:
    return residual_detours(route, i, j, dp, dd, stop_time)[a]


def added_vehicle_operation_time(n: int, i: int, j: int, dp: int, dd: int, residual_n: int) -> int:
    if i == j == n:
        return dp + dd
    if j == n:
        return residual_n + dd
    return residual_n


def trip_time(t_req: int, dropoff_arrival: Number, walk_from_dropoff: int) -> Number:
    return dropoff_arrival + walk_from_dropoff - t_req


def added_existing(route: Route, i: int, shifts: List[int]) -> int:
    """Combined trip-time increase of riders already assigned to the route."""
    return sum(len(route[a].dropoffs) * shifts[a] for a in range(i + 1, len(route)))


def assemble_cost(
    params: CostParameters,
    detour: Number,
    trip: Number,
    added_trip: Number,
    walk: Number,
    wait: Number,
    max_trip: Number,
    pickup_departure: Number = INFINITY,
    dropoff_arrival: Number = INFINITY,
) -> CostBreakdown:
    """Combine components with weights and soft-constraint penalties."""
    wait_violation = params.gamma_wait * max(wait - params.max_wait, 0)
    trip_violation = params.gamma_trip * max(trip - max_trip, 0)
    total = (
        detour
        + params.trip_weight * (trip + added_trip)
        + params.walk_weight * walk
        + wait_violation
        + trip_violation
    )
    return CostBreakdown(
        detour=detour,
        trip=trip,
        added_trip=added_trip,
        walk=walk,
        wait_violation=wait_violation,
        trip_violation=trip_violation,
        total=total,
        pickup_departure=pickup_departure,
        dropoff_arrival=dropoff_arrival,
    )


def insertion_cost(
    state: FleetState, insertion: Insertion, max_trip: Number, dep_base: Optional[int] = None
) -> CostBreakdown:
    """Evaluate an insertion with resolved distances against every hard constraint.

    Args:
        state: Fleet at the request time
        insertion: Candidate insertion
        max_trip: Trip-time limit of the request
        dep_base: Departure time assumed for a new first leg (i = 0, not
            merged) instead of the current location's; ``to_pickup`` must
            then be measured from l(s_0)

    Returns:
        Cost breakdown; INFEASIBLE when any hard constraint breaks
    """
    params = state.params
    stop_time = params.stop_time
    vehicle_id, i, j = insertion.vehicle_id, insertion.i, insertion.j
    route = state.routes[vehicle_id]
    vehicle = state.vehicles[vehicle_id]
    n = len(route) - 1
    if not 0 <= i <= j <= n:
        return INFEASIBLE
    distances = (
        insertion.to_pickup, insertion.from_pickup, insertion.pickup_dropoff,
        insertion.to_dropoff, insertion.from_dropoff,
    )
    if any(d == INFINITY for d in distances):
        return INFEASIBLE

    request = insertion.request
    pickup, dropoff = insertion.pickup, insertion.dropoff
    ready = request.time + pickup.walk
    p_merged = pickup_merges(route, i, pickup.vertex, state.now)
    d_merged = dropoff_merges(route, i, j, dropoff.vertex)

    if i == 0 and not p_merged:
        dep_i = state.departure_base(vehicle_id)[1] if dep_base is None else dep_base
    else:
        dep_i = route[i].departure
    leg_i = route[i + 1].arrival - dep_i if i < n else 0
    leg_j = route[j + 1].arrival - route[j].departure if j < n else 0

    if p_merged:
        t_pdep = max(route[i].departure, ready)
        if t_pdep > route[i].departure_deadline:
            return INFEASIBLE
    else:
        t_pdep = departure_at_pickup(dep_i, insertion.to_pickup, request.time, pickup.walk, stop_time)

    # a merged pickup keeps the old leg out of s_i
    from_pickup = leg_i if p_merged else insertion.from_pickup
    dp, dd = initial_detours(
        t_pdep, dep_i, leg_i,
        from_pickup, insertion.pickup_dropoff, insertion.to_dropoff,
        insertion.from_dropoff, leg_j,
        same_leg=i == j, dropoff_last=j == n, dropoff_merged=d_merged, stop_time=stop_time,
    )
    shifts = residual_detours(route, i, j, dp, dd, stop_time)

    last_loaded = j - 1 if d_merged else j
    for a in range(i, last_loaded + 1):
        if route[a].occupancy_after + 1 > vehicle.capacity:
            return INFEASIBLE
    if i < n and route[i + 1].arrival + shifts[i + 1] > route[i + 1].arrival_deadline:
        return INFEASIBLE
    if j < n and route[j + 1].arrival + shifts[j + 1] > route[j + 1].arrival_deadline:
        return INFEASIBLE

    if i == j:
        dropoff_arrival = t_pdep + insertion.pickup_dropoff
    elif d_merged:
        dropoff_arrival = route[j].arrival + shifts[j]
    else:
        dep_j = max(route[j].arrival + shifts[j] + stop_time, route[j].departure)
        dropoff_arrival = dep_j + insertion.to_dropoff
    if j == n and not d_merged and dropoff_arrival > vehicle.service_end:
        return INFEASIBLE

    detour = added_vehicle_operation_time(n, i, j, dp, dd, shifts[n])
    return assemble_cost(
        params,
        detour=detour,
        trip=trip_time(request.time, dropoff_arrival, dropoff.walk),
        added_trip=added_existing(route, i, shifts),
        walk=pickup.walk + dropoff.walk,
        wait=t_pdep - request.time,
        max_trip=max_trip,
        pickup_departure=t_pdep,
        dropoff_arrival=dropoff_arrival,
    )


def pseudo_insertion_cost(params: CostParameters, walk: Number, max_trip: Number) -> CostBreakdown:
    """Cost of serving a request on foot; never bounded by the walking radius."""
    if walk == INFINITY:
        return INFEASIBLE
    return assemble_cost(
        params, detour=0, trip=walk, added_trip=0, walk=walk, wait=0, max_trip=max_trip,
    )


def pals_cost_c_prime(
    params: CostParameters,
    request: Request,
    pickup: PDLocation,
    dropoff: PDLocation,
    dist_pd: Number,
    dep_last: int,
    dist_last_p: Number,
    merged: bool,
    max_trip: Number,
) -> CostBreakdown:
    """Cost of a pickup-after-last-stop insertion from the last stop's departure.

    Hard constraints are not checked here.
    """
    if dist_pd == INFINITY or dist_last_p == INFINITY:
        return INFEASIBLE
    stop_time = params.stop_time
    ready = request.time + pickup.walk
    if merged:
        t_pdep = max(dep_last, ready)
    else:
        t_pdep = departure_at_pickup(dep_last, dist_last_p, request.time, pickup.walk, stop_time)
    dropoff_arrival = t_pdep + dist_pd
    return assemble_cost(
        params,
        detour=t_pdep - dep_last + dist_pd + stop_time,
        trip=trip_time(request.time, dropoff_arrival, dropoff.walk),
        added_trip=0,
        walk=pickup.walk + dropoff.walk,
        wait=t_pdep - request.time,
        max_trip=max_trip,
        pickup_departure=t_pdep,
        dropoff_arrival=dropoff_arrival,
    )


def _unreachable_as_inf(total, trip):
    # inf - inf and 0 * inf are NaN, which no prune comparison would catch
    total = np.where(np.isinf(trip), INFINITY, total)
    return total if total.ndim else float(total)


def pals_lower_bound(params: CostParameters, walk_p, dist_pd, walk_d, x, max_trip: Number):
    """Lower bound on the PALS cost for a last-stop distance of x.

    Valid for every last-stop departure at or after the request time and
    non-decreasing in x. Accepts numpy arrays for x.
    """
    stop_time = params.stop_time
    x = np.asarray(x, dtype=float)
    reach = np.where(x > 0, x + stop_time, 0.0)
    wait = np.maximum(reach, walk_p)
    trip = wait + dist_pd + walk_d
    with np.errstate(invalid="ignore"):
        total = (
            reach + dist_pd + stop_time
            + params.trip_weight * trip
            + params.walk_weight * (walk_p + walk_d)
            + params.gamma_wait * np.maximum(wait - params.max_wait, 0)
            + params.gamma_trip * np.maximum(trip - max_trip, 0)
        )
    return _unreachable_as_inf(total, trip)


def pals_bounds(
    params: CostParameters,
    request: Request,
    pickup: PDLocation,
    dropoff: PDLocation,
    dist_pd: Number,
    min_dist_pd: Number,
    dep_last: int,
    tentative: Number,
    merged: bool,
    max_trip: Number,
) -> Tuple[float, float]:
    """(c_min, c_max) for a last-stop entry reached at tentative distance.

    c_min uses the minimal PD-distance, zero walking and the request time as
    departure base; c_max evaluates the pair at the tentative distance.
    """
    c_min = pals_lower_bound(params, 0, min_dist_pd, 0, tentative, max_trip)
    c_max = pals_cost_c_prime(
        params, request, pickup, dropoff, dist_pd, dep_last, tentative, merged, max_trip
    ).total
    return c_min, c_max


def dals_lower_bound(params: CostParameters, min_walk_p, walk_d, x, max_trip: Number):
    """Pickup-independent lower bound on a DALS cost for last-stop distance x."""
    stop_time = params.stop_time
    x = np.asarray(x, dtype=float)
    detour = np.where(x > 0, x + stop_time, 0.0)
    trip = min_walk_p + x + walk_d
    with np.errstate(invalid="ignore"):
        total = (
            detour
            + params.trip_weight * trip
            + params.walk_weight * (min_walk_p + walk_d)
            + params.gamma_trip * np.maximum(trip - max_trip, 0)
        )
    return _unreachable_as_inf(total, trip)


PSEUDO_KEY = (-1, -1, -1, -1, -1)


class BestInsertion:
    """Running minimum over candidate insertions, seeded with the pseudo-insertion.

    Candidates are ordered by (total, tie key); the pseudo-insertion's key
    sorts first, so it wins ties.
    """

    def __init__(self, pseudo: CostBreakdown = INFEASIBLE):
        self.breakdown = pseudo
        self.insertion: Optional[Insertion] = None
        self.key: Tuple[int, ...] = PSEUDO_KEY

    @property
    def cost(self) -> Number:
        return self.breakdown.total

    def offer(self, insertion: Insertion, breakdown: CostBreakdown) -> bool:
        if not breakdown.feasible:
            return False
        key = insertion.tie_key()
        if (breakdown.total, key) < (self.cost, self.key):
            self.breakdown, self.insertion, self.key = breakdown, insertion, key
            return True
        return False

    def prunes(self, lower_bound: Number) -> bool:
        return lower_bound > self.cost
