"""Fleet state: vehicles, routes, per-stop schedules, riders and deadlines."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Protocol, Tuple

from .ch import ContractionHierarchy, unpack_path
from .config import CostParameters
from .search import INFINITY

logger = logging.getLogger(__name__)


class ConstraintViolationError(RuntimeError):
    """Raised when a route would break a hard constraint."""
    pass


@dataclass(frozen=True)
class Vehicle:
    """A vehicle with its capacity and service window [service_start, service_end)."""
    id: int
    initial_location: int
    capacity: int
    service_start: int
    service_end: int

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError(f"vehicle {self.id}: capacity must be at least 1")
        if self.service_end <= self.service_start:
            raise ValueError(f"vehicle {self.id}: service window is empty")


@dataclass(frozen=True)
class Request:
    """A ride request from origin to destination issued at time."""
    id: int
    origin: int
    destination: int
    time: int


@dataclass(frozen=True)
class PDLocation:
    """A pickup or dropoff candidate; index is its position in the PD set."""
    index: int
    vertex: int
    walk: int


class InsertionKind(str, Enum):
    ORDINARY = "ordinary"
    OP = "op"
    PBNS = "pbns"
    PALS = "pals"
    DALS = "dals"


@dataclass(frozen=True)
class Insertion:
    """Insertion of a request's pickup after stop i and dropoff after stop j.

    Distances are resolved by the caller. ``to_pickup`` is measured from the
    current location when i = 0 and the vehicle cannot depart from s_0 as
    scheduled. Unused distances stay 0.
    """
    request: Request
    vehicle_id: int
    pickup: PDLocation
    dropoff: PDLocation
    i: int
    j: int
    to_pickup: int = 0
    from_pickup: int = 0
    pickup_dropoff: int = 0
    to_dropoff: int = 0
    from_dropoff: int = 0

    def tie_key(self) -> Tuple[int, int, int, int, int]:
        return (self.vehicle_id, self.i, self.j, self.pickup.index, self.dropoff.index)

    def kind(self, stop_count: int) -> InsertionKind:
        n = stop_count - 1
        if self.i == self.j == n:
            return InsertionKind.PALS
        if self.j == n:
            return InsertionKind.DALS
        if self.i == 0:
            return InsertionKind.PBNS
        return InsertionKind.OP if self.i == self.j else InsertionKind.ORDINARY


@dataclass
class Stop:
    """A scheduled stop. Stops without riders only occur at route position 0."""
    uid: int
    location: int
    arrival: int
    departure: int
    pickups: List[int] = field(default_factory=list)
    dropoffs: List[int] = field(default_factory=list)
    occupancy_after: int = 0
    ready_time: float = -INFINITY
    arrival_deadline: float = INFINITY
    departure_deadline: float = INFINITY

    @property
    def is_service(self) -> bool:
        return bool(self.pickups or self.dropoffs)

    def vehicle_wait(self, stop_time: int) -> int:
        return self.departure - self.arrival - stop_time if self.is_service else 0


@dataclass
class Rider:
    """An assigned rider with hard deadlines fixed at insertion time."""
    request: Request
    vehicle_id: int
    pickup: int
    dropoff: int
    walk_to_pickup: int
    walk_from_dropoff: int
    pickup_deadline: float
    dropoff_deadline: float
    pickup_time: Optional[int] = None
    dropoff_time: Optional[int] = None

    @property
    def ready_time(self) -> int:
        return self.request.time + self.walk_to_pickup


@dataclass
class VehicleOperation:
    """Accumulated operation times of one vehicle."""
    empty_drive: int = 0
    occupied_drive: int = 0
    stop: int = 0

    @property
    def total(self) -> int:
        return self.empty_drive + self.occupied_drive + self.stop


class RouteListener(Protocol):
    def on_route_changed(self, state: "FleetState", vehicle_id: int) -> None: ...


Route = List[Stop]


def leeway(route: Route, i: int) -> float:
    """Maximum travel-plus-stop time from departure at s_i to arrival at s_{i+1}."""
    return route[i + 1].arrival_deadline - route[i].departure


def pickup_merges(route: Route, i: int, vertex: int, now: int) -> bool:
    """Whether a pickup at vertex joins stop s_i instead of opening a new stop."""
    stop = route[i]
    if stop.location != vertex:
        return False
    return i >= 1 or (stop.is_service and now <= stop.departure)


def dropoff_merges(route: Route, i: int, j: int, vertex: int) -> bool:
    return j > i and route[j].location == vertex


def refresh_deadlines(route: Route, vehicle: Vehicle, riders: Dict[int, Rider], stop_time: int) -> None:
    """Backward-propagate the latest permissible arrival at every stop."""
    for stop in route:
        stop.departure_deadline = min(
            (riders[r].pickup_deadline for r in stop.pickups), default=INFINITY
        )
    route[0].arrival_deadline = INFINITY
    n = len(route) - 1
    for a in range(n, 0, -1):
        stop = route[a]
        own = min((riders[r].dropoff_deadline for r in stop.dropoffs), default=INFINITY)
        if stop.pickups:
            own = min(own, stop.departure_deadline - stop_time)
        if a == n:
            own = min(own, vehicle.service_end)
        else:
            nxt = route[a + 1]
            own = min(own, nxt.arrival_deadline - (nxt.arrival - stop.departure) - stop_time)
        stop.arrival_deadline = own


class FleetState:
    """Vehicles, their routes and assigned riders at the current clock."""

    def __init__(
        self,
        vehicles: Iterable[Vehicle],
        ch: ContractionHierarchy,
        params: CostParameters,
        now: int = 0,
    ):
        self.ch = ch
        self.params = params
        self.now = now
        self.vehicles: Dict[int, Vehicle] = {}
        self.routes: Dict[int, Route] = {}
        self.riders: Dict[int, Rider] = {}
        self.operation: Dict[int, VehicleOperation] = {}
        self.listeners: List[RouteListener] = []
        self._next_uid = 0
        self._leg_paths: Dict[int, Tuple[Tuple[int, int, int], List[Tuple[int, int]]]] = {}
        for vehicle in vehicles:
            if vehicle.id in self.vehicles:
                raise ValueError(f"duplicate vehicle id {vehicle.id}")
            self.vehicles[vehicle.id] = vehicle
            self.operation[vehicle.id] = VehicleOperation()
            start = vehicle.service_start
            self.routes[vehicle.id] = [self._new_stop(vehicle.initial_location, start, start)]

    def _new_stop(self, location: int, arrival: int, departure: int) -> Stop:
        self._next_uid += 1
        return Stop(uid=self._next_uid, location=location, arrival=arrival, departure=departure)

    def add_listener(self, listener: RouteListener) -> None:
        self.listeners.append(listener)
        for vehicle_id in sorted(self.routes):
            listener.on_route_changed(self, vehicle_id)

    def _notify(self, vehicle_id: int) -> None:
        for listener in self.listeners:
            listener.on_route_changed(self, vehicle_id)

    @property
    def stop_time(self) -> int:
        return self.params.stop_time

    def stop_count(self, vehicle_id: int) -> int:
        """Number of stops n_ν after s_0."""
        return len(self.routes[vehicle_id]) - 1

    def has_departed(self, vehicle_id: int) -> bool:
        route = self.routes[vehicle_id]
        return len(route) > 1 and self.now > route[0].departure

    def leg_path(self, vehicle_id: int) -> List[Tuple[int, int]]:
        """Unpacked s_0 -> s_1 path as (vertex, absolute time) pairs."""
        route = self.routes[vehicle_id]
        if len(route) < 2:
            return [(route[0].location, route[0].departure)]
        key = (route[0].uid, route[1].uid, route[0].departure)
        cached = self._leg_paths.get(vehicle_id)
        if cached is None or cached[0] != key:
            path = unpack_path(self.ch, route[0].location, route[1].location)
            timed = [(v, route[0].departure + t) for v, t in path]
            self._leg_paths[vehicle_id] = (key, timed)
            return timed
        return cached[1]

    def departure_base(self, vehicle_id: int) -> Tuple[int, int]:
        """Location and time from which the vehicle can head to a new stop after s_0."""
        route = self.routes[vehicle_id]
        if not self.has_departed(vehicle_id):
            return route[0].location, max(self.now, route[0].departure)
        location, offset = current_location(self, vehicle_id, self.now)
        return location, self.now + offset

    def last_stop_departure(self, vehicle_id: int) -> int:
        return max(self.now, self.routes[vehicle_id][-1].departure)

    def pickup_merges(self, vehicle_id: int, i: int, vertex: int) -> bool:
        return pickup_merges(self.routes[vehicle_id], i, vertex, self.now)

    def advance(self, t: int) -> None:
        """Execute every schedule event up to time t."""
        if t < self.now:
            raise ValueError(f"cannot move clock back from {self.now} to {t}")
        for vehicle_id in sorted(self.routes):
            route = self.routes[vehicle_id]
            changed = False
            while len(route) > 1 and route[1].arrival <= t:
                self._complete_leg(vehicle_id)
                changed = True
            if changed:
                self._notify(vehicle_id)
        self.now = t

    def _retire_first_stop(self, vehicle_id: int) -> Stop:
        route = self.routes[vehicle_id]
        stop = route.pop(0)
        if stop.is_service:
            self.operation[vehicle_id].stop += stop.departure - stop.arrival
        for rider_id in stop.pickups:
            self.riders[rider_id].pickup_time = stop.departure
        return stop

    def _complete_leg(self, vehicle_id: int) -> None:
        route = self.routes[vehicle_id]
        previous = self._retire_first_stop(vehicle_id)
        arrived = route[0]
        drive = arrived.arrival - previous.departure
        operation = self.operation[vehicle_id]
        if previous.occupancy_after > 0:
            operation.occupied_drive += drive
        else:
            operation.empty_drive += drive
        for rider_id in arrived.dropoffs:
            self.riders[rider_id].dropoff_time = arrived.arrival

    def finish(self) -> None:
        """Run every route to its end and close the final stops."""
        horizon = max(
            [self.now] + [route[-1].departure for route in self.routes.values()]
        )
        self.advance(horizon)
        for vehicle_id in sorted(self.routes):
            route = self.routes[vehicle_id]
            last = route[0]
            if last.is_service:
                self.operation[vehicle_id].stop += last.departure - last.arrival
                for rider_id in last.pickups:
                    self.riders[rider_id].pickup_time = last.departure
                last.pickups, last.dropoffs = [], []
                last.arrival = last.departure

    def _reroute_from_current_location(self, vehicle_id: int) -> None:
        """Replace s_0 by a waypoint at the vehicle's current location."""
        route = self.routes[vehicle_id]
        location, base = self.departure_base(vehicle_id)
        moving = self.has_departed(vehicle_id)
        old = self._retire_first_stop(vehicle_id)
        if moving:
            drive = base - old.departure
            operation = self.operation[vehicle_id]
            if old.occupancy_after > 0:
                operation.occupied_drive += drive
            else:
                operation.empty_drive += drive
        waypoint = self._new_stop(location, base, base)
        waypoint.occupancy_after = old.occupancy_after
        route.insert(0, waypoint)

    def check_route(self, vehicle_id: int) -> None:
        """Verify every hard constraint and schedule identity of one route."""
        route = self.routes[vehicle_id]
        vehicle = self.vehicles[vehicle_id]
        stop_time = self.stop_time
        occupancy = route[0].occupancy_after
        for a, stop in enumerate(route):
            if a > 0:
                occupancy += len(stop.pickups) - len(stop.dropoffs)
                if stop.occupancy_after != occupancy:
                    raise ConstraintViolationError(f"vehicle {vehicle_id}: stale occupancy at stop {a}")
                if stop.departure < max(stop.arrival + stop_time, stop.ready_time):
                    raise ConstraintViolationError(f"vehicle {vehicle_id}: stop {a} departs too early")
            if not 0 <= stop.occupancy_after <= vehicle.capacity:
                raise ConstraintViolationError(
                    f"vehicle {vehicle_id}: occupancy {stop.occupancy_after} after stop {a} "
                    f"exceeds capacity {vehicle.capacity}"
                )
            for rider_id in stop.pickups:
                if stop.departure > self.riders[rider_id].pickup_deadline:
                    raise ConstraintViolationError(f"rider {rider_id}: wait-time constraint violated")
            for rider_id in stop.dropoffs:
                if a > 0 and stop.arrival > self.riders[rider_id].dropoff_deadline:
                    raise ConstraintViolationError(f"rider {rider_id}: trip-time constraint violated")
        if len(route) > 1 and route[-1].arrival > vehicle.service_end:
            raise ConstraintViolationError(f"vehicle {vehicle_id}: last stop after service end")

    def check_all(self) -> None:
        for vehicle_id in sorted(self.routes):
            self.check_route(vehicle_id)


def current_location(state: FleetState, vehicle_id: int, t: int) -> Tuple[int, int]:
    """Vertex the vehicle is committed to at time t and the time left to reach it."""
    route = state.routes[vehicle_id]
    if len(route) == 1 or t <= route[0].departure:
        return route[0].location, 0
    if t >= route[1].arrival:
        return route[1].location, 0
    for vertex, time in state.leg_path(vehicle_id):
        if time >= t:
            return vertex, time - t
    return route[1].location, route[1].arrival - t


def apply_insertion(
    state: FleetState, insertion: Insertion, max_trip: float, check: bool = True
) -> Rider:
    """Splice an insertion into its vehicle's route and re-time the schedule.

    Args:
        state: Fleet to mutate
        insertion: Insertion with resolved distances and finite cost
        max_trip: Trip-time limit t^max_trip of the request
        check: Verify all hard constraints afterwards

    Returns:
        The new rider

    Raises:
        ConstraintViolationError: If the resulting route breaks a hard constraint
    """
    vehicle_id, i, j = insertion.vehicle_id, insertion.i, insertion.j
    vehicle = state.vehicles[vehicle_id]
    route = state.routes[vehicle_id]
    n = len(route) - 1
    if not 0 <= i <= j <= n:
        raise ValueError(f"invalid insertion indices i={i}, j={j} for {n} stops")
    request = insertion.request
    stop_time = state.stop_time

    p_merged = pickup_merges(route, i, insertion.pickup.vertex, state.now)
    d_merged = dropoff_merges(route, i, j, insertion.dropoff.vertex)
    old_legs = [route[a + 1].arrival - route[a].departure for a in range(n)]

    if i == 0 and not p_merged and state.departure_base(vehicle_id)[1] != route[0].departure:
        state._reroute_from_current_location(vehicle_id)

    rider = Rider(
        request=request,
        vehicle_id=vehicle_id,
        pickup=insertion.pickup.vertex,
        dropoff=insertion.dropoff.vertex,
        walk_to_pickup=insertion.pickup.walk,
        walk_from_dropoff=insertion.dropoff.walk,
        pickup_deadline=INFINITY,
        dropoff_deadline=INFINITY,
    )
    state.riders[request.id] = rider

    # (stop, leg time from the previous stop) for every position after s_i
    tail: List[Tuple[Stop, int]] = []
    if p_merged:
        pickup_stop = route[i]
        pickup_stop.pickups.append(request.id)
        pickup_stop.ready_time = max(pickup_stop.ready_time, rider.ready_time)
    else:
        pickup_stop = state._new_stop(insertion.pickup.vertex, 0, 0)
        pickup_stop.pickups.append(request.id)
        pickup_stop.ready_time = rider.ready_time
        tail.append((pickup_stop, insertion.to_pickup))

    if i == j:
        dropoff_stop = state._new_stop(insertion.dropoff.vertex, 0, 0)
        dropoff_stop.dropoffs.append(request.id)
        tail.append((dropoff_stop, insertion.pickup_dropoff))
        if j < n:
            tail.append((route[j + 1], insertion.from_dropoff))
            tail.extend((route[a], old_legs[a - 1]) for a in range(j + 2, n + 1))
    else:
        first_leg = old_legs[i] if p_merged else insertion.from_pickup
        tail.append((route[i + 1], first_leg))
        tail.extend((route[a], old_legs[a - 1]) for a in range(i + 2, j + 1))
        if d_merged:
            dropoff_stop = route[j]
            dropoff_stop.dropoffs.append(request.id)
            tail.extend((route[a], old_legs[a - 1]) for a in range(j + 1, n + 1))
        else:
            dropoff_stop = state._new_stop(insertion.dropoff.vertex, 0, 0)
            dropoff_stop.dropoffs.append(request.id)
            tail.append((dropoff_stop, insertion.to_dropoff))
            if j < n:
                tail.append((route[j + 1], insertion.from_dropoff))
                tail.extend((route[a], old_legs[a - 1]) for a in range(j + 2, n + 1))

    new_route = route[:i + 1] + [stop for stop, _ in tail]
    anchor = new_route[i]
    if anchor.is_service:
        anchor.departure = max(anchor.arrival + stop_time, anchor.ready_time)
    previous = anchor
    for stop, leg in tail:
        stop.arrival = previous.departure + leg
        stop.departure = max(stop.arrival + stop_time, stop.ready_time)
        previous = stop

    if p_merged and i == 0:
        new_route[0].occupancy_after += 1
    for a in range(1, len(new_route)):
        stop = new_route[a]
        stop.occupancy_after = (
            new_route[a - 1].occupancy_after + len(stop.pickups) - len(stop.dropoffs)
        )

    rider.pickup_deadline = max(request.time + state.params.max_wait, pickup_stop.departure)
    rider.dropoff_deadline = max(
        request.time + max_trip - insertion.dropoff.walk, dropoff_stop.arrival
    )
    state.routes[vehicle_id] = new_route
    refresh_deadlines(new_route, vehicle, state.riders, stop_time)
    if check:
        state.check_route(vehicle_id)
    logger.debug(
        "Applied request %d to vehicle %d at (%d, %d); route now has %d stops",
        request.id, vehicle_id, i, j, len(new_route) - 1,
    )
    state._notify(vehicle_id)
    return rider
