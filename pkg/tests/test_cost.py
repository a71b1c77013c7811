"""Tests for the cost model and its last-stop bounds."""

import numpy as np
import pytest

from ridesim.config import CostParameters
from ridesim.cost import (
    INFEASIBLE,
    BestInsertion,
    dals_lower_bound,
    insertion_cost,
    max_trip_time,
    pals_bounds,
    pals_cost_c_prime,
    pals_lower_bound,
    pseudo_insertion_cost,
)
from ridesim.fleet import FleetState, Insertion, PDLocation, Request, Stop, Vehicle
from ridesim.oracle import BruteForceOracle
from ridesim.search import INFINITY

REQUEST = Request(0, 2, 3, 0)
PICKUP = PDLocation(0, 2, 0)
DROPOFF = PDLocation(0, 3, 0)


def pals_insertion():
    return Insertion(REQUEST, 0, PICKUP, DROPOFF, 0, 0, to_pickup=200, pickup_dropoff=100)


class TestMaxTrip:
    """Test the trip-time limit."""

    def test_limit(self):
        """Test floor(alpha * direct) + beta."""
        params = CostParameters()
        assert max_trip_time(params, 100) == 1370
        assert max_trip_time(params, 7) == 1211
        assert max_trip_time(params, INFINITY) == INFINITY


class TestPseudoInsertion:
    """Test the walking-only option."""

    def test_walk_cost(self):
        """Test that walking costs its trip time."""
        params = CostParameters()
        assert pseudo_insertion_cost(params, 500, 1370).total == 500

    def test_trip_penalty(self):
        """Test that long walks pay the trip-time penalty."""
        params = CostParameters()
        breakdown = pseudo_insertion_cost(params, 2000, 1370)
        assert breakdown.trip_violation == 6300
        assert breakdown.total == 8300

    def test_unreachable(self):
        """Test that an unwalkable request is infeasible."""
        assert not pseudo_insertion_cost(CostParameters(), INFINITY, 1370).feasible


class TestInsertionCost:
    """Test insertion costs on the LINE network."""

    def test_pals_on_idle_vehicle(self, line_network, line_ch, line_params, one_vehicle):
        """Test the LINE pickup-after-last-stop example and the brute-force oracle."""
        state = FleetState(one_vehicle, line_ch, line_params)
        breakdown = insertion_cost(state, pals_insertion(), 1370)
        assert breakdown.detour == 420
        assert breakdown.trip == 360
        assert breakdown.pickup_departure == 260
        assert breakdown.dropoff_arrival == 360
        assert breakdown.total == 780
        oracle = BruteForceOracle(line_network)
        assert oracle.evaluate(state, REQUEST, 0, 0, 0, (2, 0), (3, 0), 1370) == 780

    def test_c_prime_matches_insertion_cost(self, line_ch, line_params, one_vehicle):
        """Test that c' equals the full cost at the exact last-stop distance."""
        state = FleetState(one_vehicle, line_ch, line_params)
        c_prime = pals_cost_c_prime(line_params, REQUEST, PICKUP, DROPOFF, 100, 0, 200, False, 1370)
        assert c_prime.total == insertion_cost(state, pals_insertion(), 1370).total

    def test_lower_bound_below_c_prime(self, line_params):
        """Test that the PALS lower bound never exceeds c'."""
        for x in (0, 50, 200, 900):
            c_prime = pals_cost_c_prime(line_params, REQUEST, PICKUP, DROPOFF, 100, 0, x, False, 1370)
            assert pals_lower_bound(line_params, 0, 100, 0, x, 1370) <= c_prime.total
        c_min, c_max = pals_bounds(line_params, REQUEST, PICKUP, DROPOFF, 100, 100, 0, 200, False, 1370)
        assert c_min <= c_max == 780

    def test_lower_bound_is_monotone(self, line_params):
        """Test that the PALS lower bound grows with the distance."""
        values = pals_lower_bound(line_params, 40, 100, 10, [0, 1, 50, 500, 5000], 1370)
        assert all(a <= b for a, b in zip(values, values[1:]))

    @pytest.mark.filterwarnings("error::RuntimeWarning")
    def test_unreachable_bounds_are_infinite(self):
        """Test that infinite distances give infinite bounds under zero weights."""
        params = CostParameters(trip_weight=0, walk_weight=0, gamma_wait=0, gamma_trip=0)
        pals = pals_lower_bound(params, 0, INFINITY, 0, [0, INFINITY], INFINITY)
        assert np.isinf(pals).all()
        dals = dals_lower_bound(params, 0, 0, [0, 100, INFINITY], INFINITY)
        assert dals[:2].tolist() == [0, 100 + params.stop_time]
        assert np.isinf(dals[2])
        assert np.isinf(pals_lower_bound(CostParameters(), 0, 100, 0, INFINITY, 1370))

    def test_service_end(self, line_ch, line_params):
        """Test that arriving after the service window is infeasible."""
        state = FleetState([Vehicle(0, 0, 4, 0, 300)], line_ch, line_params)
        assert insertion_cost(state, pals_insertion(), 1370) is INFEASIBLE

    def test_unreachable_distance(self, line_ch, line_params, one_vehicle):
        """Test that an infinite leg makes an insertion infeasible."""
        state = FleetState(one_vehicle, line_ch, line_params)
        insertion = Insertion(REQUEST, 0, PICKUP, DROPOFF, 0, 0, to_pickup=INFINITY, pickup_dropoff=100)
        assert not insertion_cost(state, insertion, 1370).feasible


@pytest.fixture
def two_stop_state(line_ch):
    """Route s0 departing at 0, s1 at time 1 and s2 at time 3 without stop times.

    A rider boards at s1 and alights at s2.
    """
    params = CostParameters(stop_time=0, trip_weight=1, gamma_trip=10, walk_weight=0, max_wait=100)
    state = FleetState([Vehicle(0, 0, 4, 0, 1000)], line_ch, params)
    route = state.routes[0]
    route.append(Stop(uid=100, location=1, arrival=1, departure=1, pickups=[100], occupancy_after=1))
    route.append(Stop(uid=101, location=2, arrival=3, departure=3, dropoffs=[100], occupancy_after=0))
    return state


class TestDropoffAfterLastStop:
    """Test trip times of two pickups paired with two dropoffs after the last stop."""

    pickups = {"p1": (2, 1), "p2": (4, 2)}
    dropoffs = {"d1": (1, 4), "d2": (3, 1)}

    def _breakdown(self, state, pickup, dropoff):
        to_pickup, from_pickup = self.pickups[pickup]
        dist, walk = self.dropoffs[dropoff]
        insertion = Insertion(
            REQUEST, 0, PDLocation(0, 3, 0), PDLocation(1, 0, walk), 1, 2,
            to_pickup=to_pickup, from_pickup=from_pickup, to_dropoff=dist,
        )
        return insertion_cost(state, insertion, 10)

    def test_trip_times(self, two_stop_state):
        """Test the trips of all four combinations."""
        trips = [
            self._breakdown(two_stop_state, p, d).trip
            for p in ("p1", "p2") for d in ("d1", "d2")
        ]
        assert trips == [9, 8, 12, 11]

    def test_cost_differences_change_sign(self, two_stop_state):
        """Test that d1 is cheaper for p1 and d2 for p2."""
        def total(p, d):
            return self._breakdown(two_stop_state, p, d).total
        assert total("p1", "d1") - total("p1", "d2") == -1
        assert total("p2", "d1") - total("p2", "d2") == 9

    def test_existing_rider_delay(self, two_stop_state):
        """Test that the delayed dropoff of the existing rider is charged."""
        assert self._breakdown(two_stop_state, "p1", "d1").added_trip == 1
        assert self._breakdown(two_stop_state, "p2", "d1").added_trip == 4


class TestBestInsertion:
    """Test the running minimum and its tie-breaking."""

    def test_pseudo_seed_wins_ties(self, line_ch, line_params, one_vehicle):
        """Test that an equal-cost insertion does not replace the pseudo-insertion."""
        state = FleetState(one_vehicle, line_ch, line_params)
        breakdown = insertion_cost(state, pals_insertion(), 1370)
        best = BestInsertion(pseudo_insertion_cost(line_params, 780, 1370))
        assert not best.offer(pals_insertion(), breakdown)
        assert best.insertion is None

    def test_cheaper_insertion_replaces(self, line_ch, line_params, one_vehicle):
        """Test that a cheaper feasible insertion becomes the best."""
        state = FleetState(one_vehicle, line_ch, line_params)
        best = BestInsertion(pseudo_insertion_cost(line_params, 1000, 1370))
        assert best.offer(pals_insertion(), insertion_cost(state, pals_insertion(), 1370))
        assert best.cost == 780
        assert best.insertion == pals_insertion()

    def test_tie_key_order(self, line_ch, line_params, one_vehicle):
        """Test that equal costs go to the smaller tie key."""
        state = FleetState(one_vehicle, line_ch, line_params)
        breakdown = insertion_cost(state, pals_insertion(), 1370)
        later = Insertion(REQUEST, 0, PICKUP, PDLocation(1, 3, 0), 0, 0, to_pickup=200, pickup_dropoff=100)
        best = BestInsertion()
        assert best.offer(later, breakdown)
        assert best.offer(pals_insertion(), breakdown)
        assert not best.offer(later, breakdown)
        assert best.insertion == pals_insertion()

    def test_infeasible_never_offered(self):
        """Test that infeasible breakdowns are ignored."""
        best = BestInsertion()
        assert not best.offer(pals_insertion(), INFEASIBLE)
        assert best.cost == INFINITY

    def test_pruning_is_strict(self):
        """Test that only bounds above the best cost prune."""
        best = BestInsertion(pseudo_insertion_cost(CostParameters(), 500, 1370))
        assert not best.prunes(500)
        assert best.prunes(501)
