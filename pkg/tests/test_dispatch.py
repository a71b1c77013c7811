"""Tests for the dispatch pipeline on the LINE network."""

import pytest

from ridesim.config import CostParameters, LastStopStrategy, SearchConfig
from ridesim.cost import insertion_cost
from ridesim.dispatch import PHASES, PSEUDO, UNSERVED
from ridesim.fleet import Insertion, PDLocation, Request, Vehicle
from ridesim.network import parse_network
from ridesim.oracle import BruteForceOracle
from ridesim.search import INFINITY

FIRST = Request(0, 2, 3, 0)
SECOND = Request(1, 1, 2, 0)


@pytest.fixture
def dispatcher(make_dispatcher, slow_walk_line, line_params, one_vehicle):
    return make_dispatcher(slow_walk_line, one_vehicle, line_params)


class TestDispatch:
    """Test request outcomes on one vehicle."""

    def test_pickup_after_last_stop(self, dispatcher):
        """Test that an idle vehicle beats a long walk."""
        outcome = dispatcher.dispatch(FIRST)
        assert outcome.kind == "pals"
        assert outcome.cost == 780
        assert outcome.walk == 1000
        assert outcome.max_trip == 1370
        assert [s.location for s in dispatcher.state.routes[0]] == [0, 2, 3]

    def test_pickup_before_next_stop(self, dispatcher, slow_walk_line):
        """Test a pickup on the way to the first stop with a merged dropoff."""
        dispatcher.dispatch(FIRST)
        expected = BruteForceOracle(slow_walk_line).best(dispatcher.state, SECOND)
        outcome = dispatcher.dispatch(SECOND)
        assert outcome.kind == "pbns"
        assert outcome.cost == expected.cost == 380
        route = dispatcher.state.routes[0]
        assert [s.location for s in route] == [0, 1, 2, 3]
        assert [s.arrival for s in route] == [0, 100, 260, 420]
        assert route[2].dropoffs == [1]

    def test_departed_vehicle_reroutes(self, dispatcher, slow_walk_line):
        """Test that a moving vehicle is rerouted from its current location."""
        dispatcher.dispatch(FIRST)
        dispatcher.state.advance(50)
        request = Request(1, 1, 2, 50)
        expected = BruteForceOracle(slow_walk_line).best(dispatcher.state, request)
        outcome = dispatcher.dispatch(request)
        assert outcome.kind == "pbns"
        assert outcome.cost == expected.cost == 330
        waypoint = dispatcher.state.routes[0][0]
        assert (waypoint.location, waypoint.arrival) == (1, 100)
        assert not waypoint.is_service

    def test_evaluate_leaves_fleet_unchanged(self, dispatcher):
        """Test that evaluation alone does not touch routes."""
        outcome = dispatcher.evaluate(FIRST)
        assert outcome.cost == 780
        assert len(dispatcher.state.routes[0]) == 1
        assert dispatcher.state.riders == {}

    def test_phases_are_recorded(self, dispatcher):
        """Test that every phase has counters and timings."""
        outcome = dispatcher.dispatch(FIRST)
        assert set(outcome.counters) == set(PHASES)
        assert "apply" in outcome.timings
        assert outcome.total_counters().relaxed_edges > 0

    @pytest.mark.parametrize("strategy", list(LastStopStrategy))
    def test_strategies_agree(self, make_dispatcher, slow_walk_line, line_params, one_vehicle, strategy):
        """Test that every last-stop strategy dispatches the same way."""
        search = SearchConfig(strategy_pals=strategy, strategy_dals=strategy)
        dispatcher = make_dispatcher(slow_walk_line, one_vehicle, line_params, search)
        assert [dispatcher.dispatch(r).cost for r in (FIRST, SECOND)] == [780, 380]

    def test_infeasible_collective_winner_falls_back(self, make_dispatcher, slow_walk_line, line_params, caplog):
        """Test that a nearby vehicle off duty before the dropoff hands over to individual searches."""
        vehicles = [Vehicle(0, 2, 4, 0, 100), Vehicle(1, 0, 4, 0, 100000)]
        dispatcher = make_dispatcher(slow_walk_line, vehicles, line_params)
        outcome = dispatcher.evaluate(FIRST)
        assert outcome.fallbacks == 1
        assert "falling back to individual searches" in caplog.text
        assert outcome.kind == "pals"
        assert outcome.insertion.vehicle_id == 1
        assert outcome.cost == 780
        assert BruteForceOracle(slow_walk_line).best(dispatcher.state, FIRST).cost == 780


class TestWithoutVehicles:
    """Test the pseudo-insertion and unserved requests."""

    def test_walking(self, make_dispatcher, slow_walk_line, line_params):
        """Test that an empty fleet leaves walking."""
        dispatcher = make_dispatcher(slow_walk_line, [], line_params)
        outcome = dispatcher.dispatch(FIRST)
        assert outcome.kind == PSEUDO
        assert outcome.cost == 1000
        assert outcome.insertion is None
        assert outcome.served

    def test_unserved(self, make_dispatcher, caplog):
        """Test that a request nobody can serve is reported."""
        network = parse_network("vertices 2\nveh 0 1 100\npsg 1 0 100\n")
        dispatcher = make_dispatcher(network, [], CostParameters())
        outcome = dispatcher.dispatch(Request(4, 0, 1, 0))
        assert outcome.kind == UNSERVED
        assert outcome.cost == INFINITY
        assert not outcome.served
        assert "Request 4 cannot be served" in caplog.text


class TestLastStopResolution:
    """Test exact re-resolution of a last-stop winner's leg."""

    def test_unreachable_leg_is_infeasible(self, make_dispatcher):
        """Test that an unreachable exact leg makes the winner infeasible instead of raising."""
        network = parse_network("vertices 2\nveh 1 0 100\npsg 0 1 100\npsg 1 0 100\n")
        dispatcher = make_dispatcher(network, [Vehicle(0, 0, 4, 0, 100000)], CostParameters())
        request = Request(0, 1, 0, 0)
        insertion = Insertion(
            request, 0, PDLocation(0, 1, 0), PDLocation(0, 0, 0), 0, 0,
            to_pickup=100, pickup_dropoff=100,
        )
        breakdown = insertion_cost(dispatcher.state, insertion, 1370)
        assert breakdown.feasible
        exact, resolved = dispatcher._resolve_last_stop_leg(insertion, breakdown, 1370)
        assert exact.to_pickup == INFINITY
        assert not resolved.feasible
        outcome = dispatcher.evaluate(request)
        assert outcome.kind == PSEUDO
        assert outcome.cost == 100
