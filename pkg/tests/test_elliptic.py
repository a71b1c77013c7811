"""Tests for elliptic buckets and stop-to-location queries."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ridesim.ch import SearchDirection, build_ch
from ridesim.config import CostParameters
from ridesim.elliptic import (
    EllipticBuckets,
    elliptic_query,
    generate_elliptic_entries,
    remove_elliptic_entries,
)
from ridesim.fleet import FleetState, Insertion, PDLocation, Request, Stop, Vehicle, apply_insertion
from ridesim.oracle import reference_dijkstra
from ridesim.search import BucketOrder, BucketStore

from .conftest import graphs


def dispatch_line_request(state, max_trip=1370):
    """Pickup at v2 and dropoff at v3 after the initial stop at v0."""
    insertion = Insertion(
        Request(0, 2, 3, 0), 0, PDLocation(0, 2, 0), PDLocation(0, 3, 0), 0, 0,
        to_pickup=200, pickup_dropoff=100,
    )
    apply_insertion(state, insertion, max_trip)


class TestEntryGeneration:
    """Test truncated entry generation."""

    def test_truncation(self, line_network):
        """Test that truncation keeps entries within the budget only."""
        ch = build_ch(line_network.veh, order=[1, 0, 2, 3])
        store = BucketStore(BucketOrder.LEEWAY)
        assert generate_elliptic_entries(ch, store, 1, 0, 150, SearchDirection.UP) == 1
        assert [(e.owner, e.dist, e.key) for e in store.entries(0)] == [(1, 0, 150)]

    def test_without_truncation(self, line_network):
        """Test that disabling truncation writes the whole search space."""
        ch = build_ch(line_network.veh, order=[1, 0, 2, 3])
        store = BucketStore(BucketOrder.LEEWAY)
        assert generate_elliptic_entries(ch, store, 1, 0, 150, SearchDirection.UP, truncate=False) == 3
        assert store.entries(3)[0].key == -150
        remove_elliptic_entries(store, 1)
        assert len(store) == 0

    def test_negative_budget(self, line_network):
        """Test that a negative budget writes nothing."""
        ch = build_ch(line_network.veh)
        store = BucketStore(BucketOrder.LEEWAY)
        assert generate_elliptic_entries(ch, store, 1, 0, -1, SearchDirection.DOWN) == 0


class TestEllipticBuckets:
    """Test bucket synchronisation with the fleet."""

    @pytest.fixture
    def setup(self, line_ch, line_params, one_vehicle):
        state = FleetState(one_vehicle, line_ch, line_params)
        buckets = EllipticBuckets(line_ch, line_params.stop_time)
        state.add_listener(buckets)
        return state, buckets

    def test_idle_fleet_has_no_entries(self, setup):
        """Test that single-stop routes have no legs."""
        state, buckets = setup
        assert len(buckets.sources) == 0
        assert len(buckets.targets) == 0
        assert elliptic_query(buckets, state, [PDLocation(0, 1, 0)]).legs == {}

    def test_query_inside_ellipse(self, setup):
        """Test distances to a vertex inside both legs' ellipses."""
        state, buckets = setup
        dispatch_line_request(state)
        result = elliptic_query(buckets, state, [PDLocation(0, 1, 0)], k=1)
        assert result.get(0, 0, 0) == (100, 100)
        assert result.get(0, 1, 0) == (100, 200)
        assert result.vehicles() == {0}

    def test_stop_index(self, setup):
        """Test that stops are indexed by vehicle and position."""
        state, buckets = setup
        dispatch_line_request(state)
        uids = [stop.uid for stop in state.routes[0]]
        assert [buckets.stop_index[uid] for uid in uids] == [(0, 0), (0, 1), (0, 2)]
        assert buckets.vehicles_with_stop_at([2]) == {0}
        assert buckets.vehicles_with_stop_at([1]) == set()

    def test_entries_removed_when_routes_finish(self, setup):
        """Test that completed routes leave no entries behind."""
        state, buckets = setup
        dispatch_line_request(state)
        assert len(buckets.sources) > 0
        state.finish()
        assert len(buckets.sources) == 0
        assert len(buckets.targets) == 0

    def test_tight_leeway_excludes(self, line_ch, one_vehicle):
        """Test that vertices outside every ellipse are not reported."""
        params = CostParameters(stop_time=60, alpha=1.0, beta=0)
        state = FleetState(one_vehicle, line_ch, params)
        buckets = EllipticBuckets(line_ch, params.stop_time)
        state.add_listener(buckets)
        dispatch_line_request(state, max_trip=100)
        assert state.routes[0][2].arrival_deadline == 360
        result = elliptic_query(buckets, state, [PDLocation(0, 1, 0), PDLocation(1, 2, 0)])
        assert result.legs == {}

    def test_truncation_is_lossless(self, line_ch, line_params, one_vehicle):
        """Test that truncated and full buckets answer identically."""
        results = []
        for truncate in (True, False):
            state = FleetState(one_vehicle, line_ch, line_params)
            buckets = EllipticBuckets(line_ch, line_params.stop_time, truncate=truncate)
            state.add_listener(buckets)
            dispatch_line_request(state)
            locations = [PDLocation(v, v, 0) for v in range(4)]
            results.append(elliptic_query(buckets, state, locations).legs)
        assert results[0] == results[1]


@st.composite
def routed_graphs(draw):
    graph = draw(graphs())
    stops = draw(st.lists(st.integers(0, graph.vertex_count - 1), min_size=2, max_size=4))
    return graph, stops


class TestEllipticExactness:
    """Property tests against textbook Dijkstra."""

    @settings(max_examples=100, deadline=None)
    @given(routed_graphs(), st.integers(1, 8))
    def test_distances_match_reference(self, routed, k):
        """Test both legs of every stop pair with an unbounded leeway."""
        graph, stops = routed
        ch = build_ch(graph)
        state = FleetState([Vehicle(0, stops[0], 4, 0, 10 ** 6)], ch, CostParameters(stop_time=0))
        route = state.routes[0]
        for a, location in enumerate(stops[1:], start=1):
            route.append(Stop(
                uid=100 + a, location=location, arrival=10 * a, departure=10 * a,
                pickups=[a], arrival_deadline=10 ** 6,
            ))
        buckets = EllipticBuckets(ch, 0)
        state.add_listener(buckets)
        locations = [PDLocation(v, v, 0) for v in range(graph.vertex_count)]
        result = elliptic_query(buckets, state, locations, k=k)
        for a in range(len(stops) - 1):
            to_location = reference_dijkstra(graph, stops[a])
            from_location = reference_dijkstra(graph, stops[a + 1], reverse=True)
            for v in range(graph.vertex_count):
                if v in to_location and v in from_location:
                    assert result.get(0, a, v) == (to_location[v], from_location[v])
                else:
                    assert result.get(0, a, v) is None
