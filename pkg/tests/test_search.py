"""Tests for bundled Dijkstra, bucket stores and counters."""

import numpy as np
import pytest

from ridesim.search import (
    INFINITY,
    BucketEntry,
    BucketOrder,
    BucketStore,
    SearchCounters,
    bucket_insert,
    bucket_remove_owner,
    bucket_scan,
    dijkstra,
)


class TestDijkstra:
    """Test bounded and bundled Dijkstra."""

    def test_radius(self, line_network):
        """Test that distances above the radius are not recorded."""
        result = dijkstra(line_network.veh.adjacency(), [0], radius=250)
        assert result == [{0: 0, 1: 100, 2: 200}]

    def test_bundled_sources(self, line_network):
        """Test that lanes of one bundle keep single-source results."""
        result = dijkstra(line_network.veh.adjacency(), [0, 3, 1], k=2)
        assert result[0] == {0: 0, 1: 100, 2: 200, 3: 300}
        assert result[1] == {3: 0, 2: 100, 1: 200, 0: 300}
        assert result[2] == {1: 0, 0: 100, 2: 100, 3: 200}

    def test_bundle_width_does_not_change_results(self, line_network):
        """Test that every bundle width gives the same maps."""
        sources = [3, 0, 2, 2, 1]
        single = dijkstra(line_network.veh.adjacency(), sources, k=1)
        for k in (2, 3, 8):
            assert dijkstra(line_network.veh.adjacency(), sources, k=k) == single

    def test_reverse_search(self):
        """Test that reversed adjacency follows edges backwards."""
        from ridesim.network import Graph
        graph = Graph(3, [(0, 1, 5), (1, 2, 7)])
        assert dijkstra(graph.adjacency(reverse=True), [2]) == [{2: 0, 1: 7, 0: 12}]

    def test_lane_prune(self, line_network):
        """Test that pruned labels are never settled."""
        def prune(lanes, values):
            return values > 150
        result = dijkstra(line_network.veh.adjacency(), [0], prune=prune)
        assert result == [{0: 0, 1: 100}]

    def test_lane_prune_receives_source_indices(self, line_network):
        """Test that prune rules see global source indices across bundles."""
        seen = set()

        def prune(lanes, values):
            seen.update(int(lane) for lane in lanes)
            return np.zeros(len(values), dtype=bool)
        dijkstra(line_network.veh.adjacency(), [0, 1, 2], k=2, prune=prune)
        assert seen == {0, 1, 2}

    def test_targets_are_exact(self, line_network):
        """Test early termination once targets are final."""
        counters = SearchCounters()
        result = dijkstra(line_network.veh.adjacency(), [0], targets=[1], counters=counters)
        assert result[0][1] == 100
        assert counters.settled_vertices < 4

    def test_requires_sources(self, line_network):
        """Test that an empty source list is rejected."""
        with pytest.raises(ValueError, match="at least one source"):
            dijkstra(line_network.veh.adjacency(), [])


class TestBuckets:
    """Test sorted and unsorted bucket stores."""

    def _store(self, order, sorted_buckets):
        store = BucketStore(order, sorted_buckets)
        for owner, key in (("a", 5), ("b", 20), ("c", 10)):
            bucket_insert(store, 7, BucketEntry(owner=owner, dist=key, key=key))
        return store

    @staticmethod
    def _exceeds(entry, query_dist):
        return query_dist > entry.key

    def test_leeway_order_descending(self):
        """Test that leeway-keyed buckets keep the largest key first."""
        store = self._store(BucketOrder.LEEWAY, True)
        assert [e.key for e in store.entries(7)] == [20, 10, 5]

    def test_dist_order_ascending(self):
        """Test that distance-keyed buckets keep the smallest key first."""
        store = self._store(BucketOrder.DIST, True)
        assert [e.key for e in store.entries(7)] == [5, 10, 20]

    def test_sorted_scan_stops_early(self):
        """Test that a sorted scan stops at the first rejected entry."""
        store = self._store(BucketOrder.LEEWAY, True)
        counters = SearchCounters()
        visited = bucket_scan(store, 7, 8, self._exceeds, counters=counters)
        assert [e.owner for e in visited] == ["b", "c"]
        assert counters.scanned_entries == 3

    def test_unsorted_scan_visits_same_set(self):
        """Test that unsorted stores visit the same entries."""
        sorted_store = self._store(BucketOrder.LEEWAY, True)
        unsorted_store = self._store(BucketOrder.LEEWAY, False)
        assert [e.key for e in unsorted_store.entries(7)] == [5, 20, 10]
        for query in (0, 8, 15, 30):
            a = {e.owner for e in bucket_scan(sorted_store, 7, query, self._exceeds)}
            b = {e.owner for e in bucket_scan(unsorted_store, 7, query, self._exceeds)}
            assert a == b

    def test_scan_visit_callback(self):
        """Test that visit is called for every accepted entry."""
        store = self._store(BucketOrder.DIST, True)
        seen = []
        bucket_scan(store, 7, 0, lambda e, q: False, visit=seen.append)
        assert [e.owner for e in seen] == ["a", "c", "b"]

    def test_stable_ties(self):
        """Test that equal keys keep insertion order."""
        store = BucketStore(BucketOrder.DIST)
        for owner in ("x", "y", "z"):
            store.insert(1, BucketEntry(owner=owner, dist=3, key=3))
        assert [e.owner for e in store.entries(1)] == ["x", "y", "z"]

    def test_remove_owner(self):
        """Test removal by owner, restricted removal and unknown owners."""
        store = self._store(BucketOrder.DIST, True)
        store.insert(9, BucketEntry(owner="a", dist=1, key=1))
        bucket_remove_owner(store, "a", [7])
        assert store.vertices_of("a") == {9}
        assert [e.owner for e in store.entries(7)] == ["c", "b"]
        bucket_remove_owner(store, "a")
        bucket_remove_owner(store, "nobody")
        assert store.entries(9) == []
        assert len(store) == 2
        assert sorted(store.owners()) == ["b", "c"]

    def test_infinite_key_rejected(self):
        """Test that entries need a finite key."""
        store = BucketStore(BucketOrder.LEEWAY)
        with pytest.raises(ValueError, match="finite"):
            store.insert(0, BucketEntry(owner=0, dist=0, key=INFINITY))


class TestSearchCounters:
    """Test counter bookkeeping."""

    def test_add_and_as_dict(self):
        """Test that counters add field by field."""
        a = SearchCounters(relaxed_edges=3, settled_labels=1)
        a.add(SearchCounters(relaxed_edges=2, exact_queries=4))
        assert a.as_dict()["relaxed_edges"] == 5
        assert a.as_dict()["exact_queries"] == 4
        assert a.as_dict()["settled_labels"] == 1
