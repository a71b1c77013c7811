"""Tests for synthetic instances and bench sweeps."""

import numpy as np
import pytest
import yaml

from ridesim.generator import (
    bench_combinations,
    generate_grid_network,
    generate_instance,
    generate_parameter_combinations,
    generate_requests,
    generate_vehicles,
)
from ridesim.loader import load_requests, load_run_config, load_vehicles
from ridesim.network import load_network_pair


class TestGridNetwork:
    """Test grid generation."""

    def test_shape(self):
        """Test edge counts and walking times of a 3x3 grid."""
        network = generate_grid_network(3, 3, np.random.default_rng(0))
        assert network.vertex_count == 9
        assert len(network.veh) == 24
        assert len(network.psg) == 24
        assert network.boarding == frozenset(range(9))
        veh = {(t, h): w for t, h, w in network.veh.edges}
        for t, h, w in network.psg.edges:
            assert w == 5 * min(veh[(t, h)], veh[(h, t)])
            assert 100 <= veh[(t, h)] <= 600

    def test_seeded(self):
        """Test that equal seeds give equal networks."""
        first = generate_grid_network(3, 4, np.random.default_rng(7))
        second = generate_grid_network(3, 4, np.random.default_rng(7))
        assert first.veh.edges == second.veh.edges

    def test_too_small(self):
        """Test that a single vertex is rejected."""
        with pytest.raises(ValueError, match="at least two vertices"):
            generate_grid_network(1, 1, np.random.default_rng(0))


class TestFleetAndDemand:
    """Test vehicle and request generation."""

    def test_vehicles(self):
        """Test vehicle ids, locations and capacities."""
        rng = np.random.default_rng(1)
        network = generate_grid_network(3, 3, rng)
        vehicles = generate_vehicles(network, 5, rng, capacity=3)
        assert [v.id for v in vehicles] == [0, 1, 2, 3, 4]
        assert all(0 <= v.initial_location < 9 and v.capacity == 3 for v in vehicles)

    def test_requests(self):
        """Test sorted times and distinct endpoints."""
        rng = np.random.default_rng(2)
        network = generate_grid_network(2, 2, rng)
        requests = generate_requests(network, 50, rng, horizon=1000)
        times = [r.time for r in requests]
        assert times == sorted(times)
        assert all(0 <= t < 1000 for t in times)
        assert all(r.origin != r.destination for r in requests)


class TestGenerateInstance:
    """Test instance scaffolding."""

    def test_writes_loadable_files(self, tmp_path):
        """Test that every written file loads back."""
        results = generate_instance(tmp_path, rows=3, cols=3, vehicle_count=2, request_count=7, walk_radius=250)
        assert results["written"] == ["network.txt", "vehicles.txt", "requests.txt", "run.yaml"]
        assert load_network_pair(tmp_path / "network.txt").vertex_count == 9
        assert len(load_vehicles(tmp_path / "vehicles.txt")) == 2
        assert len(load_requests(tmp_path / "requests.txt")) == 7
        config = load_run_config(tmp_path / "run.yaml")
        assert config.cost.walk_radius == 250
        assert config.ch_cache == tmp_path / "ch_cache"

    def test_existing_files_kept(self, tmp_path):
        """Test that existing files are skipped unless forced."""
        (tmp_path / "run.yaml").write_text("custom: true\n")
        results = generate_instance(tmp_path, rows=2, cols=2)
        assert results["skipped"] == ["run.yaml"]
        assert yaml.safe_load((tmp_path / "run.yaml").read_text()) == {"custom": True}
        results = generate_instance(tmp_path, rows=2, cols=2, force=True)
        assert results["skipped"] == []
        assert "network" in yaml.safe_load((tmp_path / "run.yaml").read_text())


class TestParameterCombinations:
    """Test bench sweeps."""

    def test_product(self):
        """Test all combinations in order."""
        combinations = generate_parameter_combinations({"a": [1, 2], "b": ["x", "y"]})
        assert combinations == [
            {"a": 1, "b": "x"}, {"a": 1, "b": "y"}, {"a": 2, "b": "x"}, {"a": 2, "b": "y"},
        ]

    def test_default_bench_pairs_strategies(self):
        """Test that the default sweep uses one strategy for PALS and DALS."""
        combinations = bench_combinations()
        assert len(combinations) == 6
        assert all(c["strategy_pals"] == c["strategy_dals"] for c in combinations)
        assert {c["sorted_buckets"] for c in combinations} == {True, False}

    def test_custom_sweep(self):
        """Test a user-given sweep."""
        assert bench_combinations({"k_pd": [1, 32]}) == [{"k_pd": 1}, {"k_pd": 32}]
