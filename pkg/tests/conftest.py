"""Shared fixtures: small road networks, fleets and dispatchers."""

import numpy as np
import pytest
from hypothesis import strategies as st

from ridesim.ch import build_ch
from ridesim.config import CostParameters, SearchConfig
from ridesim.dispatch import Dispatcher
from ridesim.fleet import FleetState, Vehicle
from ridesim.generator import generate_grid_network, generate_requests, generate_vehicles
from ridesim.network import Graph, parse_network


def line_text(walk: int = 100) -> str:
    """Four vertices on a line, 100 ds apart by car and ``walk`` ds on foot."""
    lines = ["# v0 - v1 - v2 - v3", "vertices 4"]
    for u in range(3):
        lines += [f"veh {u} {u + 1} 100", f"veh {u + 1} {u} 100"]
    for u in range(3):
        lines += [f"psg {u} {u + 1} {walk}", f"psg {u + 1} {u} {walk}"]
    return "\n".join(lines) + "\n"


@pytest.fixture
def line_network():
    return parse_network(line_text())


@pytest.fixture
def slow_walk_line():
    """LINE network where walking one edge takes 1000 ds."""
    return parse_network(line_text(walk=1000))


@pytest.fixture
def line_ch(line_network):
    return build_ch(line_network.veh)


@pytest.fixture
def line_params():
    return CostParameters(stop_time=60)


@pytest.fixture
def make_dispatcher():
    """Factory building a dispatcher over a fresh fleet."""
    def make(network, vehicles, params=None, search=None, now=0):
        veh_ch = build_ch(network.veh)
        psg_ch = build_ch(network.psg)
        state = FleetState(vehicles, veh_ch, params or CostParameters(), now)
        return Dispatcher(network, veh_ch, psg_ch, state, search or SearchConfig())
    return make


@pytest.fixture
def make_instance():
    """Factory for small random grid instances with dense request times."""
    def make(seed, rows=4, cols=4, vehicles=3, requests=12, horizon=6000):
        rng = np.random.default_rng(seed)
        network = generate_grid_network(rows, cols, rng)
        fleet = generate_vehicles(network, vehicles, rng, capacity=2)
        demand = generate_requests(network, requests, rng, horizon=horizon)
        return network, fleet, demand
    return make


@pytest.fixture
def one_vehicle():
    return [Vehicle(0, 0, 4, 0, 100000)]


@st.composite
def graphs(draw):
    """Small random directed graphs with zero weights, loops and parallel edges."""
    n = draw(st.integers(min_value=2, max_value=9))
    edges = draw(st.lists(
        st.tuples(
            st.integers(0, n - 1), st.integers(0, n - 1), st.integers(0, 20),
        ),
        max_size=4 * n,
    ))
    return Graph(n, edges)
