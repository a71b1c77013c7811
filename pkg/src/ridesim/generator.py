"""Synthetic instances and benchmark sweeps."""

import itertools
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from .fleet import Request, Vehicle
from .network import RoadNetworkPair, build_network_pair, serialize_network


def generate_grid_network(
    rows: int,
    cols: int,
    rng: np.random.Generator,
    min_time: int = 100,
    max_time: int = 600,
    walk_factor: int = 5,
) -> RoadNetworkPair:
    """Bidirectional grid with random vehicle times; walking is walk_factor times slower.

    Args:
        rows: Grid rows
        cols: Grid columns
        rng: Seeded generator
        min_time: Smallest vehicle edge time (ds)
        max_time: Largest vehicle edge time (ds)
        walk_factor: Pedestrian time multiplier per edge

    Returns:
        Network pair with every vertex boardable
    """
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise ValueError("grid needs at least two vertices")
    veh = []
    psg = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            neighbours = []
            if c + 1 < cols:
                neighbours.append(v + 1)
            if r + 1 < rows:
                neighbours.append(v + cols)
            for w in neighbours:
                forward, backward = (int(t) for t in rng.integers(min_time, max_time + 1, size=2))
                veh.extend([(v, w, forward), (w, v, backward)])
                walk = walk_factor * min(forward, backward)
                psg.extend([(v, w, walk), (w, v, walk)])
    return build_network_pair(rows * cols, veh, psg)


def generate_vehicles(
    network: RoadNetworkPair,
    count: int,
    rng: np.random.Generator,
    capacity: int = 4,
    service_end: int = 360000,
) -> List[Vehicle]:
    locations = rng.integers(0, network.vertex_count, size=count)
    return [Vehicle(vid, int(loc), capacity, 0, service_end) for vid, loc in enumerate(locations)]


def generate_requests(
    network: RoadNetworkPair,
    count: int,
    rng: np.random.Generator,
    horizon: int = 36000,
) -> List[Request]:
    """Requests with distinct random endpoints at uniformly drawn times, sorted by time."""
    n = network.vertex_count
    times = np.sort(rng.integers(0, horizon, size=count))
    requests = []
    for rid, t in enumerate(times):
        origin = int(rng.integers(0, n))
        destination = int(rng.integers(0, n))
        if n > 1:
            while destination == origin:
                destination = int(rng.integers(0, n))
        requests.append(Request(rid, origin, destination, int(t)))
    return requests


def serialize_vehicles(vehicles: List[Vehicle]) -> str:
    return "".join(
        f"vehicle {v.id} {v.initial_location} {v.capacity} {v.service_start} {v.service_end}\n"
        for v in vehicles
    )


def serialize_requests(requests: List[Request]) -> str:
    return "".join(f"request {r.id} {r.origin} {r.destination} {r.time}\n" for r in requests)


def generate_instance(
    directory: Path,
    rows: int = 6,
    cols: int = 6,
    vehicle_count: int = 4,
    request_count: int = 30,
    seed: int = 1,
    walk_radius: int = 0,
    force: bool = False,
) -> Dict[str, Any]:
    """Write network, vehicle, request and run.yaml files for a synthetic instance.

    Existing files are kept unless force is set.

    Returns:
        Dictionary with the written paths and instance sizes
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    network = generate_grid_network(rows, cols, rng)
    vehicles = generate_vehicles(network, vehicle_count, rng)
    requests = generate_requests(network, request_count, rng)

    files = {
        "network.txt": serialize_network(network),
        "vehicles.txt": serialize_vehicles(vehicles),
        "requests.txt": serialize_requests(requests),
        "run.yaml": yaml.dump(
            {
                "network": "network.txt",
                "vehicles": "vehicles.txt",
                "requests": "requests.txt",
                "ch_cache": "ch_cache",
                "output": "results",
                "cost": {"walk_radius": walk_radius},
                "search": {"strategy_pals": "collective-bch", "strategy_dals": "collective-bch"},
            },
            default_flow_style=False,
            sort_keys=False,
        ),
    }
    written, skipped = [], []
    for name, content in files.items():
        path = directory / name
        if path.exists() and not force:
            skipped.append(name)
            continue
        path.write_text(content)
        written.append(name)
    return {
        "directory": directory,
        "written": written,
        "skipped": skipped,
        "vertices": network.vertex_count,
        "vehicles": len(vehicles),
        "requests": len(requests),
    }


def generate_parameter_combinations(parameters: Dict[str, List[Any]]) -> List[Dict[str, Any]]:
    """All combinations of parameter values, in the order given.

    Args:
        parameters: Parameter names mapped to candidate values

    Returns:
        One dictionary per combination
    """
    names = list(parameters.keys())
    return [dict(zip(names, values)) for values in itertools.product(*parameters.values())]


DEFAULT_BENCH_SWEEP: Dict[str, List[Any]] = {
    "strategy_pals": ["dijkstra", "individual-bch", "collective-bch"],
    "strategy_dals": ["dijkstra", "individual-bch", "collective-bch"],
    "sorted_buckets": [True, False],
}


def bench_combinations(sweep: Optional[Dict[str, List[Any]]] = None) -> List[Dict[str, Any]]:
    """Search-config overrides for a bench run; defaults pair PALS and DALS strategies."""
    if sweep is None:
        strategies = DEFAULT_BENCH_SWEEP["strategy_pals"]
        return [
            {"strategy_pals": s, "strategy_dals": s, "sorted_buckets": b}
            for s, b in itertools.product(strategies, DEFAULT_BENCH_SWEEP["sorted_buckets"])
        ]
    return generate_parameter_combinations(sweep)
