"""Event-driven simulation: requests in time order, dispatch, apply, statistics."""

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .ch import CHCacheError, ContractionHierarchy, build_ch, load_ch, save_ch
from .config import CostParameters, RunConfig, SearchConfig
from .dispatch import PHASES, PSEUDO, DispatchOutcome, Dispatcher
from .fleet import FleetState, Request, Vehicle
from .loader import check_instance, load_requests, load_vehicles
from .network import Graph, NetworkFormatError, RoadNetworkPair, load_network_pair
from .oracle import BruteForceOracle, OracleMismatchError
from .report import write_outcomes, write_stats
from .search import SearchCounters

logger = logging.getLogger(__name__)


class SimulationError(Exception):
    """Exception raised when a simulation run fails."""
    pass


@dataclass
class SimulationStats:
    """Rider and fleet averages of one run, in deciseconds."""
    requests: int = 0
    served: int = 0
    pseudo: int = 0
    unserved: int = 0
    mean_wait: float = 0.0
    p95_wait: float = 0.0
    mean_ride: float = 0.0
    mean_trip: float = 0.0
    mean_empty_drive: float = 0.0
    mean_occupied_drive: float = 0.0
    mean_stop: float = 0.0
    mean_operation: float = 0.0

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


def _mean(values: np.ndarray) -> float:
    return float(values.mean()) if values.size else 0.0


def compute_stats(state: FleetState, outcomes: Sequence[DispatchOutcome]) -> SimulationStats:
    """Statistics after every route has run to completion.

    Riders served on foot count with wait 0, ride 0 and their walking time as
    trip. Unserved requests are only counted.
    """
    waits, rides, trips = [], [], []
    pseudo = unserved = 0
    for outcome in outcomes:
        if not outcome.served:
            unserved += 1
        elif outcome.kind == PSEUDO:
            pseudo += 1
            waits.append(0)
            rides.append(0)
            trips.append(outcome.walk)
        else:
            rider = state.riders[outcome.request.id]
            waits.append(rider.pickup_time - rider.request.time)
            rides.append(rider.dropoff_time - rider.pickup_time)
            trips.append(rider.dropoff_time + rider.walk_from_dropoff - rider.request.time)

    wait_array = np.array(waits, dtype=float)
    operations = list(state.operation.values())
    empty = np.array([op.empty_drive for op in operations], dtype=float)
    occupied = np.array([op.occupied_drive for op in operations], dtype=float)
    stop = np.array([op.stop for op in operations], dtype=float)
    return SimulationStats(
        requests=len(outcomes),
        served=len(outcomes) - unserved,
        pseudo=pseudo,
        unserved=unserved,
        mean_wait=_mean(wait_array),
        p95_wait=float(np.percentile(wait_array, 95)) if wait_array.size else 0.0,
        mean_ride=_mean(np.array(rides, dtype=float)),
        mean_trip=_mean(np.array(trips, dtype=float)),
        mean_empty_drive=_mean(empty),
        mean_occupied_drive=_mean(occupied),
        mean_stop=_mean(stop),
        mean_operation=_mean(empty + occupied + stop),
    )


def advance_time(state: FleetState, t: int) -> None:
    """Execute every schedule event up to t; listeners keep buckets in sync."""
    state.advance(t)


@dataclass
class SimulationResult:
    outcomes: List[DispatchOutcome]
    stats: SimulationStats
    state: FleetState
    fallbacks: int = 0

    def phase_counters(self) -> Dict[str, SearchCounters]:
        totals = {phase: SearchCounters() for phase in PHASES}
        for outcome in self.outcomes:
            for phase, counters in outcome.counters.items():
                totals[phase].add(counters)
        return totals

    def mean_timings_ms(self) -> Dict[str, float]:
        if not self.outcomes:
            return {phase: 0.0 for phase in PHASES}
        return {
            phase: 1000.0 * sum(o.timings.get(phase, 0.0) for o in self.outcomes) / len(self.outcomes)
            for phase in PHASES
        }


def build_hierarchies(
    network: RoadNetworkPair, cache_dir: Optional[Path] = None
) -> Tuple[ContractionHierarchy, ContractionHierarchy]:
    """Vehicle and pedestrian hierarchies, read from and written to cache_dir when given."""
    hierarchies = []
    for name, graph in (("veh", network.veh), ("psg", network.psg)):
        hierarchies.append(_cached_hierarchy(name, graph, cache_dir))
    return hierarchies[0], hierarchies[1]


def _cached_hierarchy(name: str, graph: Graph, cache_dir: Optional[Path]) -> ContractionHierarchy:
    if cache_dir is None:
        return build_ch(graph)
    path = Path(cache_dir) / f"{name}.rsch"
    if path.exists():
        try:
            return load_ch(graph, path)
        except CHCacheError as e:
            logger.warning("Ignoring CH cache %s: %s", path, e)
    ch = build_ch(graph)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_ch(ch, graph, path)
    logger.info("Wrote CH cache %s", path)
    return ch


def simulate(
    network: RoadNetworkPair,
    vehicles: Sequence[Vehicle],
    requests: Sequence[Request],
    params: Optional[CostParameters] = None,
    search: Optional[SearchConfig] = None,
    hierarchies: Optional[Tuple[ContractionHierarchy, ContractionHierarchy]] = None,
    verify_oracle: bool = False,
    advance_step: Optional[int] = None,
) -> SimulationResult:
    """Dispatch requests in time order and run all routes to completion.

    Args:
        network: Road network pair
        vehicles: Fleet
        requests: Requests; stably sorted by time here
        params: Cost parameters
        search: Search configuration
        hierarchies: Prebuilt (vehicle, pedestrian) hierarchies
        verify_oracle: Cross-check every dispatch against brute force and
            re-check every route after each apply
        advance_step: Advance the clock in steps of at most this many ds

    Returns:
        Outcomes, statistics and the final fleet

    Raises:
        OracleMismatchError: If verify_oracle is set and a dispatch disagrees
    """
    params = params or CostParameters()
    veh_ch, psg_ch = hierarchies or build_hierarchies(network)
    state = FleetState(vehicles, veh_ch, params)
    dispatcher = Dispatcher(network, veh_ch, psg_ch, state, search)
    oracle = BruteForceOracle(network) if verify_oracle else None

    outcomes = []
    fallbacks = 0
    for request in sorted(requests, key=lambda r: r.time):
        target = max(request.time, state.now)
        if advance_step:
            while state.now + advance_step < target:
                advance_time(state, state.now + advance_step)
        advance_time(state, target)

        outcome = dispatcher.evaluate(request)
        if oracle is not None:
            oracle.verify(state, request, outcome.cost)
        dispatcher.commit(outcome)
        if oracle is not None:
            state.check_all()
        outcomes.append(outcome)
        fallbacks += outcome.fallbacks

    state.finish()
    stats = compute_stats(state, outcomes)
    logger.info(
        "Simulated %d requests: %d by vehicle, %d on foot, %d unserved",
        stats.requests, stats.served - stats.pseudo, stats.pseudo, stats.unserved,
    )
    return SimulationResult(outcomes, stats, state, fallbacks)


def run(config: RunConfig) -> SimulationResult:
    """Load the instance of a run configuration, simulate and write the outputs.

    Raises:
        FileNotFoundError: If an input file is missing
        ValueError: If an input file or the instance is invalid
        OracleMismatchError: If verification is on and a dispatch disagrees
        SimulationError: On any other failure during the run
    """
    network = load_network_pair(config.network)
    vehicles = load_vehicles(config.vehicles)
    requests = load_requests(config.requests)
    errors = check_instance(network, vehicles, requests)
    if errors:
        raise ValueError("Invalid instance: " + "; ".join(errors))

    try:
        hierarchies = build_hierarchies(network, config.ch_cache)
        result = simulate(
            network, vehicles, requests, config.cost, config.search,
            hierarchies=hierarchies, verify_oracle=config.verify_oracle,
        )
    except (OracleMismatchError, NetworkFormatError):
        raise
    except Exception as e:
        raise SimulationError(f"Simulation failed: {e}") from e

    output = Path(config.output)
    output.mkdir(parents=True, exist_ok=True)
    write_outcomes(output / "outcomes.jsonl", result.outcomes, counters=config.counters)
    write_stats(output / "stats.csv", result.stats)
    return result
