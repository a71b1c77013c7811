"""Configuration loading, instance file parsing and validation utilities."""

from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import ValidationError

from .config import RunConfig
from .fleet import Request, Vehicle
from .network import NetworkFormatError, RoadNetworkPair, load_network_pair


class InstanceFormatError(ValueError):
    """Raised when a vehicle or request file is malformed."""
    pass


def load_yaml(file_path: Path) -> Dict[str, Any]:
    """Load YAML file and return parsed content."""
    try:
        with open(file_path, 'r') as f:
            return yaml.safe_load(f) or {}
    except FileNotFoundError:
        raise FileNotFoundError(f"Configuration file not found: {file_path}")
    except yaml.YAMLError as e:
        raise ValueError(f"Invalid YAML syntax in {file_path}: {e}")


def load_run_config(config_path: Union[str, Path]) -> RunConfig:
    """Load and validate a run configuration; relative paths resolve against its directory."""
    config_path = Path(config_path)
    data = load_yaml(config_path)
    try:
        config = RunConfig(**data)
    except ValidationError as e:
        raise ValueError(f"Invalid run config {config_path}: {e}")
    return config.resolve_paths(config_path.resolve().parent)


def merge_run_config(
    config_path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
    cost: Optional[Dict[str, Any]] = None,
    search: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """Run configuration from an optional file with command-line values layered on top.

    None values in the override dictionaries leave the file value in place.
    """
    data: Dict[str, Any] = {}
    if config_path is not None:
        data = load_run_config(config_path).model_dump(exclude_none=True)
    for section, values in ((None, overrides), ("cost", cost), ("search", search)):
        given = {k: v for k, v in (values or {}).items() if v is not None}
        if section is None:
            data.update(given)
        elif given:
            data[section] = {**data.get(section, {}), **given}
    try:
        return RunConfig(**data)
    except ValidationError as e:
        raise ValueError(f"Invalid run config: {e}")


def _records(text: str, keyword: str, arity: int, source: str):
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] != keyword or len(parts) != arity + 1:
            raise InstanceFormatError(
                f"{source}:{line_no}: expected '{keyword}' followed by {arity} integers, got '{raw.strip()}'"
            )
        try:
            yield line_no, [int(p) for p in parts[1:]]
        except ValueError:
            raise InstanceFormatError(f"{source}:{line_no}: non-integer field in '{raw.strip()}'")


def parse_vehicles(text: str, source: str = "<string>") -> List[Vehicle]:
    """Parse ``vehicle id loc capacity t_start t_end`` lines."""
    vehicles = []
    for line_no, (vid, loc, capacity, start, end) in _records(text, "vehicle", 5, source):
        try:
            vehicles.append(Vehicle(vid, loc, capacity, start, end))
        except ValueError as e:
            raise InstanceFormatError(f"{source}:{line_no}: {e}")
    return vehicles


def parse_requests(text: str, source: str = "<string>") -> List[Request]:
    """Parse ``request id origin dest t_req`` lines, stably sorted by request time."""
    requests = [
        Request(rid, origin, dest, t)
        for _, (rid, origin, dest, t) in _records(text, "request", 4, source)
    ]
    return sorted(requests, key=lambda r: r.time)


def _read(path: Union[str, Path], what: str) -> str:
    path = Path(path)
    try:
        return path.read_text()
    except FileNotFoundError:
        raise FileNotFoundError(f"{what} file not found: {path}")


def load_vehicles(path: Union[str, Path]) -> List[Vehicle]:
    return parse_vehicles(_read(path, "Vehicle"), source=str(path))


def load_requests(path: Union[str, Path]) -> List[Request]:
    return parse_requests(_read(path, "Request"), source=str(path))


def check_instance(network: RoadNetworkPair, vehicles: List[Vehicle], requests: List[Request]) -> List[str]:
    """Problems that make an instance unusable with this network."""
    errors = []
    n = network.vertex_count
    seen = set()
    for vehicle in vehicles:
        if vehicle.id in seen:
            errors.append(f"Duplicate vehicle id {vehicle.id}")
        seen.add(vehicle.id)
        if not 0 <= vehicle.initial_location < n:
            errors.append(f"Vehicle {vehicle.id}: location {vehicle.initial_location} outside 0..{n - 1}")
        elif vehicle.initial_location not in network.veh_accessible:
            errors.append(f"Vehicle {vehicle.id}: location {vehicle.initial_location} has no vehicle edges")
    seen = set()
    for request in requests:
        if request.id in seen:
            errors.append(f"Duplicate request id {request.id}")
        seen.add(request.id)
        for name, v in (("origin", request.origin), ("destination", request.destination)):
            if not 0 <= v < n:
                errors.append(f"Request {request.id}: {name} {v} outside 0..{n - 1}")
        if request.time < 0:
            errors.append(f"Request {request.id}: negative request time {request.time}")
    return errors


def validate_instance(config: RunConfig) -> Dict[str, Any]:
    """Validate every file of a run configuration and return a summary."""
    results: Dict[str, Any] = {
        "network": None,
        "vehicles": None,
        "requests": None,
        "errors": [],
    }
    network = vehicles = requests = None
    try:
        network = load_network_pair(config.network)
        results["network"] = f"✓ Valid ({network.vertex_count} vertices, {len(network.boarding)} boarding)"
    except (FileNotFoundError, NetworkFormatError) as e:
        results["network"] = f"✗ Error: {e}"
        results["errors"].append(f"Network: {e}")
    try:
        vehicles = load_vehicles(config.vehicles)
        results["vehicles"] = f"✓ Valid ({len(vehicles)} vehicles)"
    except (FileNotFoundError, InstanceFormatError) as e:
        results["vehicles"] = f"✗ Error: {e}"
        results["errors"].append(f"Vehicles: {e}")
    try:
        requests = load_requests(config.requests)
        results["requests"] = f"✓ Valid ({len(requests)} requests)"
    except (FileNotFoundError, InstanceFormatError) as e:
        results["requests"] = f"✗ Error: {e}"
        results["errors"].append(f"Requests: {e}")

    if network is not None and vehicles is not None and requests is not None:
        results["errors"].extend(check_instance(network, vehicles, requests))
    return results
