"""Dual vehicle/pedestrian road networks over a shared vertex id space."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet, Iterable, List, Optional, Tuple, Union

logger = logging.getLogger(__name__)

Edge = Tuple[int, int, int]


class NetworkFormatError(ValueError):
    """Raised when a network file cannot be parsed or fails validation."""
    pass


class Graph:
    """Weighted directed graph with forward and reverse adjacency lists.

    Parallel edges are kept as given; searches simply relax all of them.
    """

    def __init__(self, vertex_count: int, edges: Iterable[Edge]):
        self.vertex_count = vertex_count
        self.edges: List[Edge] = list(edges)
        self._out: List[List[Tuple[int, int]]] = [[] for _ in range(vertex_count)]
        self._in: List[List[Tuple[int, int]]] = [[] for _ in range(vertex_count)]
        for tail, head, weight in self.edges:
            self._out[tail].append((head, weight))
            self._in[head].append((tail, weight))

    def out_edges(self, v: int) -> List[Tuple[int, int]]:
        return self._out[v]

    def in_edges(self, v: int) -> List[Tuple[int, int]]:
        return self._in[v]

    def adjacency(self, reverse: bool = False) -> List[List[Tuple[int, int]]]:
        """Adjacency lists in search direction (reverse follows edges backwards)."""
        return self._in if reverse else self._out

    def incident_vertices(self) -> FrozenSet[int]:
        return frozenset(v for tail, head, _ in self.edges for v in (tail, head))

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class RoadNetworkPair:
    """Vehicle and pedestrian graphs sharing one vertex id space.

    Walking speed is already baked into the pedestrian travel times.
    """
    vertex_count: int
    veh: Graph
    psg: Graph
    veh_accessible: FrozenSet[int]
    psg_accessible: FrozenSet[int]
    boarding: FrozenSet[int]
    board_flags: Tuple[int, ...] = field(default_factory=tuple)

    def is_boardable(self, v: int) -> bool:
        return v in self.boarding

    @property
    def veh_edges(self) -> List[Edge]:
        return self.veh.edges

    @property
    def psg_edges(self) -> List[Edge]:
        return self.psg.edges


def build_network_pair(
    vertex_count: int,
    veh_edges: Iterable[Edge],
    psg_edges: Iterable[Edge],
    board: Optional[Iterable[int]] = None,
) -> RoadNetworkPair:
    """Validate edge lists and assemble a RoadNetworkPair.

    Args:
        vertex_count: Number of vertices in the shared id space
        veh_edges: Vehicle edges as (tail, head, time_ds)
        psg_edges: Pedestrian edges as (tail, head, time_ds)
        board: Explicit boarding vertices; these are also treated as
            accessible in both networks. When omitted the boarding set is the
            intersection of the accessible sets.

    Returns:
        Validated network pair

    Raises:
        NetworkFormatError: On dangling ids, negative times or an empty
            boarding set
    """
    if vertex_count < 1:
        raise NetworkFormatError("vertex count must be at least 1")

    veh = list(veh_edges)
    psg = list(psg_edges)
    for kind, edges in (("veh", veh), ("psg", psg)):
        for tail, head, weight in edges:
            for v in (tail, head):
                if not 0 <= v < vertex_count:
                    raise NetworkFormatError(
                        f"{kind} edge ({tail}, {head}) references vertex {v} "
                        f"outside 0..{vertex_count - 1}"
                    )
            if weight < 0:
                raise NetworkFormatError(f"{kind} edge ({tail}, {head}) has negative time {weight}")

    flags = tuple(sorted(set(board or ())))
    for v in flags:
        if not 0 <= v < vertex_count:
            raise NetworkFormatError(f"board vertex {v} outside 0..{vertex_count - 1}")

    veh_graph = Graph(vertex_count, veh)
    psg_graph = Graph(vertex_count, psg)
    veh_accessible = veh_graph.incident_vertices() | frozenset(flags)
    psg_accessible = psg_graph.incident_vertices() | frozenset(flags)
    boarding = frozenset(flags) if flags else veh_accessible & psg_accessible
    if not boarding:
        raise NetworkFormatError("boarding set is empty (no vertex accessible in both networks)")

    return RoadNetworkPair(
        vertex_count=vertex_count,
        veh=veh_graph,
        psg=psg_graph,
        veh_accessible=veh_accessible,
        psg_accessible=psg_accessible,
        boarding=boarding,
        board_flags=flags,
    )


def parse_network(text: str, source: str = "<string>") -> RoadNetworkPair:
    """Parse the plain-text network format.

    Lines: ``vertices N`` header, then ``veh tail head time_ds``,
    ``psg tail head time_ds`` and optional ``board v``. Blank lines and
    ``#`` comments are ignored.
    """
    vertex_count: Optional[int] = None
    veh: List[Edge] = []
    psg: List[Edge] = []
    board: List[int] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        keyword = parts[0]
        try:
            numbers = [int(p) for p in parts[1:]]
        except ValueError:
            raise NetworkFormatError(f"{source}:{line_no}: non-integer field in '{raw.strip()}'")

        if keyword == "vertices":
            if vertex_count is not None or len(numbers) != 1:
                raise NetworkFormatError(f"{source}:{line_no}: malformed or repeated 'vertices' header")
            vertex_count = numbers[0]
            continue
        if vertex_count is None:
            raise NetworkFormatError(f"{source}:{line_no}: '{keyword}' before 'vertices' header")

        if keyword in ("veh", "psg"):
            if len(numbers) != 3:
                raise NetworkFormatError(f"{source}:{line_no}: expected '{keyword} tail head time_ds'")
            tail, head, weight = numbers
            for v in (tail, head):
                if not 0 <= v < vertex_count:
                    raise NetworkFormatError(
                        f"{source}:{line_no}: dangling vertex id {v} (vertex count {vertex_count})"
                    )
            if weight < 0:
                raise NetworkFormatError(f"{source}:{line_no}: negative travel time {weight}")
            (veh if keyword == "veh" else psg).append((tail, head, weight))
        elif keyword == "board":
            if len(numbers) != 1:
                raise NetworkFormatError(f"{source}:{line_no}: expected 'board v'")
            if not 0 <= numbers[0] < vertex_count:
                raise NetworkFormatError(
                    f"{source}:{line_no}: dangling vertex id {numbers[0]} (vertex count {vertex_count})"
                )
            board.append(numbers[0])
        else:
            raise NetworkFormatError(f"{source}:{line_no}: unknown keyword '{keyword}'")

    if vertex_count is None:
        raise NetworkFormatError(f"{source}: missing 'vertices' header")
    return build_network_pair(vertex_count, veh, psg, board)


def load_network_pair(path: Union[str, Path]) -> RoadNetworkPair:
    """Load and validate a network pair from a file."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise FileNotFoundError(f"Network file not found: {path}")
    network = parse_network(text, source=str(path))
    logger.info(
        "Loaded network %s: %d vertices, %d veh edges, %d psg edges, %d boarding vertices",
        path, network.vertex_count, len(network.veh), len(network.psg), len(network.boarding),
    )
    return network


def serialize_network(network: RoadNetworkPair) -> str:
    """Render a network pair in the plain-text format read by parse_network."""
    lines = [f"vertices {network.vertex_count}"]
    lines.extend(f"veh {t} {h} {w}" for t, h, w in network.veh.edges)
    lines.extend(f"psg {t} {h} {w}" for t, h, w in network.psg.edges)
    lines.extend(f"board {v}" for v in network.board_flags)
    return "\n".join(lines) + "\n"
