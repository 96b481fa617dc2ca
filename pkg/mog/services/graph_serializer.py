"""
Facade for graph serialization.
Delegates to format-specific writers (DOT or flat edge list).
"""
from pathlib import Path
from typing import List, Optional, Union

from pydantic import ValidationError

from mog.models.errors import GraphFileError
from mog.models.graph_entities import MixedGraph
from mog.utils.logger import get_logger

logger = get_logger(__name__)


class EdgeListWriter:
    """`V n` header followed by `D a b` / `U a b` lines."""

    def render(self, graph: MixedGraph) -> str:
        lines = [f"V {graph.n}"] + graph.edge_tokens()
        return "\n".join(lines) + "\n"


class DotGraphWriter:
    """Graphviz digraph; undirected edges are dashed and drawn without arrowheads."""

    def __init__(self, name: str = "G"):
        self.name = name

    def render(self, graph: MixedGraph) -> str:
        lines = [f"digraph {self.name} {{"]
        for v in sorted(graph.vertices):
            lines.append(f"  {v};")
        for a, b in graph.sorted_directed():
            lines.append(f"  {a} -> {b};")
        for a, b in graph.sorted_undirected():
            lines.append(f"  {a} -> {b} [style=dashed, dir=none];")
        lines.append("}")
        return "\n".join(lines) + "\n"


class GraphSerializer:
    """Facade for graph output - delegates to the writer for the requested format."""

    def __init__(self, format: str = "edges"):
        """
        Args:
            format: 'edges' or 'dot'
        """
        self.format = format.lower()

        # pick the writer for the format
        if self.format == "dot":
            self._writer = DotGraphWriter()
        elif self.format == "edges":
            self._writer = EdgeListWriter()
        else:
            raise ValueError(f"unsupported graph format: {format}")

    def serialize(self, graph: MixedGraph) -> str:
        return self._writer.render(graph)

    def write(self, graph: MixedGraph, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.serialize(graph), encoding="utf-8")
        logger.info(f"Wrote {self.format} graph to {path}")
        return path


def parse_edge_list(text: str, n: Optional[int] = None) -> MixedGraph:
    """
    Parse the flat edge-list format.

    Blank lines and lines starting with '#' are ignored. Without a `V n`
    header (and without the n argument) the vertex count is the largest
    vertex mentioned.

    Raises:
        GraphFileError: malformed line, self-loop or vertex outside 1..n
    """
    directed: List[tuple] = []
    undirected: List[tuple] = []
    declared = n
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if parts[0] == "V" and len(parts) == 2:
                declared = int(parts[1])
                continue
            if parts[0] in ("D", "U") and len(parts) == 3:
                edge = (int(parts[1]), int(parts[2]))
            else:
                raise ValueError(line)
        except ValueError:
            raise GraphFileError(f"line {lineno}: expected 'V n', 'D a b' or 'U a b', got {raw!r}")
        (directed if parts[0] == "D" else undirected).append(edge)

    if declared is None:
        declared = max((v for edge in directed + undirected for v in edge), default=1)
    try:
        return MixedGraph(n=declared, directed=frozenset(directed), undirected=frozenset(undirected))
    except ValidationError as e:
        raise GraphFileError(f"invalid graph: {e.errors()[0]['msg']}") from e


def load_graph_file(path: Union[str, Path]) -> MixedGraph:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise GraphFileError(f"cannot read graph file {path}: {e}") from e
    return parse_edge_list(text)
