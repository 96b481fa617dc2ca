from enum import Enum
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class EndpointMark(str, Enum):
    """Mark an edge leaves at one of its endpoints."""

    ARROW_HEAD = "arrow_head"
    SOLID_TAIL = "solid_tail"
    DASHED_TAIL = "dashed_tail"


class MixedGraph(BaseModel):
    """
    Mixed graph on vertices 1..n with directed edges a -> b and dashed
    undirected edges a -- b.

    Up to three edges may join a pair (a -> b, b -> a, a -- b). Undirected
    pairs are stored as (min, max).
    """

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    directed: frozenset[tuple[int, int]] = frozenset()
    undirected: frozenset[tuple[int, int]] = frozenset()

    @field_validator("undirected", mode="before")
    @classmethod
    def _canonical_undirected(cls, value):
        return frozenset((min(a, b), max(a, b)) for a, b in value)

    @model_validator(mode="after")
    def _check_edges(self):
        for a, b in list(self.directed) + list(self.undirected):
            if a == b:
                raise ValueError(f"self-loop at vertex {a} is not allowed")
            if not (1 <= a <= self.n and 1 <= b <= self.n):
                raise ValueError(f"edge ({a}, {b}) references a vertex outside 1..{self.n}")
        return self

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset(range(1, self.n + 1))

    def has_directed(self, a: int, b: int) -> bool:
        return (a, b) in self.directed

    def has_undirected(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.undirected

    def sorted_directed(self) -> list[tuple[int, int]]:
        return sorted(self.directed)

    def sorted_undirected(self) -> list[tuple[int, int]]:
        return sorted(self.undirected)

    def edge_tokens(self) -> list[str]:
        """Edges as `D a b` / `U a b` tokens, directed first, each group sorted."""
        return [f"D {a} {b}" for a, b in self.sorted_directed()] + \
               [f"U {a} {b}" for a, b in self.sorted_undirected()]


class EdgeWitness(BaseModel):
    """Index pair and matrix entry that certified an edge."""

    edge: str  # "D a b" or "U a b"
    index: tuple[int, int]  # (α, j) / (α, β) / (0, j) / (0, 0)
    entry: float


class EdgeCriterionReport(BaseModel):
    """A computed graph together with the audit trail of its edges."""

    graph: MixedGraph
    kind: Literal["og", "local", "ou", "sampled", "var"]
    witness: dict[str, EdgeWitness] = {}
    tolerance_used: float
    h: Optional[float] = None


class SeparationQuery(BaseModel):
    """A ⋈ B | C query over disjoint vertex sets (A, B nonempty)."""

    model_config = ConfigDict(frozen=True)

    A: frozenset[int]
    B: frozenset[int]
    C: frozenset[int] = frozenset()


class Statement(BaseModel):
    """
    A conclusion drawn from the graph.

    relation:
        granger_noncausal       Y_source -/-> Y_target | Y_conditioning
        contemp_uncorrelated    Y_source ~/~ Y_target | Y_conditioning
        cond_orthogonal         L_source ⊥ L_target | L_conditioning
    """

    model_config = ConfigDict(frozen=True)

    relation: Literal["granger_noncausal", "contemp_uncorrelated", "cond_orthogonal"]
    source: tuple[int, ...]
    target: tuple[int, ...]
    conditioning: tuple[int, ...]
    local: bool = False
    rules: tuple[str, ...] = ()

    def key(self) -> tuple:
        return (self.relation, self.source, self.target, self.conditioning, self.local)

    def render(self) -> str:
        def fmt(vs):
            return "{" + ",".join(str(v) for v in vs) + "}"

        suffix = "0" if self.local else ""
        if self.relation == "granger_noncausal":
            body = f"Y_{fmt(self.source)} -/->{suffix} Y_{fmt(self.target)} | Y_{fmt(self.conditioning)}"
        elif self.relation == "contemp_uncorrelated":
            body = f"Y_{fmt(self.source)} ~/~{suffix} Y_{fmt(self.target)} | Y_{fmt(self.conditioning)}"
        else:
            body = f"L_{fmt(self.source)} _|_ L_{fmt(self.target)} | L_{fmt(self.conditioning)}"
        return f"{body}  [{'; '.join(self.rules)}]"


class ImpliedStatementSet(BaseModel):
    """Statements derived from one separation query, with rule provenance."""

    kind: Literal["og", "local"]
    query: SeparationQuery
    statements: list[Statement] = []
    notes: list[str] = []

    def add(self, statement: Statement) -> None:
        """Add a statement, merging the rule list into an existing equal statement."""
        for i, existing in enumerate(self.statements):
            if existing.key() == statement.key():
                merged = existing.rules + tuple(r for r in statement.rules if r not in existing.rules)
                self.statements[i] = existing.model_copy(update={"rules": merged})
                return
        self.statements.append(statement)

    def render(self) -> str:
        lines = [s.render() for s in self.statements]
        lines.extend(f"note: {n}" for n in self.notes)
        if not lines:
            lines.append("(no statements)")
        return "\n".join(lines)
