"""
Separation calculus on mixed graphs.

m-separation is evaluated as reachability over (vertex, incoming endpoint mark)
states. A vertex is a collider on a walk when both adjacent edge ends at it
carry an arrowhead or a dashed tail, so `a -- c -- b` makes c a collider.
Walks may intersect themselves.
"""
from collections import deque
from typing import Dict, FrozenSet, Iterable, List, Literal, Optional, Set, Tuple

import networkx as nx

from mog.models.errors import OutOfRangeError, QueryInvalidError, TooLargeError
from mog.models.graph_entities import (
    EndpointMark,
    ImpliedStatementSet,
    MixedGraph,
    SeparationQuery,
    Statement,
)
from mog.utils.logger import get_logger

logger = get_logger(__name__)

ORACLE_MAX_VERTICES = 8

# ends that make a vertex a collider when met on both sides
_COLLIDER_MARKS = frozenset({EndpointMark.ARROW_HEAD, EndpointMark.DASHED_TAIL})

# (neighbour, mark at this vertex, mark at neighbour)
IncidentEdge = Tuple[int, EndpointMark, EndpointMark]


def is_collider(mark_in: EndpointMark, mark_out: EndpointMark) -> bool:
    """True iff both edge ends at the vertex are arrowheads or dashed tails."""
    return mark_in in _COLLIDER_MARKS and mark_out in _COLLIDER_MARKS


def incident_edges(G: MixedGraph) -> Dict[int, List[IncidentEdge]]:
    """Adjacency lists with endpoint marks, in a deterministic order."""
    adjacency: Dict[int, List[IncidentEdge]] = {v: [] for v in range(1, G.n + 1)}
    for a, b in G.sorted_directed():
        adjacency[a].append((b, EndpointMark.SOLID_TAIL, EndpointMark.ARROW_HEAD))
        adjacency[b].append((a, EndpointMark.ARROW_HEAD, EndpointMark.SOLID_TAIL))
    for a, b in G.sorted_undirected():
        adjacency[a].append((b, EndpointMark.DASHED_TAIL, EndpointMark.DASHED_TAIL))
        adjacency[b].append((a, EndpointMark.DASHED_TAIL, EndpointMark.DASHED_TAIL))
    return adjacency


def _check_range(G: MixedGraph, vertices: Iterable[int], name: str) -> FrozenSet[int]:
    vs = frozenset(vertices)
    bad = sorted(v for v in vs if not 1 <= v <= G.n)
    if bad:
        raise OutOfRangeError(f"{name} contains vertices outside 1..{G.n}: {bad}")
    return vs


def validate_query(G: MixedGraph, q: SeparationQuery) -> None:
    """
    Raises:
        OutOfRangeError: a vertex outside 1..n
        QueryInvalidError: empty A or B, or overlapping sets
    """
    for name, vs in (("A", q.A), ("B", q.B), ("C", q.C)):
        _check_range(G, vs, name)
    if not q.A or not q.B:
        raise QueryInvalidError("A and B must be nonempty")
    if q.A & q.B or q.A & q.C or q.B & q.C:
        raise QueryInvalidError(
            f"A, B and C must be pairwise disjoint (A={sorted(q.A)}, B={sorted(q.B)}, C={sorted(q.C)})"
        )


def _nx_directed(G: MixedGraph) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(G.vertices)
    graph.add_edges_from(G.directed)
    return graph


def _nx_dashed(G: MixedGraph) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(G.vertices)
    graph.add_edges_from(G.undirected)
    return graph


def vertex_sets(
    G: MixedGraph,
    A: Iterable[int],
    relation: Literal["parents", "neighbours", "children", "ancestors", "district"],
) -> FrozenSet[int]:
    """
    Union of the relation over a ∈ A.

    ancestors(A) and district(A) contain A itself; parents, children and
    neighbours may or may not, depending on the edges.

    Args:
        G: mixed graph
        A: vertex set
        relation: parents | neighbours | children | ancestors | district

    Returns:
        frozenset of vertices
    """
    A = _check_range(G, A, "A")
    if relation == "parents":
        return frozenset(a for a, b in G.directed if b in A)
    if relation == "children":
        return frozenset(b for a, b in G.directed if a in A)
    if relation == "neighbours":
        return frozenset(w for a, b in G.undirected for v, w in ((a, b), (b, a)) if v in A)
    if relation == "ancestors":
        directed = _nx_directed(G)
        result: Set[int] = set(A)
        for a in A:
            result |= nx.ancestors(directed, a)
        return frozenset(result)
    if relation == "district":
        dashed = _nx_dashed(G)
        result = set()
        for a in A:
            result |= nx.node_connected_component(dashed, a)
        return frozenset(result)
    raise ValueError(f"unknown relation: {relation}")


def _reachable(
    G: MixedGraph,
    A: FrozenSet[int],
    B: FrozenSet[int],
    S: FrozenSet[int],
    start_mark: Optional[EndpointMark] = None,
    end_mark: Optional[EndpointMark] = None,
) -> bool:
    """
    True iff some walk from A to B is m-connecting given S.

    start_mark restricts the mark of the first edge at its A end, end_mark the
    mark of the last edge at its B end.
    """
    adjacency = incident_edges(G)
    queue = deque()
    seen: Set[Tuple[int, EndpointMark]] = set()

    for a in sorted(A):
        for w, mark_at_a, mark_at_w in adjacency[a]:
            if start_mark is not None and mark_at_a != start_mark:
                continue
            state = (w, mark_at_w)
            if state not in seen:
                seen.add(state)
                queue.append(state)

    while queue:
        v, mark_in = queue.popleft()
        if v in B and (end_mark is None or mark_in == end_mark):
            return True
        for w, mark_out, mark_at_w in adjacency[v]:
            collider = is_collider(mark_in, mark_out)
            if collider != (v in S):
                continue
            state = (w, mark_at_w)
            if state not in seen:
                seen.add(state)
                queue.append(state)
    return False


def m_separated(G: MixedGraph, q: SeparationQuery) -> bool:
    """
    A ⋈_m B | C: no walk between A and B is m-connecting given C.

    Raises:
        QueryInvalidError, OutOfRangeError
    """
    validate_query(G, q)
    return not _reachable(G, q.A, q.B, q.C)


# walk enumeration does not use incident_edges or is_collider
# edge kind -> (mark at the source end, mark at the target end)
_WALK_ENDS = {"directed": ("tail", "head"), "dashed": ("dash", "dash")}

# (from, to, mark at from, mark at to)
WalkStep = Tuple[int, int, str, str]


def _walk_steps(G: MixedGraph) -> Dict[int, List[WalkStep]]:
    steps: Dict[int, List[WalkStep]] = {v: [] for v in range(1, G.n + 1)}
    edges = [("directed", a, b) for a, b in G.sorted_directed()]
    edges += [("dashed", a, b) for a, b in G.sorted_undirected()]
    for kind, a, b in edges:
        at_a, at_b = _WALK_ENDS[kind]
        steps[a].append((a, b, at_a, at_b))
        steps[b].append((b, a, at_b, at_a))
    return steps


def _walk_connects(walk: List[WalkStep], S: FrozenSet[int]) -> bool:
    """
    m-connection of a complete walk given S.

    An intermediate vertex is a collider when the edge entering it and the
    edge leaving it both end there in an arrowhead or a dashed tail. The walk
    connects iff every collider lies in S and no non-collider does.
    """
    for entering, leaving in zip(walk, walk[1:]):
        v = entering[1]
        collider = entering[3] in ("head", "dash") and leaving[2] in ("head", "dash")
        if collider != (v in S):
            return False
    return True


def _find_connecting_walk(
    G: MixedGraph,
    A: FrozenSet[int],
    B: FrozenSet[int],
    S: FrozenSet[int],
    head_at_start: bool = False,
    head_at_end: bool = False,
) -> Optional[List[WalkStep]]:
    """
    Depth-first search over walks of length at most 4n(n+1) starting in A.

    Every candidate walk is judged as a whole by _walk_connects. A walk whose
    prefix fails stays failed under extension, and a walk arriving twice at the
    same vertex with the same end mark contains a shorter walk with the same
    verdict, so both are cut.
    """
    steps = _walk_steps(G)
    max_length = 4 * G.n * (G.n + 1)

    def extend(walk: List[WalkStep], arrivals: Set[Tuple[int, str]]) -> Optional[List[WalkStep]]:
        last = walk[-1]
        if last[1] in B and (not head_at_end or last[3] == "head"):
            return walk
        if len(walk) >= max_length:
            return None
        for step in steps[last[1]]:
            arrival = (step[1], step[3])
            if arrival in arrivals:
                continue
            candidate = walk + [step]
            if not _walk_connects(candidate, S):
                continue
            arrivals.add(arrival)
            found = extend(candidate, arrivals)
            if found is not None:
                return found
            arrivals.discard(arrival)
        return None

    for a in sorted(A):
        for step in steps[a]:
            if head_at_start and step[2] != "head":
                continue
            found = extend([step], {(step[1], step[3])})
            if found is not None:
                return found
    return None


def m_separated_oracle(G: MixedGraph, q: SeparationQuery) -> bool:
    """
    Brute-force m-separation by explicit walk enumeration, for graphs with at most 8 vertices.

    Walks are built from their own endpoint table and each one is judged
    against the collider definition as a whole, independently of the
    reachability automaton used by m_separated.
    """
    if G.n > ORACLE_MAX_VERTICES:
        raise TooLargeError(f"walk enumeration supports at most {ORACLE_MAX_VERTICES} vertices, got {G.n}")
    validate_query(G, q)
    return _find_connecting_walk(G, q.A, q.B, q.C) is None


def pointing_paths_blocked(
    G: MixedGraph,
    A: Iterable[int],
    B: Iterable[int],
    C: Iterable[int] = (),
    mode: Literal["b_pointing", "bi_pointing"] = "b_pointing",
    oracle: bool = False,
) -> bool:
    """
    Check that every B-pointing (or bi-pointing) walk between A and B is m-blocked.

    Args:
        G: mixed graph
        A, B, C: disjoint vertex sets, A and B nonempty
        mode: b_pointing (arrowhead at the B end, blocking set B ∪ C) or
              bi_pointing (arrowheads at both ends, blocking set A ∪ B ∪ C)
        oracle: use walk enumeration instead of the reachability automaton

    Returns:
        True if no such walk is m-connecting
    """
    q = SeparationQuery(A=frozenset(A), B=frozenset(B), C=frozenset(C))
    validate_query(G, q)
    if mode == "b_pointing":
        S = q.B | q.C
        start_mark = None
    elif mode == "bi_pointing":
        S = q.A | q.B | q.C
        start_mark = EndpointMark.ARROW_HEAD
    else:
        raise ValueError(f"unknown mode: {mode}")

    if oracle:
        if G.n > ORACLE_MAX_VERTICES:
            raise TooLargeError(f"walk enumeration supports at most {ORACLE_MAX_VERTICES} vertices, got {G.n}")
        head_at_start = start_mark == EndpointMark.ARROW_HEAD
        return _find_connecting_walk(G, q.A, q.B, S, head_at_start=head_at_start, head_at_end=True) is None
    return not _reachable(G, q.A, q.B, S, start_mark=start_mark, end_mark=EndpointMark.ARROW_HEAD)


def _sorted(vs: Iterable[int]) -> Tuple[int, ...]:
    return tuple(sorted(vs))


def _granger(source, target, conditioning, local: bool, rule: str) -> Statement:
    return Statement(
        relation="granger_noncausal",
        source=_sorted(source),
        target=_sorted(target),
        conditioning=_sorted(conditioning),
        local=local,
        rules=(rule,),
    )


def _uncorrelated(source, target, conditioning, local: bool, rule: str) -> Statement:
    return Statement(
        relation="contemp_uncorrelated",
        source=_sorted(source),
        target=_sorted(target),
        conditioning=_sorted(conditioning),
        local=local,
        rules=(rule,),
    )


def _separation_triple(result: ImpliedStatementSet, A, B, S, local: bool, rule: str) -> None:
    result.add(_granger(A, B, S, local, rule))
    result.add(_granger(B, A, S, local, rule))
    result.add(_uncorrelated(A, B, S, local, rule))


def implied_statements(
    G: MixedGraph,
    q: SeparationQuery,
    kind: Literal["og", "local"] = "og",
) -> ImpliedStatementSet:
    """
    Granger non-causality, contemporaneous uncorrelation and conditional
    orthogonality statements that the graph licenses for the query.

    kind "og": global AMP Markov property, its corollary, and the pointing-path
    criteria (both directions). kind "local": only the two cases proved for
    the local graph; anything else yields no statement and a note.
    """
    validate_query(G, q)
    A, B, C = q.A, q.B, q.C
    union = A | B | C
    result = ImpliedStatementSet(kind=kind, query=q)
    separated = m_separated(G, q)

    if kind == "og":
        if separated:
            result.add(Statement(
                relation="cond_orthogonal",
                source=_sorted(A),
                target=_sorted(B),
                conditioning=_sorted(C),
                rules=("global AMP Markov property",),
            ))
            _separation_triple(result, A, B, union, False, "m-separation corollary")
        if pointing_paths_blocked(G, A, B, C, "b_pointing"):
            result.add(_granger(A, B, union, False, "B-pointing paths blocked"))
        if pointing_paths_blocked(G, B, A, C, "b_pointing"):
            result.add(_granger(B, A, union, False, "A-pointing paths blocked"))
        dashed_between = any(G.has_undirected(a, b) for a in A for b in B)
        if not dashed_between and pointing_paths_blocked(G, A, B, C, "bi_pointing"):
            result.add(_uncorrelated(A, B, union, False, "bi-pointing paths blocked"))
    elif kind == "local":
        rest = G.vertices - A - B
        parents = vertex_sets(G, A, "parents") | vertex_sets(G, B, "parents")
        if C == rest and separated:
            _separation_triple(result, A, B, G.vertices, True, "m-separation given all other vertices")
        elif parents <= union and separated:
            _separation_triple(result, A, B, union, True, "m-separation with parents inside A ∪ B ∪ C")
        else:
            result.notes.append("no rule applies")
    else:
        raise ValueError(f"unknown graph kind: {kind}")

    logger.debug(f"implied_statements({kind}): {len(result.statements)} statement(s) for {q}")
    return result


def markov_readout(
    G: MixedGraph,
    A: Iterable[int],
    kind: Literal["og", "local"] = "og",
) -> Tuple[Statement, Statement]:
    """
    Block-recursive readout for a vertex set A:

        Y_{V \\ (pa(A) ∪ A)} -/-> Y_A | Y_V
        Y_{V \\ (ne(A) ∪ A)} ~/~ Y_A | Y_V
    """
    A = _check_range(G, A, "A")
    if not A:
        raise QueryInvalidError("A must be nonempty")
    local = kind == "local"
    V = G.vertices
    not_parents = V - (vertex_sets(G, A, "parents") | A)
    not_neighbours = V - (vertex_sets(G, A, "neighbours") | A)
    rule = "block-recursive Markov property"
    return (
        _granger(not_parents, A, V, local, rule),
        _uncorrelated(not_neighbours, A, V, local, rule),
    )


def pairwise_statements(G: MixedGraph, kind: Literal["og", "local"] = "og") -> List[Statement]:
    """One statement given Y_V per missing directed edge and per missing dashed edge."""
    local = kind == "local"
    V = G.vertices
    rule = "pairwise Markov property"
    statements: List[Statement] = []
    for a in sorted(V):
        for b in sorted(V):
            if a != b and not G.has_directed(a, b):
                statements.append(_granger({a}, {b}, V, local, rule))
    for a in sorted(V):
        for b in sorted(V):
            if a < b and not G.has_undirected(a, b):
                statements.append(_uncorrelated({a}, {b}, V, local, rule))
    return statements
