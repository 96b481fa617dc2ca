import pytest

from mog.models.errors import GraphFileError
from mog.models.graph_entities import MixedGraph
from mog.services.graph_serializer import GraphSerializer, load_graph_file, parse_edge_list


def test_edge_list_output(reference_local):
    text = GraphSerializer("edges").serialize(reference_local)
    assert text == "V 3\nD 1 3\nD 2 3\nD 3 2\nU 1 3\n"


def test_dot_output(reference_local):
    # When
    text = GraphSerializer("dot").serialize(reference_local)

    # Then
    lines = text.splitlines()
    assert lines[0] == "digraph G {"
    assert lines[-1] == "}"
    assert "  1 -> 3;" in lines
    assert "  3 -> 2;" in lines
    assert "  1 -> 3 [style=dashed, dir=none];" in lines
    # undirected "--" is not valid inside a digraph
    assert not any(" -- " in line for line in lines)
    assert "  2;" in lines


def test_unknown_format():
    with pytest.raises(ValueError):
        GraphSerializer("graphml")


def test_edge_list_round_trip_keeps_isolated_vertices():
    # Given
    G = MixedGraph(n=5, directed=frozenset({(1, 2), (2, 1)}), undirected=frozenset({(1, 2), (3, 4)}))

    # When
    parsed = parse_edge_list(GraphSerializer("edges").serialize(G))

    # Then
    assert parsed == G


def test_parse_edge_list_without_header():
    G = parse_edge_list("# comment\n\nD 1 3\nU 3 2\n")
    assert G.n == 3
    assert G.undirected == frozenset({(2, 3)})


@pytest.mark.parametrize(
    "text",
    [
        "X 1 2\n",
        "D 1\n",
        "D a b\n",
        "D 2 2\n",
        "V 2\nD 1 3\n",
    ],
)
def test_parse_edge_list_errors(text):
    with pytest.raises(GraphFileError):
        parse_edge_list(text)


def test_write_and_load(tmp_path, reference_og):
    # When
    path = GraphSerializer("edges").write(reference_og, tmp_path / "out" / "og.edges")

    # Then
    assert load_graph_file(path) == reference_og
    with pytest.raises(GraphFileError):
        load_graph_file(tmp_path / "missing.edges")
