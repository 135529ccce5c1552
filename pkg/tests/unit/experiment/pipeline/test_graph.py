#  Copyright (c) "ACP-HOI Authors"
#  #
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#  #
#      https://www.apache.org/licenses/LICENSE-2.0
#  #
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.
import pytest
from acp_hoi.experiment.pipeline.graph import StageEdge, StageGraph, StageNode


def test_node_alone() -> None:
    n = StageNode(name="node")
    assert n.is_root() is True
    assert n.is_leaf() is True


def test_node_not_root() -> None:
    n = StageNode(name="node")
    n.parents = ["other_node"]
    assert n.is_root() is False
    assert n.is_leaf() is True


def test_node_not_leaf() -> None:
    n = StageNode(name="node")
    n.children = ["other_node"]
    assert n.is_root() is True
    assert n.is_leaf() is False


def test_graph_add_nodes() -> None:
    g: StageGraph[StageNode] = StageGraph()
    n1 = StageNode("n1")
    n2 = StageNode("n2")
    g.add_node(n1)
    g.add_node(n2)
    assert len(g.nodes()) == 2
    g.add_edge(StageEdge(n1.name, n2.name, {"key": "value"}))
    assert n1.children == [n2.name]
    assert n2.parents == [n1.name]


def test_graph_add_duplicate_node() -> None:
    g: StageGraph[StageNode] = StageGraph()
    g.add_node(StageNode("n1"))
    with pytest.raises(ValueError):
        g.add_node(StageNode("n1"))


@pytest.fixture(scope="function")
def graph() -> StageGraph[StageNode]:
    g: StageGraph[StageNode] = StageGraph()
    n1 = StageNode("n1")
    n2 = StageNode("n2")
    g.add_node(n1)
    g.add_node(n2)
    g.add_edge(StageEdge(n1.name, n2.name, {"key": "value"}))
    return g


def test_graph_roots(graph: StageGraph[StageNode]) -> None:
    roots = graph.roots()
    assert len(roots) == 1
    assert roots[0].name == "n1"


def test_graph_next_edge(graph: StageGraph[StageNode]) -> None:
    next_edges = graph.next_edges("n1")
    assert len(next_edges) == 1
    assert next_edges[0].start == "n1"
    assert next_edges[0].end == "n2"
    assert next_edges[0].input_config == {"key": "value"}


def test_graph_prev_edge(graph: StageGraph[StageNode]) -> None:
    previous_edges = graph.previous_edges("n2")
    assert len(previous_edges) == 1
    assert previous_edges[0].start == "n1"


def test_graph_contains(graph: StageGraph[StageNode]) -> None:
    assert "n2" in graph
    assert "n3" not in graph


def test_graph_topological_order() -> None:
    g: StageGraph[StageNode] = StageGraph()
    for name in ("dataset", "priors", "anchors", "training"):
        g.add_node(StageNode(name))
    g.add_edge(StageEdge("anchors", "training"))
    g.add_edge(StageEdge("dataset", "priors"))
    g.add_edge(StageEdge("priors", "anchors"))
    g.add_edge(StageEdge("dataset", "training"))
    assert g.topological_order() == ["dataset", "priors", "anchors", "training"]


def test_graph_is_cyclic() -> None:
    g: StageGraph[StageNode] = StageGraph()
    g.add_node(StageNode("n1"))
    g.add_node(StageNode("n2"))
    g.add_edge(StageEdge("n1", "n2"))
    assert g.is_cyclic() is False
    g.add_edge(StageEdge("n2", "n1"))
    assert g.is_cyclic() is True
    assert g.topological_order() is None


def test_graph_validate_edge_bad_node_name(graph: StageGraph[StageNode]) -> None:
    with pytest.raises(KeyError):
        graph.add_edge(StageEdge("n0", "n1"))
    with pytest.raises(KeyError):
        graph.add_edge(StageEdge("n1", "n12"))


def test_graph_validate_edge_no_parallel_edges(graph: StageGraph[StageNode]) -> None:
    with pytest.raises(ValueError):
        graph.add_edge(StageEdge("n1", "n2"))
