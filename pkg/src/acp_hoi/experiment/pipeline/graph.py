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
"""
Directed graph of pipeline stages.
"""

from __future__ import annotations

from typing import Any, Generic, Optional, TypeVar


class StageNode:
    def __init__(self, name: str) -> None:
        self.name = name
        self.parents: list[str] = []
        self.children: list[str] = []

    def is_root(self) -> bool:
        return not self.parents

    def is_leaf(self) -> bool:
        return not self.children


class StageEdge:
    """Connection between two stages.

    ``input_config`` maps an input parameter of ``end`` to ``"<start>.<field>"``,
    or to ``"<start>"`` to pass the whole output.
    """

    def __init__(
        self, start: str, end: str, input_config: Optional[dict[str, str]] = None
    ) -> None:
        self.start = start
        self.end = end
        self.input_config = input_config or {}


NodeType = TypeVar("NodeType", bound=StageNode)


class StageGraph(Generic[NodeType]):
    def __init__(self) -> None:
        self._nodes: dict[str, NodeType] = {}
        self._edges: list[StageEdge] = []

    def add_node(self, node: NodeType) -> None:
        if node.name in self._nodes:
            raise ValueError(f"Stage {node.name} already exists")
        self._nodes[node.name] = node

    def add_edge(self, edge: StageEdge) -> None:
        for name in (edge.start, edge.end):
            if name not in self._nodes:
                raise KeyError(f"Stage {name} does not exist")
        if any(e.start == edge.start and e.end == edge.end for e in self._edges):
            raise ValueError(f"{edge.start} and {edge.end} are already connected")
        self._edges.append(edge)
        self._nodes[edge.start].children.append(edge.end)
        self._nodes[edge.end].parents.append(edge.start)

    def get_node_by_name(self, name: str) -> NodeType:
        return self._nodes[name]

    def nodes(self) -> list[NodeType]:
        return list(self._nodes.values())

    def roots(self) -> list[NodeType]:
        return [node for node in self._nodes.values() if node.is_root()]

    def next_edges(self, name: str) -> list[StageEdge]:
        return [edge for edge in self._edges if edge.start == name]

    def previous_edges(self, name: str) -> list[StageEdge]:
        return [edge for edge in self._edges if edge.end == name]

    def topological_order(self) -> Optional[list[str]]:
        """Stage names in dependency order, None if the graph has a cycle."""
        pending = {name: len(node.parents) for name, node in self._nodes.items()}
        ready = [name for name, count in pending.items() if count == 0]
        order: list[str] = []
        while ready:
            name = ready.pop(0)
            order.append(name)
            for child in self._nodes[name].children:
                pending[child] -= 1
                if pending[child] == 0:
                    ready.append(child)
        return order if len(order) == len(self._nodes) else None

    def is_cyclic(self) -> bool:
        return self.topological_order() is None

    def __contains__(self, name: Any) -> bool:
        return name in self._nodes
