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
from __future__ import annotations

import asyncio
import enum
import logging
import warnings
from datetime import datetime, timezone
from timeit import default_timer
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field

from acp_hoi.exceptions import (
    PipelineDefinitionError,
    PipelineMissingDependencyError,
    PipelineStatusUpdateError,
)
from acp_hoi.experiment.pipeline.component import Component, DataModel
from acp_hoi.experiment.pipeline.graph import StageEdge, StageGraph, StageNode
from acp_hoi.experiment.pipeline.stores import InMemoryStore, Store

logger = logging.getLogger(__name__)


class RunStatus(enum.Enum):
    UNKNOWN = "UNKNOWN"
    SCHEDULED = "SCHEDULED"
    RUNNING = "RUNNING"
    DONE = "DONE"


class RunResult(BaseModel):
    status: RunStatus
    result: Optional[DataModel] = None
    elapsed: float = 0.0
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))

    model_config = ConfigDict(arbitrary_types_allowed=True)


class TaskNode(StageNode):
    """Graph node running one component."""

    def __init__(self, name: str, component: Component) -> None:
        super().__init__(name)
        self.component = component
        self.status = RunStatus.UNKNOWN
        # serializes status updates so a stage reached from two parents runs once
        self._lock = asyncio.Lock()

    async def set_status(self, status: RunStatus) -> None:
        """
        Raises:
            PipelineStatusUpdateError: if the status does not change or a done
                stage is set back to running.
        """
        async with self._lock:
            if status == self.status:
                raise PipelineStatusUpdateError(f"{self.name} is already {status.value}")
            if status == RunStatus.RUNNING and self.status == RunStatus.DONE:
                raise PipelineStatusUpdateError(f"{self.name} is already done")
            self.status = status

    async def read_status(self) -> RunStatus:
        async with self._lock:
            return self.status

    async def execute(self, **kwargs: Any) -> Optional[RunResult]:
        """Run the component; None if the stage is already running or done."""
        try:
            await self.set_status(RunStatus.RUNNING)
        except PipelineStatusUpdateError:
            logger.debug(f"Stage {self.name} already running or done")
            return None
        logger.debug(f"Running stage {self.name} with inputs {sorted(kwargs)}")
        start_time = default_timer()
        result = await self.component.run(**kwargs)
        await self.set_status(RunStatus.DONE)
        elapsed = default_timer() - start_time
        logger.debug(f"Stage {self.name} finished in {elapsed:.3f}s")
        return RunResult(status=self.status, result=result, elapsed=elapsed)

    def reinitialize(self) -> None:
        self.status = RunStatus.SCHEDULED


class Orchestrator:
    """Runs the stages of a pipeline as soon as their parents are done.

    Root stages start together; each finished stage stores its output and
    launches the children whose dependencies are all complete.
    """

    def __init__(self, pipeline: Pipeline) -> None:
        self.pipeline = pipeline

    async def run_task(self, task: TaskNode, data: dict[str, Any]) -> None:
        inputs = self.get_component_inputs(task.name, data)
        result = await task.execute(**inputs)
        if result is None:
            return
        self.pipeline.on_task_complete(task, result)
        ready = [child for child in await self.next(task)]
        await asyncio.gather(*[self.run_task(child, data) for child in ready])

    async def check_dependencies_complete(self, task: TaskNode) -> None:
        for edge in self.pipeline.previous_edges(task.name):
            parent = self.pipeline.get_node_by_name(edge.start)
            status = await parent.read_status()
            if status != RunStatus.DONE:
                raise PipelineMissingDependencyError(
                    f"{edge.start} is {status.value}, {task.name} cannot start"
                )

    async def next(self, task: TaskNode) -> list[TaskNode]:
        """Children of ``task`` that are not started and have every parent done."""
        ready = []
        for edge in self.pipeline.next_edges(task.name):
            child = self.pipeline.get_node_by_name(edge.end)
            if await child.read_status() in (RunStatus.RUNNING, RunStatus.DONE):
                continue
            try:
                await self.check_dependencies_complete(child)
            except PipelineMissingDependencyError:
                continue
            ready.append(child)
        return ready

    def get_component_inputs(
        self, name: str, input_data: dict[str, Any]
    ) -> dict[str, Any]:
        """User inputs of the stage, overridden by the outputs mapped on incoming edges."""
        inputs: dict[str, Any] = dict(input_data.get(name, {}))
        for edge in self.pipeline.previous_edges(name):
            for parameter, mapping in edge.input_config.items():
                source, _, field = mapping.partition(".")
                output = self.pipeline.get_results_for_component(source)
                value = getattr(output, field) if field else output
                if parameter in inputs:
                    warnings.warn(
                        f"In stage '{name}', parameter '{parameter}' from user input "
                        f"is replaced by '{mapping}'"
                    )
                inputs[parameter] = value
        return inputs

    async def run(self, data: dict[str, Any]) -> None:
        await asyncio.gather(
            *[self.run_task(root, data) for root in self.pipeline.roots()]
        )


class Pipeline(StageGraph[TaskNode]):
    """Experiment stages and the order they run in.

    Example:

    .. code-block:: python

        pipeline = Pipeline()
        pipeline.add_component(DatasetComponent(), "dataset")
        pipeline.add_component(PriorComponent(), "priors")
        pipeline.connect("dataset", "priors", {"data": "dataset.data"})
        results = await pipeline.run({"dataset": {"config": config}})
    """

    def __init__(self, store: Optional[Store] = None) -> None:
        super().__init__()
        self._store = store or InMemoryStore()
        self._final_results = InMemoryStore()

    def add_component(self, component: Component, name: str) -> None:
        self.add_node(TaskNode(name, component))

    def connect(
        self,
        start_component_name: str,
        end_component_name: str,
        input_config: Optional[dict[str, str]] = None,
    ) -> None:
        """Connect two stages, optionally mapping outputs of the first to inputs of the second.

        Raises:
            PipelineDefinitionError: if a stage is unknown or the connection
                creates a cycle.
        """
        edge = StageEdge(start_component_name, end_component_name, input_config)
        try:
            self.add_edge(edge)
        except KeyError:
            raise PipelineDefinitionError(
                f"{start_component_name} or {end_component_name} is not in the Pipeline"
            )
        if self.is_cyclic():
            raise PipelineDefinitionError("Cyclic graph are not allowed")

    def on_task_complete(self, task: TaskNode, result: RunResult) -> None:
        self._store.add(task.name, result.result)
        if task.is_leaf():
            self._final_results.add(task.name, result.result)

    def get_results_for_component(self, name: str) -> Any:
        return self._store.get(name)

    def reinitialize(self) -> None:
        self._store.empty()
        self._final_results.empty()
        for task in self.nodes():
            task.reinitialize()

    def validate_inputs_config(self, data: dict[str, Any]) -> None:
        for task in self.nodes():
            self.validate_inputs_config_for_task(task, data)

    def validate_inputs_config_for_task(
        self, task: TaskNode, input_data: dict[str, Any]
    ) -> bool:
        """Check that every mandatory input of the stage is provided and every
        mapped output exists on its source stage.

        Raises:
            PipelineDefinitionError: on a missing input or an unknown output.
        """
        mandatory = {
            name
            for name, spec in task.component.component_inputs.items()
            if not spec["has_default"]
        }
        provided = set(input_data.get(task.name, {}))
        for edge in self.previous_edges(task.name):
            for parameter, mapping in edge.input_config.items():
                source, _, field = mapping.partition(".")
                outputs = self.get_node_by_name(source).component.component_outputs
                if field and field not in outputs:
                    raise PipelineDefinitionError(
                        f"Parameter {field} is not valid output for {source} "
                        f"(must be one of {list(outputs)})"
                    )
                provided.add(parameter)
        missing = mandatory - provided
        if missing:
            raise PipelineDefinitionError(
                f"Missing input parameters for {task.name}: {sorted(missing)}"
            )
        return True

    async def run(self, data: dict[str, Any]) -> dict[str, Any]:
        """Run every stage and return the outputs of the leaf stages."""
        logger.debug("Starting pipeline")
        start_time = default_timer()
        self.validate_inputs_config(data)
        self.reinitialize()
        await Orchestrator(self).run(data)
        logger.debug(f"Pipeline finished in {default_timer() - start_time:.3f}s")
        return self._final_results.all()
