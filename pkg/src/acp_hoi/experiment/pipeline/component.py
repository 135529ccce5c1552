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

import abc
import inspect
from typing import Any, Callable, get_type_hints

from pydantic import BaseModel, ConfigDict

from acp_hoi.exceptions import PipelineDefinitionError


class DataModel(BaseModel):
    """Output of a pipeline component. Fields may hold numpy arrays or domain objects."""

    model_config = ConfigDict(arbitrary_types_allowed=True)


def _describe_inputs(run_method: Callable[..., Any]) -> dict[str, dict[str, Any]]:
    return {
        param.name: {
            "has_default": param.default is not inspect.Parameter.empty,
            "annotation": param.annotation,
        }
        for param in inspect.signature(run_method).parameters.values()
        if param.name not in ("self", "kwargs")
    }


def _describe_outputs(name: str, run_method: Callable[..., Any]) -> dict[str, dict[str, Any]]:
    return_model = get_type_hints(run_method).get("return")
    if return_model is None:
        raise PipelineDefinitionError(
            f"The run method return type must be annotated in {name}"
        )
    if not (isinstance(return_model, type) and issubclass(return_model, DataModel)):
        raise PipelineDefinitionError(
            f"The run method must return a subclass of DataModel in {name}"
        )
    return {
        field_name: {"required": field.is_required(), "annotation": field.annotation}
        for field_name, field in return_model.model_fields.items()
    }


class ComponentMeta(abc.ABCMeta):
    """Reads the inputs and outputs of a component from its ``run`` signature."""

    def __new__(
        meta, name: str, bases: tuple[type, ...], attrs: dict[str, Any]
    ) -> type:
        run_method = attrs.get("run")
        if run_method is not None and not getattr(
            run_method, "__isabstractmethod__", False
        ):
            attrs["component_inputs"] = _describe_inputs(run_method)
            attrs["component_outputs"] = _describe_outputs(name, run_method)
        return super().__new__(meta, name, bases, attrs)


class Component(abc.ABC, metaclass=ComponentMeta):
    """One stage of an experiment pipeline.

    Subclasses implement an async ``run`` whose return annotation is a
    :class:`DataModel`; its parameters are the stage inputs.
    """

    component_inputs: dict[str, dict[str, Any]]
    component_outputs: dict[str, dict[str, Any]]

    @abc.abstractmethod
    async def run(self, *args: Any, **kwargs: Any) -> DataModel:
        pass
