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
from typing import Any

import pytest
from acp_hoi.exceptions import PipelineDefinitionError
from acp_hoi.experiment.pipeline import Component

from .components import ScaleImages


def test_component_inputs() -> None:
    inputs = ScaleImages.component_inputs
    assert "n_images" in inputs
    assert inputs["n_images"]["has_default"] is False
    assert "n_extra" in inputs
    assert inputs["n_extra"]["has_default"] is True


def test_component_outputs() -> None:
    outputs = ScaleImages.component_outputs
    assert "result" in outputs
    assert outputs["result"]["required"] is True


def test_component_without_return_annotation() -> None:
    with pytest.raises(PipelineDefinitionError):

        class ComponentNoAnnotation(Component):
            async def run(self, value: str):  # type: ignore[no-untyped-def]
                return value


def test_component_returning_plain_dict() -> None:
    with pytest.raises(PipelineDefinitionError):

        class ComponentDict(Component):
            async def run(self, value: str) -> dict[str, Any]:
                return {"result": value}
