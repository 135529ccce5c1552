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
"""Small stand-in stages for the pipeline tests."""

from acp_hoi.experiment.pipeline import Component, DataModel


class TagOutput(DataModel):
    result: str


class CountOutput(DataModel):
    result: int


class EmptyTag(Component):
    async def run(self) -> TagOutput:
        return TagOutput(result="")


class RunTag(Component):
    """Prefixes the run tag it receives."""

    async def run(self, tag: str) -> TagOutput:
        return TagOutput(result=f"run tag: {tag}")


class SumImages(Component):
    async def run(self, n_images: int, n_extra: int) -> CountOutput:
        return CountOutput(result=n_images + n_extra)


class ScaleImages(Component):
    async def run(self, n_images: int, n_extra: int = 2) -> CountOutput:
        return CountOutput(result=n_images * n_extra)
