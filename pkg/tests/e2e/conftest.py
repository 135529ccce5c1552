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

import os
from pathlib import Path

import pytest
from acp_hoi.experiment import ExperimentConfig, ExperimentData, SynthConfig, synth_generate

HICO_ANNOTATIONS_ENV = "ACP_HICO_ANNOTATIONS"


@pytest.fixture(scope="module")
def desk_synth() -> SynthConfig:
    return SynthConfig()


@pytest.fixture(scope="module")
def desk_data(desk_synth: SynthConfig) -> ExperimentData:
    return synth_generate(desk_synth)


@pytest.fixture(scope="function")
def desk_config(desk_synth: SynthConfig, tmp_path: Path) -> ExperimentConfig:
    return ExperimentConfig(synth=desk_synth, output_dir=str(tmp_path / "runs"))


@pytest.fixture(scope="module")
def hico_annotations() -> str:
    path = os.environ.get(HICO_ANNOTATIONS_ENV)
    if not path:
        pytest.skip(f"{HICO_ANNOTATIONS_ENV} is not set")
    return path
