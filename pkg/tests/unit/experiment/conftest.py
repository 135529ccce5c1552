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

from pathlib import Path

import pytest
from acp_hoi.experiment import ExperimentConfig, ExperimentData, SynthConfig, synth_generate


@pytest.fixture(scope="function")
def tiny_synth() -> SynthConfig:
    return SynthConfig(
        n_actions=6,
        n_objects=2,
        n_images=40,
        n_test_images=10,
        actions_per_object=4,
        heads_per_object=2,
        rare_fraction=0.0,
        feature_dim=4,
        embed_dim=3,
        seed=3,
    )


@pytest.fixture(scope="function")
def tiny_data(tiny_synth: SynthConfig) -> ExperimentData:
    return synth_generate(tiny_synth)


@pytest.fixture(scope="function")
def tiny_config(tiny_synth: SynthConfig, tmp_path: Path) -> ExperimentConfig:
    return ExperimentConfig(
        synth=tiny_synth,
        hidden=8,
        attn_proj=4,
        epochs=2,
        batch_images=16,
        max_anchors=None,
        output_dir=str(tmp_path / "runs"),
    )
