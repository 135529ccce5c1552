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

import warnings
from pathlib import Path

import acp_hoi.experiment.components as components_module
import acp_hoi.experiment.trainer as trainer_module
import numpy as np
import pytest
from acp_hoi.experiment import (
    AnchorComponent,
    DatasetComponent,
    ExperimentConfig,
    ExperimentData,
    PriorComponent,
    build_experiment_pipeline,
    run_experiment,
)
from acp_hoi.priors import build_prior_bank, count_label_stats
from pytest_mock import MockerFixture


def test_experiment_pipeline_layout() -> None:
    pipeline = build_experiment_pipeline()
    assert pipeline.topological_order() == ["dataset", "priors", "anchors", "training"]
    assert sorted(edge.start for edge in pipeline.previous_edges("training")) == [
        "anchors",
        "dataset",
        "priors",
    ]


@pytest.mark.asyncio
async def test_dataset_component_generates_synth(tiny_config: ExperimentConfig) -> None:
    output = await DatasetComponent().run(config=tiny_config)
    assert len(output.data.train) == 40


@pytest.mark.asyncio
async def test_dataset_component_keeps_given_data(
    tiny_config: ExperimentConfig, tiny_data: ExperimentData, mocker: MockerFixture
) -> None:
    prepare = mocker.patch("acp_hoi.experiment.components.prepare_data")
    output = await DatasetComponent().run(config=tiny_config, data=tiny_data)
    assert output.data is tiny_data
    prepare.assert_not_called()


@pytest.mark.asyncio
async def test_prior_component(tiny_data: ExperimentData) -> None:
    output = await PriorComponent().run(data=tiny_data)
    expected = build_prior_bank(count_label_stats(tiny_data.train, tiny_data.space), tiny_data.space)
    np.testing.assert_array_equal(output.bank.global_priors.C, expected.global_priors.C)


@pytest.mark.asyncio
async def test_anchor_component(tiny_config: ExperimentConfig, tiny_data: ExperimentData) -> None:
    bank = (await PriorComponent().run(data=tiny_data)).bank
    assert (await AnchorComponent().run(bank=bank, config=tiny_config)).partition is None
    hierarchical = tiny_config.model_copy(update={"variant": "hierarchical"})
    partition = (await AnchorComponent().run(bank=bank, config=hierarchical)).partition
    assert partition is not None
    assert partition.anchors
    assert partition.n_actions == tiny_data.space.n_actions


@pytest.mark.asyncio
async def test_run_experiment(tiny_config: ExperimentConfig, tiny_data: ExperimentData) -> None:
    config = tiny_config.model_copy(update={"variant": "hierarchical", "epochs": 1})
    result = await run_experiment(config, seed=4, data=tiny_data, run_name="pipeline")
    assert result.seed == 4
    assert result.variant == "hierarchical"
    assert "/pipeline/seed4/" in result.checkpoint_path
    assert len(result.losses) == 3


@pytest.mark.asyncio
async def test_run_experiment_trains_on_stage_priors(
    tiny_config: ExperimentConfig, tiny_data: ExperimentData, mocker: MockerFixture
) -> None:
    stage_bank = mocker.spy(components_module, "build_prior_bank")
    trainer_bank = mocker.spy(trainer_module, "build_prior_bank")
    config = tiny_config.model_copy(update={"variant": "hierarchical", "epochs": 1})
    await run_experiment(config, seed=0, data=tiny_data, run_name="shared-bank")
    stage_bank.assert_called_once()
    trainer_bank.assert_not_called()


def test_module_source_compiles_without_warnings() -> None:
    path = Path(components_module.__file__)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        compile(path.read_text(), str(path), "exec")
