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
"""Experiment stages and the pipeline that chains them.

.. code-block:: text

    dataset -> priors -> anchors -> training

The dataset feeds training directly and the prior bank reaches training next
to the anchor partition.
"""

from __future__ import annotations

import asyncio
import logging
from typing import Optional

from fsspec import AbstractFileSystem

from acp_hoi.experiment.dataset import ExperimentData
from acp_hoi.experiment.pipeline import Component, DataModel, Pipeline
from acp_hoi.experiment.trainer import build_partition, prepare_data, train
from acp_hoi.experiment.types import ExperimentConfig, TrainResult
from acp_hoi.priors import build_prior_bank, count_label_stats
from acp_hoi.types import AnchorPartition, PriorBank

logger = logging.getLogger(__name__)


class DatasetOutput(DataModel):
    data: ExperimentData


class PriorOutput(DataModel):
    bank: PriorBank


class AnchorOutput(DataModel):
    partition: Optional[AnchorPartition] = None


class TrainingOutput(DataModel):
    result: TrainResult


class DatasetComponent(Component):
    """Loads the dataset directory or generates the synthetic benchmark."""

    def __init__(self, fs: Optional[AbstractFileSystem] = None) -> None:
        self.fs = fs

    async def run(
        self, config: ExperimentConfig, data: Optional[ExperimentData] = None
    ) -> DatasetOutput:
        if data is None:
            data = await asyncio.to_thread(prepare_data, config, self.fs)
        return DatasetOutput(data=data)


class PriorComponent(Component):
    """Builds the prior bank of the training annotations."""

    async def run(self, data: ExperimentData) -> PriorOutput:
        stats = count_label_stats(data.train, data.space)
        return PriorOutput(bank=build_prior_bank(stats, data.space))


class AnchorComponent(Component):
    """Reads or selects the anchor partition; None for variants without one."""

    def __init__(self, fs: Optional[AbstractFileSystem] = None) -> None:
        self.fs = fs

    async def run(self, bank: PriorBank, config: ExperimentConfig) -> AnchorOutput:
        return AnchorOutput(partition=build_partition(config, bank, self.fs))


class TrainingComponent(Component):
    def __init__(self, fs: Optional[AbstractFileSystem] = None) -> None:
        self.fs = fs

    async def run(
        self,
        config: ExperimentConfig,
        data: ExperimentData,
        seed: int,
        partition: Optional[AnchorPartition] = None,
        bank: Optional[PriorBank] = None,
        run_name: Optional[str] = None,
    ) -> TrainingOutput:
        result = await asyncio.to_thread(
            train, config, seed, data, run_name, self.fs, partition, bank
        )
        return TrainingOutput(result=result)


def build_experiment_pipeline(fs: Optional[AbstractFileSystem] = None) -> Pipeline:
    pipeline = Pipeline()
    pipeline.add_component(DatasetComponent(fs), "dataset")
    pipeline.add_component(PriorComponent(), "priors")
    pipeline.add_component(AnchorComponent(fs), "anchors")
    pipeline.add_component(TrainingComponent(fs), "training")
    pipeline.connect("dataset", "priors", {"data": "dataset.data"})
    pipeline.connect("priors", "anchors", {"bank": "priors.bank"})
    pipeline.connect("dataset", "training", {"data": "dataset.data"})
    pipeline.connect("anchors", "training", {"partition": "anchors.partition"})
    pipeline.connect("priors", "training", {"bank": "priors.bank"})
    return pipeline


async def run_experiment(
    config: ExperimentConfig,
    seed: int,
    data: Optional[ExperimentData] = None,
    run_name: Optional[str] = None,
    fs: Optional[AbstractFileSystem] = None,
) -> TrainResult:
    """Run the dataset, priors, anchors and training stages for one seed."""
    pipeline = build_experiment_pipeline(fs)
    results = await pipeline.run(
        {
            "dataset": {"config": config, "data": data},
            "anchors": {"config": config},
            "training": {"config": config, "seed": seed, "run_name": run_name},
        }
    )
    output: TrainingOutput = results["training"]
    return output.result
