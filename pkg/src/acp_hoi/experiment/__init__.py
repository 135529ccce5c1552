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
from .components import (
    AnchorComponent,
    DatasetComponent,
    PriorComponent,
    TrainingComponent,
    build_experiment_pipeline,
    run_experiment,
)
from .config import load_experiment_config, parse_config_text
from .dataset import ExperimentData, load_dataset, save_dataset
from .suite import RECIPES, anchor_sweep, recipe_config, run_ablation_suite, run_many
from .synth import planted_matrix, synth_generate
from .trainer import check_first_step, prepare_data, train
from .types import (
    ExperimentConfig,
    OptimizerSettings,
    SynthConfig,
    TrainResult,
    ZeroShotConfig,
)

__all__ = [
    "AnchorComponent",
    "DatasetComponent",
    "PriorComponent",
    "TrainingComponent",
    "build_experiment_pipeline",
    "run_experiment",
    "load_experiment_config",
    "parse_config_text",
    "ExperimentData",
    "load_dataset",
    "save_dataset",
    "RECIPES",
    "anchor_sweep",
    "recipe_config",
    "run_ablation_suite",
    "run_many",
    "planted_matrix",
    "synth_generate",
    "check_first_step",
    "prepare_data",
    "train",
    "ExperimentConfig",
    "OptimizerSettings",
    "SynthConfig",
    "TrainResult",
    "ZeroShotConfig",
]
