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
"""Flat ``key = value`` experiment configuration files.

.. code-block:: text

    # hierarchical run with distillation
    variant = hierarchical
    objective = distillation
    losses.lambda2 = 0.5
    seeds = 0, 1, 2
    synth.n_images = 3000

Dotted keys address a nested section, ``seeds`` takes a comma list and
``none`` clears an optional value. Relative paths are resolved against the
directory of the configuration file.
"""

from __future__ import annotations

import logging
import posixpath
from typing import Any, Optional

from fsspec import AbstractFileSystem
from pydantic import BaseModel, ValidationError

from acp_hoi.acp_losses import LossWeights, ProjectionConfig
from acp_hoi.exceptions import ConfigFileError, ConfigValidationError
from acp_hoi.experiment.types import (
    ExperimentConfig,
    OptimizerSettings,
    SynthConfig,
    ZeroShotConfig,
)
from acp_hoi.file_io import PathLike, default_fs, read_text

logger = logging.getLogger(__name__)

SECTIONS: dict[str, type[BaseModel]] = {
    "losses": LossWeights,
    "projection": ProjectionConfig,
    "optimizer": OptimizerSettings,
    "synth": SynthConfig,
    "zero_shot": ZeroShotConfig,
}
LIST_KEYS = ("seeds",)
PATH_KEYS = ("data_dir", "partition", "output_dir")
DATA_FILES = (
    "space.json",
    "train.json",
    "test.json",
    "train_pairs.jsonl",
    "test_pairs.jsonl",
    "embeddings.bin",
)


def _parse_value(key: str, value: str) -> Any:
    if value.lower() in ("none", "null"):
        return None
    if key in LIST_KEYS:
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


def parse_config_text(text: str) -> dict[str, Any]:
    """Turn the text of a configuration file into nested raw values.

    Raises:
        ConfigFileError: on a malformed line, a repeated key or an unknown key.
    """
    values: dict[str, Any] = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigFileError(f"Line {number}: expected 'key = value', got {raw_line!r}")
        section, dot, field = key.partition(".")
        if dot:
            model = SECTIONS.get(section)
            if model is None or field not in model.model_fields:
                raise ConfigFileError(f"Line {number}: unknown key {key!r}")
            target = values.setdefault(section, {})
        else:
            if key not in ExperimentConfig.model_fields or key in SECTIONS:
                raise ConfigFileError(f"Line {number}: unknown key {key!r}")
            target, field = values, key
        if field in target:
            raise ConfigFileError(f"Line {number}: key {key!r} is set twice")
        target[field] = _parse_value(field, value)
    return values


def build_experiment_config(values: dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigValidationError(e.errors())


def check_referenced_files(
    config: ExperimentConfig, fs: Optional[AbstractFileSystem] = None
) -> None:
    """
    Raises:
        ConfigFileError: if the dataset directory or the partition file is missing.
    """
    fs = default_fs(fs)
    if config.data_dir is not None:
        for name in DATA_FILES:
            path = posixpath.join(config.data_dir, name)
            if not fs.exists(path):
                raise ConfigFileError(f"Dataset file {path} does not exist")
    if config.partition is not None and not fs.exists(config.partition):
        raise ConfigFileError(f"Partition file {config.partition} does not exist")


def load_experiment_config(
    path: PathLike,
    fs: Optional[AbstractFileSystem] = None,
    overrides: Optional[list[str]] = None,
) -> ExperimentConfig:
    """Read, validate and resolve an experiment configuration file.

    Args:
        path (PathLike): configuration file.
        fs (Optional[AbstractFileSystem]): filesystem, local by default.
        overrides (Optional[list[str]]): extra ``key=value`` lines applied after the file.

    Raises:
        ConfigFileError: on a syntax error, an unknown key or a missing file.
        ConfigValidationError: if a value is invalid.

    Returns:
        ExperimentConfig: the configuration with absolute paths.
    """
    text = read_text(path, fs)
    values = parse_config_text(text)
    if overrides:
        for key, value in parse_config_text("\n".join(overrides)).items():
            if isinstance(value, dict):
                values.setdefault(key, {}).update(value)
            else:
                values[key] = value
    base = posixpath.dirname(posixpath.abspath(str(path)))
    values.setdefault("output_dir", ExperimentConfig.model_fields["output_dir"].default)
    for key in PATH_KEYS:
        if isinstance(values.get(key), str):
            values[key] = posixpath.normpath(posixpath.join(base, values[key]))
    config = build_experiment_config(values)
    check_referenced_files(config, fs)
    logger.info(f"Loaded {config.variant} experiment configuration from {path}")
    return config
