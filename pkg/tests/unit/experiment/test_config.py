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
from acp_hoi.exceptions import ConfigFileError, ConfigValidationError
from acp_hoi.experiment import load_experiment_config, parse_config_text

CONFIG_TEXT = """
# hierarchical run with distillation
variant = hierarchical
objective = distillation
losses.lambda2 = 0.25   # teacher weight
seeds = 0, 1, 2
max_anchors = none
synth.n_images = 100
synth.n_test_images = 20
output_dir = out
"""


def test_parse_config_text() -> None:
    values = parse_config_text(CONFIG_TEXT)
    assert values == {
        "variant": "hierarchical",
        "objective": "distillation",
        "losses": {"lambda2": "0.25"},
        "seeds": ["0", "1", "2"],
        "max_anchors": None,
        "synth": {"n_images": "100", "n_test_images": "20"},
        "output_dir": "out",
    }


@pytest.mark.parametrize(
    "text,message",
    [
        ("variant hierarchical", "Line 1: expected"),
        ("epochs = 3\nepoch = 4", "Line 2: unknown key 'epoch'"),
        ("losses.lambda9 = 1", "unknown key 'losses.lambda9'"),
        ("model.hidden = 3", "unknown key 'model.hidden'"),
        ("synth = 3", "unknown key 'synth'"),
        ("epochs = 3\n\nepochs = 4", "Line 3: key 'epochs' is set twice"),
    ],
)
def test_parse_config_text_errors(text: str, message: str) -> None:
    with pytest.raises(ConfigFileError, match=message):
        parse_config_text(text)


def test_load_experiment_config(tmp_path: Path) -> None:
    path = tmp_path / "configs" / "run.cfg"
    path.parent.mkdir()
    path.write_text(CONFIG_TEXT)
    config = load_experiment_config(str(path), overrides=["losses.lambda3=0.1", "epochs=3"])
    assert config.variant == "hierarchical"
    assert config.seeds == [0, 1, 2]
    assert config.max_anchors is None
    assert config.losses.lambda2 == 0.25
    assert config.losses.lambda3 == 0.1
    assert config.epochs == 3
    assert config.synth is not None and config.synth.n_images == 100
    assert config.output_dir == str(tmp_path / "configs" / "out")


def test_override_replaces_file_value(tmp_path: Path) -> None:
    path = tmp_path / "run.cfg"
    path.write_text(CONFIG_TEXT)
    config = load_experiment_config(str(path), overrides=["losses.lambda2 = 0.75"])
    assert config.losses.lambda2 == 0.75


def test_default_output_dir_is_relative_to_config(tmp_path: Path) -> None:
    path = tmp_path / "run.cfg"
    path.write_text("synth.n_images = 50\n")
    config = load_experiment_config(str(path))
    assert config.output_dir == str(tmp_path / "runs")


def test_missing_dataset_directory(tmp_path: Path) -> None:
    path = tmp_path / "run.cfg"
    path.write_text("data_dir = data\n")
    with pytest.raises(ConfigFileError, match="does not exist"):
        load_experiment_config(str(path))


def test_missing_partition_file(tmp_path: Path) -> None:
    path = tmp_path / "run.cfg"
    path.write_text("synth.n_images = 50\npartition = anchors.json\n")
    with pytest.raises(ConfigFileError, match="anchors.json"):
        load_experiment_config(str(path))


@pytest.mark.parametrize(
    "text",
    [
        "epochs = 3\n",
        "synth.n_images = 50\ndata_dir = data\n",
        "synth.n_images = 50\nseeds = \n",
        "synth.n_images = 50\nprojection.alpha = 0.5\n",
        "synth.n_images = 50\nvariant = deep\n",
    ],
)
def test_invalid_values(tmp_path: Path, text: str) -> None:
    path = tmp_path / "run.cfg"
    path.write_text(text)
    with pytest.raises(ConfigValidationError):
        load_experiment_config(str(path))
