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

import json
from pathlib import Path

import fsspec
import numpy as np
import pytest
from acp_hoi.exceptions import AnnotationParseError, ShapeMismatchError
from acp_hoi.experiment import ExperimentData, load_dataset, save_dataset
from acp_hoi.experiment.dataset import PLANTED_PRIORS_FILE
from acp_hoi.model.storage import save_embedding_table


def test_dataset_directory(tmp_path: Path, tiny_data: ExperimentData) -> None:
    save_dataset(tiny_data, str(tmp_path))
    assert sorted(p.name for p in tmp_path.iterdir()) == [
        "embeddings.bin",
        PLANTED_PRIORS_FILE,
        "space.json",
        "test.json",
        "test_pairs.jsonl",
        "train.json",
        "train_pairs.jsonl",
    ]
    loaded = load_dataset(str(tmp_path))
    assert loaded.space == tiny_data.space
    assert loaded.train == tiny_data.train
    assert loaded.test_pairs == tiny_data.test_pairs
    assert loaded.planted_rare == tiny_data.planted_rare
    assert sorted(loaded.planted) == sorted(tiny_data.planted)
    for o, matrix in tiny_data.planted.items():
        np.testing.assert_array_equal(loaded.planted[o], matrix)
    document = json.loads((tmp_path / PLANTED_PRIORS_FILE).read_text())
    assert sorted(document["objects"]) == ["object00", "object01"]


def test_dataset_on_memory_filesystem(tiny_data: ExperimentData) -> None:
    fs = fsspec.filesystem("memory")
    root = "/acp-dataset-test"
    save_dataset(tiny_data.model_copy(update={"planted": {}}), root, fs)
    assert not fs.exists(f"{root}/{PLANTED_PRIORS_FILE}")
    loaded = load_dataset(root, fs)
    assert loaded.planted == {}
    assert loaded.train_pairs == tiny_data.train_pairs
    fs.rm(root, recursive=True)


def test_invalid_space_file(tmp_path: Path, tiny_data: ExperimentData) -> None:
    save_dataset(tiny_data, str(tmp_path))
    (tmp_path / "space.json").write_text('{"actions": ["a", "a"], "objects": [], "hoi_classes": []}')
    with pytest.raises(AnnotationParseError):
        load_dataset(str(tmp_path))


def test_embedding_table_must_match_pairs(tmp_path: Path, tiny_data: ExperimentData) -> None:
    save_dataset(tiny_data, str(tmp_path))
    save_embedding_table(tiny_data.embeddings + 1.0, str(tmp_path / "embeddings.bin"))
    with pytest.raises(ShapeMismatchError):
        load_dataset(str(tmp_path))
