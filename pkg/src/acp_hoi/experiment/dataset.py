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
"""Experiment datasets: annotations, pair features and embeddings in one directory."""

from __future__ import annotations

import json
import logging
import posixpath
from typing import Optional

import numpy as np
from fsspec import AbstractFileSystem
from pydantic import BaseModel, ConfigDict, ValidationError

from acp_hoi.exceptions import AnnotationParseError
from acp_hoi.file_io import PathLike, default_fs, read_text, write_bytes, write_text
from acp_hoi.model.storage import (
    check_embeddings,
    load_embedding_table,
    load_pairs,
    save_embedding_table,
    save_pairs,
)
from acp_hoi.model.types import PairExample
from acp_hoi.priors import ingest_annotations, serialize_annotations
from acp_hoi.types import AnnotationRecord, FloatArray, HoiSpace

logger = logging.getLogger(__name__)

PLANTED_PRIORS_FILE = "planted_priors.json"


class ExperimentData(BaseModel):
    """Train and test splits of one dataset.

    Attributes:
        space (HoiSpace): label space.
        train (list[AnnotationRecord]): training annotations.
        test (list[AnnotationRecord]): test annotations, the evaluation ground truth.
        train_pairs (list[PairExample]): candidate pairs of the training images.
        test_pairs (list[PairExample]): candidate pairs of the test images.
        embeddings (FloatArray): object word embeddings, one row per object.
        planted (dict[int, FloatArray]): co-occurrence matrices the data was
            sampled from, per object. Empty for real datasets.
        planted_rare (list[int]): HOI classes made rare on purpose.
    """

    space: HoiSpace
    train: list[AnnotationRecord]
    test: list[AnnotationRecord]
    train_pairs: list[PairExample]
    test_pairs: list[PairExample]
    embeddings: FloatArray
    planted: dict[int, FloatArray] = {}
    planted_rare: list[int] = []

    model_config = ConfigDict(arbitrary_types_allowed=True)


def save_dataset(
    data: ExperimentData, out_dir: PathLike, fs: Optional[AbstractFileSystem] = None
) -> None:
    """Write every file of the dataset layout to ``out_dir``."""
    root = str(out_dir)
    write_text(posixpath.join(root, "space.json"), data.space.model_dump_json(indent=1), fs)
    write_bytes(
        posixpath.join(root, "train.json"), serialize_annotations(data.train, data.space), fs
    )
    write_bytes(
        posixpath.join(root, "test.json"), serialize_annotations(data.test, data.space), fs
    )
    save_pairs(data.train_pairs, posixpath.join(root, "train_pairs.jsonl"), fs)
    save_pairs(data.test_pairs, posixpath.join(root, "test_pairs.jsonl"), fs)
    save_embedding_table(data.embeddings, posixpath.join(root, "embeddings.bin"), fs)
    if data.planted:
        document = {
            "objects": {
                data.space.objects[o]: matrix.tolist()
                for o, matrix in sorted(data.planted.items())
            },
            "rare_classes": [data.space.hoi_name(m) for m in data.planted_rare],
        }
        write_text(posixpath.join(root, PLANTED_PRIORS_FILE), json.dumps(document, indent=1), fs)
    logger.info(
        f"Dataset with {len(data.train)} train and {len(data.test)} test images written to {root}"
    )


def load_dataset(
    data_dir: PathLike, fs: Optional[AbstractFileSystem] = None
) -> ExperimentData:
    """Read a dataset directory written by :func:`save_dataset`.

    Raises:
        AnnotationParseError: if the label space file is invalid.
        ShapeMismatchError: if a pair does not carry its object's embedding.
    """
    root = str(data_dir)
    try:
        space = HoiSpace.model_validate_json(read_text(posixpath.join(root, "space.json"), fs))
    except ValidationError as e:
        raise AnnotationParseError(f"Invalid label space file: {e.errors()}")
    train = ingest_annotations(read_text(posixpath.join(root, "train.json"), fs), space)
    test = ingest_annotations(read_text(posixpath.join(root, "test.json"), fs), space)
    train_pairs = load_pairs(posixpath.join(root, "train_pairs.jsonl"), fs)
    test_pairs = load_pairs(posixpath.join(root, "test_pairs.jsonl"), fs)
    embeddings = load_embedding_table(posixpath.join(root, "embeddings.bin"), fs)
    check_embeddings(train_pairs, embeddings)
    check_embeddings(test_pairs, embeddings)
    planted: dict[int, FloatArray] = {}
    planted_rare: list[int] = []
    planted_path = posixpath.join(root, PLANTED_PRIORS_FILE)
    if default_fs(fs).exists(planted_path):
        document = json.loads(read_text(planted_path, fs))
        planted = {
            space.object_index(name): np.array(matrix, dtype=np.float64)
            for name, matrix in document["objects"].items()
        }
        names = {space.hoi_name(m): m for m in range(space.n_classes)}
        planted_rare = [names[name] for name in document.get("rare_classes", [])]
    return ExperimentData(
        space=space,
        train=train,
        test=test,
        train_pairs=train_pairs,
        test_pairs=test_pairs,
        embeddings=embeddings,
        planted=planted,
        planted_rare=planted_rare,
    )
