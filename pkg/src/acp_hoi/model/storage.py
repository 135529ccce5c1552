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

import logging
from typing import Iterable, Optional

import numpy as np
from fsspec import AbstractFileSystem
from pydantic import ValidationError

from acp_hoi.exceptions import CheckpointError, ShapeMismatchError
from acp_hoi.file_io import PathLike, read_bytes, read_text, write_bytes, write_text
from acp_hoi.model.types import PairExample
from acp_hoi.types import FloatArray

logger = logging.getLogger(__name__)

_HEADER = np.dtype("<i8")
_VALUES = np.dtype("<f8")


def save_embedding_table(
    table: FloatArray, path: PathLike, fs: Optional[AbstractFileSystem] = None
) -> None:
    """Write an object embedding table: ``(n_objects, d_e)`` header then row-major values."""
    header = np.array(table.shape, dtype=_HEADER)
    write_bytes(path, header.tobytes() + np.ascontiguousarray(table, dtype=_VALUES).tobytes(), fs)


def load_embedding_table(
    path: PathLike, fs: Optional[AbstractFileSystem] = None
) -> FloatArray:
    data = read_bytes(path, fs)
    if len(data) < 2 * _HEADER.itemsize:
        raise CheckpointError(f"Embedding table {path} is truncated")
    n_objects, dim = (int(v) for v in np.frombuffer(data, dtype=_HEADER, count=2))
    values = np.frombuffer(data, dtype=_VALUES, offset=2 * _HEADER.itemsize)
    if values.size != n_objects * dim:
        raise CheckpointError(
            f"Embedding table {path} holds {values.size} values, expected {n_objects}x{dim}"
        )
    return values.reshape(n_objects, dim).astype(np.float64)


def check_embeddings(pairs: Iterable[PairExample], table: FloatArray) -> None:
    """Make sure every pair carries the table row of its object."""
    for pair in pairs:
        if pair.object >= table.shape[0] or not np.array_equal(
            np.asarray(pair.o_embed), table[pair.object]
        ):
            raise ShapeMismatchError(
                f"Pair of image {pair.image_id} does not carry the embedding of object {pair.object}"
            )


def save_pairs(
    pairs: Iterable[PairExample], path: PathLike, fs: Optional[AbstractFileSystem] = None
) -> None:
    lines = [pair.model_dump_json() for pair in pairs]
    write_text(path, "\n".join(lines) + ("\n" if lines else ""), fs)


def load_pairs(
    path: PathLike, fs: Optional[AbstractFileSystem] = None
) -> list[PairExample]:
    """Read a JSON-lines pair feature file."""
    pairs = []
    for number, line in enumerate(read_text(path, fs).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            pairs.append(PairExample.model_validate_json(line))
        except ValidationError as e:
            raise ShapeMismatchError(f"Invalid pair on line {number} of {path}: {e.errors()}")
    logger.debug(f"Loaded {len(pairs)} pairs from {path}")
    return pairs
