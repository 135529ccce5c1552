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
"""File access helpers.

Every reader and writer of the package goes through an fsspec filesystem,
the local one unless the caller passes another.
"""

from __future__ import annotations

import csv
import io
import posixpath
from pathlib import Path
from typing import Any, Iterable, Optional, Union

from fsspec import AbstractFileSystem
from fsspec.implementations.local import LocalFileSystem

PathLike = Union[str, Path]


def default_fs(fs: Optional[AbstractFileSystem] = None) -> AbstractFileSystem:
    return fs or LocalFileSystem()


def _make_parent(path: PathLike, fs: AbstractFileSystem) -> None:
    parent = posixpath.dirname(str(path))
    if parent:
        fs.makedirs(parent, exist_ok=True)


def read_bytes(path: PathLike, fs: Optional[AbstractFileSystem] = None) -> bytes:
    with default_fs(fs).open(str(path), "rb") as fp:
        data: bytes = fp.read()
    return data


def write_bytes(
    path: PathLike, data: bytes, fs: Optional[AbstractFileSystem] = None
) -> None:
    fs = default_fs(fs)
    _make_parent(path, fs)
    with fs.open(str(path), "wb") as fp:
        fp.write(data)


def read_text(path: PathLike, fs: Optional[AbstractFileSystem] = None) -> str:
    return read_bytes(path, fs).decode("utf-8")


def write_text(
    path: PathLike, text: str, fs: Optional[AbstractFileSystem] = None
) -> None:
    write_bytes(path, text.encode("utf-8"), fs)


def read_csv(
    path: PathLike, fs: Optional[AbstractFileSystem] = None
) -> list[dict[str, str]]:
    reader = csv.DictReader(io.StringIO(read_text(path, fs)))
    return list(reader)


def write_csv(
    path: PathLike,
    fieldnames: list[str],
    rows: Iterable[dict[str, Any]],
    fs: Optional[AbstractFileSystem] = None,
) -> None:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    write_text(path, buffer.getvalue(), fs)


def append_csv_row(
    path: PathLike,
    fieldnames: list[str],
    row: dict[str, Any],
    fs: Optional[AbstractFileSystem] = None,
) -> None:
    """Append one row, writing the header first when the file does not exist yet."""
    fs = default_fs(fs)
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    if not fs.exists(str(path)):
        _make_parent(path, fs)
        writer.writeheader()
    writer.writerow(row)
    with fs.open(str(path), "ab") as fp:
        fp.write(buffer.getvalue().encode("utf-8"))
