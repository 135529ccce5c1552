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
"""Result store of the experiment pipeline."""

from __future__ import annotations

import abc
from typing import Any, Optional


class Store(abc.ABC):
    """Keeps the output of each pipeline stage, keyed by stage name."""

    @abc.abstractmethod
    def add(self, key: str, value: Any, overwrite: bool = True) -> None:
        """
        Args:
            key (str): stage name.
            value (Any): stage output.
            overwrite (bool): if False, adding an existing key raises KeyError.
        """
        pass

    @abc.abstractmethod
    def get(self, key: str) -> Optional[Any]:
        """Value stored for ``key``, None when missing."""
        pass

    @abc.abstractmethod
    def all(self) -> dict[str, Any]:
        pass

    @abc.abstractmethod
    def empty(self) -> None:
        pass


class InMemoryStore(Store):
    def __init__(self) -> None:
        self._data: dict[str, Any] = {}

    def add(self, key: str, value: Any, overwrite: bool = True) -> None:
        if not overwrite and key in self._data:
            raise KeyError(f"{key} already exists")
        self._data[key] = value

    def get(self, key: str) -> Optional[Any]:
        return self._data.get(key)

    def all(self) -> dict[str, Any]:
        return dict(self._data)

    def empty(self) -> None:
        self._data = {}
