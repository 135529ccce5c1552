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

from typing import Sequence

import numpy as np
import numpy.typing as npt

from acp_hoi.exceptions import NonFiniteError


def validate_box(box: Sequence[float]) -> None:
    if len(box) != 4:
        raise ValueError(f"A box needs 4 coordinates, got {len(box)}")
    x1, y1, x2, y2 = box
    if not (x1 < x2 and y1 < y2):
        raise ValueError(f"Malformed box {list(box)}: expected x1 < x2 and y1 < y2")


def ensure_finite(array: npt.NDArray[np.float64], where: str) -> None:
    if not np.all(np.isfinite(array)):
        raise NonFiniteError(f"Non-finite value in {where}")
