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
import logging
from typing import Any, Optional, Sequence

from fsspec import AbstractFileSystem
from pydantic import ValidationError

from acp_hoi.evaluation.types import DetectionRecord, EvalReport
from acp_hoi.exceptions import EvaluationError
from acp_hoi.file_io import PathLike, read_csv, write_csv, write_text
from acp_hoi.types import HoiSpace

logger = logging.getLogger(__name__)

DETECTION_FIELDS = [
    "image_id",
    "hoi_class",
    "score",
    "hx1",
    "hy1",
    "hx2",
    "hy2",
    "ox1",
    "oy1",
    "ox2",
    "oy2",
]
SUMMARY_FIELDS = [
    "setting",
    "n_classes",
    "n_rare",
    "map_full",
    "map_rare",
    "map_nonrare",
    "map_held_out",
]
COUNT_FIELDS = ["low", "high", "n_classes", "map"]


def load_detections(
    path: PathLike, fs: Optional[AbstractFileSystem] = None
) -> list[DetectionRecord]:
    """Read a detections CSV with header
    ``image_id,hoi_class,score,hx1,hy1,hx2,hy2,ox1,oy1,ox2,oy2``."""
    detections = []
    for line, row in enumerate(read_csv(path, fs), start=2):
        try:
            detections.append(
                DetectionRecord(
                    image_id=row["image_id"],
                    hoi_class=row["hoi_class"],  # type: ignore[arg-type]
                    score=row["score"],  # type: ignore[arg-type]
                    human_box=tuple(row[k] for k in ("hx1", "hy1", "hx2", "hy2")),  # type: ignore[arg-type]
                    object_box=tuple(row[k] for k in ("ox1", "oy1", "ox2", "oy2")),  # type: ignore[arg-type]
                )
            )
        except (KeyError, ValidationError) as e:
            raise EvaluationError(f"Invalid detection on line {line} of {path}: {e}")
    logger.info(f"Read {len(detections)} detections from {path}")
    return detections


def save_detections(
    detections: Sequence[DetectionRecord],
    path: PathLike,
    fs: Optional[AbstractFileSystem] = None,
) -> None:
    rows = []
    for det in detections:
        row: dict[str, Any] = {
            "image_id": det.image_id,
            "hoi_class": det.hoi_class,
            "score": repr(det.score),
        }
        row.update(zip(DETECTION_FIELDS[3:7], (repr(v) for v in det.human_box)))
        row.update(zip(DETECTION_FIELDS[7:], (repr(v) for v in det.object_box)))
        rows.append(row)
    write_csv(path, DETECTION_FIELDS, rows, fs)


def report_to_json(report: EvalReport, space: Optional[HoiSpace] = None) -> str:
    """Serialize a report; class names are added when the label space is known."""
    payload = report.model_dump(mode="json")
    if space is not None:
        payload["class_names"] = {
            str(m): space.hoi_name(m) for m in report.per_class_ap
        }
    return json.dumps(payload, indent=2, sort_keys=True)


def write_report(
    report: EvalReport,
    path: PathLike,
    space: Optional[HoiSpace] = None,
    fs: Optional[AbstractFileSystem] = None,
) -> None:
    write_text(path, report_to_json(report, space), fs)
    logger.info(f"Wrote evaluation report to {path}")


def summary_row(report: EvalReport) -> dict[str, Any]:
    return {
        "setting": report.setting,
        "n_classes": len(report.per_class_ap),
        "n_rare": len(set(report.rare_classes) & set(report.per_class_ap)),
        "map_full": report.map_full,
        "map_rare": report.map_rare,
        "map_nonrare": report.map_nonrare,
        "map_held_out": report.map_held_out,
    }


def write_summary(
    reports: Sequence[EvalReport],
    path: PathLike,
    fs: Optional[AbstractFileSystem] = None,
) -> None:
    write_csv(path, SUMMARY_FIELDS, [summary_row(r) for r in reports], fs)


def write_count_breakdown(
    rows: Sequence[dict[str, Any]],
    path: PathLike,
    fs: Optional[AbstractFileSystem] = None,
) -> None:
    """Write the rows of ``map_by_train_count``; empty bins have an empty mAP."""
    write_csv(path, COUNT_FIELDS, rows, fs)
    logger.info(f"Wrote mAP by training-sample count to {path}")
