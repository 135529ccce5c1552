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

import pytest
from acp_hoi.evaluation import (
    DetectionRecord,
    EvalReport,
    load_detections,
    save_detections,
    write_report,
    write_summary,
)
from acp_hoi.evaluation.reports import DETECTION_FIELDS, SUMMARY_FIELDS
from acp_hoi.exceptions import EvaluationError
from acp_hoi.file_io import read_csv
from acp_hoi.types import HoiSpace


@pytest.fixture(scope="function")
def report() -> EvalReport:
    return EvalReport(
        setting="default",
        per_class_ap={0: 1.0, 2: 0.25},
        n_ground_truth={0: 1, 2: 4},
        map_full=0.625,
        map_rare=0.25,
        map_nonrare=1.0,
        rare_classes=[2],
    )


def test_detection_file(tmp_path: Path) -> None:
    detections = [
        DetectionRecord(
            image_id="img1",
            hoi_class=2,
            human_box=(0.0, 0.0, 10.5, 20.0),
            object_box=(5.0, 5.0, 15.0, 15.0),
            score=0.1 + 0.2,
        )
    ]
    path = str(tmp_path / "detections.csv")
    save_detections(detections, path)
    assert list(read_csv(path)[0]) == DETECTION_FIELDS
    assert load_detections(path) == detections


def test_detection_file_error_names_line(tmp_path: Path) -> None:
    path = tmp_path / "detections.csv"
    path.write_text(
        ",".join(DETECTION_FIELDS)
        + "\nimg1,0,0.5,0,0,1,1,0,0,1,1\nimg2,0,0.5,5,0,1,1,0,0,1,1\n"
    )
    with pytest.raises(EvaluationError, match="line 3"):
        load_detections(str(path))


def test_detection_file_rejects_non_finite_score(tmp_path: Path) -> None:
    path = tmp_path / "detections.csv"
    path.write_text(",".join(DETECTION_FIELDS) + "\nimg1,0,nan,0,0,1,1,0,0,1,1\n")
    with pytest.raises(EvaluationError, match="line 2"):
        load_detections(str(path))


def test_write_report(tmp_path: Path, report: EvalReport, cake_space: HoiSpace) -> None:
    path = tmp_path / "report.json"
    write_report(report, str(path), cake_space)
    payload = json.loads(path.read_text())
    assert payload["map_full"] == 0.625
    assert payload["per_class_ap"] == {"0": 1.0, "2": 0.25}
    assert payload["class_names"] == {"0": "hold cake", "2": "cut cake"}
    assert EvalReport.model_validate(payload) == report


def test_write_summary(tmp_path: Path, report: EvalReport) -> None:
    path = tmp_path / "summary.csv"
    known = report.model_copy(update={"setting": "known_object", "map_full": 0.7})
    write_summary([report, known], str(path))
    rows = read_csv(str(path))
    assert list(rows[0]) == SUMMARY_FIELDS
    assert [row["setting"] for row in rows] == ["default", "known_object"]
    assert rows[0]["n_rare"] == "1"
    assert rows[1]["map_full"] == "0.7"
    assert rows[0]["map_held_out"] == ""
