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
from .metrics import (
    average_precision,
    detections_from_predictions,
    evaluate,
    ground_truth_from_annotations,
    iou,
    map_by_train_count,
    match_and_ap,
    rare_classes,
    relative_improvement,
    zero_shot_split,
)
from .reports import (
    load_detections,
    save_detections,
    write_count_breakdown,
    write_report,
    write_summary,
)
from .types import DetectionRecord, EvalReport, GroundTruthRecord

__all__ = [
    "DetectionRecord",
    "EvalReport",
    "GroundTruthRecord",
    "average_precision",
    "detections_from_predictions",
    "evaluate",
    "ground_truth_from_annotations",
    "iou",
    "load_detections",
    "map_by_train_count",
    "match_and_ap",
    "rare_classes",
    "relative_improvement",
    "save_detections",
    "write_count_breakdown",
    "write_report",
    "write_summary",
    "zero_shot_split",
]
