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
"""Detection-style mAP for human-object interactions.

A detection of class ``m`` is a true positive when both its human and object
boxes overlap an unmatched ground truth of ``m`` in the same image with
``min(IoU_h, IoU_o) >= 0.5``.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from acp_hoi.evaluation.types import (
    DetectionRecord,
    EvalReport,
    GroundTruthRecord,
    Setting,
)
from acp_hoi.exceptions import EvaluationError, ZeroShotSplitError
from acp_hoi.model.types import PairBatch
from acp_hoi.types import AnnotationRecord, FloatArray, HoiSpace, IntArray

logger = logging.getLogger(__name__)


def iou(box_a: Sequence[float], box_b: Sequence[float]) -> float:
    """Intersection over union with area ``(x2 - x1) * (y2 - y1)``; degenerate boxes give 0."""
    area_a = (box_a[2] - box_a[0]) * (box_a[3] - box_a[1])
    area_b = (box_b[2] - box_b[0]) * (box_b[3] - box_b[1])
    if area_a <= 0.0 or area_b <= 0.0:
        return 0.0
    width = min(box_a[2], box_b[2]) - max(box_a[0], box_b[0])
    height = min(box_a[3], box_b[3]) - max(box_a[1], box_b[1])
    if width <= 0.0 or height <= 0.0:
        return 0.0
    intersection = width * height
    return float(intersection / (area_a + area_b - intersection))


def pair_overlap(
    det: DetectionRecord | GroundTruthRecord, gt: DetectionRecord | GroundTruthRecord
) -> float:
    return min(iou(det.human_box, gt.human_box), iou(det.object_box, gt.object_box))


def average_precision(tp: FloatArray, n_ground_truth: int) -> float:
    """All-points interpolated AP of a ranked list of true/false positives."""
    if tp.size == 0:
        return 0.0
    tp_cum = np.cumsum(tp)
    fp_cum = np.cumsum(1.0 - tp)
    recall = tp_cum / n_ground_truth
    precision = tp_cum / (tp_cum + fp_cum)
    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    for i in range(mpre.size - 1, 0, -1):
        mpre[i - 1] = max(mpre[i - 1], mpre[i])
    steps = np.flatnonzero(mrec[1:] != mrec[:-1])
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def rank_detections(dets: Sequence[DetectionRecord]) -> list[int]:
    """Descending score; ties go to the lower image id, then to input order."""
    return sorted(range(len(dets)), key=lambda k: (-dets[k].score, dets[k].image_id, k))


def match_detections(
    dets: Sequence[DetectionRecord],
    gts: Sequence[GroundTruthRecord],
    iou_thresh: float = 0.5,
) -> FloatArray:
    """Greedy matching in rank order; returns 1 for true positives, in rank order.

    A detection takes the unmatched ground truth of its image with the largest
    overlap (lowest index on ties) among those reaching ``iou_thresh``.
    """
    by_image: dict[str, list[int]] = defaultdict(list)
    for index, gt in enumerate(gts):
        by_image[gt.image_id].append(index)
    matched: set[int] = set()
    tp = np.zeros(len(dets), dtype=np.float64)
    for rank, k in enumerate(rank_detections(dets)):
        best, best_overlap = -1, -1.0
        for index in by_image.get(dets[k].image_id, []):
            if index in matched:
                continue
            overlap = pair_overlap(dets[k], gts[index])
            if overlap >= iou_thresh and overlap > best_overlap:
                best, best_overlap = index, overlap
        if best >= 0:
            matched.add(best)
            tp[rank] = 1.0
    return tp


def match_and_ap(
    dets: Sequence[DetectionRecord],
    gts: Sequence[GroundTruthRecord],
    iou_thresh: float = 0.5,
) -> Optional[float]:
    """AP of one HOI class, None when the class has no ground truth."""
    if not gts:
        return None
    return average_precision(match_detections(dets, gts, iou_thresh), len(gts))


def rare_classes(train_counts: IntArray, rare_threshold: int) -> set[int]:
    return {int(m) for m in np.flatnonzero(train_counts < rare_threshold)}


def _mean(values: Iterable[float]) -> Optional[float]:
    values = list(values)
    return float(np.mean(values)) if values else None


def evaluate(
    dets: Sequence[DetectionRecord],
    gts: Sequence[GroundTruthRecord],
    space: HoiSpace,
    setting: Setting = "default",
    train_counts: Optional[IntArray] = None,
    held_out: Optional[Iterable[int]] = None,
    iou_thresh: float = 0.5,
) -> EvalReport:
    """Evaluate detections of every HOI class.

    In the ``known_object`` setting a class ``(o, a)`` is only evaluated on the
    images whose ground truth contains object ``o``; detections elsewhere are
    dropped. Classes without ground truth are left out of every mean.

    Args:
        dets (Sequence[DetectionRecord]): detections of all classes.
        gts (Sequence[GroundTruthRecord]): ground truth of all classes.
        space (HoiSpace): label space, provides the rare threshold.
        setting (Setting): ``default`` or ``known_object``.
        train_counts (Optional[IntArray]): training samples per class; without
            them no class is rare.
        held_out (Optional[Iterable[int]]): zero-shot classes reported separately.
        iou_thresh (float): overlap needed for a true positive.

    Raises:
        EvaluationError: if a record references an unknown class.

    Returns:
        EvalReport: per-class APs and mAPs.
    """
    for record in [*dets, *gts]:
        if record.hoi_class >= space.n_classes:
            raise EvaluationError(f"Unknown HOI class {record.hoi_class}")
    dets_by_class: dict[int, list[DetectionRecord]] = defaultdict(list)
    gts_by_class: dict[int, list[GroundTruthRecord]] = defaultdict(list)
    for det in dets:
        dets_by_class[det.hoi_class].append(det)
    for gt in gts:
        gts_by_class[gt.hoi_class].append(gt)
    images_with_object: dict[int, set[str]] = defaultdict(set)
    for gt in gts:
        images_with_object[space.hoi_classes[gt.hoi_class][0]].add(gt.image_id)

    per_class_ap: dict[int, float] = {}
    for m in sorted(gts_by_class):
        class_dets = dets_by_class.get(m, [])
        if setting == "known_object":
            allowed = images_with_object[space.hoi_classes[m][0]]
            class_dets = [d for d in class_dets if d.image_id in allowed]
        ap = match_and_ap(class_dets, gts_by_class[m], iou_thresh)
        if ap is not None:
            per_class_ap[m] = ap

    if train_counts is None:
        logger.warning("No training counts given, every class is reported as non-rare")
        rare: set[int] = set()
    else:
        rare = rare_classes(train_counts, space.rare_threshold)
    held_out_set = set(held_out or [])
    report = EvalReport(
        setting=setting,
        per_class_ap=per_class_ap,
        n_ground_truth={m: len(gts_by_class[m]) for m in per_class_ap},
        map_full=_mean(per_class_ap.values()),
        map_rare=_mean(ap for m, ap in per_class_ap.items() if m in rare),
        map_nonrare=_mean(ap for m, ap in per_class_ap.items() if m not in rare),
        rare_classes=sorted(rare),
        held_out_classes=sorted(held_out_set),
        map_held_out=_mean(ap for m, ap in per_class_ap.items() if m in held_out_set),
    )
    logger.debug(
        f"Evaluated {len(per_class_ap)} classes ({setting}): full mAP {report.map_full}"
    )
    return report


def zero_shot_split(
    space: HoiSpace, seed: int, k: int, train_counts: IntArray
) -> list[int]:
    """Seeded uniform sample of ``k`` non-rare classes to hold out from training.

    Raises:
        ZeroShotSplitError: if fewer than ``k`` classes are non-rare.
    """
    if k == 0:
        return []
    eligible = np.flatnonzero(train_counts >= space.rare_threshold)
    if eligible.size < k:
        raise ZeroShotSplitError(
            f"Only {eligible.size} non-rare classes available, {k} requested"
        )
    rng = np.random.default_rng(seed)
    return sorted(int(m) for m in rng.choice(eligible, size=k, replace=False))


def map_by_train_count(
    report: EvalReport, train_counts: IntArray, bins: Sequence[float]
) -> list[dict[str, Any]]:
    """mAP over classes grouped by their number of training samples.

    ``bins`` are increasing edges; a class falls in ``[low, high)``.
    """
    rows = []
    for low, high in zip(bins[:-1], bins[1:]):
        members = [
            ap for m, ap in report.per_class_ap.items() if low <= train_counts[m] < high
        ]
        rows.append(
            {"low": low, "high": high, "n_classes": len(members), "map": _mean(members)}
        )
    return rows


def relative_improvement(value: Optional[float], reference: Optional[float]) -> Optional[float]:
    if value is None or reference is None or reference == 0.0:
        return None
    return (value - reference) / reference


def ground_truth_from_annotations(
    dataset: Iterable[AnnotationRecord], space: HoiSpace
) -> list[GroundTruthRecord]:
    gts = []
    for record in dataset:
        for instance in record.instances:
            for action in sorted(instance.actions):
                m = space.hoi_index(instance.object, action)
                if m is None:
                    raise EvaluationError(
                        f"({space.objects[instance.object]}, {space.actions[action]}) "
                        "is not a HOI class"
                    )
                gts.append(
                    GroundTruthRecord(
                        image_id=record.image_id,
                        hoi_class=m,
                        human_box=instance.human_box,
                        object_box=instance.object_box,
                    )
                )
    return gts


def detections_from_predictions(
    batch: PairBatch, scores: FloatArray, space: HoiSpace
) -> list[DetectionRecord]:
    """One detection per pair and HOI class of the pair's object."""
    hoi_objects = space.hoi_objects()
    dets = []
    for row, image_id in enumerate(batch.image_ids):
        human_box = tuple(float(v) for v in batch.human_boxes[row])
        object_box = tuple(float(v) for v in batch.object_boxes[row])
        for m in np.flatnonzero(hoi_objects == batch.objects[row]):
            dets.append(
                DetectionRecord(
                    image_id=image_id,
                    hoi_class=int(m),
                    human_box=human_box,  # type: ignore[arg-type]
                    object_box=object_box,  # type: ignore[arg-type]
                    score=float(scores[row, m]),
                )
            )
    return dets
