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
"""Action co-occurrence priors.

Image-level label statistics and the conditional probability matrices derived
from them: ``C[i, j] = p(j | i)`` and its complement ``C_comp[i, j] = p(j | not i)``,
globally and per object category.
"""

from __future__ import annotations

import io
import json
import logging
from collections import OrderedDict
from typing import Any, Optional, Union

import numpy as np
from fsspec import AbstractFileSystem
from pydantic import BaseModel, ValidationError

from acp_hoi.exceptions import (
    AnnotationParseError,
    HoiSpaceValidationError,
    PriorFileError,
)
from acp_hoi.file_io import PathLike, read_bytes, write_bytes
from acp_hoi.types import (
    AnnotationRecord,
    CooccurrenceStats,
    FloatArray,
    HoiInstance,
    HoiSpace,
    IntArray,
    LabelCounts,
    PriorBank,
    PriorMatrices,
)

logger = logging.getLogger(__name__)

PRIOR_FILE_FORMAT = "acp-prior-bank/1"


class _RawInstance(BaseModel):
    human_box: list[float]
    object_box: list[float]
    object: str
    actions: list[str]


class _RawRecord(BaseModel):
    image_id: str
    instances: list[_RawInstance]


def _parse_raw(source: Union[bytes, str]) -> list[_RawRecord]:
    try:
        document = json.loads(source)
    except json.JSONDecodeError as e:
        raise AnnotationParseError(f"Malformed annotation file: {e.msg}", e.lineno, e.colno)
    if not isinstance(document, list):
        raise AnnotationParseError("Annotation file must hold a JSON array of records")
    records = []
    for position, item in enumerate(document):
        try:
            records.append(_RawRecord.model_validate(item))
        except ValidationError as e:
            raise AnnotationParseError(f"Malformed record #{position}: {e.errors()}")
    return records


def ingest_annotations(
    source: Union[bytes, str], space: HoiSpace
) -> list[AnnotationRecord]:
    """Parse an annotation file and resolve names against ``space``.

    Args:
        source (Union[bytes, str]): content of the annotation file.
        space (HoiSpace): vocabularies used to resolve action and object names.

    Raises:
        AnnotationParseError: if the document or a record is malformed.
        VocabularyError: if an action or object name is unknown.

    Returns:
        list[AnnotationRecord]: one record per entry of the file, in file order.
    """
    dataset = []
    for position, raw in enumerate(_parse_raw(source)):
        instances = []
        for raw_instance in raw.instances:
            object_index = space.object_index(raw_instance.object)
            actions = frozenset(space.action_index(a) for a in raw_instance.actions)
            try:
                instances.append(
                    HoiInstance(
                        human_box=tuple(raw_instance.human_box),  # type: ignore[arg-type]
                        object_box=tuple(raw_instance.object_box),  # type: ignore[arg-type]
                        object=object_index,
                        actions=actions,
                    )
                )
            except ValidationError as e:
                raise AnnotationParseError(
                    f"Invalid instance in record #{position} ({raw.image_id}): {e.errors()}"
                )
        dataset.append(AnnotationRecord(image_id=raw.image_id, instances=instances))
    logger.debug(f"Ingested {len(dataset)} annotation records")
    return dataset


def load_annotations(
    path: PathLike, space: HoiSpace, fs: Optional[AbstractFileSystem] = None
) -> list[AnnotationRecord]:
    return ingest_annotations(read_bytes(path, fs), space)


def infer_space(source: Union[bytes, str], rare_threshold: int = 10) -> HoiSpace:
    """Build a label space from the names found in an annotation file.

    Vocabularies are sorted; HOI classes are the observed (object, action) pairs.
    """
    raw_records = _parse_raw(source)
    actions = sorted({a for r in raw_records for i in r.instances for a in i.actions})
    objects = sorted({i.object for r in raw_records for i in r.instances})
    action_index = {name: k for k, name in enumerate(actions)}
    object_index = {name: k for k, name in enumerate(objects)}
    pairs = sorted(
        {
            (object_index[i.object], action_index[a])
            for r in raw_records
            for i in r.instances
            for a in i.actions
        }
    )
    return make_space(actions, objects, pairs, rare_threshold)


def make_space(
    actions: list[str],
    objects: list[str],
    hoi_classes: list[tuple[int, int]],
    rare_threshold: int = 10,
) -> HoiSpace:
    try:
        return HoiSpace(
            actions=actions,
            objects=objects,
            hoi_classes=hoi_classes,
            rare_threshold=rare_threshold,
        )
    except ValidationError as e:
        raise HoiSpaceValidationError(e.errors())


def serialize_annotations(dataset: list[AnnotationRecord], space: HoiSpace) -> bytes:
    """Render records in the annotation file format, actions sorted by index."""
    document = [
        {
            "image_id": record.image_id,
            "instances": [
                {
                    "human_box": list(instance.human_box),
                    "object_box": list(instance.object_box),
                    "object": space.objects[instance.object],
                    "actions": [space.actions[a] for a in sorted(instance.actions)],
                }
                for instance in record.instances
            ],
        }
        for record in dataset
    ]
    return json.dumps(document, indent=1).encode("utf-8")


def _merge_images(
    dataset: list[AnnotationRecord],
) -> "OrderedDict[str, list[HoiInstance]]":
    images: OrderedDict[str, list[HoiInstance]] = OrderedDict()
    for record in dataset:
        images.setdefault(record.image_id, []).extend(record.instances)
    return images


def _counts_from_indicator(indicator: FloatArray) -> LabelCounts:
    counts = (indicator.T @ indicator).astype(np.int64)
    return LabelCounts(
        n_images=int(indicator.shape[0]),
        n_i=np.diag(counts).copy(),
        n_ij=counts,
    )


def count_label_stats(
    dataset: list[AnnotationRecord], space: HoiSpace
) -> CooccurrenceStats:
    """Count image-level action occurrences and co-occurrences.

    Records sharing an ``image_id`` are merged into one image. For object ``o``
    an image contributes action ``i`` when some instance of ``o`` in that image
    carries ``i``; two actions co-occur with ``o`` when both do, possibly on
    different instances. Global counts ignore the object.
    """
    images = _merge_images(dataset)
    n_actions = space.n_actions
    global_indicator = np.zeros((len(images), n_actions), dtype=np.float64)
    per_object_rows: dict[int, list[FloatArray]] = {
        o: [] for o in range(space.n_objects)
    }
    for row, instances in enumerate(images.values()):
        by_object: dict[int, FloatArray] = {}
        for instance in instances:
            actions = sorted(instance.actions)
            global_indicator[row, actions] = 1.0
            indicator = by_object.setdefault(
                instance.object, np.zeros(n_actions, dtype=np.float64)
            )
            indicator[actions] = 1.0
        for object_index, indicator in by_object.items():
            per_object_rows[object_index].append(indicator)
    per_object = {
        o: _counts_from_indicator(
            np.vstack(rows) if rows else np.zeros((0, n_actions), dtype=np.float64)
        )
        for o, rows in per_object_rows.items()
    }
    return CooccurrenceStats(
        global_counts=_counts_from_indicator(global_indicator), per_object=per_object
    )


def priors_from_counts(counts: LabelCounts, scope: Optional[int] = None) -> PriorMatrices:
    n_i = counts.n_i.astype(np.float64)
    n_ij = counts.n_ij.astype(np.float64)
    seen = n_i > 0
    C = np.zeros_like(n_ij)
    np.divide(n_ij, n_i[:, None], out=C, where=seen[:, None])
    absent = counts.n_images - n_i
    C_comp = np.zeros_like(n_ij)
    np.divide(n_i[None, :] - n_ij, absent[:, None], out=C_comp, where=(absent > 0)[:, None])
    np.fill_diagonal(C_comp, 0.0)
    return PriorMatrices(C=C, C_comp=C_comp, scope=scope)


def build_priors(stats: CooccurrenceStats, scope: Optional[int] = None) -> PriorMatrices:
    """Co-occurrence matrix and complement for the global scope (None) or one object.

    ``c_ij = n_ij / n_i`` when ``n_i > 0``, else 0, and
    ``c'_ij = (n_j - n_ij) / (n_images - n_i)`` when ``n_images > n_i``, else 0.
    The complement diagonal is zero.
    """
    return priors_from_counts(stats.counts_for(scope), scope)


def build_prior_bank(stats: CooccurrenceStats, space: HoiSpace) -> PriorBank:
    per_object = {o: build_priors(stats, o) for o in sorted(stats.per_object)}
    bank = PriorBank(
        space=space,
        global_priors=build_priors(stats),
        per_object=per_object,
        stats=stats,
    )
    logger.info(
        f"Built priors over {space.n_actions} actions, {len(per_object)} objects, "
        f"{stats.global_counts.n_images} images"
    )
    return bank


def hoi_train_counts(dataset: list[AnnotationRecord], space: HoiSpace) -> IntArray:
    """Number of annotated instances of each HOI class."""
    counts = np.zeros(space.n_classes, dtype=np.int64)
    for record in dataset:
        for instance in record.instances:
            for action in instance.actions:
                m = space.hoi_index(instance.object, action)
                if m is not None:
                    counts[m] += 1
    return counts


class RelationTable(BaseModel):
    """Ordered action pairs grouped by the kind of co-occurrence they show."""

    prerequisite: list[tuple[int, int]]
    exclusion: list[tuple[int, int]]
    overlapping: list[tuple[int, int]]


def classify_relations(
    priors: PriorMatrices, prerequisite_threshold: float = 0.9
) -> RelationTable:
    """Label every ordered pair (i, j) of observed actions.

    ``i -> j`` is a prerequisite when ``c_ij >= prerequisite_threshold``, an
    exclusion when ``c_ij == 0`` and overlapping otherwise.
    """
    observed = [i for i in range(priors.n_actions) if priors.C[i, i] == 1.0]
    table = RelationTable(prerequisite=[], exclusion=[], overlapping=[])
    for i in observed:
        for j in observed:
            if i == j:
                continue
            value = priors.C[i, j]
            if value >= prerequisite_threshold:
                table.prerequisite.append((i, j))
            elif value == 0.0:
                table.exclusion.append((i, j))
            else:
                table.overlapping.append((i, j))
    return table


def _pack_counts(prefix: str, counts: LabelCounts, arrays: dict[str, Any]) -> None:
    arrays[f"{prefix}_n_images"] = np.array(counts.n_images, dtype=np.int64)
    arrays[f"{prefix}_n_i"] = counts.n_i
    arrays[f"{prefix}_n_ij"] = counts.n_ij


def save_prior_bank(
    bank: PriorBank, path: PathLike, fs: Optional[AbstractFileSystem] = None
) -> None:
    """Write vocabularies, priors and counts to an ``.npz`` container.

    Matrices are stored as little-endian float64 and round-trip bit-exactly.
    """
    space = bank.space
    objects = sorted(bank.per_object)
    arrays: dict[str, Any] = {
        "format": np.array(PRIOR_FILE_FORMAT),
        "actions": np.array(space.actions, dtype=np.str_),
        "objects": np.array(space.objects, dtype=np.str_),
        "hoi_classes": np.array(space.hoi_classes, dtype=np.int64).reshape(-1, 2),
        "rare_threshold": np.array(space.rare_threshold, dtype=np.int64),
        "global_C": bank.global_priors.C.astype("<f8"),
        "global_C_comp": bank.global_priors.C_comp.astype("<f8"),
        "object_scopes": np.array(objects, dtype=np.int64),
    }
    _pack_counts("global", bank.stats.global_counts, arrays)
    for o in objects:
        arrays[f"object{o}_C"] = bank.per_object[o].C.astype("<f8")
        arrays[f"object{o}_C_comp"] = bank.per_object[o].C_comp.astype("<f8")
        _pack_counts(f"object{o}", bank.stats.per_object[o], arrays)
    buffer = io.BytesIO()
    np.savez(buffer, **arrays)
    write_bytes(path, buffer.getvalue(), fs)
    logger.info(f"Prior bank written to {path}")


def _unpack_counts(prefix: str, data: Any) -> LabelCounts:
    return LabelCounts(
        n_images=int(data[f"{prefix}_n_images"]),
        n_i=data[f"{prefix}_n_i"].astype(np.int64),
        n_ij=data[f"{prefix}_n_ij"].astype(np.int64),
    )


def load_prior_bank(
    path: PathLike, fs: Optional[AbstractFileSystem] = None
) -> PriorBank:
    try:
        with np.load(io.BytesIO(read_bytes(path, fs)), allow_pickle=False) as data:
            if str(data["format"]) != PRIOR_FILE_FORMAT:
                raise PriorFileError(f"Unsupported prior file format {data['format']}")
            space = make_space(
                [str(a) for a in data["actions"]],
                [str(o) for o in data["objects"]],
                [(int(o), int(a)) for o, a in data["hoi_classes"]],
                int(data["rare_threshold"]),
            )
            objects = [int(o) for o in data["object_scopes"]]
            per_object = {
                o: PriorMatrices(
                    C=data[f"object{o}_C"], C_comp=data[f"object{o}_C_comp"], scope=o
                )
                for o in objects
            }
            stats = CooccurrenceStats(
                global_counts=_unpack_counts("global", data),
                per_object={o: _unpack_counts(f"object{o}", data) for o in objects},
            )
            global_priors = PriorMatrices(C=data["global_C"], C_comp=data["global_C_comp"])
    except (KeyError, ValueError, OSError) as e:
        raise PriorFileError(f"Cannot read prior file {path}: {e}")
    return PriorBank(
        space=space, global_priors=global_priors, per_object=per_object, stats=stats
    )
