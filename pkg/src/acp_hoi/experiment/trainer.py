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
import math
import posixpath
from collections import OrderedDict
from typing import Iterator, Optional

import numpy as np
from fsspec import AbstractFileSystem

from acp_hoi.acp_losses import ProjectionConfig, post_process
from acp_hoi.anchors import load_partition, select_anchors
from acp_hoi.evaluation import (
    detections_from_predictions,
    evaluate,
    ground_truth_from_annotations,
    zero_shot_split,
)
from acp_hoi.evaluation.types import EvalReport
from acp_hoi.exceptions import GradientCheckError, TrainingDivergedError
from acp_hoi.experiment.dataset import ExperimentData, load_dataset
from acp_hoi.experiment.objective import Teachers, compute_teachers, run_objective
from acp_hoi.experiment.synth import synth_generate
from acp_hoi.experiment.types import ExperimentConfig, OptimizerSettings, TrainResult
from acp_hoi.file_io import append_csv_row, write_csv, write_text
from acp_hoi.model.network import HoiNetwork, joint_hoi
from acp_hoi.model.types import PARTITIONED_VARIANTS, ModelConfig, PairBatch, PairExample
from acp_hoi.nn import Adam, Optimizer, ParamStore, Sgd, finite_diff_check, save_checkpoint
from acp_hoi.priors import build_prior_bank, count_label_stats, hoi_train_counts
from acp_hoi.types import AnchorPartition, AnnotationRecord, FloatArray, HoiInstance, HoiSpace, PriorBank

logger = logging.getLogger(__name__)

METRIC_FIELDS = ["seed", "epoch", "loss", "map_full", "map_rare", "map_nonrare"]
GRADCHECK_COORDINATES = 500


def prepare_data(config: ExperimentConfig, fs: Optional[AbstractFileSystem] = None) -> ExperimentData:
    if config.synth is not None:
        return synth_generate(config.synth)
    assert config.data_dir is not None
    return load_dataset(config.data_dir, fs)


def drop_held_out(
    records: list[AnnotationRecord],
    pairs: list[PairExample],
    held_out: list[int],
    space: HoiSpace,
) -> tuple[list[AnnotationRecord], list[PairExample]]:
    """Remove the positive labels of held-out classes from the training data.

    Instances left without actions are dropped from the annotations; their
    pairs stay in as negatives.
    """
    if not held_out:
        return records, pairs
    removed = {space.hoi_classes[m] for m in held_out}

    def keep(obj: int, actions: frozenset[int]) -> frozenset[int]:
        return frozenset(a for a in actions if (obj, a) not in removed)

    filtered_records = []
    for record in records:
        instances = []
        for instance in record.instances:
            actions = keep(instance.object, instance.actions)
            if actions:
                instances.append(
                    HoiInstance(
                        human_box=instance.human_box,
                        object_box=instance.object_box,
                        object=instance.object,
                        actions=actions,
                    )
                )
        filtered_records.append(AnnotationRecord(image_id=record.image_id, instances=instances))
    filtered_pairs = [
        pair.model_copy(update={"gt_actions": keep(pair.object, pair.gt_actions)})
        for pair in pairs
    ]
    return filtered_records, filtered_pairs


def build_partition(
    config: ExperimentConfig,
    bank: PriorBank,
    fs: Optional[AbstractFileSystem] = None,
) -> Optional[AnchorPartition]:
    """Partition of the partitioned variants, read from file or selected from the priors."""
    if config.variant not in PARTITIONED_VARIANTS:
        return None
    if config.partition is not None:
        return load_partition(config.partition, bank.space.actions, fs)
    return select_anchors(bank, config.max_anchors)


def build_model_config(
    config: ExperimentConfig,
    data: ExperimentData,
    partition: Optional[AnchorPartition],
) -> ModelConfig:
    first = data.train_pairs[0]
    return ModelConfig(
        variant=config.variant,
        attention=config.attention,
        emb_head=config.emb_head,
        mask_groups=config.mask_groups,
        n_actions=data.space.n_actions,
        n_objects=data.space.n_objects,
        d_h=len(first.x_h),
        d_o=len(first.x_o),
        d_k=len(first.k),
        d_b=len(first.b),
        d_e=len(first.o_embed),
        hidden=config.hidden,
        attn_proj=config.attn_proj,
        partition=partition,
    )


def make_optimizer(settings: OptimizerSettings) -> Optimizer:
    if settings.name == "sgd":
        return Sgd(settings.lr)
    return Adam(settings.lr, settings.beta1, settings.beta2, settings.eps)


def group_by_image(pairs: list[PairExample]) -> list[list[PairExample]]:
    images: OrderedDict[str, list[PairExample]] = OrderedDict()
    for pair in pairs:
        images.setdefault(pair.image_id, []).append(pair)
    return list(images.values())


def image_batches(
    images: list[list[PairExample]],
    batch_images: int,
    n_actions: int,
    rng: Optional[np.random.Generator] = None,
) -> Iterator[PairBatch]:
    """Mini-batches of ``batch_images`` whole images, shuffled when ``rng`` is given."""
    order = rng.permutation(len(images)) if rng is not None else np.arange(len(images))
    for start in range(0, len(order), batch_images):
        chosen = order[start : start + batch_images]
        pairs = [pair for index in chosen for pair in images[index]]
        yield PairBatch.from_pairs(pairs, n_actions)


def predict_scores(
    network: HoiNetwork,
    batch: PairBatch,
    bank: PriorBank,
    projection: ProjectionConfig,
    post: bool,
) -> FloatArray:
    prediction = network.predict(batch)
    if post:
        _, scores = post_process(prediction, batch, bank, projection)
        return scores
    return joint_hoi(prediction.action_probs, batch, bank.space)


def evaluate_network(
    network: HoiNetwork,
    data: ExperimentData,
    bank: PriorBank,
    config: ExperimentConfig,
    projection: ProjectionConfig,
    train_counts: np.ndarray,
    held_out: Optional[list[int]] = None,
) -> EvalReport:
    """Score every test pair and evaluate in the default setting."""
    detections = []
    for batch in image_batches(
        group_by_image(data.test_pairs), config.batch_images, data.space.n_actions
    ):
        scores = predict_scores(network, batch, bank, projection, config.post_process)
        detections.extend(detections_from_predictions(batch, scores, data.space))
    gts = ground_truth_from_annotations(data.test, data.space)
    return evaluate(
        detections, gts, data.space, "default", train_counts, held_out=held_out
    )


def _divergence_dump(
    path: str,
    seed: int,
    epoch: int,
    step: int,
    batch: PairBatch,
    network: HoiNetwork,
    fs: Optional[AbstractFileSystem],
) -> None:
    norms = {
        name: float(np.linalg.norm(value)) for name, value in network.store.params.items()
    }
    document = {
        "seed": seed,
        "epoch": epoch,
        "step": step,
        "image_ids": sorted(set(batch.image_ids)),
        "parameter_norms": {k: (v if math.isfinite(v) else str(v)) for k, v in norms.items()},
    }
    write_text(path, json.dumps(document, indent=2), fs)


def train(
    config: ExperimentConfig,
    seed: int,
    data: Optional[ExperimentData] = None,
    run_name: Optional[str] = None,
    fs: Optional[AbstractFileSystem] = None,
    partition: Optional[AnchorPartition] = None,
    bank: Optional[PriorBank] = None,
) -> TrainResult:
    """Train and evaluate one network.

    Priors are built from the training annotations, after the held-out classes
    of a zero-shot run are removed, unless a bank is passed in. The anchor
    partition is read or selected on the fly for the partitioned variants.
    Per-epoch losses and test mAPs go to ``metrics.csv``; the final parameters
    to ``checkpoint.npz``.

    Args:
        config (ExperimentConfig): experiment settings.
        seed (int): seed of initialization and batch order.
        data (Optional[ExperimentData]): dataset, loaded or generated from the
            configuration when omitted.
        run_name (Optional[str]): sub-directory of ``output_dir``, the variant by default.
        fs (Optional[AbstractFileSystem]): filesystem for every file.
        partition (Optional[AnchorPartition]): partition selected beforehand;
            ignored by zero-shot runs, whose priors change.
        bank (Optional[PriorBank]): priors of the full training annotations built
            beforehand; ignored by zero-shot runs like ``partition``.

    Raises:
        TrainingDivergedError: if the loss becomes non-finite.
        GradientCheckError: if the first-step gradient check fails.

    Returns:
        TrainResult: step losses, final evaluation and written files.
    """
    data = data if data is not None else prepare_data(config, fs)
    space = data.space
    run_dir = posixpath.join(config.output_dir, run_name or config.variant, f"seed{seed}")
    metrics_path = posixpath.join(run_dir, "metrics.csv")
    checkpoint_path = posixpath.join(run_dir, "checkpoint.npz")

    train_counts = hoi_train_counts(data.train, space)
    held_out: list[int] = []
    projection = config.projection
    if config.zero_shot is not None:
        held_out = zero_shot_split(space, config.zero_shot.seed, config.zero_shot.k, train_counts)
        logger.info(f"Holding out classes {[space.hoi_name(m) for m in held_out]}")
        if config.zero_shot.use_global_priors:
            projection = projection.model_copy(update={"use_per_object": False})
    train_records, train_pairs = drop_held_out(data.train, data.train_pairs, held_out, space)

    if bank is None or held_out:
        bank = build_prior_bank(count_label_stats(train_records, space), space)
    else:
        logger.debug("Using the prior bank built by the caller")
    if partition is None or held_out:
        partition = build_partition(config, bank, fs)
    network = HoiNetwork(build_model_config(config, data, partition), seed=seed)
    optimizer = make_optimizer(config.optimizer)
    rng = np.random.default_rng(seed)
    images = group_by_image(train_pairs)
    write_csv(metrics_path, METRIC_FIELDS, [], fs)

    step_losses: list[float] = []
    report: Optional[EvalReport] = None
    for epoch in range(config.epochs):
        epoch_losses = []
        for batch in image_batches(images, config.batch_images, space.n_actions, rng):
            teachers = None
            if config.objective == "distillation":
                teachers = compute_teachers(network, batch, bank, projection, config.losses)
            value = run_objective(
                network, batch, bank, config.objective, config.losses, teachers
            )
            if not math.isfinite(value.total):
                dump_path = posixpath.join(run_dir, "divergence.json")
                _divergence_dump(dump_path, seed, epoch, len(step_losses), batch, network, fs)
                logger.error(f"Loss became {value.total} at step {len(step_losses)}")
                raise TrainingDivergedError(
                    f"Non-finite loss at epoch {epoch}, step {len(step_losses)}",
                    dump_path,
                )
            if config.gradcheck_first_step and not step_losses:
                check_first_step(network, batch, bank, config, teachers)
            optimizer.step(network.store)
            step_losses.append(value.total)
            epoch_losses.append(value.total)
            logger.debug(f"step {len(step_losses)}: loss {value.total:.6f}")

        last = epoch == config.epochs - 1
        evaluate_now = last or (config.eval_every > 0 and (epoch + 1) % config.eval_every == 0)
        row = {"seed": seed, "epoch": epoch, "loss": repr(float(np.mean(epoch_losses)))}
        if evaluate_now:
            report = evaluate_network(
                network, data, bank, config, projection, train_counts, held_out
            )
            row.update(
                map_full=report.map_full,
                map_rare=report.map_rare,
                map_nonrare=report.map_nonrare,
            )
        append_csv_row(metrics_path, METRIC_FIELDS, row, fs)
        logger.info(
            f"[{config.variant} seed {seed}] epoch {epoch}: loss {row['loss']}"
            + (f", mAP {report.map_full}" if evaluate_now and report else "")
        )

    save_checkpoint(network.store, checkpoint_path, fs)
    assert report is not None
    return TrainResult(
        seed=seed,
        variant=config.variant,
        losses=step_losses,
        report=report,
        held_out=held_out,
        checkpoint_path=checkpoint_path,
        metrics_path=metrics_path,
    )


def check_first_step(
    network: HoiNetwork,
    batch: PairBatch,
    bank: PriorBank,
    config: ExperimentConfig,
    teachers: Optional[Teachers],
) -> float:
    """Finite-difference check of the gradients accumulated for ``batch``.

    Raises:
        GradientCheckError: if the largest error exceeds the configured tolerance.
    """

    def objective(_: ParamStore) -> float:
        return run_objective(
            network,
            batch,
            bank,
            config.objective,
            config.losses,
            teachers,
            backward=False,
        ).total

    error = finite_diff_check(objective, network.store, max_coordinates=GRADCHECK_COORDINATES, seed=0)
    if error > config.gradcheck_tolerance:
        raise GradientCheckError(error, config.gradcheck_tolerance)
    logger.info(f"First-step gradient check passed, max relative error {error:.2e}")
    return error
