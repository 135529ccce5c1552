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
"""Ablation tables and anchor-count sweeps over seeded runs."""

from __future__ import annotations

import asyncio
import logging
import os
import posixpath
from typing import Any, Iterable, NamedTuple, Optional, Sequence

import numpy as np
from fsspec import AbstractFileSystem
from pydantic import ValidationError

from acp_hoi.anchors import select_anchors
from acp_hoi.evaluation import relative_improvement
from acp_hoi.exceptions import ConfigFileError, ConfigValidationError, RecipeError
from acp_hoi.experiment.components import run_experiment
from acp_hoi.experiment.dataset import ExperimentData
from acp_hoi.experiment.trainer import prepare_data
from acp_hoi.experiment.types import ExperimentConfig, TrainResult
from acp_hoi.file_io import write_csv
from acp_hoi.priors import build_prior_bank, count_label_stats

logger = logging.getLogger(__name__)


class Recipe(NamedTuple):
    label: str
    settings: dict[str, Any]


_HIER_DISTILL = {"variant": "hierarchical", "objective": "distillation"}

RECIPES: dict[str, Recipe] = {
    "baseline": Recipe("Baseline", {"variant": "baseline", "objective": "bce"}),
    "modified": Recipe("Modified Baseline", {"variant": "modified", "objective": "bce"}),
    "multitask": Recipe("+Multi-task", {"variant": "multitask", "objective": "bce"}),
    "twostream": Recipe("+Two-stream", {"variant": "twostream", "objective": "bce"}),
    "hierarchical": Recipe(
        "+Hierarchical only", {"variant": "hierarchical", "objective": "bce"}
    ),
    "distillation": Recipe(
        "+Distillation only", {"variant": "modified", "objective": "distillation"}
    ),
    "hierarchical_distillation": Recipe("+Hierarchical+Distillation", _HIER_DISTILL),
    "acp": Recipe("+Hierarchical+Distillation+Post", {**_HIER_DISTILL, "post_process": True}),
    "acp_emb": Recipe("+Hierarchical+Distillation+Emb", {**_HIER_DISTILL, "emb_head": True}),
    "acp_sa": Recipe("+Hierarchical+Distillation+SA", {**_HIER_DISTILL, "attention": True}),
    "acp_plus_plus": Recipe(
        "+Hierarchical+Distillation+Emb+SA",
        {**_HIER_DISTILL, "emb_head": True, "attention": True},
    ),
    "acp_plus_plus_post": Recipe(
        "+Hierarchical+Distillation+Emb+SA+Post",
        {**_HIER_DISTILL, "emb_head": True, "attention": True, "post_process": True},
    ),
}

TABLE_FIELDS = [
    "recipe",
    "label",
    "n_seeds",
    "map_full_mean",
    "map_full_sd",
    "map_rare_mean",
    "map_rare_sd",
    "map_nonrare_mean",
    "map_nonrare_sd",
    "map_held_out_mean",
]
RUN_FIELDS = ["recipe", "seed", "map_full", "map_rare", "map_nonrare", "map_held_out"]
SWEEP_FIELDS = [
    "max_anchors",
    "n_anchors",
    "map_full",
    "map_rare",
    "map_nonrare",
    "rel_full",
    "rel_rare",
]


def recipe_config(base: ExperimentConfig, name: str, **overrides: Any) -> ExperimentConfig:
    """``base`` with the settings of a named recipe applied.

    Raises:
        RecipeError: if the recipe is unknown.
        ConfigValidationError: if the resulting configuration is invalid.
    """
    if name not in RECIPES:
        raise RecipeError(f"Unknown recipe {name!r}, expected one of {sorted(RECIPES)}")
    values = {**base.model_dump(), **RECIPES[name].settings, **overrides}
    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigValidationError(e.errors())


def threads_from_env() -> int:
    raw = os.environ.get("ACP_THREADS", "1")
    try:
        threads = int(raw)
    except ValueError:
        threads = 0
    if threads < 1:
        raise ConfigFileError(f"ACP_THREADS must be a positive integer, got {raw!r}")
    return threads


async def run_many(
    jobs: Sequence[tuple[ExperimentConfig, int, str]],
    data: Optional[ExperimentData] = None,
    fs: Optional[AbstractFileSystem] = None,
    max_concurrency: Optional[int] = None,
) -> list[TrainResult]:
    """Run ``(config, seed, run_name)`` jobs, at most ``ACP_THREADS`` at a time.

    Results come back in job order.
    """
    semaphore = asyncio.Semaphore(max_concurrency or threads_from_env())

    async def run_one(config: ExperimentConfig, seed: int, name: str) -> TrainResult:
        async with semaphore:
            logger.info(f"Starting {name} with seed {seed}")
            return await run_experiment(config, seed, data, name, fs)

    return list(await asyncio.gather(*[run_one(*job) for job in jobs]))


def _mean_sd(values: Iterable[Optional[float]]) -> tuple[Optional[float], Optional[float]]:
    present = [v for v in values if v is not None]
    if not present:
        return None, None
    sd = float(np.std(present, ddof=1)) if len(present) > 1 else 0.0
    return float(np.mean(present)), sd


def summarize(recipe: str, results: Sequence[TrainResult]) -> dict[str, Any]:
    row: dict[str, Any] = {
        "recipe": recipe,
        "label": RECIPES[recipe].label if recipe in RECIPES else recipe,
        "n_seeds": len(results),
    }
    for metric in ("map_full", "map_rare", "map_nonrare"):
        mean, sd = _mean_sd(getattr(r.report, metric) for r in results)
        row[f"{metric}_mean"] = mean
        row[f"{metric}_sd"] = sd
    row["map_held_out_mean"], _ = _mean_sd(r.report.map_held_out for r in results)
    return row


class SuiteResult(NamedTuple):
    rows: list[dict[str, Any]]
    runs: dict[str, list[TrainResult]]


def run_ablation_suite(
    config: ExperimentConfig,
    recipes: Sequence[str],
    seeds: Optional[Sequence[int]] = None,
    data: Optional[ExperimentData] = None,
    out_dir: Optional[str] = None,
    fs: Optional[AbstractFileSystem] = None,
) -> SuiteResult:
    """Train every recipe with every seed on one dataset and tabulate mean and sd.

    Args:
        config (ExperimentConfig): base configuration the recipes modify.
        recipes (Sequence[str]): recipe names, in table order.
        seeds (Optional[Sequence[int]]): seeds, ``config.seeds`` by default.
        data (Optional[ExperimentData]): shared dataset, prepared once from the
            configuration when omitted.
        out_dir (Optional[str]): where ``ablation.csv`` and ``ablation_runs.csv``
            are written; nothing is written when None.
        fs (Optional[AbstractFileSystem]): filesystem.

    Returns:
        SuiteResult: one table row per recipe and the runs behind them.
    """
    seeds = list(seeds if seeds is not None else config.seeds)
    data = data if data is not None else prepare_data(config, fs)
    jobs = [(recipe_config(config, name), seed, name) for name in recipes for seed in seeds]
    results = asyncio.run(run_many(jobs, data, fs))
    runs: dict[str, list[TrainResult]] = {name: [] for name in recipes}
    for (_, _, name), result in zip(jobs, results):
        runs[name].append(result)
    rows = [summarize(name, runs[name]) for name in recipes]
    if out_dir is not None:
        write_csv(posixpath.join(out_dir, "ablation.csv"), TABLE_FIELDS, rows, fs)
        run_rows = [
            {
                "recipe": name,
                "seed": r.seed,
                "map_full": r.report.map_full,
                "map_rare": r.report.map_rare,
                "map_nonrare": r.report.map_nonrare,
                "map_held_out": r.report.map_held_out,
            }
            for name in recipes
            for r in runs[name]
        ]
        write_csv(posixpath.join(out_dir, "ablation_runs.csv"), RUN_FIELDS, run_rows, fs)
        logger.info(f"Ablation table written to {out_dir}")
    return SuiteResult(rows, runs)


def anchor_sweep(
    config: ExperimentConfig,
    ks: Sequence[int] = (5, 10, 15, 20),
    seed: Optional[int] = None,
    recipe: str = "hierarchical",
    data: Optional[ExperimentData] = None,
    out_path: Optional[str] = None,
    fs: Optional[AbstractFileSystem] = None,
) -> list[dict[str, Any]]:
    """Train ``recipe`` once per anchor cap and compare with the Modified Baseline.

    Returns:
        list[dict[str, Any]]: one row per cap, keyed by ``max_anchors``.
    """
    seed = seed if seed is not None else config.seeds[0]
    data = data if data is not None else prepare_data(config, fs)
    jobs = [(recipe_config(config, "modified"), seed, "sweep_reference")]
    jobs += [
        (recipe_config(config, recipe, max_anchors=k), seed, f"sweep_k{k}") for k in ks
    ]
    reference, *results = asyncio.run(run_many(jobs, data, fs))
    bank = build_prior_bank(count_label_stats(data.train, data.space), data.space)
    rows = []
    for k, (job_config, _, _), result in zip(ks, jobs[1:], results):
        report = result.report
        rows.append(
            {
                "max_anchors": k,
                "n_anchors": len(select_anchors(bank, job_config.max_anchors).anchors),
                "map_full": report.map_full,
                "map_rare": report.map_rare,
                "map_nonrare": report.map_nonrare,
                "rel_full": relative_improvement(report.map_full, reference.report.map_full),
                "rel_rare": relative_improvement(report.map_rare, reference.report.map_rare),
            }
        )
    if out_path is not None:
        write_csv(out_path, SWEEP_FIELDS, rows, fs)
        logger.info(f"Anchor sweep written to {out_path}")
    return rows

