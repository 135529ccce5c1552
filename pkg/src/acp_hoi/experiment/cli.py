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
"""Command-line interface.

Exit codes: 0 on success, 1 on a usage error, 2 when the input data or the
configuration is invalid.
"""

from __future__ import annotations

import argparse
import asyncio
import logging
import sys
from collections import OrderedDict
from typing import Any, NoReturn, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from acp_hoi.acp_losses import (
    ProjectionConfig,
    project,
    projection_dump_rows,
    write_projection_dump,
)
from acp_hoi.anchors import save_partition, select_anchors
from acp_hoi.evaluation import (
    evaluate,
    ground_truth_from_annotations,
    load_detections,
    map_by_train_count,
    write_count_breakdown,
    write_report,
    write_summary,
)
from acp_hoi.exceptions import AcpError, ConfigValidationError, EvaluationError
from acp_hoi.experiment.config import load_experiment_config, parse_config_text
from acp_hoi.experiment.dataset import save_dataset
from acp_hoi.experiment.suite import (
    RECIPES,
    anchor_sweep,
    recipe_config,
    run_ablation_suite,
    run_many,
)
from acp_hoi.experiment.synth import synth_generate
from acp_hoi.experiment.trainer import prepare_data
from acp_hoi.experiment.types import SynthConfig
from acp_hoi.file_io import read_bytes, read_csv, read_text, write_csv
from acp_hoi.priors import (
    build_prior_bank,
    classify_relations,
    count_label_stats,
    hoi_train_counts,
    infer_space,
    ingest_annotations,
    load_annotations,
    load_prior_bank,
    save_prior_bank,
)
from acp_hoi.types import HoiSpace

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

RELATION_FIELDS = ["relation", "action_i", "action_j", "c_ij"]


class UsageErrorParser(argparse.ArgumentParser):
    """Argument parser exiting with the usage error code."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_space(path: Optional[str], annotations: bytes, rare_threshold: int) -> HoiSpace:
    if path is None:
        return infer_space(annotations, rare_threshold)
    try:
        return HoiSpace.model_validate_json(read_text(path))
    except ValidationError as e:
        raise ConfigValidationError(e.errors())


def _object_scope(space: HoiSpace, name: Optional[str]) -> Optional[int]:
    return None if name is None else space.object_index(name)


def cmd_build_priors(args: argparse.Namespace) -> int:
    source = read_bytes(args.annotations)
    space = _load_space(args.space, source, args.rare_threshold)
    dataset = ingest_annotations(source, space)
    bank = build_prior_bank(count_label_stats(dataset, space), space)
    save_prior_bank(bank, args.out)
    return EXIT_OK


def cmd_select_anchors(args: argparse.Namespace) -> int:
    bank = load_prior_bank(args.priors)
    max_anchors = None if args.unlimited else args.max_anchors
    partition = select_anchors(bank, max_anchors, _object_scope(bank.space, args.object))
    save_partition(partition, bank.space.actions, args.out)
    return EXIT_OK


def _synth_config(args: argparse.Namespace) -> SynthConfig:
    values: dict[str, Any] = parse_config_text("\n".join(f"synth.{s}" for s in args.set)).get(
        "synth", {}
    )
    if args.seed is not None:
        values["seed"] = args.seed
    try:
        return SynthConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigValidationError(e.errors())


def cmd_synth(args: argparse.Namespace) -> int:
    save_dataset(synth_generate(_synth_config(args)), args.out)
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config, overrides=args.set)
    if args.recipe is not None:
        config = recipe_config(config, args.recipe)
    seeds = args.seeds if args.seeds else config.seeds
    name = args.recipe or config.variant
    data = prepare_data(config)
    results = asyncio.run(run_many([(config, seed, name) for seed in seeds], data))
    for result in results:
        report = result.report
        print(
            f"{name} seed={result.seed} full={report.map_full} "
            f"rare={report.map_rare} nonrare={report.map_nonrare} "
            f"checkpoint={result.checkpoint_path}"
        )
    return EXIT_OK


def _count_bins(text: str) -> list[float]:
    try:
        bins = [float(edge) for edge in text.split(",")]
    except ValueError:
        raise EvaluationError(f"Invalid count bins {text!r}")
    if len(bins) < 2 or any(low >= high for low, high in zip(bins, bins[1:])):
        raise EvaluationError(f"Count bins must be at least two increasing edges, got {text!r}")
    return bins


def cmd_eval(args: argparse.Namespace) -> int:
    source = read_bytes(args.gt)
    space = _load_space(args.space, source, args.rare_threshold)
    gts = ground_truth_from_annotations(ingest_annotations(source, space), space)
    detections = load_detections(args.dets)
    train_counts = None
    if args.train is not None:
        train_counts = hoi_train_counts(load_annotations(args.train, space), space)
    setting = "known_object" if args.mode == "known-object" else "default"
    report = evaluate(detections, gts, space, setting, train_counts)
    write_report(report, args.out, space)
    if args.summary is not None:
        write_summary([report], args.summary)
    if args.by_count is not None:
        if train_counts is None:
            raise EvaluationError("--by-count needs the training annotations (--train)")
        bins = _count_bins(args.count_bins)
        write_count_breakdown(map_by_train_count(report, train_counts, bins), args.by_count)
    print(f"{setting}: full={report.map_full} rare={report.map_rare} nonrare={report.map_nonrare}")
    return EXIT_OK


def _projection_config(args: argparse.Namespace) -> ProjectionConfig:
    try:
        return ProjectionConfig(
            alpha=args.alpha, beta=args.beta, use_per_object=not args.global_priors
        )
    except ValidationError as e:
        raise ConfigValidationError(e.errors())


def cmd_project(args: argparse.Namespace) -> int:
    """Project the action scores of every pair of a scores CSV.

    Rows are ``image_id,pair_id,hoi_class,score`` with optional ``det_h`` and
    ``det_o`` columns; action probabilities are the scores divided by the
    detection scores.
    """
    bank = load_prior_bank(args.priors)
    space = bank.space
    cfg = _projection_config(args)
    pairs: OrderedDict[tuple[str, str], dict[str, Any]] = OrderedDict()
    for line, row in enumerate(read_csv(args.scores), start=2):
        try:
            m = int(row["hoi_class"])
            score = float(row["score"])
            scale = float(row.get("det_h") or 1.0) * float(row.get("det_o") or 1.0)
            obj, action = space.hoi_classes[m]
        except (KeyError, ValueError, IndexError) as e:
            raise EvaluationError(f"Invalid score on line {line} of {args.scores}: {e}")
        pair = pairs.setdefault(
            (row["image_id"], row["pair_id"]),
            {"object": obj, "scale": scale, "probs": np.zeros(space.n_actions)},
        )
        if pair["object"] != obj:
            raise EvaluationError(
                f"Pair {row['pair_id']} of image {row['image_id']} mixes objects"
            )
        pair["probs"][action] = score / scale if scale > 0.0 else 0.0
    if not pairs:
        raise EvaluationError(f"No scores in {args.scores}")
    objects = np.array([pair["object"] for pair in pairs.values()], dtype=np.int64)
    scales = np.array([pair["scale"] for pair in pairs.values()])[:, None]
    probs = np.vstack([pair["probs"] for pair in pairs.values()])
    projected = np.empty_like(probs)
    for index, obj in enumerate(objects):
        scope = int(obj) if cfg.use_per_object else None
        projected[index] = project(probs[index], bank.priors_for(scope), cfg)
    actions = space.hoi_actions()
    rows = projection_dump_rows(
        [image_id for image_id, _ in pairs],
        objects,
        space,
        scales * probs[:, actions],
        scales * projected[:, actions],
        pair_ids=[pair_id for _, pair_id in pairs],
    )
    write_projection_dump(rows, args.out)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    bank = load_prior_bank(args.priors)
    space = bank.space
    priors = bank.priors_for(_object_scope(space, args.object))
    table = classify_relations(priors, args.threshold)
    rows = [
        {
            "relation": relation,
            "action_i": space.actions[i],
            "action_j": space.actions[j],
            "c_ij": repr(float(priors.C[i, j])),
        }
        for relation in ("prerequisite", "exclusion", "overlapping")
        for i, j in getattr(table, relation)
    ]
    write_csv(args.out, RELATION_FIELDS, rows)
    print(
        f"prerequisite={len(table.prerequisite)} exclusion={len(table.exclusion)} "
        f"overlapping={len(table.overlapping)}"
    )
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config, overrides=args.set)
    result = run_ablation_suite(config, args.recipes, args.seeds or None, out_dir=args.out)
    for row in result.rows:
        print(f"{row['label']}: full={row['map_full_mean']} rare={row['map_rare_mean']}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config, overrides=args.set)
    anchor_sweep(config, args.ks, args.seed, args.recipe, out_path=args.out)
    return EXIT_OK


def _int_list(value: str) -> list[int]:
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}")


def _recipe_list(value: str) -> list[str]:
    names = [v.strip() for v in value.split(",") if v.strip()]
    unknown = [n for n in names if n not in RECIPES]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown recipes {unknown}")
    return names


def build_parser() -> argparse.ArgumentParser:
    parser = UsageErrorParser(
        prog="acp-hoi", description="Action co-occurrence priors for HOI detection"
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="logging level (default: INFO)",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=UsageErrorParser)

    p = sub.add_parser("build-priors", help="build co-occurrence priors from annotations")
    p.add_argument("--annotations", required=True, help="annotation JSON file")
    p.add_argument("--space", help="label space JSON; inferred from the annotations if omitted")
    p.add_argument("--rare-threshold", type=int, default=10, help="rare class threshold")
    p.add_argument("--out", required=True, help="prior file to write")
    p.set_defaults(func=cmd_build_priors)

    p = sub.add_parser("select-anchors", help="select anchor actions with NES")
    p.add_argument("--priors", required=True, help="prior file")
    p.add_argument("--max-anchors", type=int, default=15, help="anchor cap (default: 15)")
    p.add_argument("--unlimited", action="store_true", help="no anchor cap")
    p.add_argument("--object", help="use the priors of this object instead of the global ones")
    p.add_argument("--out", required=True, help="partition JSON to write")
    p.set_defaults(func=cmd_select_anchors)

    p = sub.add_parser("synth", help="generate the synthetic long-tail benchmark")
    p.add_argument("--seed", type=int, help="generator seed")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="synthetic benchmark setting")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train and evaluate from an experiment configuration")
    p.add_argument("--config", required=True, help="experiment configuration file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a configuration key")
    p.add_argument("--recipe", choices=sorted(RECIPES), help="apply an ablation recipe")
    p.add_argument("--seeds", type=_int_list, help="comma-separated seeds overriding the configuration")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate detections")
    p.add_argument("--gt", required=True, help="ground-truth annotation JSON")
    p.add_argument("--dets", required=True, help="detections CSV")
    p.add_argument("--space", help="label space JSON; inferred from the ground truth if omitted")
    p.add_argument("--train", help="training annotations for the rare split")
    p.add_argument("--mode", choices=["default", "known-object"], default="default", help="evaluation setting")
    p.add_argument("--rare-threshold", type=int, default=10, help="rare class threshold")
    p.add_argument("--out", default="report.json", help="JSON report to write")
    p.add_argument("--summary", help="CSV summary to write")
    p.add_argument("--by-count", help="CSV of mAP by number of training samples; needs --train")
    p.add_argument("--count-bins", default="0,10,100,1000,inf", help="comma-separated bin edges for --by-count")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("project", help="project pair scores onto the priors")
    p.add_argument("--priors", required=True, help="prior file")
    p.add_argument("--scores", required=True, help="scores CSV")
    p.add_argument("--alpha", type=float, default=1.2, help="weight of present actions")
    p.add_argument("--beta", type=float, default=0.8, help="weight of absent actions")
    p.add_argument("--global-priors", action="store_true", help="ignore per-object priors")
    p.add_argument("--out", default="projection.csv", help="before/after CSV to write")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("report", help="classify action relations of the priors")
    p.add_argument("--priors", required=True, help="prior file")
    p.add_argument("--object", help="object scope, global if omitted")
    p.add_argument("--threshold", type=float, default=0.9, help="prerequisite threshold")
    p.add_argument("--out", default="relations.csv", help="relation CSV to write")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("ablate", help="run the ablation table")
    p.add_argument("--config", required=True, help="experiment configuration file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a configuration key")
    p.add_argument("--recipes", type=_recipe_list, default=["modified", "acp"], help="comma-separated recipes")
    p.add_argument("--seeds", type=_int_list, help="comma-separated seeds")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("sweep", help="run the anchor-count sweep")
    p.add_argument("--config", required=True, help="experiment configuration file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a configuration key")
    p.add_argument("--ks", type=_int_list, default=[5, 10, 15, 20], help="comma-separated anchor caps")
    p.add_argument("--seed", type=int, help="seed, the first configured one by default")
    p.add_argument("--recipe", choices=sorted(RECIPES), default="hierarchical", help="recipe of the swept runs")
    p.add_argument("--out", required=True, help="sweep CSV to write")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        code: int = args.func(args)
        return code
    except (AcpError, FileNotFoundError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
