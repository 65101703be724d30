"""Command-line entry point.

Every subcommand reads its inputs, writes its outputs under ``--out`` and leaves a
``manifest.json`` there, whether it succeeded or not. Logs go to standard error;
tables and metrics go to standard output.

Exit codes: 0 success, 1 contract/validation/training error, 2 I/O or format
error, 64 usage error.
"""

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import NoReturn

import pandas as pd
from pydantic import ValidationError

from src.cli.config import ExperimentConfig, configure_logging
from src.cli.manifest import RunManifest
from src.data import Dataset, SplitPlan, build_split_plan, generate, read_dataset, write_dataset
from src.errors import BagForgeError, ContractError, FormatError
from src.metrics import (
    domain_leakage_probe,
    evaluate_bags,
    evaluate_gene_bags,
    export_embeddings,
    pca_2d,
    raw_bag_embeddings,
)
from src.metrics.report import REPORTED_METRICS
from src.models import Bag, GeneParams, MainParams, embed, load_checkpoint, save_checkpoint
from src.train import (
    ABLATION_VARIANTS,
    StageMode,
    TrainConfig,
    Variant,
    pretrain_gene,
    run_cv,
    run_gradient_suite,
    train_main,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONTRACT = 1
EXIT_IO = 2
EXIT_USAGE = 64
EXIT_INTERNAL = 70

Handler = Callable[[argparse.Namespace, ExperimentConfig, RunManifest], int]


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with code 64."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# =============================================================================
# Shared helpers
# =============================================================================


def _load_dataset(args: argparse.Namespace, manifest: RunManifest) -> Dataset:
    manifest.inputs["dataset"] = str(args.dataset)
    return read_dataset(args.dataset)


def _load_split(args: argparse.Namespace, manifest: RunManifest, dataset: Dataset) -> SplitPlan:
    if args.split is None:
        raise ContractError(f"{args.command} needs --split")
    manifest.inputs["split"] = str(args.split)
    split = SplitPlan.read(args.split)
    split.check_dataset(dataset)
    return split


def _load_main(path: str, manifest: RunManifest) -> MainParams:
    manifest.inputs["checkpoint"] = str(path)
    params = load_checkpoint(path)
    if not isinstance(params, MainParams):
        raise ContractError(f"{path} holds {params.branch} parameters, expected main")
    return params


def _load_gene(path: str, manifest: RunManifest) -> GeneParams:
    manifest.inputs["gene_checkpoint"] = str(path)
    params = load_checkpoint(path)
    if not isinstance(params, GeneParams):
        raise ContractError(f"{path} holds {params.branch} parameters, expected gene")
    return params


def _train_config(args: argparse.Namespace, experiment: ExperimentConfig) -> TrainConfig:
    """Experiment train section with --variant / --stage applied (flags win)."""
    overrides: dict[str, str] = {}
    if getattr(args, "variant", None):
        overrides["variant"] = args.variant
    if getattr(args, "stage", None):
        overrides["stage_mode"] = args.stage
    return experiment.train.with_overrides(**overrides) if overrides else experiment.train


def _select_bags(
    dataset: Dataset, split: SplitPlan | None, subset: str, fold: int
) -> tuple[Bag, ...]:
    if subset == "all":
        return dataset.bags
    if split is None:
        raise ContractError(f"--subset {subset} needs --split")
    if subset == "test":
        return dataset.subset(split.test_ids).bags
    train_ids, val_ids = split.fold_partition(fold)
    return dataset.subset(train_ids if subset == "train" else val_ids).bags


def _variant_slug(variant: Variant) -> str:
    return variant.value.lstrip("+").replace("+", "_")


# =============================================================================
# Commands
# =============================================================================


def cmd_gen_data(
    args: argparse.Namespace, experiment: ExperimentConfig, manifest: RunManifest
) -> int:
    dataset = generate(experiment.gen)
    manifest.record_output(write_dataset(Path(args.out) / "dataset.bfds", dataset))
    return EXIT_OK


def cmd_split(
    args: argparse.Namespace, experiment: ExperimentConfig, manifest: RunManifest
) -> int:
    dataset = _load_dataset(args, manifest)
    fraction = experiment.split.test_fraction
    if args.test_fraction is not None:
        fraction = args.test_fraction
    folds = args.folds if args.folds is not None else experiment.split.folds
    split = build_split_plan(dataset, test_fraction=fraction, k=folds, seed=experiment.train.seed)
    manifest.record_output(split.write(Path(args.out) / "split.json"))
    return EXIT_OK


def cmd_pretrain_gene(
    args: argparse.Namespace, experiment: ExperimentConfig, manifest: RunManifest
) -> int:
    dataset = _load_dataset(args, manifest)
    split = _load_split(args, manifest, dataset)
    gene = pretrain_gene(dataset, split, args.fold, experiment.train, experiment.model)
    target = Path(args.out) / f"gene_fold{args.fold}.bfck"
    manifest.record_output(save_checkpoint(target, gene))
    return EXIT_OK


def cmd_train(
    args: argparse.Namespace, experiment: ExperimentConfig, manifest: RunManifest
) -> int:
    dataset = _load_dataset(args, manifest)
    split = _load_split(args, manifest, dataset)
    config = _train_config(args, experiment)
    gene = None
    if config.variant.use_siamese:
        if args.gene_checkpoint:
            gene = _load_gene(args.gene_checkpoint, manifest)
        else:
            gene = pretrain_gene(dataset, split, args.fold, config, experiment.model)
    main, history = train_main(dataset, split, args.fold, gene, config, experiment.model)

    out = Path(args.out)
    fold = args.fold
    manifest.record_output(save_checkpoint(out / f"main_fold{fold}.bfck", main))
    manifest.record_output(history.write_csv(out / f"history_fold{fold}.csv"))
    val_bags = _select_bags(dataset, split, "val", fold)
    report = evaluate_bags(main, val_bags)
    manifest.record_output(report.write(out / f"val_metrics_fold{fold}.json"))
    print(f"fold {fold} best epoch {history.best_epoch}: val ROCAUC {report.rocauc:.4f}")
    return EXIT_OK


def cmd_eval(
    args: argparse.Namespace, experiment: ExperimentConfig, manifest: RunManifest
) -> int:
    dataset = _load_dataset(args, manifest)
    split = _load_split(args, manifest, dataset) if args.split is not None else None
    bags = _select_bags(dataset, split, args.subset, args.fold)
    manifest.inputs["checkpoint"] = str(args.checkpoint)
    params = load_checkpoint(args.checkpoint)
    min_samples = args.min_domain_samples
    if isinstance(params, GeneParams):
        report = evaluate_gene_bags(params, bags, min_domain_samples=min_samples)
    else:
        report = evaluate_bags(params, bags, min_domain_samples=min_samples)
    manifest.record_output(report.write(Path(args.out) / "metrics.json"))
    print(report.model_dump_json(indent=2))
    return EXIT_OK


def cmd_cv(
    args: argparse.Namespace, experiment: ExperimentConfig, manifest: RunManifest
) -> int:
    dataset = _load_dataset(args, manifest)
    split = _load_split(args, manifest, dataset)
    config = _train_config(args, experiment)
    out = Path(args.out)
    result = run_cv(
        dataset,
        split,
        config,
        experiment.model,
        parallel_folds=args.parallel_folds,
        out_dir=out,
    )
    manifest.record_output(result.report.write(out / "cv_report.json"))
    for name in REPORTED_METRICS:
        print(f"{name}: {result.report.summary[name]}")
    return EXIT_OK


def cmd_ablation(
    args: argparse.Namespace, experiment: ExperimentConfig, manifest: RunManifest
) -> int:
    dataset = _load_dataset(args, manifest)
    split = _load_split(args, manifest, dataset)
    base = _train_config(args, experiment)
    variants = [*ABLATION_VARIANTS, Variant.FULL] if args.with_full else list(ABLATION_VARIANTS)
    out = Path(args.out)
    rows = []
    for variant in variants:
        # variants without a Siamese term have no two-stage schedule
        stage = base.stage_mode if variant.use_siamese else StageMode.ONE
        config = base.with_overrides(variant=variant, stage_mode=stage)
        run_dir = out / "ablation" / _variant_slug(variant)
        result = run_cv(
            dataset,
            split,
            config,
            experiment.model,
            parallel_folds=args.parallel_folds,
            out_dir=run_dir,
        )
        manifest.record_output(result.report.write(run_dir / "cv_report.json"))
        row = {"variant": variant.value, "stage": stage.value}
        row.update({name.upper(): str(result.report.summary[name]) for name in REPORTED_METRICS})
        rows.append(row)

    table = pd.DataFrame(rows)
    target = out / "ablation.csv"
    target.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(target, index=False)
    manifest.record_output(target)
    print(table.to_string(index=False))
    return EXIT_OK


def cmd_gradcheck(
    args: argparse.Namespace, experiment: ExperimentConfig, manifest: RunManifest
) -> int:
    tolerance = float(args.tolerance)
    result = run_gradient_suite(seeds=args.seeds, tolerance=tolerance)
    target = Path(args.out) / "gradcheck.json"
    target.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.Series(result.cases, name="max_rel_err")
    target.write_text(frame.to_json(indent=2), encoding="utf-8")
    manifest.record_output(target)
    name, worst = result.worst
    if result.passed:
        print(f"PASS, max rel err < {args.tolerance}")
        return EXIT_OK
    print(f"FAIL, max rel err {worst:.3e} in {name} (failing: {', '.join(result.failing)})")
    return EXIT_CONTRACT


def cmd_export_embeddings(
    args: argparse.Namespace, experiment: ExperimentConfig, manifest: RunManifest
) -> int:
    dataset = _load_dataset(args, manifest)
    split = _load_split(args, manifest, dataset) if args.split is not None else None
    bags = _select_bags(dataset, split, args.subset, args.fold)
    if args.view == "trained":
        if args.checkpoint is None:
            raise ContractError("--view trained needs --checkpoint")
        embeddings = embed(_load_main(args.checkpoint, manifest), bags)
    else:
        embeddings = raw_bag_embeddings(bags)
    coords = pca_2d(embeddings).coords if args.pca else None
    target = Path(args.out) / f"embeddings_{args.view}.csv"
    manifest.record_output(export_embeddings(target, bags, embeddings, coords))
    if args.probe:
        accuracy = domain_leakage_probe(
            embeddings,
            [bag.domain for bag in bags],
            seed=experiment.train.seed,
            num_domains=dataset.num_domains,
        )
        print(f"domain probe accuracy: {accuracy:.4f}")
    return EXIT_OK


# =============================================================================
# Parser
# =============================================================================


def _tolerance(text: str) -> str:
    if float(text) <= 0:
        raise ValueError(text)
    return text


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per pipeline step."""
    common = _Parser(add_help=False)
    common.add_argument("--config", help="experiment JSON (gen, model, split, train sections)")
    common.add_argument("--seed", type=int, help="seed for generation, splitting and training")
    common.add_argument("--out", default="out", help="output directory (default: out)")

    data = _Parser(add_help=False)
    data.add_argument("--dataset", required=True, help="dataset file written by gen-data")
    data.add_argument("--split", help="split JSON written by split")
    data.add_argument("--fold", type=int, default=0, help="validation fold (default: 0)")

    training = _Parser(add_help=False)
    training.add_argument("--variant", help="baseline, +siamese, +dann, +siamese+dann, full")
    training.add_argument("--stage", help="one or two")

    subsets = _Parser(add_help=False)
    subsets.add_argument("--subset", choices=["all", "train", "val", "test"], default="test")

    parser = _Parser(prog="bagforge", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    def add(
        name: str, handler: Handler, help_text: str, *parents: argparse.ArgumentParser
    ) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, parents=[common, *parents], help=help_text)
        sub.set_defaults(handler=handler)
        return sub

    add("gen-data", cmd_gen_data, "generate a synthetic dataset")
    split = add("split", cmd_split, "stratified hold-out split and k folds", data)
    split.add_argument("--test-fraction", type=float, help="hold-out fraction (default: 0.15)")
    split.add_argument("--folds", type=int, help="number of folds (default: 5)")
    add("pretrain-gene", cmd_pretrain_gene, "pretrain and freeze the gene branch", data)
    train = add("train", cmd_train, "train the main branch on one fold", data, training)
    train.add_argument("--gene-checkpoint", help="frozen gene parameters (pretrained if absent)")
    evaluate = add("eval", cmd_eval, "evaluate a checkpoint", data, subsets)
    evaluate.add_argument("--checkpoint", required=True)
    evaluate.add_argument("--min-domain-samples", type=int, default=10)
    cv = add("cv", cmd_cv, "cross-validate one variant", data, training)
    ablation = add(
        "ablation", cmd_ablation, "cross-validate every ablation variant", data, training
    )
    for sub in (cv, ablation):
        sub.add_argument("--parallel-folds", type=int, default=1, help="folds run concurrently")
    ablation.add_argument("--with-full", action="store_true", help="add the full model row")
    gradcheck = add("gradcheck", cmd_gradcheck, "run the finite-difference gradient suite")
    gradcheck.add_argument("--seeds", type=int, default=100)
    gradcheck.add_argument("--tolerance", type=_tolerance, default="1e-4")
    export = add("export-embeddings", cmd_export_embeddings, "write bag embeddings", data, subsets)
    export.add_argument("--view", choices=["raw", "trained"], default="trained")
    export.add_argument("--checkpoint", help="main checkpoint (trained view)")
    export.add_argument("--pca", action="store_true", help="add pca_x, pca_y columns")
    export.add_argument("--probe", action="store_true", help="print domain probe accuracy")
    return parser


def dispatch(argv: Sequence[str]) -> int:
    """Run one command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    configure_logging()
    manifest = RunManifest(command=args.command, seed=args.seed)
    code, error = EXIT_OK, None
    try:
        experiment = ExperimentConfig.load(args.config).with_seed(args.seed)
        if args.config:
            manifest.inputs["config"] = str(args.config)
        manifest.config = experiment.model_dump(mode="json")
        manifest.seed = experiment.train.seed
        code = args.handler(args, experiment, manifest)
    except (FormatError, OSError) as err:
        logger.error(f"{args.command} failed: {err}")
        code, error = EXIT_IO, str(err)
    except (BagForgeError, ValidationError, ValueError) as err:
        logger.error(f"{args.command} failed: {err}")
        code, error = EXIT_CONTRACT, str(err)
    except Exception as err:
        logger.exception(f"{args.command} crashed")
        code, error = EXIT_INTERNAL, f"{type(err).__name__}: {err}"
        raise
    finally:
        manifest.finish(code, error)
        try:
            manifest.write(args.out)
        except OSError as err:
            logger.error(f"Could not write run manifest: {err}")
    return code


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
