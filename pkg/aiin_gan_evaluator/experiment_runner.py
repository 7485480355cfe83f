"""
End-to-end variant evaluation: toy data, preprocessing, GAN training,
synthetic generation, MS-SSIM collapse check, FID and classifier utility,
assembled into one result row per (preprocessing, batch size) variant.
"""
import logging
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence, Union

from aiin_gan_evaluator.errors import EvaluatorError, ParameterError, StageError
from aiin_gan_evaluator.eval_harness import (
    ClassifierConfig,
    LabeledDataset,
    UtilityMetrics,
    augment,
    evaluate_classifier,
    train_classifier
)
from aiin_gan_evaluator.frechet import fid, stats_for_images
from aiin_gan_evaluator.gan_trainer import GanConfig, TrainHistory, generate, train_gan
from aiin_gan_evaluator.image_codec import Image
from aiin_gan_evaluator.neural.mlp import MlpModel
from aiin_gan_evaluator.neural.rng import Rng
from aiin_gan_evaluator.preprocessing import ImagePreprocessor, build_preprocessor
from aiin_gan_evaluator.similarity import MsSsimConfig, collapse_delta, mean_msssim, sample_pairs
from aiin_gan_evaluator.toy_data import (
    MAJORITY_RATIO,
    ToyDatasetSpec,
    held_out_sizes,
    majority_counterpart,
    make_toy_dataset
)

logger = logging.getLogger(__name__)

ROW_FIELDS = (
    "augmentation", "batch_size", "window", "threshold", "msssim_delta",
    "fid", "accuracy", "precision", "recall", "specificity"
)
BASELINE_TAG = "baseline"


class ExperimentRow(NamedTuple):
    augmentation: str
    batch_size: Optional[int]
    window: Optional[str]
    threshold: Optional[int]
    msssim_delta: Optional[float]
    fid: Optional[float]
    accuracy: Optional[float]
    precision: Optional[float]
    recall: Optional[float]
    specificity: Optional[float]


@dataclass(frozen=True)
class Variant:
    """One preprocessing choice crossed with one GAN batch size."""

    preprocessing: str
    batch_size: int

    def build(self) -> ImagePreprocessor:
        return build_preprocessor(self.preprocessing)

    @property
    def label(self) -> str:
        return f"{self.preprocessing.replace(':', '-')}_b{self.batch_size}"


@dataclass(frozen=True)
class ExperimentPlan:
    toy: ToyDatasetSpec = ToyDatasetSpec()
    gan: GanConfig = GanConfig()
    classifier: ClassifierConfig = ClassifierConfig()
    seed: int = 0
    majority_ratio: float = MAJORITY_RATIO
    test_fraction: float = 0.25
    msssim: MsSsimConfig = field(default_factory=MsSsimConfig)
    fid_eps: float = 0.0
    run_classifier: bool = True


@dataclass(frozen=True)
class StudyData:
    """Real images shared by every variant of a sweep."""

    minority: tuple[Image, ...]
    majority: tuple[Image, ...]
    test: LabeledDataset


class StudySeeds(NamedTuple):
    minority: int
    majority: int
    test_negatives: int
    test_positives: int
    gan: int
    synthetic: int
    real_pairs: int
    fake_pairs: int
    classifier: int


def derive_seeds(seed: int) -> StudySeeds:
    rng = Rng(seed)
    return StudySeeds(*(rng.spawn_seed() for _ in StudySeeds._fields))


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Tag any library failure raised inside the block with the stage name."""
    try:
        yield
    except StageError:
        raise
    except (EvaluatorError, ValueError, ArithmeticError) as e:
        raise StageError(name, e) from e


def build_study_data(plan: ExperimentPlan) -> StudyData:
    seeds = derive_seeds(plan.seed)
    majority_spec = majority_counterpart(plan.toy, plan.majority_ratio)
    negatives, positives = held_out_sizes(plan.toy.n, plan.test_fraction)

    with stage("toy-data"):
        minority = make_toy_dataset(plan.toy, seeds.minority)
        majority = make_toy_dataset(majority_spec, seeds.majority)
        test = LabeledDataset.from_classes(
            make_toy_dataset(replace(plan.toy, n=negatives), seeds.test_negatives),
            make_toy_dataset(replace(majority_spec, n=positives), seeds.test_positives)
        )
    logger.info(
        "Study data: %d minority, %d majority, held-out %d/%d",
        len(minority), len(majority), negatives, positives
    )
    return StudyData(tuple(minority), tuple(majority), test)


def _classifier_metrics(
    plan: ExperimentPlan,
    data: StudyData,
    negatives: Sequence[Image],
    seed: int
) -> Optional[UtilityMetrics]:
    if not plan.run_classifier:
        return None
    with stage("classify"):
        train_set = LabeledDataset.from_classes(negatives, data.majority)
        model = train_classifier(train_set, replace(plan.classifier, seed=seed))
        return evaluate_classifier(model, data.test, plan.classifier.threshold)


def _metric_fields(metrics: Optional[UtilityMetrics]) -> tuple:
    if metrics is None:
        return (None, None, None, None)
    return (metrics.accuracy, metrics.precision, metrics.recall, metrics.specificity)


class ExperimentRunner:
    """
    Runs variants against one shared study dataset.

    Args:
        plan (ExperimentPlan): Data, training and evaluation settings
        output_folder (Path): Optional folder for per-variant training histories
    """

    def __init__(self, plan: ExperimentPlan, output_folder: Optional[Union[str, Path]] = None):
        self.plan = plan
        self.seeds = derive_seeds(plan.seed)
        self.output_folder = Path(output_folder) if output_folder else None
        self._data: Optional[StudyData] = None
        self.histories: dict[str, TrainHistory] = {}

    @property
    def data(self) -> StudyData:
        if self._data is None:
            self._data = build_study_data(self.plan)
        return self._data

    def run(self, variant: Variant, generator: Optional[MlpModel] = None) -> ExperimentRow:
        """
        Evaluate one variant.

        Args:
            variant (Variant): Preprocessing and batch size
            generator (MlpModel): Pre-built generator that replaces training

        Returns:
            ExperimentRow: One result row

        Raises:
            StageError: A stage failed; the stage name and cause are attached
        """
        plan = self.plan
        data = self.data
        n = len(data.minority)

        with stage("preprocess"):
            preprocessor = variant.build()
            real = preprocessor.apply_all(data.minority)

        if generator is None:
            with stage("train-gan"):
                cfg = replace(plan.gan, batch_size=variant.batch_size, seed=self.seeds.gan,
                              image_side=plan.toy.side)
                result = train_gan(cfg, real)
            generator = result.generator
            self.histories[variant.label] = result.history
            if self.output_folder:
                result.history.save_csv(self.output_folder / f"history_{variant.label}.csv")

        with stage("generate"):
            synthetic = generate(generator, n, self.seeds.synthetic)

        with stage("msssim"):
            n_pairs = max(1, n // 2)
            real_score = mean_msssim(real, sample_pairs(n, n_pairs, self.seeds.real_pairs), plan.msssim)
            fake_score = mean_msssim(synthetic, sample_pairs(n, n_pairs, self.seeds.fake_pairs), plan.msssim)
            verdict = collapse_delta(real_score, fake_score)
        logger.info(
            "%s: real MS-SSIM %.4f, fake MS-SSIM %.4f, delta %+.4f%s",
            variant.label, real_score, fake_score, verdict.delta,
            " (mode collapse)" if verdict.collapsed else ""
        )

        with stage("fid"):
            score = fid(stats_for_images(real, plan.fid_eps), stats_for_images(synthetic, plan.fid_eps))

        target = min(len(data.majority), n + len(synthetic))
        with stage("augment"):
            negatives = augment(data.minority, synthetic, max(target, n))
        metrics = _classifier_metrics(plan, data, negatives, self.seeds.classifier)

        return ExperimentRow(
            preprocessor.tag,
            variant.batch_size,
            preprocessor.window,
            preprocessor.threshold,
            verdict.delta,
            score,
            *_metric_fields(metrics)
        )

    def baseline(self) -> ExperimentRow:
        """Classifier trained on the imbalanced real data alone."""
        metrics = _classifier_metrics(self.plan, self.data, self.data.minority, self.seeds.classifier)
        return ExperimentRow(BASELINE_TAG, None, None, None, None, None, *_metric_fields(metrics))

    def sweep(self, variants: Iterable[Variant], include_baseline: bool = False) -> list[ExperimentRow]:
        rows = [self.baseline()] if include_baseline else []
        variants = list(variants)
        for index, variant in enumerate(variants, start=1):
            logger.info("Variant %d/%d: %s", index, len(variants), variant.label)
            rows.append(self.run(variant))
        return rows


def cross_variants(preprocessing: Sequence[str], batch_sizes: Sequence[int]) -> list[Variant]:
    """Every (preprocessing x batch size) permutation, preprocessing-major."""
    if not preprocessing or not batch_sizes:
        raise ParameterError("Error! A sweep needs at least one variant and one batch size.")
    return [Variant(spec, batch) for spec in preprocessing for batch in batch_sizes]


def run_experiment(
    variant: Variant,
    plan: ExperimentPlan = ExperimentPlan(),
    generator: Optional[MlpModel] = None
) -> ExperimentRow:
    return ExperimentRunner(plan).run(variant, generator)


def rank_variants(rows: Sequence[ExperimentRow], top_k: int) -> list[ExperimentRow]:
    """
    Most promising GAN variants first: lowest MS-SSIM delta, ties broken by lowest FID.
    Rows without both scores (the baseline) are left out.
    """
    if top_k < 1:
        raise ParameterError(f"Error! top_k must be at least 1, got {top_k}.")
    scored = [row for row in rows if row.msssim_delta is not None and row.fid is not None]
    return sorted(scored, key=lambda row: (row.msssim_delta, row.fid))[:top_k]
