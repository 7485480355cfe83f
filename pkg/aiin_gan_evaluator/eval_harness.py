"""
Downstream-utility evaluation: dataset balancing with synthetic images,
geometric augmentation, a small flattened-pixel classifier and the
confusion-matrix metrics.

Labels: 0 is the minority (negative) class, 1 the majority (positive) class.
"""
import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from tqdm.auto import tqdm

from aiin_gan_evaluator.errors import ParameterError
from aiin_gan_evaluator.image_codec import Image
from aiin_gan_evaluator.neural.adam import AdamState, adam_step
from aiin_gan_evaluator.neural.mlp import MlpModel, backward, bce_loss, forward
from aiin_gan_evaluator.neural.rng import Rng
from aiin_gan_evaluator.preprocessing.geometry import affine_matrix, warp_affine

logger = logging.getLogger(__name__)

MAX_ROTATION_DEG = 15.0
MAX_SHEAR = 0.2
MAX_ZOOM = 0.2


@dataclass(frozen=True)
class LabeledDataset:
    images: tuple[Image, ...]
    labels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'images', tuple(self.images))
        object.__setattr__(self, 'labels', tuple(int(label) for label in self.labels))
        if len(self.images) != len(self.labels):
            raise ParameterError(
                f"Error! {len(self.images)} images but {len(self.labels)} labels."
            )
        if any(label not in (0, 1) for label in self.labels):
            raise ParameterError("Error! Labels must be 0 (minority) or 1 (majority).")

    @classmethod
    def from_classes(cls, negatives: Sequence[Image], positives: Sequence[Image]) -> "LabeledDataset":
        return cls(tuple(negatives) + tuple(positives), (0,) * len(negatives) + (1,) * len(positives))

    def __len__(self):
        return len(self.images)

    def class_counts(self) -> tuple[int, int]:
        positives = sum(self.labels)
        return len(self.labels) - positives, positives


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ParameterError("Error! Confusion counts must be non-negative.")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


class UtilityMetrics(NamedTuple):
    accuracy: float
    precision: float
    recall: float
    specificity: float
    degenerate: bool = False


@dataclass(frozen=True)
class ClassifierConfig:
    hidden: int = 64
    epochs: int = 100
    lr: float = 0.001
    beta1: float = 0.9
    batch_size: int = 32
    threshold: float = 0.5
    geometric: bool = False
    init_std: float = 0.02
    seed: int = 0
    progress: bool = False

    def __post_init__(self):
        if self.hidden < 1 or self.batch_size < 1 or self.epochs < 0:
            raise ParameterError("Error! Classifier hidden width and batch size must be positive, epochs >= 0.")
        if not 0.0 < self.threshold < 1.0:
            raise ParameterError(f"Error! Decision threshold must lie in (0, 1), got {self.threshold}.")


def augment(minority: Sequence[Image], synthetic: Sequence[Image], target: int) -> list[Image]:
    """
    Top the minority class up to target images with the first synthetic images.

    Raises:
        ParameterError: target below the minority count, or too few synthetic images
    """
    needed = target - len(minority)
    if needed < 0:
        raise ParameterError(f"Error! Target {target} is below the {len(minority)} minority images.")
    if needed > len(synthetic):
        raise ParameterError(
            f"Error! {needed} synthetic images are needed but only {len(synthetic)} were supplied."
        )
    return list(minority) + list(synthetic[:needed])


def geometric_augment(
    img: Image,
    rotation_deg: float = MAX_ROTATION_DEG,
    shear: float = MAX_SHEAR,
    zoom: float = MAX_ZOOM,
    seed: int = 0
) -> Image:
    """
    Random affine augmentation about the image centre.

    Rotation (degrees), shear factor and zoom offset are each drawn uniformly
    from [-p, +p]; the zoom scale is 1 + z. Pixels mapped from outside the
    source are filled with 0.

    Args:
        img (Image): Source image
        rotation_deg (float): Rotation range, at most 15
        shear (float): Shear range, at most 0.2
        zoom (float): Zoom range, at most 0.2
        seed (int): Draw seed

    Returns:
        Image: Transformed image, same size
    """
    for name, value, limit in (("rotation", rotation_deg, MAX_ROTATION_DEG),
                               ("shear", shear, MAX_SHEAR),
                               ("zoom", zoom, MAX_ZOOM)):
        if not 0.0 <= value <= limit:
            raise ParameterError(f"Error! {name} range {value} must lie in [0, {limit}].")
    if rotation_deg == shear == zoom == 0.0:
        return img

    draws = Rng(seed).uniform(3, -1.0, 1.0)
    matrix = affine_matrix(draws[0] * rotation_deg, draws[1] * shear, draws[2] * zoom)
    return warp_affine(img, matrix, fill=0.0)


def _to_inputs(images: Sequence[Image]) -> np.ndarray:
    return np.vstack([img.as_float().reshape(1, -1) for img in images]) / 127.5 - 1.0


def train_classifier(data: LabeledDataset, cfg: ClassifierConfig = ClassifierConfig()) -> MlpModel:
    """
    Train the flattened-pixel classifier (input -> hidden ReLU -> sigmoid) with BCE and ADAM.

    Args:
        data (LabeledDataset): Training set with both classes present
        cfg (ClassifierConfig): Width, schedule and optimiser settings

    Returns:
        MlpModel: Trained model (untrained when cfg.epochs is 0)
    """
    negatives, positives = data.class_counts()
    if negatives == 0 or positives == 0:
        raise ParameterError(
            f"Error! Classifier training needs both classes, got {negatives} negatives and {positives} positives."
        )
    shapes = {img.shape for img in data.images}
    if len(shapes) != 1:
        raise ParameterError(f"Error! Training images must share one size, found {sorted(shapes)}.")

    rng = Rng(cfg.seed)
    pixels = data.images[0].width * data.images[0].height
    model = MlpModel.build([pixels, cfg.hidden, 1], ["relu", "sigmoid"], rng, cfg.init_std)
    state = AdamState.for_params(model, lr=cfg.lr, beta1=cfg.beta1)

    base_inputs = _to_inputs(data.images)
    labels = np.asarray(data.labels, dtype=np.float64).reshape(-1, 1)
    n = len(data)

    for epoch in tqdm(range(1, cfg.epochs + 1), desc="Classifier epochs", disable=not cfg.progress, leave=False):
        if cfg.geometric:
            inputs = _to_inputs([geometric_augment(img, seed=rng.spawn_seed()) for img in data.images])
        else:
            inputs = base_inputs

        order = rng.permutation(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            output, cache = forward(model, inputs[batch])
            loss, dloss = bce_loss(output, labels[batch])
            adam_step(state, model, backward(model, cache, dloss))
            losses.append(loss)
        logger.debug("Classifier epoch %d: loss %.6f", epoch, float(np.mean(losses)))

    return model


def predict_labels(model: MlpModel, images: Sequence[Image], threshold: float = 0.5) -> np.ndarray:
    """Majority (1) where the predicted probability is at least threshold."""
    if not images:
        return np.zeros(0, dtype=np.int64)
    probabilities = model.predict(_to_inputs(images)).reshape(-1)
    return (probabilities >= threshold).astype(np.int64)


def count_confusion(predictions, labels) -> ConfusionCounts:
    predictions = np.asarray(predictions, dtype=np.int64).reshape(-1)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if predictions.shape != labels.shape:
        raise ParameterError(f"Error! {predictions.size} predictions for {labels.size} labels.")
    return ConfusionCounts(
        tp=int(np.sum((predictions == 1) & (labels == 1))),
        fp=int(np.sum((predictions == 1) & (labels == 0))),
        tn=int(np.sum((predictions == 0) & (labels == 0))),
        fn=int(np.sum((predictions == 0) & (labels == 1)))
    )


def confusion_metrics(counts: ConfusionCounts) -> UtilityMetrics:
    """
    Accuracy, precision, recall and specificity.

    A 0/0 ratio yields 0 and sets the degenerate flag.
    """
    if counts.total == 0:
        raise ParameterError("Error! Confusion metrics need at least one evaluated sample.")

    degenerate = False

    def ratio(numerator: int, denominator: int) -> float:
        nonlocal degenerate
        if denominator == 0:
            degenerate = True
            return 0.0
        return numerator / denominator

    metrics = UtilityMetrics(
        accuracy=(counts.tp + counts.tn) / counts.total,
        precision=ratio(counts.tp, counts.tp + counts.fp),
        recall=ratio(counts.tp, counts.tp + counts.fn),
        specificity=ratio(counts.tn, counts.tn + counts.fp),
        degenerate=degenerate
    )
    if degenerate:
        logger.warning("Degenerate confusion counts %s; undefined ratios reported as 0", counts)
    return metrics


def evaluate_classifier(model: MlpModel, test: LabeledDataset, threshold: float = 0.5) -> UtilityMetrics:
    counts = count_confusion(predict_labels(model, test.images, threshold), test.labels)
    logger.info("Held-out confusion: %s", counts)
    return confusion_metrics(counts)
