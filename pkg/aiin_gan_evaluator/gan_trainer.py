"""
Desk-scale adversarial training: a fully-connected generator and
discriminator trained with BCE and ADAM on separate real and fake batches.
"""
import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
from tqdm.auto import tqdm

from aiin_gan_evaluator.errors import DivergenceError, ParameterError
from aiin_gan_evaluator.frechet import fid, stats_for_images
from aiin_gan_evaluator.image_codec import Image, round_half_up
from aiin_gan_evaluator.neural.adam import GAN_BETA1, GAN_LR, AdamState, adam_step
from aiin_gan_evaluator.neural.mlp import Layer, MlpModel, backward, bce_loss, forward
from aiin_gan_evaluator.neural.rng import Rng
from aiin_gan_evaluator.similarity import MsSsimConfig, mean_msssim, sample_pairs

logger = logging.getLogger(__name__)

STUDIED_BATCH_SIZES = (20, 67, 134)


@dataclass(frozen=True)
class GanConfig:
    latent_dim: int = 100
    image_side: int = 16
    gen_hidden: tuple[int, ...] = (256, 512)
    disc_hidden: tuple[int, ...] = (256, 128)
    batch_size: int = 134
    epochs: int = 200
    seed: int = 0
    lr: float = GAN_LR
    beta1: float = GAN_BETA1
    init_std: float = 0.02
    # record MS-SSIM / FID snapshots every k epochs, 0 disables
    snapshot_every: int = 0
    progress: bool = False

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ParameterError(f"Error! latent_dim must be at least 1, got {self.latent_dim}.")
        if self.image_side < 1:
            raise ParameterError(f"Error! image_side must be at least 1, got {self.image_side}.")
        if self.batch_size < 1:
            raise ParameterError(f"Error! batch_size must be at least 1, got {self.batch_size}.")
        if self.epochs < 0 or self.snapshot_every < 0:
            raise ParameterError("Error! epochs and snapshot_every must be non-negative.")
        if any(width < 1 for width in (*self.gen_hidden, *self.disc_hidden)):
            raise ParameterError("Error! Hidden layer widths must be positive.")
        if self.batch_size not in STUDIED_BATCH_SIZES:
            logger.debug("Batch size %d is outside the studied sizes %s", self.batch_size, STUDIED_BATCH_SIZES)

    @property
    def pixels(self) -> int:
        return self.image_side * self.image_side


class Snapshot(NamedTuple):
    epoch: int
    fake_msssim: Optional[float]
    fid: float


@dataclass
class TrainHistory:
    d_loss: list[float] = field(default_factory=list)
    g_loss: list[float] = field(default_factory=list)
    snapshots: list[Snapshot] = field(default_factory=list)

    def __len__(self):
        return len(self.d_loss)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(["epoch", "d_loss", "g_loss"])
        for epoch, (d_loss, g_loss) in enumerate(zip(self.d_loss, self.g_loss), start=1):
            writer.writerow([epoch, repr(d_loss), repr(g_loss)])
        return buffer.getvalue()

    def save_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv(), encoding='utf-8')
        return path


class TrainResult(NamedTuple):
    generator: MlpModel
    discriminator: MlpModel
    history: TrainHistory


def build_generator(cfg: GanConfig, rng: Rng) -> MlpModel:
    sizes = [cfg.latent_dim, *cfg.gen_hidden, cfg.pixels]
    activations = ["relu"] * len(cfg.gen_hidden) + ["tanh"]
    return MlpModel.build(sizes, activations, rng, cfg.init_std)


def build_discriminator(cfg: GanConfig, rng: Rng) -> MlpModel:
    sizes = [cfg.pixels, *cfg.disc_hidden, 1]
    activations = ["leaky_relu"] * len(cfg.disc_hidden) + ["sigmoid"]
    return MlpModel.build(sizes, activations, rng, cfg.init_std)


def constant_generator(level: float, latent_dim: int = 100, side: int = 16) -> MlpModel:
    """
    Degenerate generator that emits the same image (every pixel = level) for
    any latent input. Used to exercise the collapse detector.
    """
    if not 0 <= level <= 255:
        raise ParameterError(f"Error! Constant level {level} is outside [0, 255].")
    target = np.clip(level / 127.5 - 1.0, -1.0 + 1e-12, 1.0 - 1e-12)
    bias = np.full(side * side, np.arctanh(target))
    return MlpModel([Layer(np.zeros((side * side, latent_dim)), bias, "tanh")])


def images_to_batch(images: Sequence[Image]) -> np.ndarray:
    """Flatten images into rows scaled to [-1, 1]."""
    return np.vstack([img.as_float().reshape(1, -1) for img in images]) / 127.5 - 1.0


def generate(generator: MlpModel, n: int, seed: int) -> list[Image]:
    """
    Sample n synthetic images from z ~ N(0, 1).

    Args:
        generator (MlpModel): tanh-output generator with a square output size
        n (int): Number of images
        seed (int): Latent draw seed

    Returns:
        list: Images with intensities round-half-up((x + 1) * 127.5)
    """
    side = math.isqrt(generator.out_dim)
    if side * side != generator.out_dim:
        raise ParameterError(f"Error! Generator output size {generator.out_dim} is not a perfect square.")
    if n < 0:
        raise ParameterError(f"Error! Image count must be non-negative, got {n}.")
    if n == 0:
        return []

    latent = Rng(seed).normal((n, generator.in_dim))
    output = np.clip(generator.predict(latent), -1.0, 1.0)
    pixels = np.clip(round_half_up((output + 1.0) * 127.5), 0, 255).astype(np.uint8)
    return [Image(side, side, row) for row in pixels]


class GanTrainer:
    """
    One training run. The discriminator takes two ADAM steps per batch, one on
    real images (label 1) and one on fakes (label 0); the generator then takes
    one step on the same fakes with label 1.
    """

    def __init__(self, cfg: GanConfig, images: Sequence[Image]):
        if not images:
            raise ParameterError("Error! GAN training needs a non-empty dataset.")
        wrong = [img for img in images if img.shape != (cfg.image_side, cfg.image_side)]
        if wrong:
            raise ParameterError(
                f"Error! {len(wrong)} images are not {cfg.image_side}x{cfg.image_side} (first: {wrong[0]})."
            )
        if cfg.batch_size > len(images):
            raise ParameterError(
                f"Error! Batch size {cfg.batch_size} exceeds the {len(images)} training images."
            )

        self.cfg = cfg
        self.images = list(images)
        self._data = images_to_batch(self.images)
        self._rng = Rng(cfg.seed)
        self.generator = build_generator(cfg, self._rng)
        self.discriminator = build_discriminator(cfg, self._rng)
        self.gen_state = AdamState.for_params(self.generator, lr=cfg.lr, beta1=cfg.beta1)
        self.disc_state = AdamState.for_params(self.discriminator, lr=cfg.lr, beta1=cfg.beta1)
        self.history = TrainHistory()
        self._real_stats = None

    def _disc_step(self, batch: np.ndarray, label: float) -> float:
        output, cache = forward(self.discriminator, batch)
        loss, dloss = bce_loss(output, label)
        adam_step(self.disc_state, self.discriminator, backward(self.discriminator, cache, dloss))
        return loss

    def _train_batch(self, indices: np.ndarray) -> tuple[float, float]:
        real = self._data[indices]
        real_loss = self._disc_step(real, 1.0)

        latent = self._rng.normal((len(indices), self.cfg.latent_dim))
        fake, gen_cache = forward(self.generator, latent)
        fake_loss = self._disc_step(fake, 0.0)

        output, disc_cache = forward(self.discriminator, fake)
        g_loss, dloss = bce_loss(output, 1.0)
        through_disc = backward(self.discriminator, disc_cache, dloss)
        adam_step(self.gen_state, self.generator, backward(self.generator, gen_cache, through_disc.input_grad))
        return real_loss + fake_loss, g_loss

    def _snapshot(self, epoch: int) -> Snapshot:
        n = len(self.images)
        fakes = generate(self.generator, n, seed=self.cfg.seed + epoch)
        if self._real_stats is None:
            self._real_stats = stats_for_images(self.images)

        fake_msssim = None
        if self.cfg.image_side >= MsSsimConfig().ssim.window_side and n >= 2:
            pairs = sample_pairs(n, max(1, n // 2), seed=self.cfg.seed + epoch)
            fake_msssim = mean_msssim(fakes, pairs)
        score = fid(self._real_stats, stats_for_images(fakes))
        logger.info("Snapshot at epoch %d: fake MS-SSIM %s, FID %.4f", epoch, fake_msssim, score)
        return Snapshot(epoch, fake_msssim, score)

    def train(self) -> TrainResult:
        cfg = self.cfg
        n = len(self.images)
        epochs = tqdm(range(1, cfg.epochs + 1), desc="GAN epochs", disable=not cfg.progress, leave=False)

        for epoch in epochs:
            order = self._rng.permutation(n)
            d_losses = []
            g_losses = []
            try:
                for start in range(0, n, cfg.batch_size):
                    d_loss, g_loss = self._train_batch(order[start:start + cfg.batch_size])
                    d_losses.append(d_loss)
                    g_losses.append(g_loss)
            except DivergenceError as e:
                raise DivergenceError(f"Error! GAN training diverged at epoch {epoch}: {e}", epoch=epoch) from e

            d_mean = float(np.mean(d_losses))
            g_mean = float(np.mean(g_losses))
            if not (math.isfinite(d_mean) and math.isfinite(g_mean)):
                raise DivergenceError(f"Error! GAN training diverged at epoch {epoch}: non-finite loss.", epoch=epoch)

            self.history.d_loss.append(d_mean)
            self.history.g_loss.append(g_mean)
            logger.debug("Epoch %d: d_loss %.6f, g_loss %.6f", epoch, d_mean, g_mean)

            if cfg.snapshot_every and epoch % cfg.snapshot_every == 0:
                self.history.snapshots.append(self._snapshot(epoch))

        return TrainResult(self.generator, self.discriminator, self.history)


def train_gan(cfg: GanConfig, images: Sequence[Image]) -> TrainResult:
    """
    Train a generator/discriminator pair on an image set.

    Args:
        cfg (GanConfig): Architecture, optimiser and schedule
        images (list): Training images of cfg.image_side x cfg.image_side

    Returns:
        TrainResult: (generator, discriminator, history)

    Raises:
        DivergenceError: A non-finite loss or gradient, with the epoch index
    """
    return GanTrainer(cfg, images).train()
