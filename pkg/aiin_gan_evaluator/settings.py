"""
Configuration: packaged application defaults (TOML), the full variant grid
(JSON) and flat key=value experiment files with command-line overrides.
"""
import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Union

from aiin_gan_evaluator.errors import UsageError
from aiin_gan_evaluator.eval_harness import ClassifierConfig
from aiin_gan_evaluator.experiment_runner import ExperimentPlan, Variant, cross_variants
from aiin_gan_evaluator.gan_trainer import GanConfig
from aiin_gan_evaluator.similarity import MsSsimConfig, SsimConfig
from aiin_gan_evaluator.toy_data import ToyDatasetSpec

logger = logging.getLogger(__name__)

PACKAGE_DIR = Path(__file__).parent
APP_CONFIG_PATH = PACKAGE_DIR / "config" / "app_config.toml"
VARIANT_SWEEP_PATH = PACKAGE_DIR / "config" / "variant_sweep.json"


def load_app_config(config_path: Union[str, Path] = APP_CONFIG_PATH) -> dict:
    config_path = Path(config_path)
    if not config_path.is_file():
        raise FileNotFoundError(f"Error! Config file '{config_path}' does not exist!")
    with open(config_path, 'rb') as f:
        return tomllib.load(f)


def load_variant_sweep(sweep_path: Union[str, Path] = VARIANT_SWEEP_PATH) -> dict:
    sweep_path = Path(sweep_path)
    if not sweep_path.is_file():
        raise FileNotFoundError(f"Error! Variant sweep file '{sweep_path}' does not exist!")
    with open(sweep_path, 'r', encoding='utf-8') as f:
        return json.load(f)


def ms_ssim_config(app_config: Mapping[str, Any]) -> MsSsimConfig:
    section = app_config.get("ssim", {})
    return MsSsimConfig(
        max_scales=section.get("max_scales", 5),
        weights=tuple(section.get("weights", MsSsimConfig().weights)),
        ssim=SsimConfig(
            window_side=section.get("window_side", 11),
            window_sigma=section.get("window_sigma", 1.5),
            k1=section.get("k1", 0.01),
            k2=section.get("k2", 0.03),
            dynamic_range=section.get("dynamic_range", 255.0)
        )
    )


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"'{text}' is not a boolean")


def _parse_int_list(text: str) -> tuple[int, ...]:
    values = tuple(int(part) for part in text.split(',') if part.strip())
    if not values:
        raise ValueError("empty list")
    return values


def _parse_str_list(text: str) -> tuple[str, ...]:
    values = tuple(part.strip() for part in text.split(',') if part.strip())
    if not values:
        raise ValueError("empty list")
    return values


@dataclass(frozen=True)
class ExperimentSettings:
    """Every key an experiment file may set."""

    seed: int = 0
    k_modes: int = 4
    side: int = 16
    n: int = 400
    blob_sigma: float = 2.0
    band_low: float = 20.0
    band_high: float = 80.0
    noise_sigma: float = 2.0
    majority_ratio: float = 3875 / 1340
    test_fraction: float = 0.25
    epochs: int = 200
    latent_dim: int = 100
    batch_sizes: tuple[int, ...] = (134,)
    variants: tuple[str, ...] = ("none", "aiin:8x8:50")
    classifier_epochs: int = 100
    classifier_hidden: int = 64
    geometric: bool = True
    baseline: bool = False
    snapshot_every: int = 0
    output: str = "output/experiments/rows.csv"

    @classmethod
    def from_app_config(cls, app_config: Mapping[str, Any]) -> "ExperimentSettings":
        core = app_config.get("core", {})
        toy = app_config.get("toy_data", {})
        gan = app_config.get("gan", {})
        classifier = app_config.get("classifier", {})
        defaults = cls()
        return replace(
            defaults,
            seed=core.get("seed", defaults.seed),
            k_modes=toy.get("k_modes", defaults.k_modes),
            side=toy.get("side", defaults.side),
            n=toy.get("n", defaults.n),
            blob_sigma=toy.get("blob_sigma", defaults.blob_sigma),
            band_low=toy.get("band_low", defaults.band_low),
            band_high=toy.get("band_high", defaults.band_high),
            noise_sigma=toy.get("noise_sigma", defaults.noise_sigma),
            majority_ratio=toy.get("majority_ratio", defaults.majority_ratio),
            test_fraction=toy.get("test_fraction", defaults.test_fraction),
            epochs=gan.get("epochs", defaults.epochs),
            latent_dim=gan.get("latent_dim", defaults.latent_dim),
            batch_sizes=tuple(gan.get("batch_sizes", defaults.batch_sizes)),
            snapshot_every=gan.get("snapshot_every", defaults.snapshot_every),
            classifier_epochs=classifier.get("epochs", defaults.classifier_epochs),
            classifier_hidden=classifier.get("hidden", defaults.classifier_hidden),
            geometric=classifier.get("geometric", defaults.geometric)
        )

    def with_values(self, values: Mapping[str, str], source: str = "overrides") -> "ExperimentSettings":
        """
        Apply textual key=value settings.

        Raises:
            UsageError: Unknown key or unparsable value
        """
        parsers = {
            int: int,
            float: float,
            bool: _parse_bool,
            str: str.strip,
            tuple[int, ...]: _parse_int_list,
            tuple[str, ...]: _parse_str_list
        }
        types = {f.name: f.type for f in fields(self)}
        updates = {}
        for key, text in values.items():
            if key not in types:
                raise UsageError(f"Error! Unknown experiment key '{key}' in {source}.")
            try:
                updates[key] = parsers[types[key]](text)
            except ValueError as e:
                raise UsageError(f"Error! Bad value for '{key}' in {source}: {e}") from e
        return replace(self, **updates)

    def resolved_variants(self, sweep_path: Union[str, Path] = VARIANT_SWEEP_PATH) -> list[Variant]:
        """Variant list crossed with batch sizes; 'full' expands to the studied grid."""
        variants = list(self.variants)
        batch_sizes = list(self.batch_sizes)
        if variants == ["full"]:
            sweep = load_variant_sweep(sweep_path)
            variants = sweep["variants"]
            batch_sizes = sweep["batch_sizes"]
            logger.info("Expanded 'full' to %d variants x %d batch sizes", len(variants), len(batch_sizes))
        return cross_variants(variants, batch_sizes)

    def to_plan(self, app_config: Optional[Mapping[str, Any]] = None) -> ExperimentPlan:
        app_config = app_config or {}
        core = app_config.get("core", {})
        gan = app_config.get("gan", {})
        classifier = app_config.get("classifier", {})
        progress = core.get("progress", False)

        return ExperimentPlan(
            toy=ToyDatasetSpec(
                k_modes=self.k_modes,
                side=self.side,
                blob_sigma=self.blob_sigma,
                intensity_band=(self.band_low, self.band_high),
                noise_sigma=self.noise_sigma,
                n=self.n
            ),
            gan=GanConfig(
                latent_dim=self.latent_dim,
                image_side=self.side,
                gen_hidden=tuple(gan.get("gen_hidden", GanConfig.gen_hidden)),
                disc_hidden=tuple(gan.get("disc_hidden", GanConfig.disc_hidden)),
                batch_size=self.batch_sizes[0],
                epochs=self.epochs,
                seed=self.seed,
                lr=gan.get("lr", GanConfig.lr),
                beta1=gan.get("beta1", GanConfig.beta1),
                init_std=gan.get("init_std", GanConfig.init_std),
                snapshot_every=self.snapshot_every,
                progress=progress
            ),
            classifier=ClassifierConfig(
                hidden=self.classifier_hidden,
                epochs=self.classifier_epochs,
                lr=classifier.get("lr", ClassifierConfig.lr),
                beta1=classifier.get("beta1", ClassifierConfig.beta1),
                batch_size=classifier.get("batch_size", ClassifierConfig.batch_size),
                threshold=classifier.get("threshold", ClassifierConfig.threshold),
                geometric=self.geometric,
                seed=self.seed,
                progress=progress
            ),
            seed=self.seed,
            majority_ratio=self.majority_ratio,
            test_fraction=self.test_fraction,
            msssim=ms_ssim_config(app_config),
            fid_eps=app_config.get("fid", {}).get("eps", 0.0)
        )


def parse_key_values(text: str, source: str = "<text>", known: Optional[Iterable[str]] = None) -> dict[str, str]:
    """
    Parse flat key=value lines; blank lines and '#' comments are skipped.

    Args:
        text (str): File contents
        source (str): Name used in error messages
        known (Iterable[str]): Accepted keys, any key when omitted

    Raises:
        UsageError: A line without '=', an unknown or a repeated key, naming the line
    """
    known = None if known is None else set(known)
    values = {}
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.split('#', 1)[0].strip()
        if not stripped:
            continue
        if '=' not in stripped:
            raise UsageError(f"Error! Line {line_number} of {source} is not key=value: '{line.strip()}'.")
        key, value = (part.strip() for part in stripped.split('=', 1))
        if not key:
            raise UsageError(f"Error! Line {line_number} of {source} has an empty key.")
        if known is not None and key not in known:
            raise UsageError(f"Error! Unknown experiment key '{key}' on line {line_number} of {source}.")
        if key in values:
            raise UsageError(f"Error! Key '{key}' repeated on line {line_number} of {source}.")
        values[key] = value
    return values


def load_experiment_settings(
    config_path: Union[str, Path],
    overrides: Optional[Mapping[str, str]] = None,
    app_config: Optional[Mapping[str, Any]] = None
) -> ExperimentSettings:
    """
    Settings from app defaults, then the experiment file, then overrides.

    Unknown keys in the file are reported with their line number.
    """
    config_path = Path(config_path)
    if not config_path.is_file():
        raise FileNotFoundError(f"Error! Experiment config '{config_path}' does not exist!")

    text = config_path.read_text(encoding='utf-8')
    values = parse_key_values(text, str(config_path), known=(f.name for f in fields(ExperimentSettings)))

    settings = ExperimentSettings.from_app_config(app_config or {})
    settings = settings.with_values(values, str(config_path))
    if overrides:
        settings = settings.with_values(overrides, "command-line overrides")
    return settings
