import argparse
import logging
import sys
from pathlib import Path

from aiin_gan_evaluator.errors import EvaluatorError, UsageError
from aiin_gan_evaluator.eval_harness import ClassifierConfig, evaluate_classifier, train_classifier
from aiin_gan_evaluator.experiment_runner import ExperimentRunner, rank_variants
from aiin_gan_evaluator.frechet import export_features, extract_features, fid_from_features, import_features
from aiin_gan_evaluator.gan_trainer import GanConfig, generate, train_gan
from aiin_gan_evaluator.image_codec import load_image, save_image
from aiin_gan_evaluator.manifest import (
    ManifestEntry,
    load_labeled_dataset,
    load_manifest_images,
    read_manifest,
    save_image_set,
    write_manifest
)
from aiin_gan_evaluator.neural.checkpoint import load_checkpoint, save_checkpoint
from aiin_gan_evaluator.preprocessing import build_preprocessor
from aiin_gan_evaluator.report_generator import ReportGenerator, ReportTable, format_text_table, rank_table
from aiin_gan_evaluator.settings import (
    PACKAGE_DIR,
    APP_CONFIG_PATH,
    ExperimentSettings,
    load_app_config,
    load_experiment_settings,
    ms_ssim_config,
    parse_key_values
)
from aiin_gan_evaluator.similarity import collapse_delta, mean_msssim, msssim, sample_pairs
from aiin_gan_evaluator.toy_data import ToyDatasetSpec, majority_counterpart, make_toy_dataset

logger = logging.getLogger("aiin_gan_evaluator")


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"Error! {message}")


def parse_arguments(argv=None):
    parser = CliParser(
        prog="aiin-gan-evaluator",
        description="AIIN GAN evaluator - preprocessing, mode-collapse metrics, GAN training and utility evaluation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Exit codes:
  0  success
  1  usage error (bad flag, config key or parameter)
  2  data or I/O error
  3  numeric failure (non-PSD covariance, no convergence, divergence)
        """
    )
    parser.add_argument('--config', default=str(APP_CONFIG_PATH),
                        help='Application config TOML (defaults to the packaged one)')
    parser.add_argument('--verbose', '-v', action='store_true', help='Debug logging')
    parser.add_argument('--quiet', '-q', action='store_true', help='Warnings and errors only')
    parser.add_argument('--progress', action='store_true', help='Show training progress bars')

    commands = parser.add_subparsers(dest='command', required=True)

    normalize = commands.add_parser('normalize', help='Preprocess an image or every image of a manifest')
    normalize.add_argument('technique', choices=['aiin', 'gaussian', 'median', 'none'])
    normalize.add_argument('input', help='Image file, or a manifest CSV')
    normalize.add_argument('output', help='Output image file, or output folder for a manifest')
    normalize.add_argument('--grid', default='8x8', help='AIIN tile grid WxH')
    normalize.add_argument('--threshold', type=int, default=50, help='AIIN contrast threshold')
    normalize.add_argument('--ksize', type=int, default=3, help='Gaussian/median kernel size')

    ms_ssim = commands.add_parser('msssim', help='Mean MS-SSIM of two image sets and the collapse delta')
    ms_ssim.add_argument('real', help='Real image manifest')
    ms_ssim.add_argument('fake', help='Synthetic image manifest')
    ms_ssim.add_argument('--pairs', type=int, default=None, help='Pairs sampled per set')
    ms_ssim.add_argument('--seed', type=int, default=None)

    fid_cmd = commands.add_parser('fid', help='Frechet distance between two image sets or feature CSVs')
    fid_cmd.add_argument('real')
    fid_cmd.add_argument('fake')
    fid_cmd.add_argument('--feature-csv', action='store_true', help='Inputs are feature CSVs, not manifests')
    fid_cmd.add_argument('--eps', type=float, default=None, help='Covariance ridge regularisation')

    features = commands.add_parser('features', help='Extract 768-dim patch statistics to a feature CSV')
    features.add_argument('manifest')
    features.add_argument('output')

    toygen = commands.add_parser('toygen', help='Write a toy dataset as PGM files plus a manifest')
    toygen.add_argument('output', help='Output folder')
    toygen.add_argument('--k-modes', type=int, default=None)
    toygen.add_argument('--n', type=int, default=None)
    toygen.add_argument('--side', type=int, default=None)
    toygen.add_argument('--seed', type=int, default=None)
    toygen.add_argument('--majority', action='store_true', help='Also write the majority class (label 1)')

    train = commands.add_parser('train-gan', help='Train a generator on a manifest')
    train.add_argument('manifest')
    train.add_argument('model', help='Generator checkpoint to write')
    train.add_argument('--epochs', type=int, default=None)
    train.add_argument('--batch-size', type=int, default=None)
    train.add_argument('--seed', type=int, default=None)
    train.add_argument('--history', default=None, help='Write the loss history CSV here')
    train.add_argument('--discriminator', default=None, help='Also checkpoint the discriminator here')

    gen = commands.add_parser('generate', help='Sample synthetic images from a generator checkpoint')
    gen.add_argument('model')
    gen.add_argument('output', help='Output folder (PGM files and manifest.csv)')
    gen.add_argument('--n', type=int, default=1340)
    gen.add_argument('--seed', type=int, default=None)
    gen.add_argument('--png', action='store_true', help='Also write PNG previews')

    classify = commands.add_parser('classify', help='Train the utility classifier and score a held-out manifest')
    classify.add_argument('train', help='Labelled training manifest')
    classify.add_argument('test', help='Labelled test manifest')
    classify.add_argument('--epochs', type=int, default=None)
    classify.add_argument('--seed', type=int, default=None)
    classify.add_argument('--geometric', action=argparse.BooleanOptionalAction, default=None)

    experiment = commands.add_parser('experiment', help='Run a variant sweep from a key=value config file')
    experiment.add_argument('experiment_config')
    experiment.add_argument('--seed', type=int, default=None)
    experiment.add_argument('--epochs', type=int, default=None)
    experiment.add_argument('--set', action='append', default=[], metavar='KEY=VALUE',
                            help='Override one config key (repeatable)')
    experiment.add_argument('--output', default=None, help='Rows CSV path')

    report = commands.add_parser('report', help='Format an experiment rows CSV as a table and charts')
    report.add_argument('rows')
    report.add_argument('--out', default=None, help='Report folder')
    report.add_argument('--metrics', default=None, help='Comma-separated numeric columns to chart')
    report.add_argument('--augmentations', default=None, help='Comma-separated augmentation tags to chart')
    report.add_argument('--rank', type=int, default=None, metavar='K', help='Print the K most promising variants')
    report.add_argument('--png', action='store_true')
    report.add_argument('--pdf', action='store_true')

    return parser.parse_args(argv)


def configure_logging(args, app_config: dict) -> None:
    level = app_config.get('core', {}).get('log_level', 'INFO')
    if args.verbose:
        level = 'DEBUG'
    elif args.quiet:
        level = 'WARNING'
    logging.basicConfig(level=level, format='%(asctime)s - %(levelname)s - %(name)s - %(message)s')


def run_normalize(args, app_config: dict) -> int:
    spec = {
        'aiin': f"aiin:{args.grid}:{args.threshold}",
        'gaussian': f"gaussian:{args.ksize}",
        'median': f"median:{args.ksize}",
        'none': "none"
    }[args.technique]
    preprocessor = build_preprocessor(spec)

    input_path = Path(args.input)
    if input_path.suffix.lower() != '.csv':
        save_image(preprocessor.apply(load_image(input_path)), args.output)
        print(f"Wrote {args.output} ({preprocessor.describe()})")
        return 0

    output_folder = Path(args.output)
    entries = []
    for entry in read_manifest(input_path):
        out_path = save_image(preprocessor.apply(load_image(entry.path)), output_folder / f"{entry.path.stem}.pgm")
        entries.append(ManifestEntry(out_path, entry.label))
    write_manifest(entries, output_folder / "manifest.csv")
    print(f"Normalized {len(entries)} images into {output_folder} ({preprocessor.describe()})")
    return 0


def run_msssim(args, app_config: dict) -> int:
    cfg = ms_ssim_config(app_config)
    real = load_manifest_images(args.real)
    fake = load_manifest_images(args.fake)
    n_pairs = args.pairs if args.pairs is not None else app_config.get('ssim', {}).get('pairs', 670)
    seed = args.seed if args.seed is not None else app_config.get('core', {}).get('seed', 0)

    real_score = mean_msssim(real, sample_pairs(len(real), n_pairs, seed), cfg)
    fake_score = mean_msssim(fake, sample_pairs(len(fake), n_pairs, seed), cfg)
    verdict = collapse_delta(real_score, fake_score)

    print(f"real_msssim={real_score!r}")
    print(f"fake_msssim={fake_score!r}")
    print(f"delta={verdict.delta!r}")
    print(f"collapsed={str(verdict.collapsed).lower()}")
    if len(real) == len(fake):
        paired = sum(msssim(a, b, cfg) for a, b in zip(real, fake)) / len(real)
        print(f"paired_msssim={paired!r}")
    return 0


def run_fid(args, app_config: dict) -> int:
    eps = args.eps if args.eps is not None else app_config.get('fid', {}).get('eps', 0.0)
    method = app_config.get('fid', {}).get('eigen_method', 'auto')
    if args.feature_csv:
        real = import_features(Path(args.real).read_text(encoding='utf-8'))
        fake = import_features(Path(args.fake).read_text(encoding='utf-8'))
    else:
        real = extract_features(load_manifest_images(args.real))
        fake = extract_features(load_manifest_images(args.fake))
    print(f"fid={fid_from_features(real, fake, eps=eps, method=method)!r}")
    return 0


def run_features(args, app_config: dict) -> int:
    matrix = extract_features(load_manifest_images(args.manifest))
    output = Path(args.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(export_features(matrix), encoding='utf-8')
    print(f"Wrote {matrix.n} x {matrix.d} features to {output}")
    return 0


def run_toygen(args, app_config: dict) -> int:
    toy = app_config.get('toy_data', {})
    spec = ToyDatasetSpec(
        k_modes=args.k_modes if args.k_modes is not None else toy.get('k_modes', 4),
        side=args.side if args.side is not None else toy.get('side', 16),
        blob_sigma=toy.get('blob_sigma', 2.0),
        intensity_band=(toy.get('band_low', 20.0), toy.get('band_high', 80.0)),
        noise_sigma=toy.get('noise_sigma', 2.0),
        n=args.n if args.n is not None else toy.get('n', 400)
    )
    seed = args.seed if args.seed is not None else app_config.get('core', {}).get('seed', 0)
    output_folder = Path(args.output)

    entries = save_image_set(make_toy_dataset(spec, seed), output_folder, "minority", label=0)
    if args.majority:
        majority_spec = majority_counterpart(spec, toy.get('majority_ratio', 3875 / 1340))
        entries += save_image_set(make_toy_dataset(majority_spec, seed + 1), output_folder, "majority", label=1)

    manifest_path = write_manifest(entries, output_folder / "manifest.csv")
    print(f"Wrote {len(entries)} toy images and {manifest_path}")
    return 0


def run_train_gan(args, app_config: dict) -> int:
    gan = app_config.get('gan', {})
    images = load_manifest_images(args.manifest)
    cfg = GanConfig(
        latent_dim=gan.get('latent_dim', 100),
        image_side=images[0].width,
        gen_hidden=tuple(gan.get('gen_hidden', (256, 512))),
        disc_hidden=tuple(gan.get('disc_hidden', (256, 128))),
        batch_size=args.batch_size if args.batch_size is not None else gan.get('batch_sizes', [134])[0],
        epochs=args.epochs if args.epochs is not None else gan.get('epochs', 200),
        seed=args.seed if args.seed is not None else app_config.get('core', {}).get('seed', 0),
        lr=gan.get('lr', 0.0002),
        beta1=gan.get('beta1', 0.5),
        init_std=gan.get('init_std', 0.02),
        snapshot_every=gan.get('snapshot_every', 0),
        progress=args.progress or app_config.get('core', {}).get('progress', False)
    )
    result = train_gan(cfg, images)

    save_checkpoint(result.generator, args.model)
    if args.discriminator:
        save_checkpoint(result.discriminator, args.discriminator)
    if args.history:
        result.history.save_csv(args.history)
    final = f", final d_loss {result.history.d_loss[-1]:.4f}, g_loss {result.history.g_loss[-1]:.4f}" \
        if len(result.history) else ""
    print(f"Trained {cfg.epochs} epochs on {len(images)} images{final}; generator saved to {args.model}")
    return 0


def run_generate(args, app_config: dict) -> int:
    generator = load_checkpoint(args.model)
    seed = args.seed if args.seed is not None else app_config.get('core', {}).get('seed', 0)
    images = generate(generator, args.n, seed)

    output_folder = Path(args.output)
    entries = save_image_set(images, output_folder, "synthetic", label=0)
    write_manifest(entries, output_folder / "manifest.csv")
    if args.png:
        save_image_set(images, output_folder / "preview", "synthetic", suffix='.png')
    print(f"Generated {len(images)} images into {output_folder}")
    return 0


def run_classify(args, app_config: dict) -> int:
    section = app_config.get('classifier', {})
    cfg = ClassifierConfig(
        hidden=section.get('hidden', 64),
        epochs=args.epochs if args.epochs is not None else section.get('epochs', 100),
        lr=section.get('lr', 0.001),
        beta1=section.get('beta1', 0.9),
        batch_size=section.get('batch_size', 32),
        threshold=section.get('threshold', 0.5),
        geometric=args.geometric if args.geometric is not None else section.get('geometric', False),
        seed=args.seed if args.seed is not None else app_config.get('core', {}).get('seed', 0),
        progress=args.progress or app_config.get('core', {}).get('progress', False)
    )
    model = train_classifier(load_labeled_dataset(args.train), cfg)
    metrics = evaluate_classifier(model, load_labeled_dataset(args.test), cfg.threshold)
    for name in ('accuracy', 'precision', 'recall', 'specificity'):
        print(f"{name}={getattr(metrics, name)!r}")
    if metrics.degenerate:
        print("degenerate=true")
    return 0


def run_experiment_command(args, app_config: dict) -> int:
    overrides = {}
    for item in args.set:
        overrides.update(parse_key_values(item, "--set"))
    if args.seed is not None:
        overrides['seed'] = str(args.seed)
    if args.epochs is not None:
        overrides['epochs'] = str(args.epochs)
    if args.output is not None:
        overrides['output'] = args.output
    if args.progress:
        app_config = {**app_config, 'core': {**app_config.get('core', {}), 'progress': True}}

    settings: ExperimentSettings = load_experiment_settings(args.experiment_config, overrides, app_config)
    variants = settings.resolved_variants()
    output = Path(settings.output)

    runner = ExperimentRunner(settings.to_plan(app_config), output_folder=output.parent)
    table = ReportTable(tuple(runner.sweep(variants, include_baseline=settings.baseline)))
    table.write(output)

    print(format_text_table(table), end='')
    print(f"Wrote {len(table)} rows to {output}")
    return 0


def run_report(args, app_config: dict) -> int:
    section = app_config.get('report', {})
    table = ReportTable.read(args.rows)
    print(format_text_table(table), end='')

    if args.rank is not None:
        print(rank_table(rank_variants(table.rows, args.rank)), end='')

    metrics = args.metrics.split(',') if args.metrics else section.get('metrics', ['msssim_delta', 'fid'])
    augmentations = args.augmentations.split(',') if args.augmentations else None
    output_folder = Path(args.out) if args.out else Path(args.rows).parent / "report"

    generator = ReportGenerator(
        template_path=PACKAGE_DIR / section.get('template', 'templates/report_template.html'),
        dpi=section.get('png_dpi', 96),
        width=section.get('chart_width', 640),
        height=section.get('chart_height', 360)
    )
    written = generator.write_report(
        table, output_folder, [m.strip() for m in metrics], augmentations, png=args.png, pdf=args.pdf
    )
    print(f"Wrote {len(written)} report files to {output_folder}")
    return 0


COMMANDS = {
    'normalize': run_normalize,
    'msssim': run_msssim,
    'fid': run_fid,
    'features': run_features,
    'toygen': run_toygen,
    'train-gan': run_train_gan,
    'generate': run_generate,
    'classify': run_classify,
    'experiment': run_experiment_command,
    'report': run_report,
}


def main(argv=None) -> int:
    try:
        args = parse_arguments(argv)
        app_config = load_app_config(args.config)
        configure_logging(args, app_config)
        return COMMANDS[args.command](args, app_config)
    except EvaluatorError as e:
        logger.debug("Command failed", exc_info=True)
        print(str(e), file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"Error! {e}" if not str(e).startswith("Error!") else str(e), file=sys.stderr)
        return 2


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
