"""
Dataset manifests: headerless `path,label` CSV files whose paths are resolved
relative to the manifest's own directory.
"""
import csv
import logging
import os
from pathlib import Path
from typing import NamedTuple, Optional, Sequence, Union

from aiin_gan_evaluator.errors import ManifestError
from aiin_gan_evaluator.eval_harness import LabeledDataset
from aiin_gan_evaluator.image_codec import Image, load_image, save_image

logger = logging.getLogger(__name__)


class ManifestEntry(NamedTuple):
    path: Path
    label: Optional[int]


def read_manifest(manifest_path: Union[str, Path], require_labels: bool = False) -> list[ManifestEntry]:
    """
    Read a manifest.

    The label column is optional for image-only commands (msssim, fid,
    features); pass require_labels for classifier input.

    Raises:
        FileNotFoundError: Missing manifest
        ManifestError: Empty manifest, bad label or extra columns, naming the line
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise FileNotFoundError(f"Error! Manifest '{manifest_path}' does not exist!")

    base = manifest_path.parent
    entries = []
    with open(manifest_path, 'r', encoding='utf-8', newline='') as f:
        for line_number, row in enumerate(csv.reader(f), start=1):
            row = [cell.strip() for cell in row]
            if not row or not row[0] or row[0].startswith('#'):
                continue
            if len(row) > 2:
                raise ManifestError(
                    f"Error! Manifest '{manifest_path}' line {line_number} has {len(row)} columns, expected 'path,label'."
                )

            label = None
            if len(row) == 2 and row[1]:
                if row[1] not in ('0', '1'):
                    raise ManifestError(
                        f"Error! Manifest '{manifest_path}' line {line_number} has label '{row[1]}'; use 0 or 1."
                    )
                label = int(row[1])
            elif require_labels:
                raise ManifestError(f"Error! Manifest '{manifest_path}' line {line_number} has no label.")

            entries.append(ManifestEntry(base / row[0], label))

    if len(entries) == 0:
        raise ManifestError(f"Error! {len(entries)} records found in manifest '{manifest_path}'!")
    logger.info("Found %d entries in %s", len(entries), manifest_path)
    return entries


def load_manifest_images(manifest_path: Union[str, Path]) -> list[Image]:
    return [load_image(entry.path) for entry in read_manifest(manifest_path)]


def load_labeled_dataset(manifest_path: Union[str, Path]) -> LabeledDataset:
    entries = read_manifest(manifest_path, require_labels=True)
    return LabeledDataset([load_image(entry.path) for entry in entries], [entry.label for entry in entries])


def write_manifest(entries: Sequence[ManifestEntry], manifest_path: Union[str, Path]) -> Path:
    """Write entries with paths relative to the manifest directory where possible."""
    manifest_path = Path(manifest_path)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    base = manifest_path.parent.resolve()

    with open(manifest_path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        for entry in entries:
            path = Path(entry.path)
            try:
                relative = Path(os.path.relpath(path.resolve(), base))
            except ValueError:
                relative = path
            row = [relative.as_posix()]
            if entry.label is not None:
                row.append(str(entry.label))
            writer.writerow(row)
    return manifest_path


def save_image_set(
    images: Sequence[Image],
    folder: Union[str, Path],
    prefix: str,
    label: Optional[int] = None,
    suffix: str = '.pgm'
) -> list[ManifestEntry]:
    """Write images as <prefix>_<index><suffix> and return their manifest entries."""
    folder = Path(folder)
    width = max(4, len(str(max(len(images) - 1, 0))))
    entries = []
    for index, img in enumerate(images):
        path = save_image(img, folder / f"{prefix}_{index:0{width}d}{suffix}")
        entries.append(ManifestEntry(path, label))
    return entries
