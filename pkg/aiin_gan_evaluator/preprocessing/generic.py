from abc import (
    ABC,
    abstractmethod
)
from typing import Iterable, Optional
from aiin_gan_evaluator.image_codec import Image


# abstract base class used to set attributes common to all preprocessing techniques
class ImagePreprocessor(ABC):
    # tag written to the augmentation column of experiment rows
    tag: str = ""

    @property
    def window(self) -> Optional[str]:
        """Window label ('8x8', '3x3'), or None when the technique has no window."""
        return None

    @property
    def threshold(self) -> Optional[int]:
        return None

    @abstractmethod
    def apply(self, img: Image) -> Image:
        pass

    def apply_all(self, images: Iterable[Image]) -> list[Image]:
        return [self.apply(img) for img in images]

    def describe(self) -> str:
        parts = [self.tag]
        if self.window:
            parts.append(self.window)
        if self.threshold is not None:
            parts.append(str(self.threshold))
        return ':'.join(parts)


class NoPreprocessing(ImagePreprocessor):
    """Un-normalized variant: images pass through untouched."""

    tag = "none"

    def apply(self, img: Image) -> Image:
        return img
