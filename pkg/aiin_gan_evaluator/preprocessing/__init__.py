from aiin_gan_evaluator.errors import ParameterError
from aiin_gan_evaluator.preprocessing.generic import ImagePreprocessor, NoPreprocessing
from aiin_gan_evaluator.preprocessing.aiin import AiinNormalizer, WindowGrid
from aiin_gan_evaluator.preprocessing.filters import GaussianNormalizer, MedianNormalizer


def build_preprocessor(spec: str) -> ImagePreprocessor:
    """
    Build a preprocessor from a variant string.

    Accepted forms: 'none', 'aiin:<W>x<H>:<threshold>', 'gaussian:<ksize>', 'median:<ksize>'.
    """
    parts = [part.strip() for part in spec.strip().lower().split(':')]
    kind = parts[0]

    try:
        if kind == 'none' and len(parts) == 1:
            return NoPreprocessing()
        if kind == 'aiin' and len(parts) == 3:
            return AiinNormalizer(WindowGrid.parse(parts[1]), int(parts[2]))
        if kind == 'gaussian' and len(parts) == 2:
            return GaussianNormalizer(int(parts[1]))
        if kind == 'median' and len(parts) == 2:
            return MedianNormalizer(int(parts[1]))
    except ValueError as e:
        raise ParameterError(f"Error! Invalid variant '{spec}': {e}") from e

    raise ParameterError(
        f"Error! Unknown variant '{spec}'. Use none, aiin:WxH:T, gaussian:K or median:K."
    )


__all__ = [
    "ImagePreprocessor",
    "NoPreprocessing",
    "AiinNormalizer",
    "WindowGrid",
    "GaussianNormalizer",
    "MedianNormalizer",
    "build_preprocessor",
]
