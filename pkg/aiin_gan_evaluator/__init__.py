"""
AIIN GAN evaluator: adaptive input-image normalization, mode-collapse metrics,
a desk-scale GAN trainer and a downstream classifier harness.
"""

__version__ = "0.1.0"
