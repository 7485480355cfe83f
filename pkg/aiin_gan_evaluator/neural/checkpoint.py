"""
Versioned binary model checkpoints.

Layout (little-endian): magic b"DGMLP1", uint32 layer count, then per layer
uint32 in_dim, uint32 out_dim, uint8 activation tag, the float64 weight
matrix (out x in, row-major) and the float64 bias vector.
"""
import struct
from pathlib import Path
from typing import Union

import numpy as np

from aiin_gan_evaluator.errors import DataError
from aiin_gan_evaluator.neural.mlp import ACTIVATIONS, Layer, MlpModel

MAGIC = b"DGMLP1"
_COUNT = struct.Struct('<I')
_LAYER_HEADER = struct.Struct('<IIB')


def model_to_bytes(model: MlpModel) -> bytes:
    chunks = [MAGIC, _COUNT.pack(len(model.layers))]
    for layer in model.layers:
        chunks.append(_LAYER_HEADER.pack(layer.in_dim, layer.out_dim, ACTIVATIONS.index(layer.activation)))
        chunks.append(np.ascontiguousarray(layer.weight, dtype='<f8').tobytes())
        chunks.append(np.ascontiguousarray(layer.bias, dtype='<f8').tobytes())
    return b''.join(chunks)


def model_from_bytes(payload: bytes) -> MlpModel:
    if payload[:len(MAGIC)] != MAGIC:
        raise DataError("Error! Not a model checkpoint (bad magic).")

    try:
        pos = len(MAGIC)
        (count,) = _COUNT.unpack_from(payload, pos)
        pos += _COUNT.size
        layers = []
        for _ in range(count):
            in_dim, out_dim, tag = _LAYER_HEADER.unpack_from(payload, pos)
            pos += _LAYER_HEADER.size
            if tag >= len(ACTIVATIONS):
                raise DataError(f"Error! Unknown activation tag {tag} in checkpoint.")

            n_weights = in_dim * out_dim
            weight = np.frombuffer(payload, dtype='<f8', count=n_weights, offset=pos)
            pos += 8 * n_weights
            bias = np.frombuffer(payload, dtype='<f8', count=out_dim, offset=pos)
            pos += 8 * out_dim
            layers.append(Layer(
                weight.reshape(out_dim, in_dim).astype(np.float64),
                bias.astype(np.float64),
                ACTIVATIONS[tag]
            ))
    except (struct.error, ValueError) as e:
        if isinstance(e, DataError):
            raise
        raise DataError(f"Error! Checkpoint is truncated or corrupt: {e}") from e

    if pos != len(payload):
        raise DataError(f"Error! Checkpoint has {len(payload) - pos} trailing bytes.")
    return MlpModel(layers)


def save_checkpoint(model: MlpModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(model_to_bytes(model))
    return path


def load_checkpoint(path: Union[str, Path]) -> MlpModel:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Error! Checkpoint '{path}' does not exist!")
    return model_from_bytes(path.read_bytes())
