"""Forward-only neural building blocks for the fusion stage.

Just enough machinery for the attention/probability heads: same-padded
stride-1 2D convolution, channel statistics, global average pooling,
activations, and seeded weight containers with BTSR-backed persistence.
No training, no normalization layers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ShapeMismatch
from .rng import Rng
from .tensors import tensor_read, tensor_write


@dataclass(frozen=True)
class Conv2dWeights:
    """Stride-1 "same" convolution weights; kernel (C_out, C_in, kh, kw)."""

    kernel: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        if self.kernel.ndim != 4:
            raise ConfigError("kernel must be (C_out, C_in, kh, kw)")
        _, _, kh, kw = self.kernel.shape
        if kh % 2 == 0 or kw % 2 == 0:
            raise ConfigError("kernel extents must be odd")
        if self.bias.shape != (self.kernel.shape[0],):
            raise ConfigError("bias length must equal C_out")


def conv2d(x: np.ndarray, w: Conv2dWeights) -> np.ndarray:
    """Zero-padded cross-correlation preserving spatial size."""
    c_out, c_in, kh, kw = w.kernel.shape
    if x.shape[0] != c_in:
        raise ShapeMismatch(f"input has {x.shape[0]} channels, kernel expects {c_in}")
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw)))
    windows = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(1, 2))
    out = np.einsum("oikl,ihwkl->ohw", w.kernel, windows, optimize=False)
    return (out + w.bias[:, None, None]).astype(np.float32)


def channel_stats(x: np.ndarray) -> np.ndarray:
    """(2, H, W): per-position mean and max over channels."""
    return np.stack([x.mean(axis=0), x.max(axis=0)]).astype(np.float32)


def global_avg_pool(x: np.ndarray) -> np.ndarray:
    """(C, 1, 1) spatial mean per channel."""
    return x.mean(axis=(1, 2), keepdims=True).astype(np.float32)


def sigmoid(x: np.ndarray) -> np.ndarray:
    x64 = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x64)
    pos = x64 >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x64[pos]))
    ex = np.exp(x64[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out.astype(np.float32)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0).astype(np.float32)


class WeightBundle:
    """Named Conv2dWeights with provenance, persisted as a manifest + BTSR files."""

    def __init__(self, layers: dict, provenance: str):
        self.layers = dict(layers)
        self.provenance = provenance

    def __getitem__(self, name: str) -> Conv2dWeights:
        try:
            return self.layers[name]
        except KeyError:
            raise ConfigError(f"weight bundle is missing layer {name!r}") from None

    @classmethod
    def seeded(cls, seed: int, layer_shapes: dict) -> "WeightBundle":
        """Initialize uniformly in +-1/sqrt(fan_in), one child stream per layer."""
        root = Rng(seed)
        layers = {}
        for i, name in enumerate(sorted(layer_shapes)):
            c_out, c_in, kh, kw = layer_shapes[name]
            bound = 1.0 / np.sqrt(c_in * kh * kw)
            sub = root.child(i)
            layers[name] = Conv2dWeights(
                kernel=sub.uniform((c_out, c_in, kh, kw), -bound, bound),
                bias=sub.uniform((c_out,), -bound, bound),
            )
        return cls(layers, provenance=f"seeded({seed})")

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        manifest = {"provenance": self.provenance, "layers": {}}
        for name, w in sorted(self.layers.items()):
            kfile, bfile = f"{name}.kernel.btsr", f"{name}.bias.btsr"
            tensor_write(w.kernel, directory / kfile)
            tensor_write(w.bias, directory / bfile)
            manifest["layers"][name] = {"kernel": kfile, "bias": bfile}
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=2))

    @classmethod
    def load(cls, directory) -> "WeightBundle":
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text())
        layers = {
            name: Conv2dWeights(
                kernel=tensor_read(directory / entry["kernel"]),
                bias=tensor_read(directory / entry["bias"]),
            )
            for name, entry in manifest["layers"].items()
        }
        return cls(layers, provenance=f"loaded({directory})")
