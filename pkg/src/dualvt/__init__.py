"""Dual-stream camera-to-BEV view transformation toolkit.

Two complementary view transforms over a bird's-eye-view grid: a
3D-to-2D stream that projects multi-height BEV anchor points into the
cameras (with a lookup-table accelerated path), and a 2D-to-3D
lift-and-pool stream.  Both weight correspondences by per-pixel depth
distributions and foreground masks; a fusion head blends the streams
and gates the result by a predicted occupancy probability.
"""

from .geometry import BevGridSpec, CameraRig, HeightSet, make_height_samples
from .height_stream import ht_transform_fast, ht_transform_naive, precompute_ht_table
from .lift_stream import lss_pool, lss_pool_reference, precompute_lss_table
from .fusion import run_pipeline, make_seeded_weights
from .sampling import DepthBinSpec
from .synth import SceneSpec, generate_scene, standard_scene_spec
from .tensors import tensor_read, tensor_write

__all__ = [
    "BevGridSpec",
    "CameraRig",
    "DepthBinSpec",
    "HeightSet",
    "SceneSpec",
    "generate_scene",
    "ht_transform_fast",
    "ht_transform_naive",
    "lss_pool",
    "lss_pool_reference",
    "make_height_samples",
    "make_seeded_weights",
    "precompute_ht_table",
    "precompute_lss_table",
    "run_pipeline",
    "standard_scene_spec",
    "tensor_read",
    "tensor_write",
]

__version__ = "0.1.0"
