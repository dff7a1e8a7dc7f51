"""FMCW mmWave radar 3D-imaging toolkit.

Simulates the raw multi-receiver IF samples a radar would record when facing
a scene of point reflectors, reconstructs 3D point clouds from such cubes via
two processing chains and four angle estimators (with an optional
super-resolution resampling stage), and scores the reconstructions against
ground truth.
"""

from .dsp import CfarParams
from .kernels import KERNEL_BACKEND
from .metrics import MetricsReport, metrics
from .pipeline import PipelineOptions, SrpcParams, run_pipeline
from .pointcloud import PointCloud
from .radar import (AntennaLayout, ChirpConfig, DerivedParams, baseline_chirp,
                    derive_params, layout_preset)
from .scene import Scene, load_mesh, sample_surface, synth_scene
from .simulate import NoiseSpec, RawDataCube, read_cube, simulate_frame, write_cube

__version__ = "0.1.0"

__all__ = [
    "AntennaLayout",
    "CfarParams",
    "ChirpConfig",
    "DerivedParams",
    "KERNEL_BACKEND",
    "MetricsReport",
    "NoiseSpec",
    "PipelineOptions",
    "PointCloud",
    "RawDataCube",
    "Scene",
    "SrpcParams",
    "baseline_chirp",
    "derive_params",
    "layout_preset",
    "load_mesh",
    "metrics",
    "read_cube",
    "run_pipeline",
    "sample_surface",
    "simulate_frame",
    "synth_scene",
    "write_cube",
    "__version__",
]
