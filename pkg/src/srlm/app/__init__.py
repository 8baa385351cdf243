"""Configuration, datasets, experiment drivers and the command-line interface."""

from .config import ExperimentConfig
from .datasets import SpiralDataset, SpiralParams, generate_spirals, load_landmarks, two_blobs
from .experiments import (
    DeformationGrid,
    DynamicsDiagnostic,
    run_match,
    run_sigma_sweep,
    verify_dynamics,
    warp_grid,
)
