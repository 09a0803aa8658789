"""Uniform SPH particle generation by total-error gradient descent."""

from .kernel import KernelSpec
from .geometry import LevelSetField, sample_to_grid
from .particles import NeighborGrid, ParticleSet
from .relaxation import EnergyTrace, RelaxationConfig, relax
from .lattice import LatticeSpec, characteristic_volume, predict_pattern

__all__ = [
    "KernelSpec",
    "LevelSetField",
    "sample_to_grid",
    "NeighborGrid",
    "ParticleSet",
    "EnergyTrace",
    "RelaxationConfig",
    "relax",
    "LatticeSpec",
    "characteristic_volume",
    "predict_pattern",
]

__version__ = "0.1.0"
