"""Anisotropic Besov and Fourier-Besov spaces over mixed-Morrey norms on the
periodic grid, with a small-data Navier-Stokes Picard solver."""

from .grid import Field, Grid, VectorField, make_grid
from .lpdecomp import DyadicPartition, decompose, partition, reconstruct
from .norms import (FOURIER_BESOV, PHYSICAL_BESOV, NormReport, ParameterError, SpaceParams,
                    besov_norm, mixed_lebesgue_norm, mixed_morrey_norm, z_norm)
from .solver import SolverConfig, picard_solve

__version__ = "0.1.0"

__all__ = [
    "Field", "Grid", "VectorField", "make_grid",
    "DyadicPartition", "decompose", "partition", "reconstruct",
    "FOURIER_BESOV", "PHYSICAL_BESOV", "NormReport", "ParameterError", "SpaceParams",
    "besov_norm", "mixed_lebesgue_norm", "mixed_morrey_norm", "z_norm",
    "SolverConfig", "picard_solve",
]
