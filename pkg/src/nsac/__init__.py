"""Pseudo-spectral simulator and verification harness for compressible NSAC."""

from .errors import *  # noqa: F401,F403
from .grid import Grid, make_grid, random_field
from .model import CONSERVATIVE, PERTURBATION, ModelParams, State

__version__ = "0.1.0"
