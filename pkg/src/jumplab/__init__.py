"""jumplab: stochastic quantum-jump unravelings of few-level atom dynamics,
with a lattice random-walk analogue and eigenpath continuation."""

from . import detect, ipt, lindblad, linalg, model, nodetect, randwalk, twolevel
from ._kernels import NUMBA_ENABLED
from .lindblad import ensemble_evolve, entropy, generator_apply, generator_split
from .model import AtomModel, build_model, check_connectivity, ladder_model, two_level_model
from .rng import trajectory_stream
from .sampling import EnsembleResult, JumpEvent, Trajectory, run_ensemble

__all__ = [
    "AtomModel",
    "EnsembleResult",
    "JumpEvent",
    "NUMBA_ENABLED",
    "Trajectory",
    "build_model",
    "check_connectivity",
    "detect",
    "ensemble_evolve",
    "entropy",
    "generator_apply",
    "generator_split",
    "ipt",
    "ladder_model",
    "lindblad",
    "linalg",
    "model",
    "nodetect",
    "randwalk",
    "run_ensemble",
    "trajectory_stream",
    "twolevel",
    "two_level_model",
]

__version__ = "0.1.0"
