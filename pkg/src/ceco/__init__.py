"""Combined energy and comfort MPC for a vehicle A/C system.

Modules:

* :mod:`ceco.cabin` - control-oriented thermal model, power models, surrogate plant
* :mod:`ceco.comfort` - original and cabin PMV, sensation labels, comfort bounds
* :mod:`ceco.nlp` - small box/inequality NLP solver
* :mod:`ceco.mpc` - CECO-E, CECO-C, CECO-IOCH controllers and the PI baseline
* :mod:`ceco.sim` - drive cycles, closed loop, metrics, controller comparison
* :mod:`ceco.config`, :mod:`ceco.cli`, :mod:`ceco.plotting` - scenario files and front end
"""

from .cabin import ACParams, ACState, ControlInput, ExogenousSample, Plant, PlantParams
from .comfort import ComfortBoundsSpec, ComfortEnv, OccupantParams
from .mpc import ControllerKind, MpcConfig, PreviewWindow
from .nlp import NlpProblem, NlpSolution, SolverOptions, solve
from .sim import DriveCycle, SimTrace, compare_controllers, load_cycle, run_closed_loop, synthetic_sc03

__version__ = "0.1.0"

__all__ = [
    "ACParams", "ACState", "ControlInput", "ExogenousSample", "Plant", "PlantParams",
    "ComfortBoundsSpec", "ComfortEnv", "OccupantParams",
    "ControllerKind", "MpcConfig", "PreviewWindow",
    "NlpProblem", "NlpSolution", "SolverOptions", "solve",
    "DriveCycle", "SimTrace", "compare_controllers", "load_cycle", "run_closed_loop", "synthetic_sc03",
]
