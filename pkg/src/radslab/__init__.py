"""radslab: grey non-equilibrium radiative transfer in 1D slabs.

Moving-mesh discontinuous-Galerkin discrete-ordinates solver with an
uncollided source treatment, plus semi-analytic S2 reference solutions.
"""

__version__ = "0.1.0"

from .problem import (EquationOfState, PhysicalConstants, ProblemConfig,
                      nondimensionalize, source_eval, temperature_from_energy)
from .dg_solver import SolutionTensor, integrate, reconstruct, total_energy

__all__ = [
    "EquationOfState", "PhysicalConstants", "ProblemConfig",
    "SolutionTensor", "integrate", "nondimensionalize", "reconstruct",
    "source_eval", "temperature_from_energy", "total_energy", "__version__",
]
