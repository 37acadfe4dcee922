"""Simulation and calculation toolkit for continuous spontaneous localization.

Modules:

* :mod:`~cslkit.core` -- states, operators, parameters and collapse operator sets
* :mod:`~cslkit.dynamics` -- stochastic trajectories and ensembles
* :mod:`~cslkit.master` -- density-matrix evolution, energy bookkeeping, energy spectrum
* :mod:`~cslkit.lattice` -- smeared mass-density operators on a lattice
* :mod:`~cslkit.predictions` -- closed-form experimental estimates (CGS)
* :mod:`~cslkit.tails` -- possessed-value criteria for states with tails
* :mod:`~cslkit.cosmology` -- particle creation toy model and FRW budget
* :mod:`~cslkit.cli` -- command-line front end
"""

__version__ = "0.1.0"

from .core import (CollapseOperatorSet, DensityMatrix, HermitianOperator, ModelParams,
                   NoiseTrajectory, StateVector, ValidationError)

__all__ = [
    "CollapseOperatorSet", "DensityMatrix", "HermitianOperator", "ModelParams",
    "NoiseTrajectory", "StateVector", "ValidationError", "__version__",
]
