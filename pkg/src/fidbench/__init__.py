"""fidbench: average-fidelity benchmarks for quantum state estimation.

Provides analytic and exact upper bounds on the average fidelity any
estimator can achieve against a posterior ensemble of density matrices, plus
a sequential Monte Carlo simulation harness that tracks the Bayesian mean
estimator against those bounds over the course of a tomography experiment.
"""

from .qmat import (
    DensityMatrix,
    EigDecomposition,
    HermitianMatrix,
    eigh,
    fidelity,
    purity,
    schatten_norm,
    super_fidelity,
)

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "EigDecomposition",
    "HermitianMatrix",
    "eigh",
    "fidelity",
    "purity",
    "schatten_norm",
    "super_fidelity",
    "__version__",
]
