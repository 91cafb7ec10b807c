"""Numerical toolkit for conformal metrics of curvature -4 on the unit disk:
Blaschke products with prescribed critical points, the Gauss curvature
equation, maximal pseudometrics and the associated function-space gauges."""

import os as _os

# HYPERMETRIC_THREADS caps BLAS/OpenMP threads; only effective when set
# before numpy is first imported.
_threads = _os.environ.get("HYPERMETRIC_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .errors import (ContractViolation, HypermetricError,  # noqa: E402
                     NonConvergenceError)

__version__ = "0.1.0"

__all__ = ["ContractViolation", "HypermetricError", "NonConvergenceError", "__version__"]
