"""Exception hierarchy shared by every module.

Two families matter to callers: :class:`ContractViolation` (bad input, CLI exit
code 2) and :class:`NonConvergenceError` (a numerical scheme gave up, CLI exit
code 3).
"""


class HypermetricError(Exception):
    """Base class for all package errors."""

    tag = "error"


class ContractViolation(HypermetricError, ValueError):
    tag = "contract"


class DomainError(ContractViolation):
    """A point lies outside the region where the operation is defined."""

    tag = "domain"


class DegenerateInputError(ContractViolation):
    tag = "degenerate"


class SingularityError(ContractViolation):
    tag = "singularity"


class ParameterError(ContractViolation):
    tag = "parameter"


class GuardedPointError(ContractViolation):
    """Curvature requested inside the guard annulus of a declared zero."""

    tag = "guarded-point"


class ConfigurationError(ContractViolation):
    tag = "configuration"


class NonFiniteError(ContractViolation):
    """A sampled value was NaN or infinite."""

    tag = "non-finite"

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class NonConvergenceError(HypermetricError, RuntimeError):
    tag = "non-convergence"

    def __init__(self, message, residual=None, iterate=None, trace=None):
        super().__init__(message)
        self.residual = residual
        self.iterate = iterate
        self.trace = trace


class IndeterminateOrderError(NonConvergenceError):
    tag = "indeterminate-order"


class PicardNonContraction(NonConvergenceError):
    """Picard residual grew on consecutive iterations; switch to Newton."""

    tag = "picard-non-contraction"


class SolverInconsistencyError(NonConvergenceError):
    """Exhaustion iterates failed to decrease monotonically."""

    tag = "solver-inconsistency"
