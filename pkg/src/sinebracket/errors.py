"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a precondition (reality condition, shape, membership)."""


class ConsistencyError(RuntimeError):
    """An internal identity that must hold exactly failed beyond tolerance."""


class StepConvergenceError(RuntimeError):
    """Implicit solver failed to converge; the state was left unchanged."""
