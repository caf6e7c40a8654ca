class Checkpoint_Error(Exception):
    """Base class for every error raised by the checkpoint planning toolkit."""

class Validation_Error(Checkpoint_Error, ValueError):
    """A spec, policy or configuration violates one of its invariants."""

class Numerical_Error(Checkpoint_Error, ArithmeticError):
    """A computation could not produce a trustworthy number."""

class Domain_Error(Numerical_Error):
    """An argument lies outside the domain of a special function or approximation."""

class Policy_Diverges_Error(Numerical_Error):
    """Expected rework per period exceeds progress, so the effective period is unbounded."""

class Convergence_Error(Numerical_Error):
    """An iterative method reached its iteration cap without converging."""
