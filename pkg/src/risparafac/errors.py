"""Exception types raised across the package."""

import numpy as np


class DimensionError(ValueError):
    """Operands have non-conformable shapes."""


class FeasibilityError(ValueError):
    """System dimensions violate an identifiability or pilot-length condition."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class DegenerateInputError(ValueError):
    """Observation carries too little energy/rank to initialise the estimator."""


class IllPosedUpdateError(np.linalg.LinAlgError):
    """A least-squares update has a rank-deficient Khatri-Rao factor."""

    def __init__(self, message, rank=None, expected=None, iteration=None):
        super().__init__(message)
        self.rank = rank
        self.expected = expected
        self.iteration = iteration


class DegenerateScalingError(ZeroDivisionError):
    """First-column normalisation hit a zero entry."""
