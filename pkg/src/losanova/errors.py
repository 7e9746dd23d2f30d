"""Exception types shared across the package."""


class LosanovaError(Exception):
    """Base class for every error this package raises deliberately."""


class ValidationError(LosanovaError, ValueError):
    """Bad input: unknown level names, malformed files, out-of-range parameters."""


class NumericalError(LosanovaError, ArithmeticError):
    """A numerical routine failed to converge; no partial result is returned."""


class RankDeficiencyError(ValidationError):
    """The design matrix is rank deficient (empty cells or an over-specified model)."""

    def __init__(self, dependent_columns):
        self.dependent_columns = tuple(dependent_columns)
        cols = ", ".join(self.dependent_columns)
        super().__init__(f"design matrix is rank deficient; dependent columns: {cols}")


class ReplicationSearchError(LosanovaError):
    """No replication count within the search bound reaches the target power."""

    def __init__(self, target_power, n_max, best):
        self.target_power = target_power
        self.n_max = n_max
        self.best = best
        super().__init__(
            f"no n <= {n_max} reaches power {target_power:g}; "
            f"best achieved power {best.power:.4f} at n = {best.n}"
        )
