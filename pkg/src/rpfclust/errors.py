"""Exception hierarchy shared by every stage of the clustering pipeline."""


class RPFClustError(Exception):
    """Base class for all package errors."""


class InvalidSpecError(RPFClustError, ValueError):
    """A basis, scenario or pipeline configuration is malformed."""


class DomainError(RPFClustError, ValueError):
    """Evaluation points fall outside the knot span."""


class UnsupportedPenaltyError(RPFClustError, ValueError):
    pass


class RankDeficiencyError(RPFClustError, ValueError):
    pass


class DegenerateDFError(RPFClustError, ValueError):
    """Effective degrees of freedom reached the number of sampling points."""


class SelectionError(RPFClustError):
    pass


class DimensionError(RPFClustError, ValueError):
    pass


class ShapeError(RPFClustError, ValueError):
    pass


class InfeasibleError(RPFClustError, ValueError):
    pass


class FitDegenerateError(RPFClustError):
    """An EM run collapsed a component or ended on a singular covariance."""


class NumericError(RPFClustError, ArithmeticError):
    pass


class ProjectionUnfitError(RPFClustError):
    """No (G, model) combination produced a usable fit for a projection."""


class CriterionUndefinedError(RPFClustError, ValueError):
    pass


class SingularityError(RPFClustError, ValueError):
    pass


class PipelineError(RPFClustError):
    """The ensemble could not be formed.

    ``diagnostics`` carries per-projection records when available.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class FormatError(RPFClustError, ValueError):
    pass
