"""Exception hierarchy. The CLI maps these onto exit codes."""


class EnsembleError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(EnsembleError, ValueError):
    """A model or dataset file violates its text format."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class VocabularyError(EnsembleError, ValueError):
    """Vocabularies cannot be reconciled (e.g. empty intersection)."""


class ShapeError(EnsembleError, ValueError):
    """Matrix shapes are inconsistent."""


class RankDeficiencyError(EnsembleError, ArithmeticError):
    """The Gram matrix of an input model is singular or too ill-conditioned."""

    def __init__(self, message, model_index=None, condition=None):
        self.model_index = model_index
        self.condition = condition
        super().__init__(message)


class DegenerateGeometryError(EnsembleError, ArithmeticError):
    """Zero-variance column, zero vector or similar degenerate input."""


class EmptyEvaluationError(EnsembleError, ValueError):
    """Every item of an evaluation dataset was skipped."""


class InfeasibleSpecError(EnsembleError, ValueError):
    """A synthetic spec asks for more planted structure than fits."""
