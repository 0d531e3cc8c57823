"""Exception types shared across the package.

Plain ValueError is used for malformed arguments (bad shapes, out-of-range
scalars); the classes below mark conditions callers are expected to catch
and handle individually.
"""


class FormatError(ValueError):
    """A file on disk does not match the expected binary layout."""


class ValidationError(ValueError):
    """File contents parsed fine but violate a semantic constraint."""


class DegenerateInputError(ValueError):
    """An estimation problem has no unique solution for this input."""


class EmptyMeshError(RuntimeError):
    """Surface extraction found no zero crossing inside the bounds."""


class UndefinedMetricError(RuntimeError):
    """A score has an empty support set (e.g. no co-visible pixels)."""


class NumericError(RuntimeError):
    """A non-finite value appeared where the math guarantees finiteness."""


class StageFailure(RuntimeError):
    """A pipeline stage failed; partial state stays on disk.

    `stage` names the failing stage so callers can resume after a fix.
    """

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}' failed: {message}")
        self.stage = stage
