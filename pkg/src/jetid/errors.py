"""Exception hierarchy.

Every error carries a short machine-readable ``code`` (used by the CLI's JSON
error object) plus whatever context is useful to locate the failure.
"""
from __future__ import annotations


class JetIdError(Exception):
    code = "error"

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context

    def to_dict(self) -> dict:
        out = {"error": self.code, "message": str(self)}
        out.update({k: _plain(v) for k, v in self.context.items()})
        return out


def _plain(v):
    try:
        import numpy as np

        if isinstance(v, np.generic):
            return v.item()
        if isinstance(v, np.ndarray):
            return v.tolist()
    except ImportError:  # pragma: no cover
        pass
    return v


class RegistrationError(JetIdError):
    code = "registration"


class IntegrationError(JetIdError):
    code = "integration"


class OmegaExitError(IntegrationError):
    """The trajectory left the admissible state set."""

    code = "omega_exit"

    def __init__(self, message: str, exit_time: float, **context):
        super().__init__(message, exit_time=exit_time, **context)
        self.exit_time = exit_time


class StepUnderflowError(IntegrationError):
    code = "step_underflow"


class JetError(JetIdError):
    code = "jets"


class EvaluatorDomainError(JetIdError):
    """A block or ratio evaluator produced a non-finite value."""

    code = "evaluator_domain"


class LinearDependenceError(JetIdError):
    """No set of grid times makes the block matrix well conditioned."""

    code = "linearly_dependent"


class SingularBlockError(JetIdError):
    code = "singular_block"


class ResidualError(JetIdError):
    code = "residual"


class InconsistencyError(JetIdError):
    code = "inconsistent_sigma"


class ImageViolationError(JetIdError):
    """Recovered parameters fall outside the admissible parameter set."""

    code = "image_violation"


class NoValidTimeError(JetIdError):
    code = "no_valid_time"


class NonIdentifiableError(JetIdError):
    code = "non_identifiable"


class AssumptionError(JetIdError):
    code = "assumption"


class ConfigError(JetIdError):
    code = "config"


class IngestionError(JetIdError):
    code = "ingestion"


class BlockFailure(JetIdError):
    """Wraps a sub-operation failure with the label of the failing block."""

    def __init__(self, block: str, cause: JetIdError):
        super().__init__(f"block {block!r}: {cause}", **{**cause.context, "block": block})
        self.code = cause.code
        self.cause = cause
