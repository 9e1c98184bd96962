"""Exception types shared by the solver modules.

Each error carries a short machine-readable ``kind`` so the CLI can map it to
an exit code and a structured JSON record.
"""
from __future__ import annotations


class HeatcellError(Exception):
    """Base class. ``details`` is a JSON-serialisable dict."""

    kind = "error"
    exit_code = 2

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_record(self) -> dict:
        return {"error": self.kind, "message": self.message, "details": self.details}


class ContractViolation(HeatcellError):
    kind = "contract_violation"
    exit_code = 2


class DegenerateDensity(ContractViolation):
    """Normaliser integral of a density is not positive."""

    kind = "degenerate_density"


class DomainEmpty(ContractViolation):
    kind = "domain_empty"


class ZeroFlux(ContractViolation):
    kind = "zero_flux"


class CFLViolation(ContractViolation):
    kind = "cfl_violation"


class NegativeDensity(ContractViolation):
    kind = "negative_density"


class MismatchedConfig(ContractViolation):
    kind = "mismatched_config"


class EvolveTerminatedEarly(ContractViolation):
    """Raised by the shooting map when the x-march stops before x_end."""

    kind = "evolve_terminated_early"

    def __init__(self, message: str, termination=None, **details):
        super().__init__(message, **details)
        self.termination = termination


class NotConverged(HeatcellError):
    kind = "not_converged"
    exit_code = 3


class NewtonStalled(NotConverged):
    kind = "newton_stalled"


class MaxIterations(NotConverged):
    kind = "max_iterations"


class ConfigError(HeatcellError):
    kind = "config_error"
    exit_code = 4


class ConeViolationWarning(UserWarning):
    """Density outside the cone: eigenvalue 1 may not be isolated."""
