# app/errors.py
from typing import Any, Dict, List, Optional


class HypSpikeError(Exception):
    """Base failure carrying the process exit code and a human readable detail."""

    exit_code = 1

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code

    def to_dict(self) -> Dict[str, Any]:
        return {"error": type(self).__name__, "detail": self.detail, "exit_code": self.exit_code}


class DomainError(HypSpikeError):
    exit_code = 2


class PoleError(DomainError):
    pass


class ParameterError(HypSpikeError):
    exit_code = 2

    def __init__(self, detail: str, violations: Optional[List[Dict[str, Any]]] = None):
        super().__init__(detail)
        self.violations = violations or []

    def to_dict(self) -> Dict[str, Any]:
        out = super().to_dict()
        out["violations"] = self.violations
        return out


class ConvergenceError(HypSpikeError):
    exit_code = 3


class InputError(HypSpikeError):
    exit_code = 4
