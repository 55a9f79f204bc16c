"""Concatenated one-way information reconciliation with Hamming codes."""

from .codec import CodeParams, build_code, code_for_length
from .errors import (
    AuthenticationAbort,
    ConcatIRError,
    KeyReuseError,
    ParameterError,
    PlanningError,
    QualityAbort,
    ReconciliationAbort,
)
from .protocol import ProtocolId, SessionConfig

__all__ = [
    "AuthenticationAbort",
    "CodeParams",
    "ConcatIRError",
    "KeyReuseError",
    "ParameterError",
    "PlanningError",
    "ProtocolId",
    "QualityAbort",
    "ReconciliationAbort",
    "SessionConfig",
    "build_code",
    "code_for_length",
]
