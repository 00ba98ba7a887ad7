"""
Exception types raised across the simulator.
"""
from typing import Any, Dict, Optional


class CMNLError(Exception):
    """Base class for all simulator errors."""
    def __init__(self, message: str = ""):
        self.message = message
        super().__init__(self.message)


class InputError(CMNLError):
    """Raised on non-finite or out-of-domain inputs."""


class NumericalError(CMNLError):
    """Raised when an inner solver or factorization fails."""
    def __init__(self, message: str = "", diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(message)


class ContractError(CMNLError):
    """Raised when the act/observe protocol is violated."""


class ConfigError(CMNLError):
    """Raised on an invalid experiment config; names the offending key."""
    def __init__(self, key: str, message: str = ""):
        self.key = key
        super().__init__(message or f"invalid config key '{key}'")
