"""Cross-lingual transfer of POS-proportion features via optimal transport."""

from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateInputError,
    ParseError,
    PosotError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ConvergenceError", "DegenerateInputError", "ParseError", "PosotError",
    "__version__",
]
