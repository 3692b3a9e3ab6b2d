"""Exact monomial semivaluations, domination tests and semistable covering certificates."""

from .value_group import ONE, ZERO, LogValue, Value, cmp, in_r_power_class

__version__ = "0.1.0"

__all__ = ["Value", "LogValue", "ONE", "ZERO", "cmp", "in_r_power_class", "__version__"]
