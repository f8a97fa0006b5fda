"""Mass renormalization and radiative level shifts for a non-relativistic
electron coupled to the quantized radiation field."""

from .units import Constants, ParameterError, Params, rydberg, to_frequency

__version__ = "0.1.0"

__all__ = ["Constants", "ParameterError", "Params", "rydberg", "to_frequency", "__version__"]
