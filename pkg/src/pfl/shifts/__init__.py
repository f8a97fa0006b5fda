"""Radiative level shifts: scalar functions, the T correction and assembled reports."""

from .functions import (
    FOUR_THIRDS_PI,
    T_BOUND_CONSTANT,
    FormFactorWeights,
    PoleMergeError,
    bethe_function,
    f_function,
    f_zero_closed,
    s_function,
    s_function_array,
    s_function_result,
    t_bound_constant_quadrature,
)
from .report import (
    LEADING_ORDER_CAVEAT,
    JensenBound,
    LambSplitting,
    ShiftReport,
    bethe_shift,
    binding_energy,
    channel_decomps,
    jensen_lower_bound,
    lamb_splitting,
    level_shift,
    pv_arguments,
    s_term,
)
from .tterm import PartialWaveError, TBound, TTermResult, t_bound, t_term

__all__ = [
    "FOUR_THIRDS_PI",
    "T_BOUND_CONSTANT",
    "FormFactorWeights",
    "PoleMergeError",
    "bethe_function",
    "f_function",
    "f_zero_closed",
    "s_function",
    "s_function_array",
    "s_function_result",
    "t_bound_constant_quadrature",
    "LEADING_ORDER_CAVEAT",
    "JensenBound",
    "LambSplitting",
    "ShiftReport",
    "bethe_shift",
    "binding_energy",
    "channel_decomps",
    "jensen_lower_bound",
    "lamb_splitting",
    "level_shift",
    "pv_arguments",
    "s_term",
    "PartialWaveError",
    "TBound",
    "TTermResult",
    "t_bound",
    "t_term",
]
