"""Controllability of one-dimensional hyperbolic systems through their
reduction to delay difference equations."""

from .controllability import (
    ControllabilityReport,
    HautusValue,
    SearchOptions,
    approx_controllability_report,
    commensurable_reduce,
    exact_controllability_report,
    hautus_value,
    rank_KB,
)
from .network import (
    FlowGraph,
    build_network_system,
    cycle_decomposition,
    kernel_vector,
    network_approx_test,
    network_exact_test,
    spectral_set,
    validate_graph,
)
from .piecewise import PiecewiseConstant, PiecewiseExp
from .solution import (
    ControlSignal,
    Trajectory,
    endpoint_apply,
    endpoint_dual_apply,
    flow_apply,
    reduce_control_time,
)
from .system import BoundaryState, DifferenceSystem, HyperbolicSystem, load_system, to_difference_system
from .xi import XiTable, char_coefficients, verify_xi_recurrence

__all__ = [
    "BoundaryState", "ControlSignal", "ControllabilityReport", "DifferenceSystem", "FlowGraph",
    "HautusValue", "HyperbolicSystem", "PiecewiseConstant", "PiecewiseExp", "SearchOptions",
    "Trajectory", "XiTable", "approx_controllability_report", "build_network_system",
    "char_coefficients", "commensurable_reduce", "cycle_decomposition", "endpoint_apply",
    "endpoint_dual_apply", "exact_controllability_report", "flow_apply", "hautus_value",
    "kernel_vector", "load_system", "network_approx_test", "network_exact_test", "rank_KB",
    "reduce_control_time", "spectral_set", "to_difference_system", "validate_graph",
    "verify_xi_recurrence",
]
