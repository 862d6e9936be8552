"""The two-component example that is exactly controllable in the product
state space but not in ``L^q([-1, 0], R^2)``:

    y1(t) = y2(t - tau)
    y2(t) = y1(t - 1) + u(t)
"""

from __future__ import annotations

import math

import numpy as np

from .piecewise import PiecewiseConstant
from .solution import ControlSignal
from .system import BoundaryState, DifferenceSystem, HyperbolicSystem

INTRO_TAU = 1.0 / math.sqrt(2.0)
SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


def intro_system(tau: float = INTRO_TAU, with_control: bool = True) -> DifferenceSystem:
    B = np.array([[0.0], [1.0]]) if with_control else np.zeros((2, 1))
    return DifferenceSystem(SWAP, B, [1.0, tau])


def intro_hyperbolic(tau: float = INTRO_TAU, with_control: bool = True) -> HyperbolicSystem:
    """Two undamped rightward transports with speeds 1 and 1/tau."""
    B = np.array([[0.0], [1.0]]) if with_control else np.zeros((2, 1))
    speeds = (PiecewiseConstant.constant(0.0, 1.0, 1.0),
              PiecewiseConstant.constant(0.0, 1.0, 1.0 / tau))
    return HyperbolicSystem(speeds, (), SWAP, B, n_plus=2)


def steering_control(start: BoundaryState, target: BoundaryState,
                     tau: float = INTRO_TAU) -> ControlSignal:
    """Control on ``[0, 1 + tau]`` driving ``start`` to ``target``.

    ``u(t) = phi1(t-1) - phi0(t-1)`` on ``[0, 1]`` and
    ``u(t) = psi1(t-1-tau) - psi0(t-1-tau)`` on ``[1, 1 + tau]``.
    """
    first = (target[0] - start[0]).shift(1.0)
    second = (target[1] - start[1]).shift(1.0 + tau)
    u = PiecewiseConstant.sample([(1.0, first), (1.0, second)], 0.0, 1.0 + tau)
    return ControlSignal((u,))
