import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from hyperctrl.errors import DomainMismatch, InvalidSpeed, SpecFormatError
from hyperctrl.fixtures import SWAP, intro_hyperbolic
from hyperctrl.piecewise import PiecewiseConstant
from hyperctrl.sampling import random_hyperbolic_system
from hyperctrl.system import (
    BoundaryState,
    DifferenceSystem,
    HyperbolicSystem,
    boundary_to_state,
    compute_damping_integrals,
    compute_delays,
    load_system,
    state_to_boundary,
    system_from_dict,
    system_to_dict,
    to_difference_system,
    travel_time,
)

C = PiecewiseConstant.constant


def scalar(speed, damping=None, n_plus=None, M=((1.0,),)):
    lam = speed if isinstance(speed, PiecewiseConstant) else C(0.0, 1.0, speed)
    d = damping if damping is not None else PiecewiseConstant.zeros(0.0, 1.0)
    if n_plus is None:
        n_plus = 1 if lam.values[0] > 0 else 0
    return HyperbolicSystem((lam,), (d,), np.array(M), np.zeros((1, 0)), n_plus)


@pytest.mark.parametrize("speed, tau", [
    (C(0.0, 1.0, -2.0), 0.5),
    (PiecewiseConstant([0.0, 0.5, 1.0], [1.0, 2.0]), 0.75),
    (C(0.0, 1.0, 1.0), 1.0),
])
def test_compute_delays_examples(speed, tau):
    assert compute_delays(scalar(speed))[0] == pytest.approx(tau, abs=1e-15)


def test_zero_speed_rejected():
    with pytest.raises(InvalidSpeed):
        scalar(PiecewiseConstant([0.0, 0.5, 1.0], [1.0, 0.0]), n_plus=1)


def test_sign_convention_enforced():
    with pytest.raises(InvalidSpeed):
        scalar(C(0.0, 1.0, -1.0), n_plus=1)


@pytest.mark.parametrize("speed, damping, zeta", [
    (1.0, C(0.0, 1.0, 0.0), 0.0),
    (1.0, C(0.0, 1.0, 1.0), 1.0),
    (-1.0, PiecewiseConstant([0.0, 0.5, 1.0], [2.0, 0.0]), 1.0),
])
def test_damping_integral_examples(speed, damping, zeta):
    assert compute_damping_integrals(scalar(speed, damping))[0] == pytest.approx(zeta, abs=1e-15)


def test_undamped_reduction_keeps_M():
    rng = np.random.default_rng(3)
    hs = random_hyperbolic_system(rng, 3, damping=0.0)
    hs = HyperbolicSystem(hs.speeds, (), hs.boundary_matrix, hs.control_matrix, hs.n_plus)
    assert np.array_equal(to_difference_system(hs).K, hs.boundary_matrix)


def test_log_dampings_give_diagonal_K():
    speeds = (C(0.0, 1.0, 1.0), C(0.0, 1.0, 1.0))
    damps = (C(0.0, 1.0, math.log(2.0)), C(0.0, 1.0, math.log(3.0)))
    hs = HyperbolicSystem(speeds, damps, np.eye(2), np.zeros((2, 1)), 2)
    assert np.allclose(to_difference_system(hs).K, np.diag([0.5, 1.0 / 3.0]), atol=1e-15)


def test_intro_reduction():
    ds = to_difference_system(intro_hyperbolic())
    assert np.array_equal(ds.K, SWAP)
    assert np.allclose(ds.delays, [1.0, 1.0 / math.sqrt(2.0)])
    assert np.array_equal(ds.B, [[0.0], [1.0]])


def test_inverse_map_unit_speed_reverses_time():
    hs = scalar(1.0)
    r = PiecewiseConstant([0.0, 0.3, 1.0], [2.0, -1.0])
    y = state_to_boundary(hs, [r])
    for t in np.linspace(-0.99, -0.01, 17):
        assert y[0](t) == pytest.approx(r(-t))


def test_inverse_map_negative_unit_speed_shifts():
    hs = scalar(-1.0)
    r = PiecewiseConstant([0.0, 0.3, 1.0], [2.0, -1.0])
    y = state_to_boundary(hs, [r])
    for t in np.linspace(-0.99, -0.01, 17):
        assert y[0](t) == pytest.approx(r(1.0 + t))


def oracle_profile(hs, y, i, x):
    """``exp(-g(x)) y(-psi(x))`` with both integrals from adaptive quadrature."""
    lam, d = hs.speeds[i], hs.dampings[i]
    pts = list(lam.breakpoints[1:-1]) + list(d.breakpoints[1:-1])
    inv = lambda s: 1.0 / abs(float(lam(s)))
    dens = lambda s: float(d(s)) / abs(float(lam(s)))
    if hs.is_positive(i):
        a, b = 0.0, x
    else:
        a, b = x, 1.0
    inner = [p for p in pts if a < p < b] or None
    psi = quad(inv, a, b, points=inner)[0] if b > a else 0.0
    g = quad(dens, a, b, points=inner)[0] if b > a else 0.0
    return math.exp(-g) * float(y[i](-psi))


def test_forward_map_against_quadrature_oracle():
    rng = np.random.default_rng(11)
    hs = random_hyperbolic_system(rng, 3, n_plus=1)
    tau = compute_delays(hs)
    y = BoundaryState.random(rng, tau)
    r = boundary_to_state(hs, y)
    for i in range(3):
        for x in rng.uniform(0.0, 1.0, 25):
            assert r[i](x) == pytest.approx(oracle_profile(hs, y, i, x), rel=1e-9, abs=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_round_trip_both_ways(seed):
    rng = np.random.default_rng(seed)
    hs = random_hyperbolic_system(rng, 2)
    tau = compute_delays(hs)
    y = BoundaryState.random(rng, tau)
    back = state_to_boundary(hs, boundary_to_state(hs, y))
    for i in range(2):
        s = rng.uniform(-tau[i], 0.0, 30)
        assert np.max(np.abs(back[i](s) - y[i](s))) < 1e-12
    r = [PiecewiseConstant.random(rng, 0.0, 1.0, 4) for _ in range(2)]
    again = boundary_to_state(hs, state_to_boundary(hs, r))
    for i in range(2):
        x = rng.uniform(0.0, 1.0, 30)
        assert np.max(np.abs(again[i](x) - r[i](x))) < 1e-12


@given(st.integers(0, 2**31 - 1))
def test_delay_bounds_and_travel_time_endpoints(seed):
    rng = np.random.default_rng(seed)
    hs = random_hyperbolic_system(rng, 3)
    tau = compute_delays(hs)
    for i in range(3):
        a = np.abs(hs.speeds[i].values)
        assert 1 / a.max() - 1e-15 <= tau[i] <= 1 / a.min() + 1e-15
        psi = travel_time(hs, i)
        if hs.is_positive(i):
            assert psi(0.0) == 0.0 and psi(1.0) == pytest.approx(tau[i])
            assert np.all(psi.slopes > 0)
        else:
            assert psi(1.0) == 0.0 and psi(0.0) == pytest.approx(tau[i])
            assert np.all(psi.slopes < 0)


def test_state_domain_checked():
    hs = scalar(1.0)
    bad = BoundaryState((PiecewiseConstant.zeros(-0.5, 0.0),))
    with pytest.raises(DomainMismatch):
        boundary_to_state(hs, bad)
    with pytest.raises(DomainMismatch):
        state_to_boundary(hs, [PiecewiseConstant.zeros(0.0, 0.5)])


def test_difference_system_validation():
    with pytest.raises(ValueError):
        DifferenceSystem(np.eye(2), np.zeros((2, 1)), [1.0, 0.0])
    with pytest.raises(ValueError):
        DifferenceSystem(np.ones((2, 3)), np.zeros((2, 1)), [1.0, 1.0])
    ds = DifferenceSystem(SWAP, [[0.0], [1.0]], [1.0, 0.5])
    assert ds.T_star == 1.5 and ds.tau_min == 0.5 and ds.tau_max == 1.0


def test_spec_files_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    hs = random_hyperbolic_system(rng, 2, m=2)
    path = tmp_path / "sys.json"
    path.write_text(json.dumps(system_to_dict(hs)))
    again = load_system(path)
    assert np.array_equal(to_difference_system(again).K, to_difference_system(hs).K)
    toml = tmp_path / "sys.toml"
    toml.write_text('n = 1\nn_plus = 1\nspeeds = [2.0]\nM = [0.5]\nB = [1.0]\n')
    ds = to_difference_system(load_system(toml))
    assert ds.delays[0] == 0.5 and ds.K[0, 0] == 0.5


@pytest.mark.parametrize("payload", [
    {"n": 2, "speeds": [1.0], "M": [1, 0, 0, 1]},
    {"n": 1, "speeds": [1.0], "M": [1, 2]},
    {"K": [[1, 2]], "delays": [1.0]},
])
def test_malformed_specs(payload):
    with pytest.raises(SpecFormatError):
        system_from_dict(payload)
