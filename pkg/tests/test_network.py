import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperctrl.controllability import (
    CONTROLLABLE,
    INCONCLUSIVE,
    NOT_CONTROLLABLE,
    approx_controllability_report,
    exact_controllability_report,
    rank_KB,
)
from hyperctrl.errors import NotSpectral
from hyperctrl.fixtures import INTRO_TAU, SWAP, intro_system
from hyperctrl.network import (
    CycleData,
    CycleDecomposition,
    FlowGraph,
    GraphValidationError,
    Obstruction,
    build_network_system,
    column_angle,
    cycle_data,
    cycle_decomposition,
    cyclic_shift,
    graph_from_dict,
    graph_to_dict,
    kernel_vector,
    network_approx_test,
    network_exact_test,
    random_cycle_graph,
    random_merge_graph,
    spectral_diagnostics,
    spectral_set,
    validate_graph,
)


def ring(delays, gamma, damping=0.0):
    """Cycle ``0 -> 1 -> ... -> 0`` with constant speeds ``-1/tau``."""
    h = len(delays)
    edges = [{"tail": t, "head": (t + 1) % h, "speed": -1.0 / tau, "damping": damping}
             for t, tau in enumerate(delays)]
    return graph_from_dict({"vertices": h, "edges": edges, "gamma": gamma})


def two_loops(gamma, tau=1.0):
    edges = [{"tail": v, "head": v, "speed": -1.0 / tau} for v in (0, 1)]
    return graph_from_dict({"vertices": 2, "edges": edges, "gamma": gamma})


def test_self_loop():
    g = ring([1.0], [[1.0]])
    assert validate_graph(g) == []
    _, sys = build_network_system(g)
    assert sys.K.tolist() == [[1.0]] and sys.B.tolist() == [[1.0]] and sys.delays.tolist() == [1.0]


def test_validation_examples():
    no_in = graph_from_dict({"vertices": 2, "edges": [{"tail": 0, "head": 0}, {"tail": 1, "head": 0}]})
    kinds = {(v.kind, v.vertex) for v in validate_graph(no_in)}
    assert ("assumption_A", 1) in kinds
    half = graph_from_dict({"vertices": 1, "edges": [{"tail": 0, "head": 0}], "weights": [[0, 0, 0.5]]})
    assert [v.kind for v in validate_graph(half)] == ["normalization"]
    with pytest.raises(GraphValidationError):
        build_network_system(half)
    pos = graph_from_dict({"vertices": 1, "edges": [{"tail": 0, "head": 0, "speed": 1.0}]})
    assert [v.kind for v in validate_graph(pos)] == ["speed"]


def test_two_cycle_is_cyclic_permutation():
    _, sys = build_network_system(ring([1.0, 0.5], [[0.0], [1.0]]))
    assert np.array_equal(sys.K, cyclic_shift(2))


def test_intro_system_as_network():
    _, sys = build_network_system(ring([1.0, INTRO_TAU], [[0.0], [1.0]]))
    ref = intro_system()
    assert np.array_equal(sys.K, SWAP) and np.array_equal(sys.B, ref.B)
    assert np.allclose(sys.delays, ref.delays)


@given(st.integers(0, 2**31 - 1))
def test_incidence_has_one_entry_per_column(seed):
    g = random_merge_graph(np.random.default_rng(seed))
    for M in g.incidence():
        assert np.array_equal(np.count_nonzero(M, axis=0), np.ones(g.n))


@given(st.integers(0, 2**31 - 1), st.booleans())
def test_control_columns_lie_in_range_of_K(seed, merge):
    rng = np.random.default_rng(seed)
    g = random_merge_graph(rng, m=2) if merge else random_cycle_graph(rng, [2, 1, 3], m=2)
    _, sys = build_network_system(g)
    assert np.linalg.matrix_rank(np.hstack([sys.K, sys.B])) == np.linalg.matrix_rank(sys.K)


def test_cycle_sizes():
    rng = np.random.default_rng(0)
    dec = cycle_decomposition(random_cycle_graph(rng, [2, 1]))
    assert sorted(dec.sizes) == [1, 2] and dec.L == 2
    assert cycle_decomposition(random_cycle_graph(rng, [3])).sizes == (3,)


@given(st.integers(0, 2**31 - 1))
def test_relabeling_gives_block_cycles(seed):
    rng = np.random.default_rng(seed)
    sizes = list(rng.integers(1, 4, size=int(rng.integers(1, 4))))
    g = random_cycle_graph(rng, sizes)
    _, sys = build_network_system(g)
    dec = cycle_decomposition(g)
    assert isinstance(dec, CycleDecomposition) and sorted(dec.sizes) == sorted(sizes)
    P = dec.permutation_matrix()
    Kr = P @ sys.K @ P.T
    expected = np.zeros_like(Kr)
    a = 0
    for cyc in cycle_data(sys, dec):
        expected[a:a + cyc.h, a:a + cyc.h] = cyclic_shift(cyc.h) * np.exp(-cyc.zeta)[None, :]
        a += cyc.h
    assert np.allclose(Kr, expected, atol=1e-15)
    for blk in dec.blocks:
        for s, t in zip(blk, blk[1:] + blk[:1]):
            assert g.edges[s][1] == g.edges[t][0]


@pytest.mark.parametrize("seed", range(8))
def test_obstruction(seed):
    g = random_merge_graph(np.random.default_rng(seed))
    _, sys = build_network_system(g)
    ob = cycle_decomposition(g)
    assert isinstance(ob, Obstruction)
    assert len(g.incoming(ob.vertex)) >= 2
    a, b = ob.columns
    assert ob.angle < 1e-10
    assert np.linalg.matrix_rank(np.stack([sys.K[:, a], sys.K[:, b]])) == 1
    assert rank_KB(sys) < sys.n
    rep = network_approx_test(g)
    assert rep.verdict == NOT_CONTROLLABLE and rep.witness["vertex"] == ob.vertex
    assert network_exact_test(g).verdict == NOT_CONTROLLABLE


def test_column_angle_accuracy():
    a = np.array([1.0, 2.0, 3.0])
    assert column_angle(a, -4 * a) == 0.0
    assert column_angle([1.0, 0.0], [1.0, 1e-12]) == pytest.approx(1e-12, rel=1e-6)
    assert column_angle([1.0, 0.0], [0.0, 1.0]) == pytest.approx(math.pi / 2)


def test_spectral_set_examples():
    c = CycleData((0, 1), np.array([1.0, 1.0]), np.zeros(2))
    pts = spectral_set(c, 0, range(-2, 3))
    assert [pt.p for pt in pts] == pytest.approx([1j * k * math.pi for k in range(-2, 3)])
    d = CycleData((0,), np.array([1.0]), np.array([math.log(2.0)]))
    assert all(pt.p.real == pytest.approx(-math.log(2.0)) for pt in spectral_set(d, 0, range(5)))
    assert spectral_set(d, 0, [0])[0].p.imag == 0.0


def test_cycle_determinant_closed_form():
    # det(diag(e^{p tau}) - C Z) = prod e^{p tau} - prod e^{-zeta} for every h
    rng = np.random.default_rng(4)
    for h in range(1, 5):
        c = CycleData(tuple(range(h)), rng.uniform(0.5, 1.5, h), rng.uniform(-0.5, 0.5, h))
        for p in rng.normal(size=3) + 1j * rng.normal(size=3):
            ref = cmath.exp(p * c.S) - math.exp(-c.zeta.sum())
            assert np.linalg.det(c.T_minus_CZ(p)) == pytest.approx(ref, abs=1e-12)


def test_kernel_vector_examples():
    c = CycleData((4, 7), np.array([0.6, 1.1]), np.array([0.2, -0.1]))
    p = spectral_set(c, 0, [3])[0].p
    y = kernel_vector(c, p)
    assert y[0] == 1.0
    assert y[1] == pytest.approx(cmath.exp(p * 0.6 + 0.2))
    assert np.linalg.norm(y @ c.T_minus_CZ(p)) < 1e-10
    with pytest.raises(NotSpectral):
        kernel_vector(c, p + 0.3)


@pytest.mark.parametrize("seed", range(5))
def test_lattice_diagnostics(seed):
    rng = np.random.default_rng(seed)
    g = random_cycle_graph(rng, list(rng.integers(1, 4, size=2)))
    _, sys = build_network_system(g)
    for cyc in cycle_data(sys, cycle_decomposition(g)):
        diag = spectral_diagnostics(cyc, range(-5, 5))
        assert diag.det_scaled < 1e-9 and diag.rank_deficit == 0 and diag.annihilation < 1e-10
        assert diag.midpoint_det > 1e-3


def test_lattice_points_are_zeros_of_full_determinant():
    rng = np.random.default_rng(6)
    g = random_cycle_graph(rng, [2, 3])
    _, sys = build_network_system(g)
    for cyc in cycle_data(sys, cycle_decomposition(g)):
        for pt in spectral_set(cyc, 0, range(4)):
            H = sys.H(pt.p)
            scale = np.prod(np.abs(np.diag(H)) + 1.0)
            assert abs(np.linalg.det(H)) / scale < 1e-12


def test_intro_network_controllable():
    g = ring([1.0, INTRO_TAU], [[0.0], [1.0]])
    assert network_approx_test(g).verdict == CONTROLLABLE
    assert network_exact_test(g).verdict == CONTROLLABLE


def test_zero_gamma():
    g = ring([1.0, INTRO_TAU], [[0.0], [0.0]])
    assert network_approx_test(g).verdict == NOT_CONTROLLABLE
    assert network_exact_test(g).verdict == NOT_CONTROLLABLE


def test_shared_lattice_needs_two_controls():
    one = two_loops([[1.0], [0.0]])
    assert network_approx_test(one).verdict == NOT_CONTROLLABLE
    assert approx_controllability_report(build_network_system(one)[1]).verdict == NOT_CONTROLLABLE
    both = two_loops([[1.0, 0.0], [0.0, 1.0]])
    assert network_approx_test(both).verdict == CONTROLLABLE
    # equal ratios: the per-cycle exact test does not apply
    assert network_exact_test(both).verdict == INCONCLUSIVE


@pytest.mark.parametrize("row, verdict", [(1.0, CONTROLLABLE), (0.0, NOT_CONTROLLABLE)])
def test_exact_single_loops(row, verdict):
    edges = [{"tail": 0, "head": 0, "speed": -1.0}, {"tail": 1, "head": 1, "speed": -1.0, "damping": 0.3}]
    g = graph_from_dict({"vertices": 2, "edges": edges, "gamma": [[1.0], [row]]})
    assert network_exact_test(g).verdict == verdict


def test_exact_commensurable_two_cycle_enumeration():
    # tau = (1, 1), zeta = 0: phases of y_1 = e^{i k pi} are {0, pi}
    g = ring([1.0, 1.0], [[1.0], [0.5]])
    rep = network_exact_test(g)
    (cyc,) = rep.certificates["per_cycle"]
    assert cyc["method"] == "enumeration" and cyc["period"] == 2
    assert cyc["margin"] == pytest.approx(0.5 / (math.sqrt(2) * math.hypot(1.0, 0.5)), rel=1e-12)
    assert rep.verdict == CONTROLLABLE
    assert network_exact_test(ring([1.0, 1.0], [[1.0], [1.0]])).verdict == NOT_CONTROLLABLE


@pytest.mark.parametrize("seed", range(6))
def test_agrees_with_generic_on_commensurable(seed):
    rng = np.random.default_rng(500 + seed)
    sizes = list(rng.integers(1, 3, size=int(rng.integers(1, 3))))
    k = int(sum(sizes))
    gamma = rng.normal(size=(k, 1)) * (rng.random((k, 1)) < 0.6)
    g = random_cycle_graph(rng, sizes, delays=rng.integers(1, 4, size=k).astype(float), damping=0.0, gamma=gamma)
    _, sys = build_network_system(g)
    assert network_approx_test(g).verdict == approx_controllability_report(sys).verdict


def test_exact_agrees_with_generic_intro():
    _, sys = build_network_system(ring([1.0, INTRO_TAU], [[0.0], [1.0]]))
    assert exact_controllability_report(sys).verdict == CONTROLLABLE


def test_graph_dict_round_trip(tmp_path):
    g = random_cycle_graph(np.random.default_rng(9), [2, 2], m=2)
    path = tmp_path / "g.json"
    path.write_text(json.dumps(graph_to_dict(g)))
    from hyperctrl.network import load_graph

    again = load_graph(path)
    assert again.edges == g.edges
    assert np.array_equal(build_network_system(again)[1].K, build_network_system(g)[1].K)
    assert isinstance(again, FlowGraph)
