import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xychain.corefuncs import ModelParams, contractions
from xychain.oracle import correlator, evolve, FiniteChain
from xychain.wick import majorana_string, pauli_expectation, pfaffian


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_pfaffian_squares_to_determinant(k, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(2 * k, 2 * k)) + 1j * rng.normal(size=(2 * k, 2 * k))
    a = a - a.T
    assert pfaffian(a) ** 2 == pytest.approx(np.linalg.det(a), rel=1e-9, abs=1e-12)


def test_pfaffian_small_cases():
    assert pfaffian(np.array([[0, 2.0], [-2.0, 0]])) == 2.0
    assert pfaffian(np.zeros((3, 3))) == 0.0


def test_sigma_z_string():
    phase, seq = majorana_string({3: "z"})
    assert phase == -1 and seq == [(3, 0), (3, 1)]


@pytest.mark.parametrize(
    "ops",
    [{0: "x", 1: "x"}, {0: "y", 1: "y"}, {0: "z", 1: "z"}, {0: "x", 1: "y"}, {0: "y", 1: "x"}, {0: "z"}],
)
def test_quench_correlators_match_time_evolution(ed, ops):
    # ordered initial state, dynamics under the final field
    ts = [0.5, 2.0]
    table = contractions(ModelParams(0.5, 0.5, 0.0), 1, times=ts)
    state = ed(12, 0.5, 0.5)
    chain = FiniteChain(12, 0.5, 0.0)
    for k, t in enumerate(ts):
        assert pauli_expectation(ops, table, k) == pytest.approx(correlator(evolve(state, chain, t), ops), abs=1e-4)


@pytest.mark.parametrize("label", ["xxz", "xzx", "zxx", "zzz", "xyz", "yyz", "zii", "xxi"])
def test_three_site_strings_match_ed(ed, label):
    table = contractions(ModelParams.at_equilibrium(0.5, 2.0), 3)
    ops = {s: l for s, l in zip((0, 1, 3), label) if l != "i"}
    assert pauli_expectation(ops, table) == pytest.approx(correlator(ed(12, 0.5, 2.0), ops), abs=1e-3)
