import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xychain.corefuncs import ModelParams, contractions
from xychain.errors import UnsupportedConfiguration
from xychain.oracle import correlator, reduced_density
from xychain.threesite import (
    MerminSettings,
    ThreeSiteTensor,
    assemble_three_site,
    binary_entropy,
    block11_settings,
    block_entropy,
    lower_bound_settings,
    mermin_expectation,
    mermin_lower_bound,
    mermin_max,
    mermin_max_block11,
    mermin_optimize,
    mermin_upper_bound,
    three_site_correlators,
    three_site_tensor,
)
from xychain.twosite import PAULI, DensityMatrix

GHZ = np.zeros(8, dtype=complex)
GHZ[0] = GHZ[7] = 1 / math.sqrt(2)
GHZ_RHO = np.outer(GHZ, GHZ.conj())
GHZ_SIGNATURE = ThreeSiteTensor(1, 1, -1.0, -1.0, -1.0, 1.0)
CONFIGS = [(1, 1), (1, 2), (2, 2)]


def _ghz_correlators():
    out = {}
    for label in itertools.product("ixyz", repeat=3):
        op = np.kron(np.kron(PAULI[label[0]], PAULI[label[1]]), PAULI[label[2]])
        out["".join(label)] = float(np.real(GHZ.conj() @ op @ GHZ))
    return out


def _ed_components(state, a, b):
    sites = (0, a, a + b)
    return [correlator(state, dict(zip(sites, lab))) for lab in ("xxz", "xzx", "zxx", "zzz")]


def test_tzzz_is_three_by_three_determinant():
    p = ModelParams.at_equilibrium(1.0, 0.5)
    G = contractions(p, 2).G
    m = np.array([[G(0), G(-1), G(-2)], [G(1), G(0), G(-1)], [G(2), G(1), G(0)]])
    assert three_site_tensor(1, 1, p).tzzz == pytest.approx(np.linalg.det(m), abs=1e-14)


@pytest.mark.parametrize("gamma, h", [(1.0, 0.5), (0.5, 0.5), (0.5, 2.0), (1.0, 2.0), (0.25, 0.3)])
@pytest.mark.parametrize("a, b", CONFIGS + [(2, 1)])
def test_components_match_ed(ed, gamma, h, a, b):
    t = three_site_tensor(a, b, ModelParams.at_equilibrium(gamma, h))
    np.testing.assert_allclose(t.components(), _ed_components(ed(12, gamma, h), a, b), atol=1e-3)


def test_reflection_symmetry():
    p = ModelParams.at_equilibrium(0.5, 0.7)
    for a, b in itertools.product(range(1, 4), repeat=2):
        assert three_site_tensor(a, b, p).tzxx == pytest.approx(three_site_tensor(b, a, p).txxz, abs=1e-12)


def test_polarized_limit_sign(ed):
    t = three_site_tensor(1, 1, ModelParams.at_equilibrium(0.5, 3.0))
    assert t.tzzz > 0.99
    # spins align with the field: sigma^z = +1 in the polarized state
    assert correlator(ed(12, 0.5, 3.0), {0: "z", 1: "z", 2: "z"}) == pytest.approx(t.tzzz, abs=1e-3)
    big = three_site_tensor(2, 2, ModelParams.at_equilibrium(0.5, 100.0))
    assert big.tzzz == pytest.approx(1.0, abs=1e-3)
    assert max(abs(big.txxz), abs(big.txzx), abs(big.tzxx)) < 1e-3


def test_out_of_equilibrium_rejected():
    with pytest.raises(UnsupportedConfiguration):
        three_site_tensor(1, 1, ModelParams(0.5, 0.5, 0.0, t=1.0))


def test_assemble_identity_and_ghz():
    np.testing.assert_allclose(assemble_three_site(None, {}).matrix, np.eye(8) / 8, atol=1e-15)
    np.testing.assert_allclose(assemble_three_site(None, _ghz_correlators()).matrix, GHZ_RHO, atol=1e-14)


@pytest.mark.parametrize("gamma, h", [(1.0, 0.5), (0.5, 2.0)])
def test_assembled_state_matches_ed(ed, gamma, h):
    p = ModelParams.at_equilibrium(gamma, h)
    rho = assemble_three_site(three_site_tensor(1, 1, p), three_site_correlators(1, 1, p))
    ref = reduced_density(ed(12, gamma, h), [0, 1, 2])
    assert np.max(np.abs(rho.matrix - ref.matrix)) < 1e-3


def test_mermin_expectation_examples():
    zs = MerminSettings((0.0,) * 6, (0.0,) * 6)
    # all settings along z: <zzz> (1 - 3), i.e. -2 for all spins up and +2 for all down
    for index, expected in ((0, -2.0), (7, 2.0)):
        psi = np.zeros(8)
        psi[index] = 1.0
        assert mermin_expectation(DensityMatrix(np.outer(psi, psi)), zs) == pytest.approx(expected, abs=1e-14)
    # a_j = x, b_j = y: <XXX> - <XYY> - <YXY> - <YYX> = 4 on GHZ
    xy = MerminSettings((math.pi / 2,) * 6, (0.0,) * 3 + (math.pi / 2,) * 3)
    assert mermin_expectation(DensityMatrix(GHZ_RHO), xy) == pytest.approx(4.0, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, math.pi), min_size=6, max_size=6), st.lists(st.sampled_from([0.0, math.pi]), min_size=6, max_size=6))
def test_tensor_and_matrix_paths_agree(thetas, phis):
    # x-z plane settings: only the four tensor entries can contribute
    p = ModelParams.at_equilibrium(0.5, 0.8)
    t = three_site_tensor(1, 1, p)
    rho = assemble_three_site(t, three_site_correlators(1, 1, p))
    s = MerminSettings(tuple(thetas), tuple(phis))
    assert mermin_expectation(t, s) == pytest.approx(mermin_expectation(rho, s), abs=1e-10)


def test_y_settings_see_correlators_outside_the_tensor():
    p = ModelParams.at_equilibrium(0.5, 0.8)
    t = three_site_tensor(1, 1, p)
    rho = assemble_three_site(t, three_site_correlators(1, 1, p))
    # a = (y, y, z), b = (x, x, x): the <yyz> term is absent from the tensor
    s = MerminSettings((math.pi / 2, math.pi / 2, 0.0) + (math.pi / 2,) * 3, (math.pi / 2,) * 2 + (0.0,) * 4)
    assert abs(mermin_expectation(t, s) - mermin_expectation(rho, s)) > 1e-3


def test_mermin_max_fixed_points():
    assert mermin_max(GHZ_SIGNATURE) == pytest.approx(4.0, abs=1e-6)
    assert mermin_max(ThreeSiteTensor(1, 1, 0, 0, 0, 1.0)) == pytest.approx(2.0, abs=1e-6)
    assert mermin_max(DensityMatrix(GHZ_RHO)) == pytest.approx(4.0, abs=1e-6)


def test_returned_settings_reproduce_value():
    t = three_site_tensor(1, 2, ModelParams.at_equilibrium(0.75, 0.4))
    res = mermin_optimize(t)
    assert mermin_expectation(t, res.settings) == pytest.approx(res.value, abs=1e-12)
    assert mermin_optimize(t).value == res.value


def test_no_violation_sandwich_and_limit():
    for gamma in (0.25, 1.0):
        for h in np.linspace(0.0, 3.0, 13):
            for a, b in CONFIGS:
                t = three_site_tensor(a, b, ModelParams.at_equilibrium(gamma, h))
                m = mermin_max(t)
                assert m <= 2.0 + 1e-9
                assert mermin_lower_bound(t) <= m + 1e-9
                assert m <= mermin_upper_bound(t) + 1e-9
    t = three_site_tensor(1, 1, ModelParams.at_equilibrium(0.5, 500.0))
    assert mermin_max(t) == pytest.approx(2.0, abs=1e-5)


def test_block11_examples():
    assert mermin_max_block11(three_site_tensor(1, 1, ModelParams.at_equilibrium(1.0, 2.0))) <= 2.0 + 1e-9
    with pytest.raises(UnsupportedConfiguration):
        mermin_max_block11(three_site_tensor(1, 2, ModelParams.at_equilibrium(1.0, 2.0)))
    # the two-angle expression is the Mermin value at the restricted settings
    t = three_site_tensor(1, 1, ModelParams.at_equilibrium(0.5, 0.5))
    th1, th2 = 0.3, 1.9
    a1z, a1x, a2z, a2x = math.cos(th1), math.sin(th1), math.cos(th2), math.sin(th2)
    trio = t.txxz + t.txzx + t.tzxx
    closed = a2z * (a2z**2 - 3 * a1z**2) * t.tzzz + (a2z * (a2x**2 - a1x**2) - 2 * a1z * a1x * a2x) * trio
    assert mermin_expectation(t, block11_settings(th1, th2)) == pytest.approx(closed, abs=1e-12)


def test_block11_falls_short_of_global_optimum(ed):
    # the restricted settings family does not contain the optimum in the ordered phase
    rho = reduced_density(ed(12, 0.5, 0.6), [0, 1, 2])
    t = three_site_tensor(1, 1, ModelParams.at_equilibrium(0.5, 0.6))
    full = mermin_max(rho)
    assert full == pytest.approx(mermin_max(t), abs=1e-3)
    assert mermin_max_block11(t) < full - 0.5


def test_lower_bound_examples():
    assert mermin_lower_bound(ThreeSiteTensor(1, 1, 0, 0, 0, 1.0)) == pytest.approx(2.0, abs=1e-15)
    t = three_site_tensor(2, 2, ModelParams.at_equilibrium(0.5, 1.5))
    assert mermin_max(t) == pytest.approx(mermin_lower_bound(t), abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.floats(-math.pi, math.pi))
def test_lower_bound_settings_evaluate_closed_form(theta):
    t = three_site_tensor(1, 2, ModelParams.at_equilibrium(0.5, 0.9))
    s, c = math.sin(theta), math.cos(theta)
    closed = 2 * c * c * t.tzzz + 2 * s * c * (t.tzxx + t.txxz) - 2 * s * s * t.txzx
    assert mermin_expectation(t, lower_bound_settings(theta)) == pytest.approx(closed, abs=1e-12)
    assert closed <= mermin_lower_bound(t) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4))
def test_bounds_sandwich_random_tensors(c):
    t = ThreeSiteTensor(1, 1, *c)
    m = mermin_max(t, random_starts=32)
    assert mermin_lower_bound(t) <= m + 1e-9
    assert m <= mermin_upper_bound(t) + 1e-9


def test_upper_bound_examples():
    assert mermin_upper_bound(ThreeSiteTensor(1, 1, 0, 0, 0, 0)) == 0.0
    assert mermin_upper_bound(ThreeSiteTensor(1, 1, 1, 1, 1, 1)) == pytest.approx(4.0, abs=1e-15)


def test_block_entropy():
    assert block_entropy(ModelParams.at_equilibrium(1.0, 0.0)) == pytest.approx(3.0, abs=1e-12)
    assert block_entropy(ModelParams.at_equilibrium(0.5, 1000.0)) < 1e-4
    s = [block_entropy(ModelParams.at_equilibrium(0.5, h)) for h in np.linspace(0.0, 3.0, 31)]
    assert np.all(np.diff(s) < 0)
    assert binary_entropy(0.5) == 1.0 and binary_entropy(0.0) == 0.0
    with pytest.raises(UnsupportedConfiguration):
        block_entropy(ModelParams(0.5, 0.5, 0.0))
