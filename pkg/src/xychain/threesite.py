"""Three-spin reduced states, Mermin-operator maximization and block entropy."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.optimize import minimize

from .corefuncs import QUAD_TOL, Contractions, ModelParams, contractions
from .errors import OptimizerStall, UnsupportedConfiguration
from .twosite import PAULI, DensityMatrix
from .wick import pauli_expectation

LABELS = "ixyz"
_AXIS = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class ThreeSiteTensor:
    """Mermin-relevant three-spin correlators for spins at i < j < k, a = j - i, b = k - j."""

    a: int
    b: int
    txxz: float
    txzx: float
    tzxx: float
    tzzz: float

    def __post_init__(self):
        if self.a < 1 or self.b < 1:
            raise ValueError("separations a, b must be >= 1")
        for name in ("txxz", "txzx", "tzxx", "tzzz"):
            v = getattr(self, name)
            if not abs(v) <= 1.0 + 1e-9:
                raise ValueError(f"{name}={v} outside [-1, 1]")

    def correlation_tensor(self) -> np.ndarray:
        """Full 3x3x3 array T[u, v, w] with only the four XY-model entries filled."""
        t = np.zeros((3, 3, 3))
        t[0, 0, 2] = self.txxz
        t[0, 2, 0] = self.txzx
        t[2, 0, 0] = self.tzxx
        t[2, 2, 2] = self.tzzz
        return t

    def components(self) -> np.ndarray:
        return np.array([self.txxz, self.txzx, self.tzxx, self.tzzz])


@dataclass(frozen=True)
class MerminSettings:
    """Polar/azimuthal angles of a1, a2, a3, b1, b2, b3 (in that order)."""

    thetas: tuple[float, ...]
    phis: tuple[float, ...]

    def __post_init__(self):
        if len(self.thetas) != 6 or len(self.phis) != 6:
            raise ValueError("Mermin settings need six (theta, phi) pairs")

    @classmethod
    def from_vectors(cls, vectors) -> "MerminSettings":
        v = np.asarray(vectors, dtype=float).reshape(6, 3)
        v = v / np.linalg.norm(v, axis=1, keepdims=True)
        thetas = np.arctan2(np.hypot(v[:, 0], v[:, 1]), v[:, 2])
        phis = np.arctan2(v[:, 1], v[:, 0])
        return cls(tuple(map(float, thetas)), tuple(map(float, phis)))

    def vectors(self) -> np.ndarray:
        th, ph = np.asarray(self.thetas), np.asarray(self.phis)
        return np.column_stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])


@dataclass(frozen=True)
class MerminResult:
    value: float
    settings: MerminSettings


def _g_matrix(table: Contractions, rows, cols) -> np.ndarray:
    return np.array([[table.G(p - q) for q in cols] for p in rows])


def _det(m: np.ndarray) -> float:
    return float(np.linalg.det(m)) if m.size else 1.0


def txzx_from_table(a: int, b: int, table: Contractions) -> float:
    # Majorana pairs B_p A_q with site j removed from both strings; the sigma^z
    # insertion contributes an overall minus sign
    n = a + b
    rows = [p for p in range(n) if p != a]
    cols = [q for q in range(1, n + 1) if q != a]
    return -_det(_g_matrix(table, rows, cols))


def txxz_from_table(a: int, b: int, table: Contractions) -> float:
    rows = list(range(a)) + [a + b]
    cols = list(range(1, a + 1)) + [a + b]
    return _det(_g_matrix(table, rows, cols))


def tzzz_from_table(a: int, b: int, table: Contractions) -> float:
    x = (0, a, a + b)
    return _det(_g_matrix(table, x, x))


def three_site_tensor(a: int, b: int, params: ModelParams, tol: float = QUAD_TOL) -> ThreeSiteTensor:
    if not params.equilibrium():
        raise UnsupportedConfiguration("three-spin correlators are only available in equilibrium")
    if a < 1 or b < 1:
        raise ValueError("separations a, b must be >= 1")
    table = contractions(params, a + b, tol=tol)
    return tensor_from_table(a, b, table)


def tensor_from_table(a: int, b: int, table: Contractions) -> ThreeSiteTensor:
    return ThreeSiteTensor(
        a=a,
        b=b,
        txxz=txxz_from_table(a, b, table),
        txzx=txzx_from_table(a, b, table),
        # reflection symmetry of the chain
        tzxx=txxz_from_table(b, a, table),
        tzzz=tzzz_from_table(a, b, table),
    )


def three_site_correlators(a: int, b: int, params: ModelParams, tol: float = QUAD_TOL) -> dict[str, float]:
    """All 64 expectations <s^u_i s^v_j s^w_k>, keyed by labels like 'xiz' ('i' = identity)."""
    if not params.equilibrium():
        raise UnsupportedConfiguration("three-spin correlators are only available in equilibrium")
    table = contractions(params, a + b, tol=tol)
    sites = (0, a, a + b)
    out = {}
    for label in itertools.product(LABELS, repeat=3):
        ops = {s: l for s, l in zip(sites, label) if l != "i"}
        out["".join(label)] = pauli_expectation(ops, table)
    return out


def assemble_three_site(
    tensor: ThreeSiteTensor | None, full_correlators: Mapping[str, float], slack: float = 1e-8
) -> DensityMatrix:
    """rho = 1/8 sum_{uvw} T_uvw s_u (x) s_v (x) s_w.

    Labels missing from ``full_correlators`` are taken as zero; the identity term is
    always one. When ``tensor`` is given its four entries take precedence.
    """
    corr = dict(full_correlators)
    if tensor is not None:
        corr.update(xxz=tensor.txxz, xzx=tensor.txzx, zxx=tensor.tzxx, zzz=tensor.tzzz)
    corr["iii"] = 1.0
    rho = np.zeros((8, 8), dtype=complex)
    for label, value in corr.items():
        if value == 0.0:
            continue
        u, v, w = (PAULI[c] for c in label)
        rho += value * np.kron(np.kron(u, v), w)
    return DensityMatrix(rho / 8.0, slack=slack)


def correlation_tensor_from_matrix(rho: DensityMatrix) -> np.ndarray:
    ops = [PAULI[c] for c in "xyz"]
    t = np.empty((3, 3, 3))
    for i, j, k in itertools.product(range(3), repeat=3):
        t[i, j, k] = rho.expect(np.kron(np.kron(ops[i], ops[j]), ops[k]))
    return t


def mermin_operator(settings: MerminSettings) -> np.ndarray:
    a1, a2, a3, b1, b2, b3 = settings.vectors()

    def dot(v):
        return v[0] * PAULI["x"] + v[1] * PAULI["y"] + v[2] * PAULI["z"]

    def triple(u, v, w):
        return np.kron(np.kron(dot(u), dot(v)), dot(w))

    return triple(a1, a2, a3) - triple(a1, b2, b3) - triple(b1, a2, b3) - triple(b1, b2, a3)


def _mermin_value(T, a1, a2, a3, b1, b2, b3):
    c = lambda u, v, w: np.einsum("ijk,...i,...j,...k->...", T, u, v, w)  # noqa: E731
    return c(a1, a2, a3) - c(a1, b2, b3) - c(b1, a2, b3) - c(b1, b2, a3)


def mermin_expectation(state, settings: MerminSettings) -> float:
    """Tr(rho B_Mermin) for a DensityMatrix, a ThreeSiteTensor, or a 3x3x3 array."""
    if isinstance(state, DensityMatrix):
        return state.expect(mermin_operator(settings))
    T = state.correlation_tensor() if isinstance(state, ThreeSiteTensor) else np.asarray(state)
    return float(_mermin_value(T, *settings.vectors()))


def _normalize(v, fallback):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.where(n > 1e-300, v / np.where(n > 0, n, 1.0), fallback)


def _random_vectors(rng, n, planar=False):
    if planar:
        ang = rng.uniform(0, 2 * np.pi, (n, 6))
        return np.stack([np.sin(ang), np.zeros_like(ang), np.cos(ang)], axis=-1)
    v = rng.normal(size=(n, 6, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _pair(u, v):
    return (u[:, :, None] * v[:, None, :]).reshape(len(u), 9)


def _gradients(T, vecs):
    """Linear coefficient of the Mermin value with respect to each of the six vectors."""
    a1, a2, a3, b1, b2, b3 = (vecs[:, i] for i in range(6))
    t1 = T.reshape(3, 9)
    t2 = T.transpose(1, 0, 2).reshape(3, 9)
    t3 = T.transpose(2, 0, 1).reshape(3, 9)
    return np.stack(
        [
            (_pair(a2, a3) - _pair(b2, b3)) @ t1.T,
            (_pair(a1, a3) - _pair(b1, b3)) @ t2.T,
            (_pair(a1, a2) - _pair(b1, b2)) @ t3.T,
            -(_pair(a2, b3) + _pair(b2, a3)) @ t1.T,
            -(_pair(a1, b3) + _pair(b1, a3)) @ t2.T,
            -(_pair(a1, b2) + _pair(b1, a2)) @ t3.T,
        ],
        axis=1,
    )


def _ascend(T, vecs, max_iter=80, tol=1e-14, patience=5):
    """Block-coordinate ascent: each setting in turn becomes its exact maximizer.

    The Mermin value is linear in every setting vector, so the best unit vector given
    the others is the normalized coefficient. Stops once the best value over all starts
    has improved by less than ``tol`` for ``patience`` consecutive sweeps.
    """
    vecs = vecs.copy()
    t1 = T.reshape(3, 9)
    t2 = T.transpose(1, 0, 2).reshape(3, 9)
    t3 = T.transpose(2, 0, 1).reshape(3, 9)
    a1, a2, a3, b1, b2, b3 = range(6)
    best, still = -np.inf, 0
    val = _mermin_value(T, *(vecs[:, i] for i in range(6)))
    for _ in range(max_iter):
        v = vecs
        v[:, a1] = _normalize((_pair(v[:, a2], v[:, a3]) - _pair(v[:, b2], v[:, b3])) @ t1.T, v[:, a1])
        v[:, b1] = _normalize(-(_pair(v[:, a2], v[:, b3]) + _pair(v[:, b2], v[:, a3])) @ t1.T, v[:, b1])
        v[:, a2] = _normalize((_pair(v[:, a1], v[:, a3]) - _pair(v[:, b1], v[:, b3])) @ t2.T, v[:, a2])
        v[:, b2] = _normalize(-(_pair(v[:, a1], v[:, b3]) + _pair(v[:, b1], v[:, a3])) @ t2.T, v[:, b2])
        v[:, a3] = _normalize((_pair(v[:, a1], v[:, a2]) - _pair(v[:, b1], v[:, b2])) @ t3.T, v[:, a3])
        v[:, b3] = _normalize(-(_pair(v[:, a1], v[:, b2]) + _pair(v[:, b1], v[:, a2])) @ t3.T, v[:, b3])
        val = _mermin_value(T, *(v[:, i] for i in range(6)))
        top = float(np.nanmax(val)) if np.any(np.isfinite(val)) else -np.inf
        still = still + 1 if top - best < tol else 0
        best = max(best, top)
        if still >= patience:
            break
    return val, vecs


def _angles_to_vectors(x):
    th, ph = x[:6], x[6:]
    st, ct, sp, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
    v = np.column_stack([st * cp, st * sp, ct])
    dth = np.column_stack([ct * cp, ct * sp, -st])
    dph = np.column_stack([-st * sp, st * cp, np.zeros(6)])
    return v, dth, dph


def _polish(T, settings: MerminSettings):
    """Quasi-Newton refinement on the twelve angles with the analytic gradient."""

    def neg(x):
        v, dth, dph = _angles_to_vectors(x)
        g = _gradients(T, v[None])[0]
        value = float(_mermin_value(T, *v))
        return -value, -np.concatenate([np.sum(g * dth, axis=1), np.sum(g * dph, axis=1)])

    x0 = np.concatenate([settings.thetas, settings.phis])
    res = minimize(neg, x0, jac=True, method="BFGS", options={"gtol": 1e-13, "maxiter": 2000})
    return -float(res.fun), MerminSettings(tuple(res.x[:6]), tuple(res.x[6:]))


def _state_tensor(state) -> np.ndarray:
    if isinstance(state, DensityMatrix):
        return correlation_tensor_from_matrix(state)
    if isinstance(state, ThreeSiteTensor):
        return state.correlation_tensor()
    return np.asarray(state, dtype=float)


def mermin_optimize(
    state,
    random_starts: int = 128,
    planar_starts: int = 16,
    seed: int = 0,
    polish: int = 4,
) -> MerminResult:
    """Maximize Tr(rho B_Mermin) over the twelve setting angles from many starts.

    Starts: ``random_starts`` uniform on the sphere, ``planar_starts`` in the x-z
    plane, plus the analytic x-z lower-bound settings. Every start climbs by exact
    block-coordinate maximization; the ``polish`` best distinct end points are then
    refined by BFGS on the angles.
    """
    T = _state_tensor(state)
    rng = np.random.default_rng(seed)
    seeded = lower_bound_settings(_lower_bound_theta(T)).vectors()[None]
    starts = np.concatenate(
        [_random_vectors(rng, random_starts), _random_vectors(rng, planar_starts, planar=True), seeded]
    )
    vals, vecs = _ascend(T, starts)
    finite = np.isfinite(vals)
    if not np.any(finite):
        raise OptimizerStall("no Mermin start produced a finite value")
    order = np.argsort(np.where(finite, vals, -np.inf))[::-1]
    best = int(order[0])
    value, settings = float(vals[best]), MerminSettings.from_vectors(vecs[best])
    picked: list[float] = []
    for idx in order:
        if len(picked) >= polish:
            break
        if any(abs(vals[idx] - p) < 1e-9 for p in picked):
            continue
        picked.append(float(vals[idx]))
        v, s = _polish(T, MerminSettings.from_vectors(vecs[idx]))
        if v > value:
            value, settings = v, s
    return MerminResult(value, settings)


def mermin_max(state, **kwargs) -> float:
    return mermin_optimize(state, **kwargs).value


def _block11_objective(t1, t2, zzz, trio):
    a1x, a1z = np.sin(t1), np.cos(t1)
    a2x, a2z = np.sin(t2), np.cos(t2)
    return a2z * (a2z**2 - 3 * a1z**2) * zzz + (a2z * (a2x**2 - a1x**2) - 2 * a1z * a1x * a2x) * trio


def block11_settings(theta1: float, theta2: float) -> MerminSettings:
    """x-z plane settings a3 = -a1, b1 = a2, b2 = -a1, b3 = -a2."""
    a1 = np.array([math.sin(theta1), 0.0, math.cos(theta1)])
    a2 = np.array([math.sin(theta2), 0.0, math.cos(theta2)])
    return MerminSettings.from_vectors([a1, a2, -a1, a2, -a1, -a2])


def mermin_max_block11(tensor: ThreeSiteTensor, grid: int = 256) -> float:
    """Two-angle maximum of the nearest-neighbour block expression (a = b = 1)."""
    if (tensor.a, tensor.b) != (1, 1):
        raise UnsupportedConfiguration("block expression holds for a = b = 1 only")
    zzz, trio = tensor.tzzz, tensor.txxz + tensor.txzx + tensor.tzxx
    th = np.linspace(0.0, 2 * np.pi, grid, endpoint=False)
    vals = _block11_objective(th[:, None], th[None, :], zzz, trio)
    best = -np.inf
    for flat in np.argsort(vals, axis=None)[-4:]:
        i, j = np.unravel_index(flat, vals.shape)
        res = minimize(
            lambda x: -_block11_objective(x[0], x[1], zzz, trio),
            [th[i], th[j]],
            method="BFGS",
            options={"gtol": 1e-12},
        )
        best = max(best, -float(res.fun), float(vals[i, j]))
    return best


def _lower_bound_form(T):
    m00, m11 = 2.0 * T[2, 2, 2], -2.0 * T[0, 2, 0]
    m01 = T[2, 0, 0] + T[0, 0, 2]
    return np.array([[m00, m01], [m01, m11]])


def _lower_bound_theta(T) -> float:
    w, v = np.linalg.eigh(_lower_bound_form(T))
    return float(math.atan2(v[1, -1], v[0, -1]))


def mermin_lower_bound(tensor) -> float:
    """max over theta of 2cos^2 T_zzz + 2 sin cos (T_zxx + T_xxz) - 2 sin^2 T_xzx.

    The form is v^T M v with v = (cos, sin); its maximum is the top eigenvalue of M.
    """
    m = _lower_bound_form(_state_tensor(tensor))
    return 0.5 * (m[0, 0] + m[1, 1]) + math.hypot(0.5 * (m[0, 0] - m[1, 1]), m[0, 1])


def lower_bound_settings(theta: float) -> MerminSettings:
    s, c = math.sin(theta), math.cos(theta)
    a1 = [s, 0.0, c]
    a3 = [s, 0.0, -c]
    return MerminSettings.from_vectors([a1, [0, 0, -1], a3, a3, [1, 0, 0], [-s, 0.0, -c]])


def mermin_upper_bound(tensor: ThreeSiteTensor) -> float:
    return 2.0 * float(np.linalg.norm(tensor.components()))


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p))


def block_entropy(params: ModelParams, tol: float = QUAD_TOL) -> float:
    """3 H2((1 + <sigma^z>) / 2) in bits."""
    if not params.equilibrium():
        raise UnsupportedConfiguration("block entropy is defined for equilibrium states")
    g0 = contractions(params, 0, tol=tol).G(0)
    return 3.0 * binary_entropy(0.5 * (1.0 + g0))


def entropy_from_magnetization(g0: float) -> float:
    return 3.0 * binary_entropy(0.5 * (1.0 + g0))
