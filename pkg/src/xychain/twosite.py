"""Two-spin reduced states: correlators, Bell-basis form, CHSH maximum, concurrence."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .corefuncs import QUAD_TOL, Contractions, ModelParams, contractions
from .errors import OptimizerStall, PositivityError, UnsupportedConfiguration

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)
PAULI = {"i": I2, "x": SX, "y": SY, "z": SZ}

_SQ2 = 1.0 / math.sqrt(2.0)
# columns: Phi+, Phi-, Psi+, Psi- in the computational basis |00>, |01>, |10>, |11>
BELL_BASIS = np.array(
    [
        [_SQ2, _SQ2, 0, 0],
        [0, 0, _SQ2, _SQ2],
        [0, 0, _SQ2, -_SQ2],
        [_SQ2, -_SQ2, 0, 0],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class DensityMatrix:
    """Dense Hermitian, unit-trace, positive matrix of dimension 4 or 8."""

    matrix: np.ndarray
    slack: float = 1e-10

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if m.shape not in ((4, 4), (8, 8)):
            raise ValueError(f"density matrix must be 4x4 or 8x8, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-12:
            raise ValueError(f"trace {np.trace(m).real!r} != 1")
        lo = float(np.linalg.eigvalsh(m)[0])
        if lo < -self.slack:
            raise PositivityError(f"smallest eigenvalue {lo:.3e} below -{self.slack:g}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def expect(self, op: np.ndarray) -> float:
        return float(np.real(np.trace(self.matrix @ op)))


@dataclass(frozen=True)
class TwoSiteTensor:
    """Nonvanishing two-spin correlators at separation R.

    ``tz`` is the single-site magnetization <sigma^z> = G_0; it does not enter the
    CHSH maximum but is needed for the full reduced state and its concurrence.
    """

    R: int
    txx: float
    tyy: float
    tzz: float
    txy: float = 0.0
    tz: float = 0.0

    def __post_init__(self):
        for name in ("txx", "tyy", "tzz", "txy", "tz"):
            v = getattr(self, name)
            if not abs(v) <= 1.0 + 1e-9:
                raise ValueError(f"{name}={v} outside [-1, 1]")

    def correlation_matrix(self) -> np.ndarray:
        return np.array(
            [[self.txx, self.txy, 0.0], [self.txy, self.tyy, 0.0], [0.0, 0.0, self.tzz]]
        )


@dataclass(frozen=True)
class BellDecomposition:
    """Entries of the CHSH-relevant part of rho in the (Phi+, Phi-, Psi+, Psi-) basis."""

    diag: tuple[float, float, float, float]
    i12: float
    i13: float
    i24: float
    i34: float
    r14: float
    r23: float

    def parallel_part(self) -> np.ndarray:
        d = self.diag
        return np.array(
            [
                [d[0], 1j * self.i12, 1j * self.i13, self.r14],
                [-1j * self.i12, d[1], self.r23, 1j * self.i24],
                [-1j * self.i13, self.r23, d[2], 1j * self.i34],
                [self.r14, -1j * self.i24, -1j * self.i34, d[3]],
            ]
        )


def tensor_from_contractions(R: int, table: Contractions, k: int = 0) -> TwoSiteTensor:
    G = lambda r: table.G(r, k)  # noqa: E731
    tz = G(0)
    if R == 1:
        s1 = table.S(1, k)
        # S_{-1} = -S_1; the physical <sx sy> equals -S_1 in this sign convention
        return TwoSiteTensor(
            R=1,
            txx=G(-1),
            tyy=G(1),
            tzz=tz * tz - G(1) * G(-1) - s1 * table.S(-1, k),
            txy=-s1,
            tz=tz,
        )
    if not table.params.equilibrium():
        raise UnsupportedConfiguration("R > 1 correlators are only available in equilibrium")
    idx = np.arange(R)
    diff = idx[:, None] - idx[None, :]
    gxx = np.vectorize(lambda d: G(d - 1))(diff)
    gyy = np.vectorize(lambda d: G(d + 1))(diff)
    return TwoSiteTensor(
        R=R,
        txx=float(np.linalg.det(gxx)),
        tyy=float(np.linalg.det(gyy)),
        tzz=tz * tz - G(R) * G(-R),
        txy=0.0,
        tz=tz,
    )


def two_site_tensor(R: int, params: ModelParams, tol: float = QUAD_TOL) -> TwoSiteTensor:
    if R < 1:
        raise ValueError("separation R must be >= 1")
    if R > 1 and not params.equilibrium():
        raise UnsupportedConfiguration("R > 1 correlators are only available in equilibrium")
    return tensor_from_contractions(R, contractions(params, R, tol=tol))


def assemble_two_site(tensor: TwoSiteTensor, slack: float = 1e-8) -> DensityMatrix:
    t = tensor
    rho = np.eye(4, dtype=complex)
    rho += t.txx * np.kron(SX, SX) + t.tyy * np.kron(SY, SY) + t.tzz * np.kron(SZ, SZ)
    rho += t.txy * (np.kron(SX, SY) + np.kron(SY, SX))
    rho += t.tz * (np.kron(SZ, I2) + np.kron(I2, SZ))
    rho /= 4.0
    return DensityMatrix(rho, slack=slack)


def correlations_from_matrix(rho: DensityMatrix) -> np.ndarray:
    """3x3 matrix T_ij = Tr(rho sigma_i (x) sigma_j)."""
    ops = (SX, SY, SZ)
    return np.array([[rho.expect(np.kron(a, b)) for b in ops] for a in ops])


def bell_decompose(rho: DensityMatrix) -> BellDecomposition:
    if rho.dim != 4:
        raise ValueError("Bell decomposition needs a two-qubit state")
    rb = BELL_BASIS.conj().T @ rho.matrix @ BELL_BASIS
    return BellDecomposition(
        diag=tuple(float(x) for x in np.real(np.diag(rb))),
        i12=float(rb[0, 1].imag),
        i13=float(rb[0, 2].imag),
        i24=float(rb[1, 3].imag),
        i34=float(rb[2, 3].imag),
        r14=float(rb[0, 3].real),
        r23=float(rb[1, 2].real),
    )


def chsh_max(tensor: TwoSiteTensor) -> float:
    """Maximum of Tr(rho B_CHSH) over all unit-vector settings.

    2 sqrt(|T|^2 + 2 txy^2 - m), where m is the smallest eigenvalue of T^T T. With
    txy = 0 the eigenvalues are txx^2, tyy^2, tzz^2 and m is the smallest square.
    """
    t = tensor
    total = t.txx**2 + t.tyy**2 + t.tzz**2 + 2.0 * t.txy**2
    if t.txy == 0.0:
        smallest = min(t.txx**2, t.tyy**2, t.tzz**2)
    else:
        mean = 0.5 * (t.txx + t.tyy)
        rad = math.hypot(0.5 * (t.txx - t.tyy), t.txy)
        smallest = min((mean + rad) ** 2, (mean - rad) ** 2, t.tzz**2)
    return 2.0 * math.sqrt(max(total - smallest, 0.0))


def chsh_max_bell(dec: BellDecomposition) -> float:
    """Bell-basis form: 2 sqrt(2) sqrt((r11 - r44)^2 + (r22 - r33)^2 + 4 i12^2), diagonal sorted."""
    d = sorted(dec.diag, reverse=True)
    return 2.0 * math.sqrt(2.0) * math.sqrt((d[0] - d[3]) ** 2 + (d[1] - d[2]) ** 2 + 4.0 * dec.i12**2)


def _unit(theta, phi):
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def _normalize(v, fallback):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.where(n > 1e-300, v / np.where(n > 0, n, 1.0), fallback)


def _chsh_value(T, a1, a2, b1, b2):
    return np.einsum("...i,ij,...j->...", a1, T, b1 + b2) + np.einsum(
        "...i,ij,...j->...", a2, T, b1 - b2
    )


def chsh_max_bruteforce(rho: DensityMatrix, starts: int = 64, seed: int = 0) -> float:
    """Numerical maximum of Tr(rho B_CHSH) over eight spherical angles.

    Every start runs alternating exact maximization of each setting vector (the
    objective is linear in each one); the best start is then polished by Nelder-Mead.
    """
    T = correlations_from_matrix(rho)
    rng = np.random.default_rng(seed)
    ang = np.column_stack(
        [np.arccos(rng.uniform(-1, 1, (starts, 4))), rng.uniform(0, 2 * np.pi, (starts, 4))]
    )
    a1, a2, b1, b2 = (_unit(ang[:, i], ang[:, 4 + i]) for i in range(4))
    prev = np.full(starts, -np.inf)
    for _ in range(500):
        a1 = _normalize(np.einsum("ij,sj->si", T, b1 + b2), a1)
        a2 = _normalize(np.einsum("ij,sj->si", T, b1 - b2), a2)
        b1 = _normalize(np.einsum("si,ij->sj", a1 + a2, T), b1)
        b2 = _normalize(np.einsum("si,ij->sj", a1 - a2, T), b2)
        val = _chsh_value(T, a1, a2, b1, b2)
        if np.all(np.abs(val - prev) < 1e-15):
            break
        prev = val
    if not np.any(np.isfinite(val)):
        raise OptimizerStall("no CHSH start produced a finite value")
    best = int(np.nanargmax(val))
    vecs = [a1[best], a2[best], b1[best], b2[best]]
    x0 = np.concatenate(
        [[np.arccos(np.clip(v[2], -1, 1)) for v in vecs], [np.arctan2(v[1], v[0]) for v in vecs]]
    )

    def neg(x):
        u = [_unit(x[i], x[4 + i]) for i in range(4)]
        return -float(_chsh_value(T, *u))

    res = minimize(neg, x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
    return max(float(val[best]), -float(res.fun))


def concurrence(rho: DensityMatrix) -> float:
    """Wootters concurrence max(0, l1 - l2 - l3 - l4) of a two-qubit state."""
    if rho.dim != 4:
        raise ValueError("concurrence needs a two-qubit state")
    m = rho.matrix
    yy = np.kron(SY, SY)
    tilde = yy @ m.conj() @ yy
    ev = np.linalg.eigvals(m @ tilde)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0.0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))
