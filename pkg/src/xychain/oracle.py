"""Exact diagonalization of the periodic XY chain: a brute-force check on the N = infinity formulas.

Basis states are bit strings with site 0 as the most significant bit; bit 0 is spin up
(sigma^z = +1). The Hamiltonian matches the one used for the contractions:

    H = sum_j [(1+g)/4 sx_j sx_{j+1} + (1-g)/4 sy_j sy_{j+1}] - (h/2) sum_j sz_j,

with sites n and 0 identified.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh, expm_multiply

from .errors import SolverFailure
from .twosite import PAULI, DensityMatrix

MAX_SITES = 14
DENSE_LIMIT = 256
EIG_TOL = 1e-12
DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class FiniteChain:
    """Periodic chain of n spins. The CLI restricts n to [4, 14]; smaller n is kept for hand checks."""

    n: int
    gamma: float
    h: float

    def __post_init__(self):
        if not 2 <= self.n <= MAX_SITES:
            raise ValueError(f"n must lie in [2, {MAX_SITES}], got {self.n}")

    @property
    def dim(self) -> int:
        return 1 << self.n

    def hamiltonian(self) -> sparse.csr_matrix:
        n, dim = self.n, self.dim
        states = np.arange(dim)
        bits = (states[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
        diag = -0.5 * self.h * np.sum(1 - 2 * bits, axis=1)
        rows, cols, vals = [states], [states], [diag.astype(float)]
        bonds = [(j, (j + 1) % n) for j in range(n)]
        for j, k in bonds:
            same = bits[:, j] == bits[:, k]
            amp = np.where(same, 0.5 * self.gamma, 0.5)
            mask = (1 << (n - 1 - j)) | (1 << (n - 1 - k))
            rows.append(states)
            cols.append(states ^ mask)
            vals.append(amp)
        return sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
        )

    def parity(self) -> np.ndarray:
        """Eigenvalue of prod_j sigma^z_j on every basis state."""
        counts = np.array([bin(s).count("1") for s in range(self.dim)])
        return np.where(counts % 2 == 0, 1, -1)


@dataclass(frozen=True)
class ChainState:
    """Mixed state sum_k w_k |psi_k><psi_k| of an n-spin chain."""

    n: int
    weights: tuple[float, ...]
    vectors: tuple[np.ndarray, ...]
    energy: float = float("nan")

    @classmethod
    def pure(cls, vector: np.ndarray, energy: float = float("nan")) -> "ChainState":
        v = np.asarray(vector, dtype=complex)
        n = int(round(np.log2(v.size)))
        if 1 << n != v.size:
            raise ValueError("state length must be a power of two")
        return cls(n, (1.0,), (v / np.linalg.norm(v),), energy)


def _lowest(h: sparse.csr_matrix, k: int):
    dim = h.shape[0]
    if dim <= DENSE_LIMIT:
        w, v = np.linalg.eigh(h.toarray())
        return w[:k], v[:, :k]
    try:
        w, v = eigsh(h, k=k, which="SA", tol=EIG_TOL, maxiter=100 * dim)
    except ArpackNoConvergence as exc:
        raise SolverFailure(f"Lanczos did not converge: {exc}") from exc
    order = np.argsort(w)
    return w[order], v[:, order]


def _sector_ground(h, idx, dim):
    w, v = _lowest(h[idx][:, idx], k=min(3, idx.size))
    deg = np.flatnonzero(w - w[0] < DEGENERACY_TOL)
    vecs = []
    for j in deg:
        full = np.zeros(dim, dtype=complex)
        full[idx] = v[:, j]
        vecs.append(full)
    return float(w[0]), vecs


def ground_state(chain: FiniteChain) -> ChainState:
    """Ground state as used for comparison with the infinite chain.

    In the ordered phase (h < 1, gamma > 0) the lowest even- and odd-parity states
    become degenerate as n grows; their equal-weight mixture is taken. Elsewhere the
    lowest state is used, with exact degeneracies averaged over.
    """
    h = chain.hamiltonian()
    par = chain.parity()
    sectors = [_sector_ground(h, np.flatnonzero(par == p), chain.dim) for p in (1, -1)]
    if chain.h < 1.0 and chain.gamma > 0.0:
        vecs = [sectors[0][1][0], sectors[1][1][0]]
        energy = min(sectors[0][0], sectors[1][0])
    else:
        energy = min(e for e, _ in sectors)
        vecs = [v for e, vs in sectors if e - energy < DEGENERACY_TOL for v in vs]
    w = 1.0 / len(vecs)
    return ChainState(chain.n, tuple([w] * len(vecs)), tuple(vecs), energy)


def evolve(state: ChainState, chain: FiniteChain, t: float) -> ChainState:
    """exp(-iHt) applied to every component of ``state`` under ``chain``'s Hamiltonian."""
    h = chain.hamiltonian().astype(complex)
    vecs = tuple(expm_multiply(-1j * t * h, v) for v in state.vectors)
    return ChainState(state.n, state.weights, vecs, state.energy)


def reduced_density(state: ChainState, sites: Sequence[int]) -> DensityMatrix:
    sites = list(sites)
    if len(set(sites)) != len(sites) or not 2 <= len(sites) <= 3:
        raise ValueError("need two or three distinct sites")
    if any(not 0 <= s < state.n for s in sites):
        raise ValueError("site index outside the chain")
    rest = [s for s in range(state.n) if s not in sites]
    k = len(sites)
    rho = np.zeros((1 << k, 1 << k), dtype=complex)
    for w, v in zip(state.weights, state.vectors):
        psi = np.transpose(v.reshape((2,) * state.n), sites + rest).reshape(1 << k, -1)
        rho += w * psi @ psi.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real)


def _apply(psi: np.ndarray, op: np.ndarray, site: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(op, psi, axes=([1], [site])), 0, site)


def correlator(state: ChainState, ops: Mapping[int, str]) -> float:
    """<prod_site sigma^{ops[site]}_site>, labels from 'xyz' (or 'i')."""
    total = 0.0
    for w, v in zip(state.weights, state.vectors):
        psi = v.reshape((2,) * state.n)
        out = psi
        for site, label in ops.items():
            if not 0 <= site < state.n:
                raise ValueError("site index outside the chain")
            out = _apply(out, PAULI[label], site)
        total += w * float(np.vdot(psi, out).real)
    return total
