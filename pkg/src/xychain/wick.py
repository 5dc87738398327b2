"""Pauli-string expectation values via Jordan-Wigner Majoranas and Wick's theorem.

Site l carries Majoranas A_l = c_l^+ + c_l and B_l = c_l^+ - c_l, with

    sigma^z_l = -A_l B_l,
    sigma^x_l = (prod_{m<l} A_m B_m) A_l,
    sigma^y_l = -i (prod_{m<l} A_m B_m) B_l.

A product of Pauli operators becomes a phase times an ordered product of distinct
Majoranas, whose Gaussian-state expectation is the Pfaffian of the pairwise
contraction matrix built from G_R and S_R.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .corefuncs import Contractions

_A, _B = 0, 1


def pfaffian(m: np.ndarray) -> complex:
    """Pfaffian of a skew-symmetric matrix by pivoted Parlett-Reid elimination."""
    a = np.array(m, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if n % 2:
        return 0.0
    pf = 1.0 + 0j
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(a[k + 1 :, k])))
        if kp != k + 1:
            a[[k + 1, kp], :] = a[[kp, k + 1], :]
            a[:, [k + 1, kp]] = a[:, [kp, k + 1]]
            pf = -pf
        if a[k + 1, k] == 0:
            return 0.0
        pf *= a[k, k + 1]
        if k + 2 < n:
            tau = a[k, k + 2 :] / a[k, k + 1]
            col = a[k + 2 :, k + 1].copy()
            a[k + 2 :, k + 2 :] += np.outer(tau, col) - np.outer(col, tau)
    return pf


def majorana_string(ops: Mapping[int, str]) -> tuple[complex, list[tuple[int, int]]]:
    """Rewrite a Pauli string {site: 'x'|'y'|'z'} as phase * product of distinct Majoranas.

    Majoranas are returned as (site, kind) pairs sorted by (site, kind), kind 0 = A, 1 = B.
    """
    phase: complex = 1.0
    seq: list[tuple[int, int]] = []
    for site in sorted(ops):
        label = ops[site].lower()
        if label == "z":
            phase *= -1
            seq += [(site, _A), (site, _B)]
        elif label in ("x", "y"):
            for m in range(site):
                seq += [(m, _A), (m, _B)]
            if label == "x":
                seq.append((site, _A))
            else:
                phase *= -1j
                seq.append((site, _B))
        elif label not in ("i", "0"):
            raise ValueError(f"unknown Pauli label {label!r}")
    # bubble sort with anticommutation signs, then cancel squares (A^2 = 1, B^2 = -1)
    seq = list(seq)
    n = len(seq)
    for i in range(n):
        for j in range(n - 1 - i):
            if seq[j] > seq[j + 1]:
                seq[j], seq[j + 1] = seq[j + 1], seq[j]
                phase = -phase
    out: list[tuple[int, int]] = []
    for sym in seq:
        if out and out[-1] == sym:
            out.pop()
            if sym[1] == _B:
                phase = -phase
        else:
            out.append(sym)
    return phase, out


def _contraction(p: tuple[int, int], q: tuple[int, int], table: Contractions, k: int) -> complex:
    # <gamma_p gamma_q> for p preceding q in the sorted order
    (sp, kp), (sq, kq) = p, q
    if kp == kq:
        return -1j * table.S(sq - sp, k)
    if kp == _A:
        return -table.G(sq - sp, k)
    return table.G(sp - sq, k)


def pauli_expectation(ops: Mapping[int, str], table: Contractions, k: int = 0) -> float:
    """<prod_site sigma^{ops[site]}_site> in the Gaussian state described by ``table``."""
    phase, seq = majorana_string(ops)
    n = len(seq)
    if n == 0:
        return float(np.real(phase))
    if n % 2:
        return 0.0
    m = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            m[i, j] = _contraction(seq[i], seq[j], table, k)
            m[j, i] = -m[i, j]
    value = phase * pfaffian(m)
    return float(value.real)


def required_range(sites) -> int:
    """Largest |R| contraction needed for Pauli strings supported on ``sites``."""
    sites = list(sites)
    return max(sites) - min(sites) if sites else 0
