"""Nearest-neighbour nonlocality and magnetization after a sudden field quench h0 -> hf."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .corefuncs import QUAD_TOL, ModelParams, contractions
from .errors import InsufficientWindow
from .twosite import assemble_two_site, chsh_max, concurrence, tensor_from_contractions

MIN_TAIL_SAMPLES = 100
MIN_HORIZON = 50.0


@dataclass(frozen=True)
class QuenchRecord:
    t: float
    chsh_max: float
    concurrence: float
    mz: float
    t_xy: float


@dataclass(frozen=True)
class QuenchSeries:
    """R = 1 measures sampled on an ascending time grid."""

    params: ModelParams
    times: np.ndarray
    chsh_max: np.ndarray
    concurrence: np.ndarray
    mz: np.ndarray
    t_xy: np.ndarray

    def __post_init__(self):
        n = len(self.times)
        if n and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly ascending")
        for name in ("chsh_max", "concurrence", "mz", "t_xy"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} needs one value per time")

    def __len__(self):
        return len(self.times)

    def records(self) -> Iterator[QuenchRecord]:
        for k in range(len(self)):
            yield QuenchRecord(
                float(self.times[k]),
                float(self.chsh_max[k]),
                float(self.concurrence[k]),
                float(self.mz[k]),
                float(self.t_xy[k]),
            )


@dataclass(frozen=True)
class ErgodicityReport:
    time_average: float
    equilibrium_value: float
    gap: float
    tail_start: float
    tail_samples: int


def _measures(table, k):
    tensor = tensor_from_contractions(1, table, k)
    rho = assemble_two_site(tensor)
    return chsh_max(tensor), concurrence(rho), 0.5 * tensor.tz, tensor.txy


def quench_series(params: ModelParams, times: Sequence[float], tol: float = QUAD_TOL) -> QuenchSeries:
    """Evaluate the R = 1 state at every time with a single vectorized quadrature."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-d grid")
    table = contractions(params, 1, times=times, tol=tol)
    cols = np.array([_measures(table, k) for k in range(times.size)]).T
    return QuenchSeries(params, times, *cols)


def equilibrium_chsh(gamma: float, h: float, beta: float = math.inf, tol: float = QUAD_TOL) -> float:
    table = contractions(ModelParams.at_equilibrium(gamma, h, beta), 1, tol=tol)
    return chsh_max(tensor_from_contractions(1, table))


def dephased_chsh(params: ModelParams, tol: float = QUAD_TOL) -> float:
    """chsh_max in the t -> infinity limit where all cos/sin(2 Lambda_f t) terms average out."""
    table = contractions(params.at_time(math.inf), 1, tol=tol)
    return chsh_max(tensor_from_contractions(1, table))


def ergodicity_report(series: QuenchSeries, tail_fraction: float = 0.5, tol: float = QUAD_TOL) -> ErgodicityReport:
    """Compare the tail average of chsh_max(t) with the equilibrium value at h = hf."""
    if not 0.0 < tail_fraction < 1.0:
        raise ValueError("tail_fraction must lie in (0, 1)")
    if len(series) == 0 or series.times[-1] < MIN_HORIZON:
        raise InsufficientWindow(f"series must reach t >= {MIN_HORIZON:g}")
    n_tail = int(math.floor(tail_fraction * len(series)))
    if n_tail < MIN_TAIL_SAMPLES:
        raise InsufficientWindow(f"tail holds {n_tail} samples, need at least {MIN_TAIL_SAMPLES}")
    tail = series.chsh_max[-n_tail:]
    p = series.params
    eq = equilibrium_chsh(p.gamma, p.hf, p.beta, tol=tol)
    avg = float(np.mean(tail))
    return ErgodicityReport(
        time_average=avg,
        equilibrium_value=eq,
        gap=abs(avg - eq),
        tail_start=float(series.times[-n_tail]),
        tail_samples=n_tail,
    )
