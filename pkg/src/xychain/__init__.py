"""Bell nonlocality, Mermin nonlocality and entanglement in the infinite XY chain in a transverse field."""

from .corefuncs import ModelParams, contractions, g_correlator, magnetization, mz_ising_closed_form, s_correlator
from .dynamics import ErgodicityReport, QuenchSeries, ergodicity_report, quench_series
from .errors import (
    DomainError,
    InsufficientWindow,
    OptimizerStall,
    PositivityError,
    QuadratureFailure,
    SolverFailure,
    UnsupportedConfiguration,
    XYChainError,
)
from .threesite import (
    MerminSettings,
    ThreeSiteTensor,
    block_entropy,
    mermin_lower_bound,
    mermin_max,
    mermin_max_block11,
    mermin_optimize,
    mermin_upper_bound,
    three_site_tensor,
)
from .twosite import DensityMatrix, TwoSiteTensor, assemble_two_site, chsh_max, concurrence, two_site_tensor

__all__ = [name for name in dir() if not name.startswith("_")]
