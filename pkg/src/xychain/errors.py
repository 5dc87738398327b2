"""Exception hierarchy shared by every module of the package."""


class XYChainError(Exception):
    """Base class for all package errors."""


class QuadratureFailure(XYChainError):
    pass


class DomainError(XYChainError, ValueError):
    pass


class UnsupportedConfiguration(XYChainError):
    pass


class PositivityError(XYChainError):
    pass


class OptimizerStall(XYChainError):
    pass


class InsufficientWindow(XYChainError):
    pass


class SolverFailure(XYChainError):
    pass
