"""Exception hierarchy shared by the simulation modules."""


class PBGError(Exception):
    """Base class for every error raised by pbgcorr."""


class ConfigError(PBGError, ValueError):
    """Invalid parameters or run configuration."""


class NumericalError(PBGError, RuntimeError):
    """A numerical routine could not certify its own result."""


class ConvergenceError(NumericalError):
    pass


class StepSizeError(NumericalError):
    pass


class BracketError(NumericalError):
    pass


class UnphysicalStateError(NumericalError):
    pass


class OptimizerRegression(NumericalError):
    pass


class NormDriftError(NumericalError):
    pass


class PlotError(PBGError, ValueError):
    pass
