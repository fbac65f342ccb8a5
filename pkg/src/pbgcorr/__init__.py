"""Two emitters in band-gap reservoirs: amplitude dynamics, bound states and quantum correlations."""
from __future__ import annotations

from .amplitude import AmplitudeTrajectory, SolverConfig, derive_rates, solve_amplitude
from .bound_state import BoundStateResult, find_bound_state, residue_weight
from .correlations import (
    InitialWeights,
    assemble_state,
    concurrence,
    discord,
    correlation_timeseries,
    eof,
    mutual_information,
    reduce,
)
from .errors import (
    BracketError,
    ConfigError,
    ConvergenceError,
    NormDriftError,
    NumericalError,
    OptimizerRegression,
    PBGError,
    PlotError,
    StepSizeError,
    UnphysicalStateError,
)
from .mode_oracle import build_bath, bound_state_overlap, evolve_exact
from .reservoir import (
    EmitterParams,
    ReservoirParams,
    memory_kernel,
    spectral_integral,
)

__version__ = "0.1.0"
