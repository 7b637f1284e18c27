"""Parallel Picard/control-variate BSDE solver with sparse polynomial chaos.

Prices and hedges European and American (penalized) basket options in
Black-Scholes and local volatility models.
"""
from .basis import DomainBox, SparseBasis, hyperbolic_indices, map_to_reference
from .engine import PenalizedDriver, PicardSolver, SolverParams, extract_price_delta, solve
from .errors import (
    BSDEError,
    DataError,
    DegenerateFitError,
    ModelKindError,
    ParameterError,
    SampleError,
    TaskFailure,
)
from .farm import derive_stream, run_farm, speedup
from .models import BasketPayoff, ModelSpec, black_scholes, build_domain, dupire, local_vol
from .oracles import McEstimate, bs_closed_form, mc_european_price
from .regression import fit

__version__ = "0.1.0"
