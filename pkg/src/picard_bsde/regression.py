"""Least-squares projection of scattered values onto a `SparseBasis`."""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .basis import SparseBasis
from .errors import DataError, DegenerateFitError, ParameterError

RANK_TOL = 1e-10


def solve_least_squares(design: np.ndarray, values: np.ndarray, ridge: float = 0.0,
                        rcond: float = RANK_TOL) -> np.ndarray:
    """Minimum-norm minimizer of ``|values - design @ alpha|^2``.

    Uses LAPACK ``gelsy`` (complete orthogonal factorization built on a
    column-pivoted QR), so rank-deficient and badly conditioned designs are
    handled without forming the normal matrix.  Directions whose estimated
    singular value falls below ``rcond`` times the largest are dropped.
    A positive ``ridge`` adds ``ridge * |alpha|^2`` to the objective.
    """
    design = np.asarray(design, dtype=float)
    values = np.asarray(values, dtype=float)
    if design.ndim != 2 or values.shape != (design.shape[0],):
        raise ParameterError(f"design {design.shape} and values {values.shape} do not match")
    if design.shape[0] < 1:
        raise ParameterError("at least one sample is required")
    if not np.all(np.isfinite(values)):
        bad = np.flatnonzero(~np.isfinite(values))
        raise DataError(f"non-finite sample values at rows {bad[:10].tolist()}")
    if not np.all(np.isfinite(design)):
        raise DataError("design matrix contains non-finite entries")
    if not np.any(design):
        raise DegenerateFitError("design matrix is identically zero")
    if ridge < 0:
        raise ParameterError(f"ridge must be non-negative, got {ridge!r}")
    if ridge > 0:
        p = design.shape[1]
        design = np.vstack([design, np.sqrt(ridge) * np.eye(p)])
        values = np.concatenate([values, np.zeros(p)])
    alpha, *_ = scipy.linalg.lstsq(design, values, cond=rcond, lapack_driver="gelsy",
                                   check_finite=False)
    return alpha


def fit(basis: SparseBasis, t, x, values, ridge: float = 0.0) -> np.ndarray:
    """Chaos coefficients of the best approximation of ``values`` at ``(t, x)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if x.shape[0] != values.shape[0]:
        raise ParameterError(f"{x.shape[0]} points but {values.shape[0]} values")
    return solve_least_squares(basis.design_matrix(t, x), values, ridge=ridge)


def residual(basis: SparseBasis, alpha, t, x, values) -> float:
    """Sum of squared residuals of ``alpha`` at the sample points."""
    r = np.asarray(values, dtype=float) - basis.design_matrix(t, x) @ np.asarray(alpha)
    return float(r @ r)
