"""Market models in log-price coordinates, path samplers and basket payoffs.

The state is ``X^i = log S^i``.  Under the risk-neutral measure

    dX^i = (r - delta_i - 1/2 sum_j sigma_ij^2) dt + sum_j sigma_ij dW^j

with ``sigma(t, x) = diag(vol(t, e^x)) L`` and ``L`` the Cholesky factor of
the constant correlation matrix.  Black-Scholes uses a constant volatility
vector; the Dupire model uses the same local volatility surface on every
asset, centred on that asset's spot.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .basis import DomainBox
from .errors import ModelKindError, ParameterError

BLACK_SCHOLES = "black_scholes"
DUPIRE = "dupire"


def local_vol(t, s_price, spot=100.0, rate=0.05):
    """Smile ``0.6 (1.2 - e^{-0.1t} e^{-0.001 (s e^{rt} - spot)^2}) e^{-0.05 sqrt t}``.

    The bottom of the smile sits at the forward of ``spot``.
    """
    t = np.asarray(t, dtype=float)
    s_price = np.asarray(s_price, dtype=float)
    gap = s_price * np.exp(rate * t) - spot
    return 0.6 * (1.2 - np.exp(-0.1 * t) * np.exp(-0.001 * gap * gap)) * np.exp(-0.05 * np.sqrt(t))


def admissible_correlation(d: int) -> tuple[float, float]:
    """Open interval of common correlations giving a positive definite matrix."""
    lo = -1.0 / (d - 1) if d > 1 else -np.inf
    return lo, 1.0


def cholesky_correlation(d: int, rho: float) -> np.ndarray:
    """Lower Cholesky factor of ``C = rho 1_{i != j} + 1_{i = j}``."""
    d = int(d)
    if d < 1:
        raise ParameterError(f"dimension must be >= 1, got {d}")
    lo, hi = admissible_correlation(d)
    if not (lo < rho < hi) and not (d == 1 and rho < hi):
        raise ParameterError(f"correlation {rho} outside admissible interval ({lo:g}, {hi:g}) for d={d}")
    C = np.full((d, d), float(rho))
    np.fill_diagonal(C, 1.0)
    return np.linalg.cholesky(C)


def correlate(normals: np.ndarray, chol: np.ndarray) -> np.ndarray:
    """``chol @ g`` along the last axis, summed in a fixed order."""
    d = chol.shape[0]
    if np.array_equal(chol, np.eye(d)):
        return normals.copy()
    out = np.zeros_like(normals)
    for i in range(d):
        acc = out[..., i]
        for j in range(i + 1):
            if chol[i, j] != 0.0:
                acc += chol[i, j] * normals[..., j]
    return out


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Immutable description of a d-asset market.

    Use `black_scholes` or `dupire` to build one.  ``rate`` and
    ``dividend`` are constants exposed through `rate_at` / `dividend_at`.
    """

    kind: str
    spot: np.ndarray
    rate: float
    dividend: np.ndarray
    correlation: float
    maturity: float
    volatility: np.ndarray | None = None
    smile_center: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.kind not in (BLACK_SCHOLES, DUPIRE):
            raise ParameterError(f"unknown model kind {self.kind!r}")
        spot = np.atleast_1d(np.asarray(self.spot, dtype=float))
        d = spot.size
        div = np.broadcast_to(np.asarray(self.dividend, dtype=float), (d,)).copy()
        if np.any(spot <= 0):
            raise ParameterError("initial prices must be positive")
        if not self.maturity > 0:
            raise ParameterError("maturity must be positive")
        cholesky_correlation(d, self.correlation)
        object.__setattr__(self, "spot", spot)
        object.__setattr__(self, "dividend", div)
        object.__setattr__(self, "rate", float(self.rate))
        object.__setattr__(self, "maturity", float(self.maturity))
        object.__setattr__(self, "correlation", float(self.correlation))
        if self.kind == BLACK_SCHOLES:
            if self.volatility is None:
                raise ParameterError("Black-Scholes model needs a volatility vector")
            vol = np.broadcast_to(np.asarray(self.volatility, dtype=float), (d,)).copy()
            if np.any(vol <= 0):
                raise ParameterError("volatilities must be positive")
            object.__setattr__(self, "volatility", vol)
        else:
            center = spot if self.smile_center is None else self.smile_center
            center = np.broadcast_to(np.asarray(center, dtype=float), (d,)).copy()
            object.__setattr__(self, "smile_center", center)
        for a in (self.spot, self.dividend, self.volatility, self.smile_center):
            if a is not None:
                a.setflags(write=False)

    @property
    def d(self) -> int:
        return self.spot.size

    @property
    def x0(self) -> np.ndarray:
        return np.log(self.spot)

    def rate_at(self, t):
        return self.rate + 0.0 * np.asarray(t, dtype=float)

    def dividend_at(self, t):
        return self.dividend + 0.0 * np.asarray(t, dtype=float)[..., None]

    @cached_property
    def chol(self) -> np.ndarray:
        L = cholesky_correlation(self.d, self.correlation)
        L.setflags(write=False)
        return L

    @cached_property
    def corr_matrix(self) -> np.ndarray:
        return self.chol @ self.chol.T

    @cached_property
    def _row_norm2(self) -> np.ndarray:
        return np.sum(self.chol**2, axis=1)

    def vol(self, t, x) -> np.ndarray:
        """Per-asset volatility, shape ``(..., d)``."""
        x = np.asarray(x, dtype=float)
        if self.kind == BLACK_SCHOLES:
            return np.broadcast_to(self.volatility, x.shape)
        t = np.asarray(t, dtype=float)[..., None]
        return local_vol(t, np.exp(x), self.smile_center, self.rate)

    def drift(self, t, x) -> np.ndarray:
        """Log-price drift ``r - delta_i - 1/2 sum_j sigma_ij^2``."""
        return self.drift_from_vol(t, self.vol(t, x))

    def drift_from_vol(self, t, v) -> np.ndarray:
        r = self.rate_at(t)[..., None] if np.ndim(t) else self.rate
        return r - self.dividend - 0.5 * v * v * self._row_norm2

    def diffusion(self, t, x) -> np.ndarray:
        """Matrix ``sigma(t, x) = diag(vol) L``, shape ``(..., d, d)``."""
        return self.vol(t, x)[..., :, None] * self.chol

    def covariance(self, t, x) -> np.ndarray:
        """``sigma sigma^*``, shape ``(..., d, d)``."""
        v = self.vol(t, x)
        return v[..., :, None] * v[..., None, :] * self.corr_matrix

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "dimension": self.d,
            "spot": self.spot.tolist(),
            "rate": self.rate,
            "dividend": self.dividend.tolist(),
            "correlation": self.correlation,
            "maturity": self.maturity,
        }
        if self.kind == BLACK_SCHOLES:
            out["volatility"] = self.volatility.tolist()
        else:
            out["smile_center"] = self.smile_center.tolist()
        return out


def black_scholes(d, spot, rate, dividend, volatility, correlation, maturity) -> ModelSpec:
    spot = np.broadcast_to(np.asarray(spot, dtype=float), (int(d),))
    return ModelSpec(BLACK_SCHOLES, spot, rate, dividend, correlation, maturity, volatility=volatility)


def dupire(d, spot, rate, dividend, correlation, maturity, smile_center=None) -> ModelSpec:
    spot = np.broadcast_to(np.asarray(spot, dtype=float), (int(d),))
    return ModelSpec(DUPIRE, spot, rate, dividend, correlation, maturity, smile_center=smile_center)


# -- Brownian motion ------------------------------------------------------
@dataclass(frozen=True, eq=False)
class BrownianPath:
    times: np.ndarray   # (N,), increasing, > 0
    values: np.ndarray  # (N, d), W at `times`

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0, prepend=np.zeros((1, self.values.shape[1])))


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1 or grid[0] <= 0 or np.any(np.diff(grid) <= 0):
        raise ParameterError("time grid must be strictly increasing and start after 0")
    return grid


def sample_brownian(model: ModelSpec, grid, normals) -> BrownianPath:
    """Correlated Brownian motion on ``0 < t_1 < ... < t_N`` from ``d x N`` normals.

    ``W_{t_j} = sum_{m <= j} sqrt(t_m - t_{m-1}) L G_m``.
    """
    grid = _check_grid(grid)
    normals = np.asarray(normals, dtype=float)
    if normals.shape != (model.d, grid.size):
        raise ParameterError(f"expected normals of shape {(model.d, grid.size)}, got {normals.shape}")
    steps = np.sqrt(np.diff(grid, prepend=0.0))
    dW = correlate(normals.T, model.chol) * steps[:, None]
    return BrownianPath(grid, np.cumsum(dW, axis=0))


# -- forward paths --------------------------------------------------------
def simulate_euler(model: ModelSpec, s: float, y, grid, dW) -> np.ndarray:
    """Euler scheme with coefficients frozen at the previous grid time.

    ``grid`` holds ``s = t_0 < ... < t_N`` and ``dW[..., j, :]`` the
    correlated Brownian increment over ``[t_j, t_{j+1}]``.  Returns X at
    every grid time, shape ``(..., N + 1, d)``.
    """
    grid = np.asarray(grid, dtype=float)
    dW = np.asarray(dW, dtype=float)
    n_steps = grid.size - 1
    if n_steps < 1 or grid[0] != s or np.any(np.diff(grid) <= 0):
        raise ParameterError("grid must start at s and be strictly increasing")
    if dW.shape[-2:] != (n_steps, model.d):
        raise ParameterError(f"increments must end with shape {(n_steps, model.d)}")
    X = np.empty(dW.shape[:-2] + (n_steps + 1, model.d))
    X[..., 0, :] = y
    for j in range(n_steps):
        h = grid[j + 1] - grid[j]
        xj = X[..., j, :]
        v = model.vol(grid[j], xj)
        X[..., j + 1, :] = xj + model.drift_from_vol(grid[j], v) * h + v * dW[..., j, :]
    return X


def sample_exact_bs(model: ModelSpec, s: float, y, u, normals):
    """Exact draw of ``(X_u, X_T)`` started from ``X_s = y``.

    ``normals`` has shape ``(..., 2, d)``; ``u`` broadcasts against the
    leading axes.
    """
    if model.kind != BLACK_SCHOLES:
        raise ModelKindError("exact sampling is only available for the Black-Scholes model")
    T = model.maturity
    u = np.asarray(u, dtype=float)
    if np.any(u <= s) or np.any(u > T):
        raise ParameterError("intermediate time must lie in (s, T]")
    normals = np.asarray(normals, dtype=float)
    mu = model.drift(s, y)
    vol = model.volatility
    z = correlate(normals, model.chol)
    h1 = (u - s)[..., None]
    h2 = (T - u)[..., None]
    x_u = y + mu * h1 + vol * z[..., 0, :] * np.sqrt(h1)
    x_T = x_u + mu * h2 + vol * z[..., 1, :] * np.sqrt(h2)
    return x_u, x_T


@dataclass
class PsiPath:
    """What one psi^N draw needs from the forward path."""

    x_tau: np.ndarray     # (M, d) X at the random time tau
    t_frozen: np.ndarray  # (M,) last grid time <= tau
    x_frozen: np.ndarray  # (M, d) X at t_frozen
    x_T: np.ndarray       # (M, d)
    drift_frozen: np.ndarray | None = None  # (M, d) drift at (t_frozen, x_frozen)
    vol_frozen: np.ndarray | None = None    # (M, d) volatility at (t_frozen, x_frozen)


def sample_psi_path(model: ModelSpec, s: float, y, tau, n_steps: int, rng: np.random.Generator,
                    exact: bool | None = None) -> PsiPath:
    """Sample ``X^{N,s,y}`` at a random time ``tau`` (one per path) and at T.

    Black-Scholes paths are drawn exactly at the two times unless
    ``exact=False``.  Otherwise a regular N-step Euler grid on ``[s, T]``
    is used and the step containing ``tau`` is split so that ``X_tau`` is
    the continuous Euler interpolation driven by the same Brownian path.
    """
    tau = np.asarray(tau, dtype=float)
    m = tau.size
    y = np.asarray(y, dtype=float)
    T = model.maturity
    if exact is None:
        exact = model.kind == BLACK_SCHOLES
    if exact:
        g = rng.standard_normal((m, 2, model.d))
        x_tau, x_T = sample_exact_bs(model, s, y, tau, g)
        return PsiPath(x_tau, np.full(m, s), np.broadcast_to(y, (m, model.d)), x_T)

    grid = np.linspace(s, T, n_steps + 1)
    h = (T - s) / n_steps
    step = np.minimum(((tau - s) / h).astype(np.int64), n_steps - 1)
    rows = np.arange(m)
    g = rng.standard_normal((n_steps + 1, m, model.d))
    inc = correlate(g[:n_steps], model.chol)
    extra = correlate(g[n_steps], model.chol)
    # split the step holding tau: W_tau - W_{t_j} and W_{t_{j+1}} - W_tau
    part = inc[step, rows] * np.sqrt(np.maximum(tau - grid[step], 0.0))[:, None]
    inc *= np.sqrt(h)
    inc[step, rows] = part + extra * np.sqrt(np.maximum(grid[step + 1] - tau, 0.0))[:, None]

    X = np.empty((n_steps + 1, m, model.d))
    X[0] = y
    for j in range(n_steps):
        v = model.vol(grid[j], X[j])
        b = model.drift_from_vol(grid[j], v)
        X[j + 1] = X[j] + b * h + v * inc[j]

    t_frozen = grid[step]
    x_frozen = X[step, rows]
    v_f = model.vol(t_frozen, x_frozen)
    b_f = model.drift_from_vol(t_frozen, v_f)
    x_tau = x_frozen + b_f * (tau - t_frozen)[:, None] + v_f * part
    return PsiPath(x_tau, t_frozen, x_frozen, X[n_steps], b_f, v_f)


# -- payoffs ---------------------------------------------------------------
def basket(x) -> np.ndarray:
    """Arithmetic average of ``e^{x_i}`` over the last axis."""
    return np.mean(np.exp(np.asarray(x, dtype=float)), axis=-1)


def payoff_put_basket(K, x):
    return np.maximum(K - basket(x), 0.0)


def payoff_call_basket(K, x):
    return np.maximum(basket(x) - K, 0.0)


@dataclass(frozen=True)
class BasketPayoff:
    """``(K - avg S)_+`` for ``kind='put'``, ``(avg S - K)_+`` for ``'call'``.

    ``kind='constant'`` returns ``K`` everywhere (used in tests).
    """

    kind: str
    strike: float

    def __post_init__(self):
        if self.kind not in ("put", "call", "constant"):
            raise ParameterError(f"unknown payoff kind {self.kind!r}")

    def __call__(self, x):
        if self.kind == "put":
            return payoff_put_basket(self.strike, x)
        if self.kind == "call":
            return payoff_call_basket(self.strike, x)
        return np.full(np.shape(x)[:-1], float(self.strike))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "strike": self.strike}


# -- computational domain ------------------------------------------------
def terminal_moments(model: ModelSpec, pilot_samples: int = 20000, pilot_steps: int = 50,
                     seed: int = 20100) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard deviation of each ``X_T^i`` started at ``log S_0``.

    Exact for Black-Scholes.  For the local volatility model they come from a
    pilot Euler simulation with a fixed seed, so the result is deterministic.
    """
    T = model.maturity
    if model.kind == BLACK_SCHOLES:
        mean = model.x0 + model.drift(0.0, model.x0) * T
        return mean, model.volatility * np.sqrt(T)
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, T, pilot_steps + 1)
    dW = correlate(rng.standard_normal((pilot_samples, pilot_steps, model.d)), model.chol)
    dW *= np.sqrt(T / pilot_steps)
    X = simulate_euler(model, 0.0, model.x0, grid, dW)[:, -1]
    return X.mean(axis=0), X.std(axis=0)


def build_domain(model: ModelSpec, kappa: float = 2.0) -> DomainBox:
    """``D_i = [m_i - kappa s_i, m_i + kappa s_i]`` around the terminal law."""
    if not kappa > 0:
        raise ParameterError(f"domain width kappa must be positive, got {kappa!r}")
    mean, std = terminal_moments(model)
    # the box must also contain the starting point
    lo = np.minimum(mean - kappa * std, model.x0)
    hi = np.maximum(mean + kappa * std, model.x0)
    return DomainBox(model.maturity, lo, hi)
