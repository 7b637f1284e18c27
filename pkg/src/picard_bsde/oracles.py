"""Reference prices used to validate the solver."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import ParameterError
from .models import BLACK_SCHOLES, ModelSpec, correlate, simulate_euler

Z95 = norm.ppf(0.975)


@dataclass(frozen=True)
class McEstimate:
    price: float
    half_width: float  # 95% confidence
    samples: int

    @property
    def std_error(self) -> float:
        return self.half_width / Z95

    @property
    def ci(self) -> tuple[float, float]:
        return self.price - self.half_width, self.price + self.half_width


def terminal_samples(model: ModelSpec, m: int, rng: np.random.Generator, euler_steps: int = 100):
    """``m`` draws of ``X_T`` from ``log S_0`` (exact for Black-Scholes)."""
    T = model.maturity
    if model.kind == BLACK_SCHOLES:
        z = correlate(rng.standard_normal((m, model.d)), model.chol)
        return model.x0 + model.drift(0.0, model.x0) * T + model.volatility * np.sqrt(T) * z
    grid = np.linspace(0.0, T, euler_steps + 1)
    dW = correlate(rng.standard_normal((m, euler_steps, model.d)), model.chol)
    dW *= np.sqrt(T / euler_steps)
    return simulate_euler(model, 0.0, model.x0, grid, dW)[:, -1]


def mc_european_price(model: ModelSpec, payoff, samples: int, seed: int = 0,
                      batch: int = 250_000, euler_steps: int = 100) -> McEstimate:
    """Plain Monte-Carlo price ``e^{-rT} E[Phi(X_T)]`` with a 95% interval.

    Samples are drawn in batches so memory stays bounded; the local
    volatility model uses an Euler scheme with ``euler_steps`` steps.
    """
    if samples < 2:
        raise ParameterError("need at least two samples for a confidence interval")
    if model.kind != BLACK_SCHOLES and euler_steps < 100:
        raise ParameterError("local volatility benchmark needs at least 100 Euler steps")
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        v = payoff(terminal_samples(model, m, rng, euler_steps))
        # shift by the first batch mean to keep the variance sum accurate
        if done == 0:
            shift = float(v.mean())
        v = v - shift
        total += float(v.sum())
        total_sq += float(v @ v)
        done += m
    mean = total / samples
    var = (total_sq - samples * mean * mean) / (samples - 1)
    disc = np.exp(-model.rate * model.maturity)
    return McEstimate(float(disc * (mean + shift)), float(disc * Z95 * np.sqrt(max(var, 0.0) / samples)), samples)


def bs_closed_form(S0, K, r, delta, sigma, T, kind="call") -> float:
    """One-asset Black-Scholes price with continuous dividend yield ``delta``."""
    if min(S0, sigma, T) <= 0 or K < 0:
        raise ParameterError("S0, sigma and T must be positive and K non-negative")
    fwd_disc = S0 * np.exp(-delta * T)
    if K == 0:
        return float(fwd_disc) if kind == "call" else 0.0
    k_disc = K * np.exp(-r * T)
    sd = sigma * np.sqrt(T)
    d1 = (np.log(S0 / K) + (r - delta) * T) / sd + 0.5 * sd
    d2 = d1 - sd
    if kind == "call":
        return float(fwd_disc * norm.cdf(d1) - k_disc * norm.cdf(d2))
    if kind == "put":
        return float(k_disc * norm.cdf(-d2) - fwd_disc * norm.cdf(-d1))
    raise ParameterError(f"unknown option kind {kind!r}")
