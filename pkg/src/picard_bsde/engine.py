"""Picard iterations with an adaptive Monte-Carlo control variate.

Each iteration draws ``n`` fresh points uniformly in ``[0, T] x D``,
estimates at each point the correction ``c^k = u - u^k`` with ``M``
draws of

    psi^N = (T - s) g1(tau, X_tau) + g2(X_T),   tau = s + (T - s) U,
    g1 = f(., u^k, d_x u^k sigma) + (d_t + L^N) u^k,   g2 = Phi - u^k(T, .)

and projects ``u^k + c^k`` back onto the polynomial basis.  The point loop
runs on the task farm; the fit runs on the coordinator.
"""
from __future__ import annotations

import logging
import time
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from .basis import DomainBox, SparseBasis, map_to_reference
from .errors import ParameterError, SampleError
from .farm import derive_stream, run_farm
from .models import BLACK_SCHOLES, BasketPayoff, ModelSpec, build_domain, sample_psi_path
from .regression import fit

log = logging.getLogger(__name__)

# first element of every stream key
GRID_STREAM = 0
TASK_STREAM = 1
VALUATION_STREAM = 2


@dataclass(frozen=True)
class SolverParams:
    """Algorithm parameters; names follow the usual notation in comments."""

    iterations: int = 10      # K_it
    points: int = 1000        # n
    samples: int = 50000      # M
    time_steps: int = 10      # N, Euler steps (ignored by exact Black-Scholes sampling)
    penalty: float = 0.0      # omega
    eta: int = 3
    q: float = 1.0
    kappa: float = 2.0        # half-width of D in terminal standard deviations
    family: str = "monomial"
    seed: int = 0
    ridge: float = 0.0
    exact_bs: bool = True
    # samples for the un-projected correction at (0, x0); 0 disables it,
    # None reuses `samples`
    valuation_samples: int | None = None

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ParameterError("; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        for name in ("iterations", "points", "samples", "time_steps"):
            if getattr(self, name) < 1:
                out.append(f"{name} must be >= 1")
        if self.penalty < 0:
            out.append("penalty (omega) must be >= 0")
        if self.eta < 0:
            out.append("eta must be >= 0")
        if not 0 < self.q <= 1:
            out.append("q must lie in (0, 1]")
        if not self.kappa > 0:
            out.append("kappa must be > 0")
        if self.ridge < 0:
            out.append("ridge must be >= 0")
        if self.seed < 0:
            out.append("seed must be >= 0")
        if self.valuation_samples is not None and self.valuation_samples < 0:
            out.append("valuation_samples must be >= 0")
        return out


@dataclass(frozen=True)
class PenalizedDriver:
    """``f(t, x, y, z) = -r y + omega (y - Phi(x))^-``.

    ``omega = 0`` gives the plain discounting driver of a European claim.
    """

    rate: float
    penalty: float
    payoff: Callable

    uses_z = False

    def __call__(self, t, x, y, z=None):
        out = -self.rate * np.asarray(y, dtype=float)
        if self.penalty:
            out = out + self.penalty * np.maximum(self.payoff(x) - y, 0.0)
        return out


def eval_driver(driver, basis: SparseBasis, alpha, t, x, model: ModelSpec):
    """``f(t, x, u(t, x), d_x u(t, x) sigma(t, x))`` for ``u = sum alpha_l B_l``."""
    y = basis.value(alpha, t, x)
    z = None
    if driver.uses_z:
        z = np.einsum("...i,...ij->...j", basis.grad_x(alpha, t, x), model.diffusion(t, x))
    return driver(t, x, y, z)


def psi_N(model: ModelSpec, s: float, y, g1, g2, path, u) -> np.ndarray:
    """``(T - s) g1(s + (T - s) u, X_{s+(T-s)u}) + g2(X_T)`` for given draws.

    ``path`` supplies ``x_tau`` and ``x_T`` already sampled at
    ``tau = s + (T - s) u`` (see `sample_psi_path`).
    """
    T = model.maturity
    if s >= T:
        raise ParameterError(f"start time {s} must be before maturity {T}")
    tau = s + (T - s) * np.asarray(u)
    return (T - s) * g1(tau, path.x_tau) + g2(path.x_T)


def sample_grid(k: int, n: int, domain: DomainBox, seed: int):
    """``n`` i.i.d. uniform points on ``[0, T] x D`` for iteration ``k``."""
    rng = derive_stream(seed, (GRID_STREAM, k))
    u = rng.random((n, domain.dim + 1))
    t = domain.maturity * u[:, 0]
    x = domain.lower + (domain.upper - domain.lower) * u[:, 1:]
    return t, x


# -- per-point correction --------------------------------------------------
@dataclass
class IterationContext:
    """Immutable inputs shared by every correction task of one iteration."""

    k: int
    basis: SparseBasis
    model: ModelSpec
    payoff: BasketPayoff
    driver: PenalizedDriver
    params: SolverParams
    alpha: np.ndarray
    # expansions evaluated at (tau, X_tau); see `_generator_columns`
    columns: np.ndarray = field(init=False)
    constant_coefficients: bool = field(init=False)
    hess_pairs: list = field(init=False)

    def __post_init__(self):
        self.constant_coefficients = self.model.kind == BLACK_SCHOLES
        self.columns, self.hess_pairs = _generator_columns(self)


def _generator_columns(ctx: IterationContext):
    basis, model, alpha = ctx.basis, ctx.model, ctx.alpha
    d = basis.d
    D = [basis.derivative_matrix(j) for j in range(basis.d_prime)]
    grads = [D[i + 1] @ alpha for i in range(d)]
    if ctx.constant_coefficients:
        # L^N has constant coefficients: collapse (d_t + L) u^k to one expansion
        x0 = model.x0
        b = model.drift(0.0, x0)
        a = model.covariance(0.0, x0)
        gen = D[0] @ alpha
        for i in range(d):
            gen = gen + b[i] * grads[i]
            for j in range(d):
                if a[i, j] != 0.0:
                    gen = gen + 0.5 * a[i, j] * (D[j + 1] @ grads[i])
        cols = [alpha, gen] + (grads if ctx.driver.uses_z else [])
        return np.stack(cols, axis=1), []
    corr = model.corr_matrix
    pairs = [(i, j) for i in range(d) for j in range(i, d) if corr[i, j] != 0.0]
    hess = [D[j + 1] @ grads[i] for i, j in pairs]
    return np.stack([alpha, D[0] @ alpha] + grads + hess, axis=1), pairs


def correction_samples(ctx: IterationContext, s: float, y, rng: np.random.Generator) -> np.ndarray:
    """The ``M`` draws of psi^N whose mean is the correction at ``(s, y)``."""
    model, basis, params = ctx.model, ctx.basis, ctx.params
    M, d, T = params.samples, basis.d, model.maturity
    U = rng.random(M)
    tau = s + (T - s) * U
    path = sample_psi_path(model, s, y, tau, params.time_steps, rng,
                           exact=params.exact_bs if model.kind == BLACK_SCHOLES else False)

    z = map_to_reference(np.concatenate([tau, np.full(M, T)]),
                         np.concatenate([path.x_tau, path.x_T]), basis.domain)
    F = basis.features(z)
    at_tau = ctx.columns.T @ F[:, :M]
    u_tau = at_tau[0]
    u_T = ctx.alpha @ F[:, M:]

    if ctx.constant_coefficients:
        gen = at_tau[1]
        grad = at_tau[2:2 + d].T if ctx.driver.uses_z else None
    else:
        grad = at_tau[2:2 + d].T
        b, v = path.drift_frozen, path.vol_frozen
        gen = at_tau[1] + np.sum(b * grad, axis=1)
        corr = model.corr_matrix
        for row, (i, j) in zip(at_tau[2 + d:], ctx.hess_pairs):
            a_ij = v[:, i] * v[:, j] * corr[i, j]
            gen = gen + (0.5 if i == j else 1.0) * a_ij * row

    z_drv = None
    if ctx.driver.uses_z:
        z_drv = np.einsum("mi,mij->mj", grad, model.diffusion(tau, path.x_tau))
    g1 = ctx.driver(tau, path.x_tau, u_tau, z_drv) + gen
    g2 = ctx.payoff(path.x_T) - u_T
    return (T - s) * g1 + g2


def _correction_task(ctx: IterationContext, payload):
    i, s, y = payload
    rng = derive_stream(ctx.params.seed, (TASK_STREAM, ctx.k, i))
    a = correction_samples(ctx, s, y, rng)
    if not np.all(np.isfinite(a)):
        bad = int(np.count_nonzero(~np.isfinite(a)))
        raise SampleError(f"iteration {ctx.k}, point {i} at t={s:.6g}, x={np.asarray(y).tolist()}: "
                          f"{bad} of {a.size} samples are not finite")
    return float(a.mean()), float(a.std(ddof=1)) if a.size > 1 else 0.0


def correction_at_point(ctx: IterationContext, i: int, s: float, y) -> float:
    """Monte-Carlo estimate of ``c^k(s, y)`` using the stream keyed ``(k, i)``."""
    return _correction_task(ctx, (i, s, y))[0]


# -- iteration state -------------------------------------------------------
@dataclass
class IterationRecord:
    """Outputs after iteration ``k``.

    ``y0`` is the price estimate ``u^k(0, x0) + c(0, x0)`` when the
    valuation correction is enabled, else equal to ``y0_poly = u^k(0, x0)``.
    """

    k: int
    y0: float
    delta: np.ndarray
    seconds: float
    y0_poly: float = float("nan")
    y0_se: float = 0.0


@dataclass
class PicardState:
    k: int
    alpha: np.ndarray
    t: np.ndarray | None = None
    x: np.ndarray | None = None
    corrections: np.ndarray | None = None
    correction_std: np.ndarray | None = None
    u_values: np.ndarray | None = None
    history: list[IterationRecord] = field(default_factory=list)


def extract_price_delta(basis: SparseBasis, alpha, model: ModelSpec):
    """``(Y_0, Delta_0)`` at ``(0, log S_0)``.

    ``Delta_0[i] = dV/dS^i = e^{-x_i} d_{x_i} u``, the hedge ratio in price
    units, i.e. ``(Z_0 sigma_S^{-1})^*`` with ``sigma_S`` the diffusion of
    the price process.
    """
    x0 = model.x0
    y0 = float(basis.value(alpha, 0.0, x0))
    grad = basis.grad_x(alpha, 0.0, x0)
    return y0, grad / model.spot


def valuation_correction(ctx: IterationContext, samples: int):
    """Mean and standard error of the correction at ``(0, log S_0)``.

    The expansion is not involved on the left-hand side, so
    ``u^k(0, x0) + c`` carries no extrapolation error; what remains is the
    Monte-Carlo error and the driver evaluated at ``u^k`` along the paths.
    """
    local = IterationContext(ctx.k, ctx.basis, ctx.model, ctx.payoff, ctx.driver,
                             replace(ctx.params, samples=samples), ctx.alpha)
    rng = derive_stream(ctx.params.seed, (VALUATION_STREAM, ctx.k))
    a = correction_samples(local, 0.0, ctx.model.x0, rng)
    return float(a.mean()), float(a.std(ddof=1) / np.sqrt(a.size))


def log_gradient(basis: SparseBasis, alpha, model: ModelSpec) -> np.ndarray:
    """``d_x u(0, log S_0)`` in log-price coordinates."""
    return basis.grad_x(alpha, 0.0, model.x0)


class PicardSolver:
    """Runs the iteration for one model / payoff / parameter set."""

    def __init__(self, model: ModelSpec, payoff: BasketPayoff, params: SolverParams,
                 workers: int = 1, domain: DomainBox | None = None):
        self.model = model
        self.payoff = payoff
        self.params = params
        self.workers = int(workers)
        self.domain = domain if domain is not None else build_domain(model, params.kappa)
        self.basis = SparseBasis(self.domain, params.eta, params.q, params.family)
        self.driver = PenalizedDriver(model.rate, params.penalty, payoff)
        if params.points < self.basis.p:
            warnings.warn(f"n={params.points} points is below the basis size p={self.basis.p}",
                          stacklevel=2)

    def initial_state(self) -> PicardState:
        return PicardState(0, np.zeros(self.basis.p))

    def context(self, state: PicardState) -> IterationContext:
        return IterationContext(state.k, self.basis, self.model, self.payoff, self.driver,
                                self.params, state.alpha)

    def step(self, state: PicardState) -> PicardState:
        """One Picard iteration ``k -> k + 1``."""
        start = time.perf_counter()
        k = state.k
        t, x = sample_grid(k, self.params.points, self.domain, self.params.seed)
        ctx = self.context(state)
        payloads = [(i, float(t[i]), x[i]) for i in range(len(t))]
        results = run_farm(payloads, self.workers, _correction_task, shared=ctx,
                           keys=[(k, i) for i in range(len(t))])
        c = np.array([r.value[0] for r in results])
        c_std = np.array([r.value[1] for r in results])
        u = self.basis.value(state.alpha, t, x)
        alpha = fit(self.basis, t, x, u + c, ridge=self.params.ridge)
        y0_poly, delta = extract_price_delta(self.basis, alpha, self.model)
        new = PicardState(k + 1, alpha, t, x, c, c_std, u)
        y0, y0_se = y0_poly, 0.0
        m_val = self.params.samples if self.params.valuation_samples is None else self.params.valuation_samples
        if m_val > 1:
            corr, y0_se = valuation_correction(self.context(new), m_val)
            y0 = y0_poly + corr
        seconds = time.perf_counter() - start
        new.history = state.history + [IterationRecord(k + 1, y0, delta, seconds, y0_poly, y0_se)]
        log.info("iteration %d: Y0=%.6f (+-%.4f, polynomial %.6f) delta=%s (%.2fs)",
                 k + 1, y0, y0_se, y0_poly, np.round(delta, 6), seconds)
        return new

    def run(self, callback: Callable[[PicardState], None] | None = None) -> PicardState:
        state = self.initial_state()
        for _ in range(self.params.iterations):
            state = self.step(state)
            if callback is not None:
                callback(state)
        return state


def picard_step(solver: PicardSolver, state: PicardState) -> PicardState:
    return solver.step(state)


def solve(model: ModelSpec, payoff: BasketPayoff, params: SolverParams, workers: int = 1,
          callback=None) -> PicardState:
    """Run all ``params.iterations`` iterations and return the final state."""
    return PicardSolver(model, payoff, params, workers).run(callback)


def params_dict(params: SolverParams) -> dict:
    return asdict(params)
