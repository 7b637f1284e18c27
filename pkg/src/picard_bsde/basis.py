"""Sparse multivariate polynomial families on a normalized box.

Polynomials have ``d' = d + 1`` variates; variate 0 is time and variates
``1..d`` are log-prices.  Every point is first sent affinely from
``[0, T] x D`` onto ``[-1, 1]^{d'}`` and the polynomials are evaluated
there.  Derivatives are always reported with respect to the original
(unmapped) coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial import chebyshev, hermite_e, legendre, polynomial

from .errors import ParameterError

# (vandermonde, coefficient-space derivative) per univariate family.  The
# zeroth polynomial is 1 in each of them, which `SparseBasis.features` uses.
FAMILIES = {
    "monomial": (polynomial.polyvander, polynomial.polyder),
    "legendre": (legendre.legvander, legendre.legder),
    "chebyshev": (chebyshev.chebvander, chebyshev.chebder),
    "hermite": (hermite_e.hermevander, hermite_e.hermeder),
}

_NORM_TOL = 1e-9


def hyperbolic_indices(d_prime: int, eta: int, q: float = 1.0) -> list[tuple[int, ...]]:
    """Enumerate ``{nu in N^d' : (sum nu_i^q)^(1/q) <= eta}``.

    The result is graded lexicographic: by total degree first, then with
    higher powers of earlier variates coming first, e.g. for ``d'=2``
    ``(0,0), (1,0), (0,1), (2,0), (1,1), (0,2)``.
    """
    if int(d_prime) != d_prime or d_prime < 1:
        raise ParameterError(f"d_prime must be a positive integer, got {d_prime!r}")
    if int(eta) != eta or eta < 0:
        raise ParameterError(f"eta must be a non-negative integer, got {eta!r}")
    if not (0.0 < q <= 1.0):
        raise ParameterError(f"hyperbolic exponent q must lie in (0, 1], got {q!r}")
    d_prime, eta = int(d_prime), int(eta)
    budget = eta**q * (1.0 + _NORM_TOL)

    out: list[tuple[int, ...]] = []

    def extend(prefix: list[int], used: float) -> None:
        if len(prefix) == d_prime:
            out.append(tuple(prefix))
            return
        k = 0
        while True:
            cost = used + (k**q if k else 0.0)
            if cost > budget:
                break
            prefix.append(k)
            extend(prefix, cost)
            prefix.pop()
            k += 1

    extend([], 0.0)
    out.sort(key=lambda nu: (sum(nu), tuple(-v for v in nu)))
    return out


@dataclass(frozen=True, eq=False)
class DomainBox:
    """``[0, maturity] x prod_i [lower_i, upper_i]`` in log-price units."""

    maturity: float
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ParameterError("lower and upper bounds must be 1-d arrays of equal length")
        if not self.maturity > 0:
            raise ParameterError(f"maturity must be positive, got {self.maturity!r}")
        if not np.all(lower < upper):
            raise ParameterError("every lower bound must be strictly below its upper bound")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "maturity", float(self.maturity))

    @property
    def dim(self) -> int:
        return self.lower.size

    @cached_property
    def scale(self) -> np.ndarray:
        """d(reference coordinate) / d(original coordinate), time first."""
        width = np.concatenate([[self.maturity], self.upper - self.lower])
        return 2.0 / width

    @cached_property
    def offset(self) -> np.ndarray:
        low = np.concatenate([[0.0], self.lower])
        return -1.0 - self.scale * low

    def contains(self, t, x) -> np.ndarray:
        t = np.asarray(t)
        x = np.asarray(x)
        return (
            (t >= 0)
            & (t <= self.maturity)
            & np.all((x >= self.lower) & (x <= self.upper), axis=-1)
        )

    def to_dict(self) -> dict:
        return {
            "maturity": self.maturity,
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
        }


def map_to_reference(t, x, domain: DomainBox) -> np.ndarray:
    """Affine map of ``(t, x)`` onto ``[-1, 1]^{d'}``; no clamping.

    ``t`` has shape ``(...)`` and ``x`` shape ``(..., d)``; the result has
    shape ``(..., d + 1)`` with time in column 0.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != domain.dim:
        raise ParameterError(f"expected {domain.dim} spatial coordinates, got {x.shape[-1]}")
    tx = np.concatenate([t[..., None], x], axis=-1)
    return tx * domain.scale + domain.offset


class SparseBasis:
    """Hyperbolic sparse polynomial family over a `DomainBox`.

    Coefficient vectors (``alpha``) are plain 1-d arrays of length `p`;
    a 2-d array of shape ``(p, k)`` evaluates ``k`` expansions at once.
    The object is immutable once built.
    """

    def __init__(self, domain: DomainBox, eta: int, q: float = 1.0, family: str = "monomial"):
        if family not in FAMILIES:
            raise ParameterError(f"unknown polynomial family {family!r}; choose from {sorted(FAMILIES)}")
        self.domain = domain
        self.eta = int(eta)
        self.q = float(q)
        self.family = family
        self.d = domain.dim
        self.d_prime = self.d + 1
        idx = np.array(hyperbolic_indices(self.d_prime, eta, q), dtype=np.int64)
        idx.setflags(write=False)
        self.indices = idx
        self.p = len(idx)
        self._lookup = {tuple(nu): l for l, nu in enumerate(idx.tolist())}
        self._vander, self._der = FAMILIES[family]

        # each index is its "parent" (last non-zero variate reset to 0)
        # times one univariate factor
        parent = np.zeros(self.p, dtype=np.int64)
        var = np.zeros(self.p, dtype=np.int64)
        for l, nu in enumerate(idx.tolist()):
            nz = [j for j, v in enumerate(nu) if v]
            if not nz:
                var[l] = -1
                continue
            j = nz[-1]
            base = list(nu)
            base[j] = 0
            parent[l] = self._lookup[tuple(base)]
            var[l] = j
        self._parent = parent
        self._var = var

    def __repr__(self):
        return (
            f"SparseBasis(d'={self.d_prime}, eta={self.eta}, q={self.q}, "
            f"family={self.family!r}, p={self.p})"
        )

    def index_of(self, nu) -> int:
        return self._lookup[tuple(int(v) for v in nu)]

    # -- evaluation ---------------------------------------------------
    def features(self, z: np.ndarray) -> np.ndarray:
        """Values of every basis polynomial at reference points.

        ``z`` has shape ``(m, d')``; returns shape ``(p, m)``.
        """
        z = np.asarray(z, dtype=float)
        m = z.shape[0]
        uni = [self._vander(z[:, j], self.eta).T for j in range(self.d_prime)]
        out = np.empty((self.p, m))
        out[0] = 1.0
        for l in range(1, self.p):
            j = self._var[l]
            np.multiply(out[self._parent[l]], uni[j][self.indices[l, j]], out=out[l])
        return out

    def design_matrix(self, t, x) -> np.ndarray:
        """``B[i, l] = B_l(t_i, x_i)``, shape ``(n, p)``."""
        z = map_to_reference(np.atleast_1d(t), np.atleast_2d(x), self.domain)
        return self.features(z).T

    def _check_alpha(self, alpha) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float)
        if alpha.shape[0] != self.p:
            raise ParameterError(f"coefficient vector has length {alpha.shape[0]}, basis has p={self.p}")
        return alpha

    def _apply(self, coeffs, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        z = map_to_reference(t.reshape(-1), x.reshape(-1, self.d), self.domain)
        vals = coeffs.T @ self.features(z)
        return vals.reshape(coeffs.shape[1:] + t.shape)

    def value(self, alpha, t, x):
        """``sum_l alpha_l B_l(t, x)``; ``t`` shape ``(...)``, ``x`` shape ``(..., d)``."""
        return self._apply(self._check_alpha(alpha), t, x)

    def dt(self, alpha, t, x):
        return self._apply(self.derivative_matrix(0) @ self._check_alpha(alpha), t, x)

    def grad_x(self, alpha, t, x) -> np.ndarray:
        """Spatial gradient, shape ``(..., d)``."""
        alpha = self._check_alpha(alpha)
        coeffs = np.stack([self.derivative_matrix(j + 1) @ alpha for j in range(self.d)], axis=-1)
        return np.moveaxis(self._apply(coeffs, t, x), 0, -1)

    def hess_x(self, alpha, t, x) -> np.ndarray:
        """Spatial Hessian, shape ``(..., d, d)``."""
        alpha = self._check_alpha(alpha)
        grads = [self.derivative_matrix(j + 1) @ alpha for j in range(self.d)]
        coeffs = np.empty((self.p, self.d, self.d))
        for i in range(self.d):
            for j in range(i, self.d):
                c = self.derivative_matrix(i + 1) @ grads[j]
                coeffs[:, i, j] = c
                coeffs[:, j, i] = c
        out = self._apply(coeffs.reshape(self.p, -1), t, x)
        out = out.reshape((self.d, self.d) + np.shape(t))
        return np.moveaxis(out, (0, 1), (-2, -1))

    # -- coefficient-space calculus ------------------------------------
    @cached_property
    def _derivatives(self) -> tuple[np.ndarray, ...]:
        mats = []
        for j in range(self.d_prime):
            uni = np.zeros((self.eta + 1, self.eta + 1))
            for n in range(1, self.eta + 1):
                e = np.zeros(n + 1)
                e[n] = 1.0
                c = self._der(e)
                uni[: len(c), n] = c
            D = np.zeros((self.p, self.p))
            for l, nu in enumerate(self.indices.tolist()):
                for m in range(nu[j]):
                    if uni[m, nu[j]] == 0.0:
                        continue
                    target = list(nu)
                    target[j] = m
                    D[self._lookup[tuple(target)], l] += uni[m, nu[j]]
            D *= self.domain.scale[j]
            D.setflags(write=False)
            mats.append(D)
        return tuple(mats)

    def derivative_matrix(self, var: int) -> np.ndarray:
        """Matrix ``D`` such that ``D @ alpha`` expands ``d/d(var) u``.

        ``var`` 0 is time, ``var`` ``j >= 1`` is the j-th log-price.  The
        chain-rule factor of the affine map is already included.  Exact
        because hyperbolic index sets are downward closed.
        """
        return self._derivatives[var]

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "q": self.q,
            "family": self.family,
            "p": self.p,
            "domain": self.domain.to_dict(),
        }


def total_degree_size(d_prime: int, eta: int) -> int:
    """Cardinality of the full total-degree family, ``C(d'+eta, eta)``."""
    return math.comb(d_prime + eta, eta)
