import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from picard_bsde.basis import (
    FAMILIES,
    DomainBox,
    SparseBasis,
    hyperbolic_indices,
    map_to_reference,
    total_degree_size,
)
from picard_bsde.errors import ParameterError


def brute_force(d_prime, eta, q):
    out = []
    for nu in itertools.product(range(eta + 1), repeat=d_prime):
        if sum(v**q for v in nu) ** (1 / q) <= eta + 1e-9:
            out.append(nu)
    return sorted(out, key=lambda v: (sum(v), tuple(-c for c in v)))


def test_small_hyperbolic_sets():
    assert hyperbolic_indices(2, 2, 1.0) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert set(hyperbolic_indices(2, 2, 0.5)) == {(0, 0), (1, 0), (0, 1), (2, 0), (0, 2)}


@pytest.mark.parametrize("d_prime,eta,p", [(6, 3, 84), (1, 4, 5), (3, 2, 10), (11, 3, 364)])
def test_total_degree_cardinality(d_prime, eta, p):
    assert len(hyperbolic_indices(d_prime, eta, 1.0)) == p == comb(d_prime + eta, eta)
    assert total_degree_size(d_prime, eta) == p


@pytest.mark.parametrize("d_prime,eta,q", [(3, 4, 0.5), (4, 3, 0.7), (2, 6, 0.3), (5, 2, 1.0)])
def test_matches_brute_force(d_prime, eta, q):
    assert hyperbolic_indices(d_prime, eta, q) == brute_force(d_prime, eta, q)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(0, 4), st.floats(0.2, 1.0))
def test_downward_closed_and_monotone(d_prime, eta, q):
    idx = hyperbolic_indices(d_prime, eta, q)
    s = set(idx)
    assert idx[0] == (0,) * d_prime
    for nu in idx:
        for i in range(d_prime):
            if nu[i]:
                assert nu[:i] + (nu[i] - 1,) + nu[i + 1:] in s
    # larger q or eta never shrinks the set
    assert s <= set(hyperbolic_indices(d_prime, eta + 1, q))
    assert s <= set(hyperbolic_indices(d_prime, eta, min(1.0, q + 0.2)))


def test_bad_index_parameters():
    for args in [(0, 3, 1.0), (2, -1, 1.0), (2, 3, 0.0), (2, 3, 1.5)]:
        with pytest.raises(ParameterError):
            hyperbolic_indices(*args)


def test_reference_map_corners(box2):
    z = map_to_reference([0.0, 1.0], np.array([[4.0, 4.2], [5.0, 4.9]]), box2)
    np.testing.assert_allclose(z, [[-1, -1, -1], [1, 1, 1]], atol=1e-15)


def test_domain_validation():
    with pytest.raises(ParameterError):
        DomainBox(1.0, np.array([1.0]), np.array([1.0]))
    with pytest.raises(ParameterError):
        DomainBox(0.0, np.array([0.0]), np.array([1.0]))


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_derivatives_match_finite_differences(box2, family):
    basis = SparseBasis(box2, 3, 1.0, family)
    rng = np.random.default_rng(3)
    alpha = rng.standard_normal(basis.p)
    t = rng.uniform(0.1, 0.9, 7)
    x = box2.lower + (box2.upper - box2.lower) * rng.uniform(0.1, 0.9, (7, 2))
    h = 1e-5

    def rel(a, b):
        return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1.0)

    fd_t = (basis.value(alpha, t + h, x) - basis.value(alpha, t - h, x)) / (2 * h)
    assert rel(basis.dt(alpha, t, x), fd_t) < 1e-6
    grad = basis.grad_x(alpha, t, x)
    hess = basis.hess_x(alpha, t, x)
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fd = (basis.value(alpha, t, x + e) - basis.value(alpha, t, x - e)) / (2 * h)
        assert rel(grad[:, i], fd) < 1e-6
        fd_g = (basis.grad_x(alpha, t, x + e) - basis.grad_x(alpha, t, x - e)) / (2 * h)
        assert rel(hess[:, :, i], fd_g) < 1e-6
    np.testing.assert_allclose(hess, np.swapaxes(hess, 1, 2), atol=1e-10)


def test_derivative_matrix_is_exact_on_monomials(box2):
    basis = SparseBasis(box2, 3, 1.0)
    D = basis.derivative_matrix(1)
    # d/dz1 of z1^2 z2 is 2 z1 z2, scaled by the chain-rule factor
    src = basis.index_of((0, 2, 1))
    dst = basis.index_of((0, 1, 1))
    assert D[dst, src] == pytest.approx(2 * box2.scale[1])
    assert np.count_nonzero(D[:, src]) == 1


def test_design_matrix_constant_column(basis2, box2):
    rng = np.random.default_rng(0)
    x = box2.lower + rng.random((20, 2)) * (box2.upper - box2.lower)
    A = basis2.design_matrix(rng.random(20), x)
    assert A.shape == (20, basis2.p) == (20, 20)
    np.testing.assert_array_equal(A[:, 0], 1.0)


def test_basis_rejects_wrong_alpha(basis2):
    with pytest.raises(ParameterError):
        basis2.value(np.zeros(3), 0.0, np.zeros(2))


def test_to_dict_roundtrip_fields(basis2):
    d = basis2.to_dict()
    assert d["p"] == basis2.p and d["eta"] == 3 and d["family"] == "monomial"
