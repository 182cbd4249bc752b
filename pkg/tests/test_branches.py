import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from pencilscope.branches import (
    analyze_crossing,
    default_window,
    find_crossings,
    geometric_multiplicity,
    order_of_vanishing,
    sample_branches,
)
from pencilscope.errors import NotSelfadjointError, OrderUndeterminedError
from pencilscope.pencil import PolynomialPencil, dde_pencil, pencil_from_hamiltonian, real_characteristic_values

from systems import diagonal_pencil, example1, quadratic1, quadratic2, random_pencil, random_unitary


def conjugated(pencil, Q):
    return PolynomialPencil(tuple(Q @ C @ Q.conj().T for C in pencil.coefficients))


class TestSampling:
    def test_values_are_sorted_spectra(self):
        rng = np.random.RandomState(0)
        p = random_pencil(rng, 3, 2)
        fam = sample_branches(p, -2.0, 2.0, 50)
        for i, lam in enumerate(fam.grid):
            np.testing.assert_allclose(np.sort(fam.values[i]), np.linalg.eigvalsh(p(lam)), atol=1e-10)

    def test_follows_analytic_labels_through_crossing(self):
        # Branches λ and 1 − λ cross at 1/2; the labelling must keep each line.
        Q = random_unitary(np.random.RandomState(1), 2)
        p = conjugated(diagonal_pencil([0.0, 1.0], [1.0, -1.0]), Q)
        fam = sample_branches(p, -1.0, 2.0, 60)
        slopes = np.diff(fam.values, axis=0) / np.diff(fam.grid)[:, None]
        np.testing.assert_allclose(np.sort(slopes[0]), [-1.0, 1.0], atol=1e-8)
        for j in range(2):
            np.testing.assert_allclose(slopes[:, j], slopes[0, j], atol=1e-6)

    def test_vectors_are_eigenvectors(self):
        rng = np.random.RandomState(2)
        p = random_pencil(rng, 3, 1)
        fam = sample_branches(p, -1.0, 1.0, 20)
        for i in (0, 7, 20):
            M = p(fam.grid[i])
            V = fam.vectors[i]
            np.testing.assert_allclose(M @ V, V * fam.values[i], atol=1e-10)

    def test_requires_selfadjoint(self):
        p = PolynomialPencil((np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2)))
        with pytest.raises(NotSelfadjointError):
            sample_branches(p, -1.0, 1.0, 10)

    def test_bad_window(self):
        with pytest.raises(ValueError):
            sample_branches(quadratic1(), 1.0, -1.0, 10)


class TestLocalAnalysis:
    @pytest.mark.parametrize(
        "poly,expected",
        [
            ([0.0, 2.0], (1, 1)),
            ([0.0, -0.5], (1, -1)),
            ([0.0, 0.0, 1.0], (2, 1)),
            ([0.0, 0.0, -3.0], (2, -1)),
            ([0.0, 0.0, 0.0, 1.0], (3, 1)),
            ([0.0, 0.0, 0.0, 0.0, -1.0], (4, -1)),
        ],
    )
    def test_order_and_sign_of_monomials(self, poly, expected):
        Q = random_unitary(np.random.RandomState(3), 2)
        p = conjugated(diagonal_pencil(poly, [2.0, 0.0, 1.0]), Q)
        assert order_of_vanishing(p, 0.0) == expected

    def test_quadratic1(self):
        p = quadratic1()
        assert geometric_multiplicity(p, 1.0) == 1
        assert order_of_vanishing(p, 1.0) == (3, 1)
        assert order_of_vanishing(p, -1.0)[0] == 1

    def test_quadratic2_two_branches(self):
        local = analyze_crossing(quadratic2(), 1.0)
        assert local.geometric_multiplicity == 2
        assert sorted(b.order for b in local.branches) == [1, 2]
        assert local.algebraic_multiplicity == 3

    def test_refines_perturbed_location(self):
        local = analyze_crossing(pencil_from_hamiltonian(example1()), np.sqrt(0.75) + 2e-9)
        np.testing.assert_allclose(local.lam0, np.sqrt(0.75), atol=1e-12)

    def test_no_kernel(self):
        assert analyze_crossing(quadratic1(), 0.0) is None
        with pytest.raises(OrderUndeterminedError):
            order_of_vanishing(quadratic1(), 0.0)

    def test_branch_selected_by_vector(self):
        p = diagonal_pencil([0.0, 1.0], [0.0, 0.0, -1.0])
        assert order_of_vanishing(p, 0.0, np.array([0.0, 1.0])) == (2, -1)
        assert order_of_vanishing(p, 0.0, np.array([1.0, 0.0])) == (1, 1)

    def test_delay_pencil_root(self):
        p = dde_pencil([[-1.0]], [[0.5]], 1.0)
        root = brentq(lambda x: x + 1 - 0.5 * np.exp(-x), -1.0, 0.0, xtol=1e-15)
        local = analyze_crossing(p, root, refine=False)
        assert [(b.order, b.sign) for b in local.branches] == [(1, 1)]
        np.testing.assert_allclose(local.branches[0].derivatives[1], 1 + 0.5 * np.exp(-root), rtol=1e-6)


class TestCrossings:
    def test_example1(self):
        p = pencil_from_hamiltonian(example1())
        fam = sample_branches(p, *default_window(p), 400)
        events = find_crossings(p, fam)
        np.testing.assert_allclose(
            [e.lam0 for e in events], [-np.sqrt(2), -np.sqrt(0.75), np.sqrt(0.75), np.sqrt(2)], atol=1e-10
        )
        assert all(e.k == 1 and e.alpha == 1 for e in events)

    def test_touching_zero_is_found(self):
        # μ = λ² touches zero without a sign change.
        p = diagonal_pencil([0.0, 0.0, 1.0], [1.0])
        fam = sample_branches(p, -1.0, 1.3, 37)
        events = find_crossings(p, fam)
        assert len(events) == 1
        assert events[0].orders == (2,)
        np.testing.assert_allclose(events[0].lam0, 0.0, atol=1e-6)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 10_000))
    def test_algebraic_multiplicities_match_companion(self, seed):
        rng = np.random.RandomState(seed)
        p = random_pencil(rng, 2, 2)
        real = real_characteristic_values(p)
        fam = sample_branches(p, *default_window(p), 400)
        events = find_crossings(p, fam)
        assert sum(e.alpha for e in events) == sum(m for _, m in real)
