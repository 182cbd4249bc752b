import numpy as np
import pytest

from pencilscope.branches import analyze_crossing
from pencilscope.errors import NotPositiveDefiniteError, NotSemisimpleError, NotSimpleError, RootOnContourError
from pencilscope.evans import (
    Contour,
    evans_krein,
    evans_krein_generalized,
    evans_partial,
    high_order_derivative_gm1,
    semisimple_slopes,
    signature_from_evans,
    vanishing_partials,
    winding_number,
)
from pencilscope.krein import value_signature
from pencilscope.pencil import PolynomialPencil, dde_pencil, pencil_from_hamiltonian, real_characteristic_values

from systems import diagonal_pencil, example1, example3, kreinmismatch, quadratic1, quadratic2, random_unitary


class TestEvansKrein:
    def test_diagonal_closed_form(self):
        p = diagonal_pencil([-1.0, 1.0], [2.0, 1.0])
        for lam, mu in ((0.3, 0.0), (1.5 + 0.2j, 0.7)):
            np.testing.assert_allclose(evans_krein(p, lam, mu), (lam - 1 - mu) * (lam + 2 - mu))

    def test_generalized_weight(self):
        p = diagonal_pencil([-1.0, 1.0], [2.0, 1.0])
        S = np.diag([2.0, 3.0])
        np.testing.assert_allclose(evans_krein_generalized(p, S, 0.5, 0.25), (0.5 - 1 - 0.5) * (2.5 - 0.75))
        with pytest.raises(NotPositiveDefiniteError):
            evans_krein_generalized(p, np.diag([1.0, -1.0]), 0.5, 0.1)

    def test_partials_closed_form(self):
        # E = (λ − 1 − μ)(λ + 2 − μ) at (0, 0).
        p = diagonal_pencil([-1.0, 1.0], [2.0, 1.0])
        expected = {(1, 0): 1.0, (0, 1): -1.0, (1, 1): -2.0, (2, 0): 2.0, (0, 2): 2.0}
        for (a, b), value in expected.items():
            d = evans_partial(p, 0.0, a, b)
            np.testing.assert_allclose(d.value, value, atol=1e-8)
            assert abs(d.value - value) <= max(d.noise, 1e-12)
            assert d.noise < 1e-4


class TestSignatures:
    @pytest.mark.parametrize("builder", [example1, example3, kreinmismatch])
    def test_matches_graphical(self, builder):
        p = pencil_from_hamiltonian(builder())
        for lam, _ in real_characteristic_values(p):
            assert signature_from_evans(p, lam) == value_signature(p, lam).kappa

    def test_weighted_signature_unchanged(self):
        p = pencil_from_hamiltonian(example1())
        S = np.diag([1.0, 2.0, 0.5, 3.0])
        for lam, _ in real_characteristic_values(p):
            assert signature_from_evans(p, lam, S=S) == value_signature(p, lam).kappa

    def test_not_simple(self):
        with pytest.raises(NotSimpleError):
            signature_from_evans(quadratic2(), 1.0)
        with pytest.raises(NotSimpleError):
            signature_from_evans(quadratic1(), 1.0)

    def test_high_order_derivative(self):
        p = quadratic1()
        value = high_order_derivative_gm1(p, 1.0, 3)
        branch = analyze_crossing(p, 1.0, refine=False).branches[0].derivatives[3]
        np.testing.assert_allclose(value, branch, rtol=1e-6)
        np.testing.assert_allclose(value, 3.0, rtol=1e-6)


class TestSemisimple:
    def test_three_branches(self):
        Q = random_unitary(np.random.RandomState(3), 4)
        lam0 = -0.4
        slopes = np.array([-3.0, 0.5, 2.0])
        D0 = np.diag(np.append(-slopes * lam0, 5.0))
        D1 = np.diag(np.append(slopes, 0.0))
        p = PolynomialPencil(tuple(Q @ D @ Q.conj().T for D in (D0, D1)))
        np.testing.assert_allclose(semisimple_slopes(p, lam0), slopes, atol=1e-5)
        assert all(c.vanishes for c in vanishing_partials(p, lam0, 3))

    def test_partials_do_not_all_vanish_past_k(self):
        p = diagonal_pencil([1.0, -1.0], [-2.0, 2.0])
        checks = vanishing_partials(p, 1.0, 3)
        assert all(c.vanishes for c in checks if c.n + c.j < 2)
        assert not all(c.vanishes for c in checks if c.n + c.j == 2)

    def test_jordan_structure_rejected(self):
        with pytest.raises(NotSemisimpleError):
            semisimple_slopes(quadratic2(), 1.0)

    def test_not_a_characteristic_value(self):
        with pytest.raises(NotSemisimpleError):
            semisimple_slopes(quadratic1(), 0.0)


class TestWinding:
    def test_quadratic1(self):
        p = quadratic1()
        assert winding_number(p, Contour.rectangle(1.0, 0.5, 0.5)) == 3
        assert winding_number(p, Contour.rectangle(-1.0, 0.5, 0.5)) == 1
        assert winding_number(p, Contour.rectangle(0.0, 3.0, 3.0)) == 4
        assert winding_number(p, Contour.rectangle(5.0, 1.0, 1.0)) == 0

    def test_shifted_pencil(self):
        # det(diag(λ, λ − 3) − μI) with μ = 1 vanishes at 1 and 4.
        p = diagonal_pencil([0.0, 1.0], [-3.0, 1.0])
        assert winding_number(p, Contour.rectangle(1.0, 0.5, 0.5), mu=1.0) == 1
        assert winding_number(p, Contour.rectangle(0.0, 0.5, 0.5), mu=1.0) == 0

    def test_delay_pencil(self):
        p = dde_pencil([[-1.0]], [[0.5]], 1.0)
        assert winding_number(p, Contour.parse("-1,-0.5;0,-0.5;0,0.5;-1,0.5")) == 1
        assert winding_number(p, Contour.rectangle(2.0, 1.5, 3.0)) == 0

    def test_root_on_contour(self):
        with pytest.raises(RootOnContourError):
            winding_number(quadratic1(), Contour.parse("1,0;2,0;2,1;1,1"))

    def test_orientation(self):
        p = quadratic1()
        cw = Contour.parse("-1.5,-0.5;-1.5,0.5;-0.5,0.5;-0.5,-0.5")
        assert winding_number(p, cw) == -1

    def test_contour_validation(self):
        with pytest.raises(ValueError):
            Contour((0, 1))
        c = Contour.parse("0,0;1,0;1,1")
        assert c.vertices[0] == c.vertices[-1]
