import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pencilscope.branches import analyze_crossing
from pencilscope.errors import DegenerateGramError, OrderUndeterminedError
from pencilscope.krein import (
    CanonicalChainSet,
    RootChain,
    chain_residuals,
    chains_from_branch_derivatives,
    gram_indices,
    graphical_indices,
    lift_chain,
    report_from_local,
    root_chains,
    value_signature,
)
from pencilscope.linalg import principal_angles
from pencilscope.pencil import (
    PolynomialPencil,
    ResolventShiftPencil,
    companion_matrix,
    pencil_from_hamiltonian,
    real_characteristic_values,
)

from systems import diagonal_pencil, example3, quadratic1, quadratic2, random_pencil, random_unitary


class TestGraphicalIndices:
    @pytest.mark.parametrize(
        "m,eta,expected",
        [(1, 1, (1, 0)), (1, -1, (0, 1)), (2, 1, (1, 1)), (2, -1, (1, 1)), (3, 1, (2, 1)), (3, -1, (1, 2)), (4, 1, (2, 2))],
    )
    def test_table(self, m, eta, expected):
        assert graphical_indices(m, eta) == expected

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 30), st.sampled_from([1, -1]))
    def test_sum_is_order(self, m, eta):
        kp, km = graphical_indices(m, eta)
        assert kp + km == m
        assert kp - km == (eta if m % 2 else 0)

    def test_invalid(self):
        with pytest.raises(ValueError):
            graphical_indices(0, 1)
        with pytest.raises(ValueError):
            graphical_indices(2, 0)

    def test_value_signature_sums_branches(self):
        rep = value_signature(quadratic2(), 1.0)
        assert rep.alpha == 3
        assert rep.kappa_plus + rep.kappa_minus == 3

    def test_value_signature_requires_kernel(self):
        with pytest.raises(OrderUndeterminedError):
            value_signature(quadratic1(), 0.25)

    def test_example3_sequence(self):
        p = pencil_from_hamiltonian(example3())
        lams = [-9.2077703480928958, -4.7931758957030902, -3.2068241042969098, 1.2077703480928957]
        assert [report_from_local(analyze_crossing(p, lam)).kappa for lam in lams] == [1, -1, 1, -1]


class TestRootChains:
    def test_quadratic1(self):
        chains = root_chains(quadratic1(), 1.0)
        assert chains.lengths == [3]
        assert chains.chains[0].residual <= 1e-12
        np.testing.assert_allclose(np.abs(chains.chains[0].starter), [1.0, 0.0], atol=1e-12)
        assert root_chains(quadratic1(), -1.0).lengths == [1]

    def test_quadratic2(self):
        chains = root_chains(quadratic2(), 1.0)
        assert chains.lengths == [2, 1]
        assert chains.algebraic_multiplicity == 3
        angle = principal_angles(chains.chains[0].starter[:, None], np.ones((2, 1)))
        assert angle[0] <= 1e-10
        assert chains.flag(1).shape[1] == 2
        assert chains.flag(2).shape[1] == 1

    def test_no_kernel_gives_empty_set(self):
        assert root_chains(quadratic1(), 0.3).lengths == []

    def test_jordan_block_diagonal(self):
        # diag((λ−2)³, (λ−2), 1 + λ²) conjugated: partial multiplicities {3, 1}.
        Q = random_unitary(np.random.RandomState(0), 3)
        base = diagonal_pencil([-8.0, 12.0, -6.0, 1.0], [-2.0, 1.0], [1.0, 0.0, 1.0])
        p = PolynomialPencil(tuple(Q @ C @ Q.conj().T for C in base.coefficients))
        chains = root_chains(p, 2.0)
        assert chains.lengths == [3, 1]
        assert max(c.residual for c in chains.chains) <= 1e-10

    def test_residuals_detect_broken_chain(self):
        chain = root_chains(quadratic1(), 1.0).chains[0]
        bad = chain.vectors.copy()
        bad[:, 2] += np.array([0.0, 1.0])
        assert chain_residuals(quadratic1(), 1.0, bad)[2] > 1e-3

    def test_lift_is_companion_jordan_chain(self):
        # C V = V J₀ with J₀ = λ₀I + N when the leading coefficient is I.
        for p, lam0 in ((quadratic1(), 1.0), (quadratic2(), 1.0)):
            C = companion_matrix(p)
            for chain in root_chains(p, lam0).chains:
                V = lift_chain(p, lam0, chain.vectors)
                m = chain.length
                J0 = lam0 * np.eye(m) + np.eye(m, k=1)
                np.testing.assert_allclose(C @ V, V @ J0, atol=1e-10)


class TestGramIndices:
    def test_quadratic1(self):
        p = quadratic1()
        g = gram_indices(p, 1.0, root_chains(p, 1.0))
        assert (g.kappa_plus, g.kappa_minus) == (2, 1)
        g = gram_indices(p, -1.0, root_chains(p, -1.0))
        assert (g.kappa_plus, g.kappa_minus) == (0, 1)

    def test_quadratic2(self):
        p = quadratic2()
        g = gram_indices(p, 1.0, root_chains(p, 1.0))
        rep = value_signature(p, 1.0)
        assert (g.kappa_plus, g.kappa_minus) == (rep.kappa_plus, rep.kappa_minus) == (2, 1)

    def test_chain_choice_invariance(self):
        # Adding kernel vectors and shorter chains to a chain's tail keeps a valid canonical set.
        p = quadratic2()
        base = root_chains(p, 1.0)
        long, short = base.chains
        rng = np.random.RandomState(1)
        ref = gram_indices(p, 1.0, base)
        for _ in range(10):
            a, b = rng.randn(2) + 1j * rng.randn(2)
            c = rng.randn() + 1j * rng.randn()
            vecs = long.vectors.copy() * c
            vecs[:, 1] += a * short.starter
            s_vec = short.vectors * b
            chains = (RootChain(1.0, vecs), RootChain(1.0, s_vec))
            assert np.max(chain_residuals(p, 1.0, vecs)) <= 1e-10
            g = gram_indices(p, 1.0, CanonicalChainSet(1.0, chains))
            assert (g.kappa_plus, g.kappa_minus) == (ref.kappa_plus, ref.kappa_minus)

    def test_non_canonical_set_is_degenerate(self):
        # A length-1 chain from the top of a length-2 Jordan block has a null Gram matrix.
        p = diagonal_pencil([1.0, -2.0, 1.0], [1.0, 0.0, 1.0])
        bad = CanonicalChainSet(1.0, (RootChain(1.0, np.array([[1.0], [0.0]])),))
        with pytest.raises(DegenerateGramError):
            gram_indices(p, 1.0, bad)

    def test_requires_polynomial(self):
        with pytest.raises(TypeError):
            gram_indices(ResolventShiftPencil(quadratic1(), 0.5), 1.0, root_chains(quadratic1(), 1.0))

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10_000))
    def test_totals_equal_graphical(self, seed):
        rng = np.random.RandomState(seed)
        p = random_pencil(rng, rng.randint(1, 4), rng.randint(1, 4))
        for lam, mult in real_characteristic_values(p):
            local = analyze_crossing(p, lam)
            if mult != 1 or local is None:
                continue
            g = gram_indices(p, local.lam0, root_chains(p, local.lam0))
            rep = report_from_local(local)
            assert (g.kappa_plus, g.kappa_minus) == (rep.kappa_plus, rep.kappa_minus)


class TestBranchDerivativeChains:
    @pytest.mark.parametrize("builder,lam0", [(quadratic1, 1.0), (quadratic1, -1.0), (quadratic2, 1.0)])
    def test_match_root_chains(self, builder, lam0):
        p = builder()
        derived = chains_from_branch_derivatives(p, lam0)
        direct = root_chains(p, lam0)
        assert sorted(derived.lengths) == sorted(direct.lengths)
        assert max(c.residual for c in derived.chains) <= 1e-6
        for s in range(1, max(direct.lengths) + 1):
            assert np.max(principal_angles(derived.flag(s), direct.flag(s)), initial=0.0) <= 1e-6


class TestResolventShiftChains:
    @pytest.mark.parametrize("delta", [0.5, -0.3, 2.0])
    def test_quadratic1(self, delta):
        p = quadratic1()
        a = root_chains(p, 1.0)
        b = root_chains(ResolventShiftPencil(p, delta), 1.0)
        assert a.lengths == b.lengths
        assert principal_angles(a.flag(1), b.flag(1))[0] <= 1e-8
