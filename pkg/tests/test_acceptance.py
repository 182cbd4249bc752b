"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the summary lines.
"""

import io
import json

import numpy as np

from pencilscope.branches import analyze_crossing, find_crossings, geometric_multiplicity, order_of_vanishing, sample_branches
from pencilscope.cli import run
from pencilscope.evans import (
    Contour,
    evans_slope_sign,
    semisimple_slopes,
    signature_from_evans,
    vanishing_partials,
    winding_number,
)
from pencilscope.index import conservation_check, unstable_count
from pencilscope.krein import chains_from_branch_derivatives, gram_indices, report_from_local, root_chains, value_signature
from pencilscope.linalg import principal_angles
from pencilscope.pencil import (
    PolynomialPencil,
    ResolventShiftPencil,
    characteristic_values,
    pencil_from_hamiltonian,
    real_characteristic_values,
)
from pencilscope.problems import load_fixture

from systems import random_hamiltonian, random_pencil, random_unitary


def verdict(n, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    return ok


def crossings(pencil, lo, hi, steps=400):
    family = sample_branches(pencil, lo, hi, steps)
    return find_crossings(pencil, family)


def sorted_multiset(pairs):
    return sorted(pairs, key=lambda vm: (vm[0].real, vm[0].imag))


class TestAcceptance:
    def test_criterion_01_example1(self):
        problem = load_fixture("example1")
        pencil = problem.pencil()
        real = sorted(real_characteristic_values(pencil))
        lams = np.array([v for v, _ in real])
        # Roots of (0.75 − λ²)(2 − λ²).
        expected = np.array([-np.sqrt(2.0), -np.sqrt(0.75), np.sqrt(0.75), np.sqrt(2.0)])
        located = len(real) == 4 and np.allclose(lams, expected, rtol=0, atol=1e-8)
        kappas = [value_signature(pencil, lam).kappa for lam in lams]
        n_u = unstable_count(problem.system()).n_u
        ok = located and kappas == [1, 1, -1, -1] and n_u == 0
        verdict(1, ok, f"real values {np.round(lams, 10).tolist()}, kappa {kappas}, n_u {n_u}")
        assert ok

    def test_criterion_02_example2(self):
        problem = load_fixture("example2")
        pencil = problem.pencil()
        real = real_characteristic_values(pencil)
        cvals = sorted(characteristic_values(pencil), key=lambda vm: vm[0].imag)
        values_ok = (
            len(cvals) == 2
            and [m for _, m in cvals] == [2, 2]
            and abs(cvals[0][0] + 2j) <= 1e-7
            and abs(cvals[1][0] - 2j) <= 1e-7
        )
        rep = unstable_count(problem.system())
        ok = not real and values_ok and rep.n_u == 2 and rep.n_u_direct == 2 and rep.residual == 0
        verdict(
            2,
            ok,
            f"{len(real)} real values, values {[(complex(np.round(v, 9)), m) for v, m in cvals]}, "
            f"n_u formula {rep.n_u} direct {rep.n_u_direct}, residual {rep.residual}",
        )
        assert ok

    def test_criterion_03_example3(self):
        problem = load_fixture("example3")
        pencil = problem.pencil()
        events = crossings(pencil, -12.0, 4.0)
        lams = [ev.lam0 for ev in events]
        alphas = [ev.alpha for ev in events]
        kappas = [report_from_local(ev.local).kappa for ev in events]
        n_u = unstable_count(problem.system()).n_u
        ok = len(events) == 4 and alphas == [1, 1, 1, 1] and kappas == [1, -1, 1, -1] and n_u == 0
        verdict(3, ok, f"values {np.round(lams, 8).tolist()}, kappa {kappas}, n_u {n_u}")
        assert ok

    def test_criterion_04_quadratic1(self):
        pencil = load_fixture("quadratic1").pencil()
        cvals = sorted_multiset(characteristic_values(pencil))
        values_ok = (
            len(cvals) == 2
            and abs(cvals[0][0] - (-1)) <= 1e-6
            and cvals[0][1] == 1
            and abs(cvals[1][0] - 1) <= 1e-6
            and cvals[1][1] == 3
        )
        gms = (geometric_multiplicity(pencil, 1.0), geometric_multiplicity(pencil, -1.0))
        chains = root_chains(pencil, 1.0)
        residual = max(c.residual for c in chains.chains)
        w1 = winding_number(pencil, Contour.rectangle(1.0, 0.5, 0.5))
        w2 = winding_number(pencil, Contour.rectangle(-1.0, 0.5, 0.5))
        ok = values_ok and gms == (1, 1) and chains.lengths == [3] and residual <= 1e-8 and (w1, w2) == (3, 1)
        verdict(
            4,
            ok,
            f"values {[(complex(np.round(v, 7)), m) for v, m in cvals]}, gm {gms}, "
            f"chain lengths {chains.lengths} residual {residual:.2e}, windings ({w1}, {w2})",
        )
        assert ok

    def test_criterion_05_quadratic2(self):
        pencil = load_fixture("quadratic2").pencil()
        gm = geometric_multiplicity(pencil, 1.0)
        chains = root_chains(pencil, 1.0)
        long = [c for c in chains.chains if c.length == 2]
        angle = float(principal_angles(long[0].starter[:, None], np.array([[1.0], [1.0]]))[0]) if long else np.inf
        orders = sorted((order_of_vanishing(pencil, 1.0, b)[0] for b in range(gm)), reverse=True)
        ok = gm == 2 and sorted(chains.lengths, reverse=True) == [2, 1] and angle <= 1e-6 and orders == [2, 1]
        verdict(5, ok, f"gm {gm}, chain lengths {chains.lengths}, starter angle {angle:.2e}, branch orders {orders}")
        assert ok

    def test_criterion_06_gram_equals_graphical(self):
        rng = np.random.RandomState(6)
        mismatches, checked, pencils = 0, 0, 0
        while pencils < 50:
            n = rng.randint(1, 5)
            p = rng.randint(1, 4)
            pencil = random_pencil(rng, n, p)
            real = [v for v, m in real_characteristic_values(pencil) if m == 1]
            cvals = characteristic_values(pencil)
            if any(m > 1 for _, m in cvals) or not real:
                continue
            lams = np.sort(np.array(real))
            if lams.size > 1 and np.min(np.diff(lams)) < 1e-3:
                continue
            pencils += 1
            for lam in lams:
                graphical = value_signature(pencil, lam)
                chains = root_chains(pencil, lam)
                gram = gram_indices(pencil, chains.lam0, chains)
                checked += 1
                if (gram.kappa_plus, gram.kappa_minus) != (graphical.kappa_plus, graphical.kappa_minus):
                    mismatches += 1
        ok = mismatches == 0
        verdict(6, ok, f"{pencils} pencils, {checked} real values, {mismatches} mismatches")
        assert ok

    def test_criterion_07_evans_signatures(self):
        agree, total, slope_disagree = 0, 0, {}
        for name in ("kreinmatch", "kreinmismatch"):
            pencil = load_fixture(name).pencil()
            disagree = 0
            for lam, m in real_characteristic_values(pencil):
                assert m == 1
                graphical = value_signature(pencil, lam).kappa
                total += 1
                agree += signature_from_evans(pencil, lam) == graphical
                disagree += -evans_slope_sign(pencil, lam) != graphical
            slope_disagree[name] = disagree
        ok = total == 8 and agree == 8 and slope_disagree["kreinmismatch"] == 2
        verdict(7, ok, f"evans agrees at {agree}/{total}; -sign(D') disagreements {slope_disagree}")
        assert ok

    def test_criterion_08_conservation(self):
        rng = np.random.RandomState(8)
        bad_residual, bad_inequality = 0, 0
        for i in range(100):
            n2 = 4 if i % 2 == 0 else 6
            sys = random_hamiltonian(rng, n2)
            rep = conservation_check(pencil_from_hamiltonian(sys), steps=200)
            bad_residual += rep.residual != 0
            bad_inequality += not rep.inequality_holds
        ok = bad_residual == 0 and bad_inequality == 0
        verdict(8, ok, f"100 pencils, {bad_residual} nonzero residuals, {bad_inequality} inequality violations")
        assert ok

    def test_criterion_09_branch_derivative_chains(self):
        worst_res, worst_angle = 0.0, 0.0
        for name in ("quadratic1", "quadratic2"):
            pencil = load_fixture(name).pencil()
            for lam, _ in real_characteristic_values(pencil):
                lam = round(lam)
                derived = chains_from_branch_derivatives(pencil, lam)
                direct = root_chains(pencil, lam)
                worst_res = max(worst_res, max(c.residual for c in derived.chains))
                assert sorted(derived.lengths) == sorted(direct.lengths)
                for s in range(1, max(direct.lengths) + 1):
                    angles = principal_angles(derived.flag(s), direct.flag(s))
                    assert derived.flag(s).shape[1] == direct.flag(s).shape[1]
                    worst_angle = max(worst_angle, float(np.max(angles, initial=0.0)))
        ok = worst_res <= 1e-6 and worst_angle <= 1e-6
        verdict(9, ok, f"max residual {worst_res:.2e}, max flag angle {worst_angle:.2e}")
        assert ok

    def test_criterion_10_resolvent_shift(self):
        def compare(pencil, lam, delta):
            a = root_chains(pencil, lam)
            b = root_chains(ResolventShiftPencil(pencil, delta), lam)
            same = sorted(a.lengths) == sorted(b.lengths)
            sa = np.column_stack([c.starter for c in a.chains])
            sb = np.column_stack([c.starter for c in b.chains])
            angle = float(np.max(principal_angles(sa, sb), initial=0.0))
            return same and angle <= 1e-6, angle

        pencil = load_fixture("quadratic1").pencil()
        results = [compare(pencil, lam, 0.5) for lam in (1.0, -1.0)]
        rng = np.random.RandomState(10)
        tested = 0
        while tested < 10:
            pencil = random_pencil(rng, rng.randint(2, 4), rng.randint(1, 3))
            real = real_characteristic_values(pencil)
            if not real:
                continue
            lam = real[0][0]
            local = analyze_crossing(pencil, lam)
            results.append(compare(pencil, local.lam0, 0.5))
            tested += 1
        passed = sum(r[0] for r in results)
        worst = max(r[1] for r in results)
        ok = passed == len(results)
        verdict(10, ok, f"{passed}/{len(results)} equivalent, worst starter angle {worst:.2e}")
        assert ok

    def test_criterion_11_sweep(self):
        out, err = io.StringIO(), io.StringIO()
        code = run(["sweep", "--input", "branchprev"], stdout=out, stderr=err)
        data = json.loads(out.getvalue())
        reports = {r["t"]: r for r in data["reports"]}
        all_real = all(reports[t]["all_real"] for t in (0.0, 1.0, 4.0))
        labels = [c["label"] for c in reports[1.0]["collisions"]]
        same = any(lbl.startswith("same") for lbl in labels)
        opposite = any(lbl.startswith("opposite") for lbl in labels)
        ok = code == 0 and all_real and same and not opposite
        verdict(11, ok, f"exit {code}, all real {all_real}, t=1 collisions {labels}")
        assert ok

    def test_criterion_12_semisimple(self):
        rng = np.random.RandomState(12)
        Q = random_unitary(rng, 3)
        lam0 = 0.7
        # diag(−3(λ−λ₀), 2(λ−λ₀), 4 + λ²) conjugated by Q.
        D0 = np.diag([3 * lam0, -2 * lam0, 4.0])
        D1 = np.diag([-3.0, 2.0, 0.0])
        D2 = np.diag([0.0, 0.0, 1.0])
        pencil = PolynomialPencil(tuple(Q @ D @ Q.conj().T for D in (D0, D1, D2)))
        slopes = np.sort(semisimple_slopes(pencil, lam0))
        local = analyze_crossing(pencil, lam0, refine=False)
        branch_slopes = np.sort([b.derivatives[1] for b in local.branches])
        checks = vanishing_partials(pencil, lam0, 2)
        slopes_ok = slopes.shape == (2,) and np.allclose(slopes, branch_slopes, rtol=0, atol=1e-5)
        ok = slopes_ok and all(c.vanishes for c in checks)
        verdict(
            12,
            ok,
            f"evans slopes {np.round(slopes, 8).tolist()}, branch slopes {np.round(branch_slopes, 8).tolist()}, "
            f"{sum(c.vanishes for c in checks)}/{len(checks)} mixed partials vanish",
        )
        assert ok
