"""Palindromic matrix polynomials: eigenvalue location and sign data."""

import numpy as np
import pytest

from paraherm import laurent as lp
from paraherm import matfun as mf
from paraherm import palindromic as pal
from paraherm.errors import (
    MinusOneEigenvalue,
    NearDegenerate,
    NotEigenvector,
    NotPalindromic,
    NotRegular,
    RangeError,
    ShapeError,
)

rng = np.random.default_rng(2718)


def worked_example():
    """P = [[2z, 1+z], [z^2+z, 2z]], grade 2; lambda = 1 has multiplicity 2."""
    P0 = np.array([[0, 1], [0, 0]], dtype=complex)
    P1 = np.array([[2, 1], [1, 2]], dtype=complex)
    P2 = np.array([[0, 0], [1, 0]], dtype=complex)
    return pal.PalindromicPoly((P0, P1, P2))


def pencil_52():
    """The 2x2 pencil with one negative and one positive sign characteristic."""
    P0 = np.array([[2, 1 - 1j], [1, 1j]], dtype=complex)
    P1 = np.array([[2, 1], [1 + 1j, -1j]], dtype=complex)
    return pal.PalindromicPoly((P0, P1))


def pencil_eps(eps):
    """A z + A* with A = [[1, i], [i, eps^2]]: eigenvalues (1 +- i eps)^2 / (1+eps^2)."""
    A = np.array([[1, 1j], [1j, eps**2]], dtype=complex)
    return pal.PalindromicPoly((A.conj().T, A))


def pencil_coupled(eps):
    """B z + B* with B = [[i, eps], [eps, i]]: both signs negative."""
    B = np.array([[1j, eps], [eps, 1j]], dtype=complex)
    return pal.PalindromicPoly((B.conj().T, B))


def unimodular_pencil(n, seed):
    """Random pencil B z + B* with i(B - B*) definite, so the whole spectrum
    sits on the unit circle."""
    g = np.random.default_rng(seed)
    G = g.normal(size=(n, n)) + 1j * g.normal(size=(n, n))
    c = np.linalg.norm(G, 2) + 0.5
    B = 1j * c * np.eye(n) + G
    return pal.PalindromicPoly((B.conj().T, B))


class TestConstruction:
    def test_grade_and_size(self):
        P = worked_example()
        assert P.g == 2 and P.n == 2

    def test_not_palindromic(self):
        P0 = np.array([[1.0, 0], [0, 1]], dtype=complex)
        P1 = np.array([[0, 2.0], [0, 0]], dtype=complex)
        with pytest.raises(NotPalindromic):
            pal.PalindromicPoly((P0, P1))

    def test_non_square(self):
        with pytest.raises(ShapeError):
            pal.PalindromicPoly((np.zeros((2, 3)), np.zeros((2, 3))))

    def test_call_and_deriv(self):
        P = worked_example()
        z = 0.3 + 0.4j
        direct = (
            P.coeffs[0] + P.coeffs[1] * z + P.coeffs[2] * z**2
        )
        assert np.max(np.abs(P(z) - direct)) < 1e-14
        dd = P.coeffs[1] + 2 * z * P.coeffs[2]
        assert np.max(np.abs(P.deriv(z) - dd)) < 1e-14


class TestToParaHermitian:
    def test_worked_example_shift(self):
        R = pal.to_para_hermitian(worked_example())
        assert R.den == 1
        assert mf.is_para_hermitian(R)["ok"]
        # R = [[2, z^{-1}+1], [z+1, 2]]
        want01 = lp.lp_add(lp.lp_monomial(-1), lp.lp_const(1.0))
        assert lp.lp_sub(R.entry(0, 1), want01).coeff_scale < 1e-14
        assert lp.lp_sub(R.entry(0, 0), lp.lp_const(2.0)).coeff_scale < 1e-14

    def test_odd_grade_needs_half_powers(self):
        R = pal.to_para_hermitian(pencil_52())
        assert R.den == 2
        assert mf.is_para_hermitian(R)["ok"]

    def test_constant_real(self):
        P = pal.PalindromicPoly((3.0 * np.eye(2),))
        R = pal.to_para_hermitian(P)
        assert R.den == 1
        assert mf.mat_sub(R, mf.mat_scale(3.0, mf.mat_eye(2))).coeff_scale < 1e-14


class TestUnimodularEigenvalues:
    def test_worked_example_double_root(self):
        got = pal.unimodular_eigenvalues(worked_example())
        assert len(got) == 1
        lam, mult = got[0]
        assert abs(lam - 1.0) < 1e-6
        assert mult == 2

    def test_pencil_roots_match_determinant(self):
        got = pal.unimodular_eigenvalues(pencil_52())
        # det P(z) = -(1+3i) z^2 - 3 z + (3i - 1), roots straight from numpy
        roots = np.roots([-(1 + 3j), -3.0, 3j - 1.0])
        assert len(got) == 2
        for lam, mult in got:
            assert mult == 1
            assert np.min(np.abs(roots - lam)) < 1e-8

    def test_off_circle_spectrum_empty(self):
        # (z - 2)(z - 1/2) I = (z^2 - 2.5 z + 1) I is palindromic, roots off S1
        P = pal.PalindromicPoly(
            (np.eye(2) + 0j, -2.5 * np.eye(2) + 0j, np.eye(2) + 0j)
        )
        assert pal.unimodular_eigenvalues(P) == []

    def test_singular_rejected(self):
        Z = np.zeros((2, 2), dtype=complex)
        D = np.diag([1.0, 0.0]).astype(complex)
        with pytest.raises(NotRegular):
            pal.unimodular_eigenvalues(pal.PalindromicPoly((Z, D, Z)))

    def test_minus_one_flagged(self):
        P = pal.PalindromicPoly((np.eye(2) + 0j, np.eye(2) + 0j))
        with pytest.raises(MinusOneEigenvalue):
            pal.unimodular_eigenvalues(P)

    def test_minus_one_reachable_with_rotated_cut(self):
        P = pal.PalindromicPoly((np.eye(2) + 0j, np.eye(2) + 0j))
        got = pal.unimodular_eigenvalues(P, branch_angle=np.pi / 2)
        assert len(got) == 1
        lam, mult = got[0]
        assert abs(lam + 1.0) < 1e-6 and mult == 2

    def test_tol_range(self):
        with pytest.raises(RangeError):
            pal.unimodular_eigenvalues(worked_example(), tol=0.5)


class TestSignCharacteristics:
    def test_worked_example(self):
        rep = pal.sign_characteristics(worked_example(), 1.0)
        assert len(rep.entries) == 1
        e = rep.entries[0]
        assert e["m"] == 2
        assert e["eps"] == 1
        assert e["feature"] == 0
        assert abs(e["c"] - 0.25) < 1e-6, f"leading coefficient {e['c']}"

    def test_multiplicity_sum(self):
        """Partial multiplicities at lambda add up to the algebraic
        multiplicity of lambda as a determinant root (2 here)."""
        rep = pal.sign_characteristics(worked_example(), 1.0)
        assert sum(e["m"] for e in rep.entries) == 2

    def test_pencil_signs(self):
        P = pencil_52()
        pairs = pal.unimodular_eigenvalues(P)
        assert len(pairs) == 2
        signs = {}
        for lam, _ in pairs:
            rep = pal.sign_characteristics(P, lam)
            assert len(rep.entries) == 1
            signs[complex(lam)] = rep.entries[0]["eps"]
        lam_neg = min(signs, key=lambda z: z.real)  # the one near -0.985+0.17i
        assert signs[lam_neg] == -1
        assert signs[max(signs, key=lambda z: z.real)] == +1

    def test_non_eigenvalue_gives_no_entries(self):
        rep = pal.sign_characteristics(worked_example(), np.exp(2.0j))
        assert rep.entries == ()

    def test_even_grade_ignores_branch(self):
        r0 = pal.sign_characteristics(worked_example(), 1.0)
        r1 = pal.sign_characteristics(
            worked_example(), 1.0, branch_angle=2 * np.pi
        )
        assert [e["eps"] for e in r0.entries] == [e["eps"] for e in r1.entries]
        assert [e["m"] for e in r0.entries] == [e["m"] for e in r1.entries]

    def test_odd_grade_global_flip(self):
        """Opposite square-root branch: every sign flips at once, so the
        products across eigenvalues are branch-invariant."""
        P = pencil_eps(0.1)
        pairs = pal.unimodular_eigenvalues(P)
        assert len(pairs) == 2
        eps0, eps1 = [], []
        for lam, _ in pairs:
            r0 = pal.sign_characteristics(P, lam)
            r1 = pal.sign_characteristics(P, lam, branch_angle=2 * np.pi)
            eps0.append(r0.entries[0]["eps"])
            eps1.append(r1.entries[0]["eps"])
        assert eps1 == [-e for e in eps0], f"{eps0} vs {eps1}"
        assert eps0[0] * eps0[1] == eps1[0] * eps1[1]


class TestSignSimple:
    def test_scale_invariance(self):
        P = pencil_52()
        pairs = pal.unimodular_eigenvalues(P)
        lam = pairs[0][0]
        v = pal.null_eigenvector(P, lam)
        base = pal.sign_simple(P, lam, v)
        for _ in range(20):
            c = rng.normal() + 1j * rng.normal()
            if abs(c) < 1e-3:
                c = 1.0 + 1j
            got = pal.sign_simple(P, lam, c * v)
            assert got["sign"] == base["sign"]
            # value scales by |c|^2
            assert abs(got["value"] - abs(c) ** 2 * base["value"]) < 1e-8 * max(
                1.0, abs(c) ** 2
            )

    def test_rejects_non_eigenvector(self):
        P = pencil_52()
        lam = pal.unimodular_eigenvalues(P)[0][0]
        with pytest.raises(NotEigenvector):
            pal.sign_simple(P, lam, np.array([1.0, 0.0]))

    def test_rejects_degenerate_eigenvalue(self):
        """Two decoupled copies make lambda doubly degenerate, where the
        simple-eigenvalue formula has no meaning."""
        A = np.array([[1, 1j], [1j, 0.01]], dtype=complex)
        Z = np.zeros((2, 2), dtype=complex)
        B = np.block([[A, Z], [Z, A]])
        P = pal.PalindromicPoly((B.conj().T, B))
        pairs = pal.unimodular_eigenvalues(P)
        lam = pairs[0][0]
        v = pal.null_eigenvector(P, lam)
        with pytest.raises(NearDegenerate):
            pal.sign_simple(P, lam, v)

    def test_decoupled_pair_values(self):
        for eps in (0.05, 0.2):
            P = pencil_eps(eps)
            want = 2 * eps * np.sqrt(1 + eps**2)
            lam1 = (1 + 1j * eps) ** 2 / (1 + eps**2)
            v1 = np.array([eps, 1.0], dtype=complex)
            got = pal.sign_simple(P, lam1, v1)
            assert abs(got["value"] + want) < 1e-8
            lam2 = (1 - 1j * eps) ** 2 / (1 + eps**2)
            v2 = np.array([-eps, 1.0], dtype=complex)
            got = pal.sign_simple(P, lam2, v2)
            assert abs(got["value"] - want) < 1e-8

    def test_branch_flip_odd_grade(self):
        P = pencil_eps(0.1)
        lam1 = (1 + 0.1j) ** 2 / 1.01
        v1 = np.array([0.1, 1.0], dtype=complex)
        a = pal.sign_simple(P, lam1, v1)
        b = pal.sign_simple(P, lam1, v1, branch_angle=2 * np.pi)
        assert a["sign"] == -b["sign"]
        assert abs(a["value"] + b["value"]) < 1e-10


class TestRouteConsistency:
    def test_named_pencils_agree(self):
        cases = [pencil_52(), pencil_eps(0.1), pencil_coupled(0.3)]
        for P in cases:
            for lam, mult in pal.unimodular_eigenvalues(P):
                if mult != 1:
                    continue
                rep = pal.sign_characteristics(P, lam)
                assert len(rep.entries) == 1
                v = pal.null_eigenvector(P, lam)
                simple = pal.sign_simple(P, lam, v)
                assert rep.entries[0]["eps"] == simple["sign"], (
                    f"routes disagree at {lam}"
                )

    def test_random_pencils_agree(self):
        """Taylor fit and the derivative formula give the same sign for
        every simple unimodular eigenvalue, over a spread of random pencils
        whose spectrum is forced onto the circle."""
        checked = 0
        draws = 0
        seed = 0
        while checked < 50:  # 50 accepted pencils
            seed += 1
            draws += 1
            assert draws < 250, "ensemble construction keeps failing"
            n = 2 + (seed % 2)
            P = unimodular_pencil(n, seed=9000 + seed)
            pairs = pal.unimodular_eigenvalues(P)
            lams = [lam for lam, mult in pairs if mult == 1]
            if len(lams) != n:
                continue  # clustered spectrum, skip the draw
            if min(abs(lam + 1.0) for lam in lams) < 0.05:
                continue  # too close to the branch cut
            gaps = np.abs(
                np.subtract.outer(lams, lams)[~np.eye(len(lams), dtype=bool)]
            )
            if gaps.min() < 0.05:
                continue
            R = pal.to_para_hermitian(P)
            from paraherm.evd import analytic_evd

            ev = analytic_evd(R)
            for lam in lams:
                rep = pal.sign_characteristics(P, lam, evd=ev)
                assert len(rep.entries) == 1
                assert rep.entries[0]["m"] == 1
                v = pal.null_eigenvector(P, lam)
                simple = pal.sign_simple(P, lam, v)
                assert rep.entries[0]["eps"] == simple["sign"], (
                    f"seed {seed}: routes disagree at {lam}"
                )
            checked += 1


class TestPerturbation:
    def test_structured_escape(self):
        eps = 0.1
        P = pencil_eps(eps)
        dA = np.array([[0, 0], [0, -2 * eps**2]], dtype=complex)
        dP = pal.PalindromicPoly((dA.conj().T, dA))
        pairs = pal.unimodular_eigenvalues(P)
        rep = pal.perturbation_check(P, dP, pairs)
        assert rep["moved_off_circle"]
        mu = (1 + eps) / (1 - eps)
        got = sorted(abs(z) for z in rep["new_eigenvalues"])
        assert abs(got[0] - 1 / mu) < 1e-8
        assert abs(got[1] - mu) < 1e-8

    def test_zero_perturbation(self):
        P = pencil_eps(0.1)
        zero = pal.PalindromicPoly(
            (np.zeros((2, 2), dtype=complex), np.zeros((2, 2), dtype=complex))
        )
        pairs = pal.unimodular_eigenvalues(P)
        rep = pal.perturbation_check(P, zero, pairs)
        assert not rep["moved_off_circle"]
        assert rep["max_off_circle"] < 1e-10

    def test_robust_pair_stays(self):
        """The coupled pencil keeps its eigenvalues on the circle under any
        small palindromic perturbation."""
        P = pencil_coupled(0.3)
        pairs = pal.unimodular_eigenvalues(P)
        for trial in range(5):
            dB = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            dB *= 0.08 / np.linalg.norm(dB, 2)
            dP = pal.PalindromicPoly((dB.conj().T, dB))
            rep = pal.perturbation_check(P, dP, pairs)
            assert not rep["moved_off_circle"], f"trial {trial}: {rep}"

    def test_grade_mismatch(self):
        P = pencil_eps(0.1)
        with pytest.raises(ShapeError):
            pal.perturbation_check(P, worked_example(), 1.0)
