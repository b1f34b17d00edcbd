"""Pseudo-circulant block diagonalization: everything back at denominator 1."""

import numpy as np
import pytest

from paraherm import laurent as lp
from paraherm import matfun as mf
from paraherm import pseudocirc as pc
from paraherm.errors import RangeError, StructureError

rng = np.random.default_rng(5150)


def offdiag_pair():
    one_plus_z = lp.lp_add(lp.lp_const(1.0), lp.lp_monomial(1))
    return mf.mat_from_entries(
        [[0.0, one_plus_z], [lp.lp_para_conj(one_plus_z), 0.0]]
    )


class TestFourierShift:
    def test_intertwining_identity(self):
        """D_N(theta + 2 pi) F_N = D_N(theta) F_N P_N, the workhorse identity."""
        for N in range(1, 7):
            F, D, P = pc.fourier_shift(N)
            for th in rng.uniform(-9, 9, size=4):
                lhs = D(th + 2 * np.pi) @ F
                rhs = D(th) @ F @ P
                assert np.max(np.abs(lhs - rhs)) < 1e-13, f"N={N}, theta={th}"

    def test_fourier_unitary(self):
        F, _, _ = pc.fourier_shift(5)
        assert np.max(np.abs(F @ F.conj().T - np.eye(5))) < 1e-13

    def test_shift_is_permutation(self):
        _, _, P = pc.fourier_shift(4)
        assert np.array_equal(P @ P @ P @ P, np.eye(4))
        assert np.array_equal(np.sort(np.argmax(P, axis=0)), np.arange(4))

    def test_bad_order(self):
        with pytest.raises(RangeError):
            pc.fourier_shift(0)


class TestBlockStructure:
    def test_phi_extension_is_exact_shift(self):
        f0 = lp.lp_add(lp.lp_const(2.0), lp.lp_monomial(-1))
        f1 = lp.lp_monomial(1, c=0.5)
        b = pc.PseudoCircBlock(size=2, phis=(f0, f1))
        up = b.phi(2)  # = z * phi_0
        assert up.lo == f0.lo + 1 and up.hi == f0.hi + 1
        assert np.array_equal(up.coeffs, f0.coeffs)
        down = b.phi(-1)  # = z^{-1} * phi_1
        assert down.lo == f1.lo - 1
        assert np.array_equal(down.coeffs, f1.coeffs)

    def test_template_matches_convention(self):
        f0 = lp.lp_const(1.0)
        f1 = lp.lp_monomial(1, c=3.0)
        b = pc.PseudoCircBlock(size=2, phis=(f0, f1))
        T = b.template
        # entry (0, 1) is phi_{-1} = z^{-1} phi_1 = 3, constant
        e = T.entry(0, 1)
        assert e.lo == 0 and e.hi == 0 and abs(e.coeffs[0] - 3.0) < 1e-15

    def test_den_one_enforced(self):
        with pytest.raises(StructureError):
            pc.PseudoCircBlock(size=1, phis=(lp.lp_monomial(1, den=2),))

    def test_verify_accepts_true_shape(self):
        f0 = lp.lp_add(lp.lp_const(1.0), lp.lp_monomial(1))
        f1 = lp.lp_monomial(0, c=0.25)
        C = pc.PseudoCircBlock(size=2, phis=(f0, f1)).template
        assert pc.verify_pseudo_circulant(C)["ok"]

    def test_verify_rejects_broken_shape(self):
        C = mf.mat_from_entries(
            [[1.0, lp.lp_monomial(1)], [lp.lp_monomial(1), 1.0]]
        )
        rep = pc.verify_pseudo_circulant(C)
        assert not rep["ok"]
        assert rep["worst_violation"] > 1e-3


class TestDecomposition:
    def test_half_period_example(self):
        """The 2x2 flip matrix folds into one 2x2 block with phi_0 = 0 and
        phi_1 = 1 + z."""
        res = pc.pseudo_circulant_decomposition(offdiag_pair())
        assert len(res.blocks) == 1
        blk = res.blocks[0]
        assert blk.size == 2
        assert blk.phis[0].coeff_scale < 1e-9, "phi_0 should vanish"
        want = lp.lp_add(lp.lp_const(1.0), lp.lp_monomial(1))
        assert lp.lp_sub(blk.phis[1], want).coeff_scale < 1e-8
        assert res.W.den == 1
        assert res.residuals["reconstruction"] < 1e-8

    def test_reconstruction_pointwise(self):
        A = offdiag_pair()
        res = pc.pseudo_circulant_decomposition(A)
        C = res.C
        for th in rng.uniform(0, 2 * np.pi, size=5):
            Av = mf.eval_theta(A, th)
            Wv = mf.eval_theta(res.W, th)
            Cv = mf.eval_theta(C, th)
            assert np.max(np.abs(Av - Wv @ Cv @ Wv.conj().T)) < 1e-8

    def test_w_is_para_unitary(self):
        res = pc.pseudo_circulant_decomposition(offdiag_pair())
        assert mf.is_para_unitary(res.W)["ok"]

    def test_diagonal_input_gives_scalar_blocks(self):
        two_cos = lp.lp_add(lp.lp_monomial(1), lp.lp_monomial(-1))
        A = mf.mat_from_entries([[two_cos, 0.0], [0.0, -1.0]])
        res = pc.pseudo_circulant_decomposition(A)
        assert sorted(b.size for b in res.blocks) == [1, 1]
        # the blocks carry the diagonal functions themselves
        got = sorted(
            lp.lp_eval(b.phis[0], 0.9).real for b in res.blocks
        )
        want = sorted([2 * np.cos(0.9), -1.0])
        assert np.max(np.abs(np.array(got) - np.array(want))) < 1e-8

    def test_fractional_input_rejected(self):
        A = mf.mat_from_entries([[lp.lp_monomial(1, den=2)]])
        A = mf.mat_add(A, mf.mat_para_conj(A))
        with pytest.raises(RangeError):
            pc.pseudo_circulant_decomposition(A)

    def test_every_phi_has_den_one(self):
        B = mf.mat_from_entries(
            [
                [
                    lp.FracLaurent(
                        1,
                        -1,
                        1,
                        rng.normal(size=3) + 1j * rng.normal(size=3),
                    )
                    for _ in range(3)
                ]
                for _ in range(3)
            ]
        )
        A = mf.mat_add(B, mf.mat_para_conj(B))
        res = pc.pseudo_circulant_decomposition(A)
        for b in res.blocks:
            for f in b.phis:
                assert f.den == 1
        assert res.W.den == 1
        assert sum(b.size for b in res.blocks) == 3

    def test_hermitian_block_symmetry(self):
        """para-conj of phi_q equals z^{-1} phi_{M-q}: the block inherits the
        para-Hermitian symmetry of the input."""
        res = pc.pseudo_circulant_decomposition(offdiag_pair())
        blk = res.blocks[0]
        M = blk.size
        for q in range(M):
            lhs = lp.lp_para_conj(blk.phi(q))
            rhs = blk.phi(q - M)  # = z^{-1} phi_{M-q} by the extension rule
            assert lp.lp_sub(lhs, rhs).coeff_scale < 1e-8, f"q={q}"


class TestJson:
    def test_payload_shape(self):
        res = pc.pseudo_circulant_decomposition(offdiag_pair())
        obj = pc.pc_to_json(res)
        assert set(obj) == {"W", "blocks", "residuals"}
        assert obj["blocks"][0]["size"] == 2
        W2 = mf.mat_from_json(obj["W"])
        assert mf.mat_sub(W2, res.W).coeff_scale < 1e-15
        f = lp.lp_from_json(obj["blocks"][0]["phis"][1])
        assert lp.lp_sub(f, res.blocks[0].phis[1]).coeff_scale < 1e-15
