"""Fractional Laurent series: canonical form, arithmetic, evaluation,
recovery from samples, and the para-conjugate."""

import numpy as np
import pytest

from paraherm import laurent as lp
from paraherm.errors import AliasError, ShapeError


def series(den, lo, coeffs):
    c = np.asarray(coeffs, dtype=complex)
    return lp.canonical(lp.FracLaurent(den, lo, lo + c.size - 1, c))


class TestCanonical:
    def test_trims_zero_edges(self):
        f = lp.canonical(lp.FracLaurent(1, -2, 2, np.array([0, 1, 2, 3, 0], complex)))
        assert f.lo == -1 and f.hi == 1

    def test_gcd_reduction(self):
        # z^{2/4} is really z^{1/2}
        f = lp.canonical(lp.FracLaurent(4, 2, 2, np.array([1.0], complex)))
        assert f.den == 2 and f.lo == 1 and f.hi == 1

    def test_zero_collapses(self):
        f = lp.canonical(lp.FracLaurent(3, -5, 5, np.zeros(11, complex)))
        assert f.den == 1 and f.lo == 0 and f.hi == 0

    def test_relative_truncation(self):
        c = np.array([1e-20, 1.0, 1e-20], complex)
        f = lp.canonical(lp.FracLaurent(1, -1, 1, c))
        assert f.lo == 0 and f.hi == 0, "noise coefficients should be dropped"


class TestArithmetic:
    def test_add_aligns_denominators(self):
        f = lp.lp_monomial(1, den=2)   # z^{1/2}
        g = lp.lp_monomial(1, den=3)   # z^{1/3}
        h = lp.lp_add(f, g)
        assert h.den == 6
        th = np.linspace(0, 12 * np.pi, 23)
        ref = np.exp(1j * th / 2) + np.exp(1j * th / 3)
        assert np.max(np.abs(lp.lp_eval(h, th) - ref)) < 1e-12

    def test_mul_is_convolution(self):
        f = series(1, 0, [1, 1])      # 1 + z
        g = series(1, -1, [1, 1])     # z^{-1} + 1
        h = lp.lp_mul(f, g)
        # (1+z)(z^{-1}+1) = z^{-1} + 2 + z
        assert h.lo == -1 and h.hi == 1
        assert np.allclose(h.coeffs, [1, 2, 1])

    def test_scale(self):
        f = series(1, 0, [2.0])
        g = lp.lp_scale(0.5j, f)
        assert abs(complex(lp.lp_eval(g, 0.3)) - 1j) < 1e-14

    def test_rotate_shifts_argument(self):
        f = lp.lp_monomial(1, den=2)
        g = lp.lp_rotate(f, 1)
        th = np.linspace(0, 4 * np.pi, 17)
        assert np.max(np.abs(lp.lp_eval(g, th) - lp.lp_eval(f, th + 2 * np.pi))) < 1e-12

    def test_rotate_full_period_is_identity(self):
        f = series(2, -3, [1, 2j, 0, 0.5, -1])
        g = lp.lp_rotate(f, 2)  # 2 pi * den is one whole period
        assert np.allclose(g.coeffs, f.coeffs)


class TestEval:
    def test_matches_direct_sum(self):
        rng = np.random.default_rng(11)
        c = rng.normal(size=7) + 1j * rng.normal(size=7)
        f = series(3, -2, c)
        th = rng.uniform(-20, 20, size=9)
        ref = sum(
            c[i] * np.exp(1j * (f.lo + i) * th / 3) for i in range(c.size)
        )
        assert np.max(np.abs(lp.lp_eval(f, th) - ref)) < 1e-12

    def test_scalar_in_scalar_out(self):
        f = series(1, 0, [1, 1])
        v = lp.lp_eval(f, 0.0)
        assert isinstance(v, complex) and abs(v - 2) < 1e-15

    def test_grid_eval_matches_pointwise(self):
        rng = np.random.default_rng(12)
        for den in (1, 2, 3):
            c = rng.normal(size=9) + 1j * rng.normal(size=9)
            f = series(den, -4, c)
            for theta0 in (None, 0.0, 1.7):
                K = 16
                th = lp.lp_sample_grid(den, K, theta0)
                a = lp.lp_eval(f, th)
                b = lp.lp_eval_grid(f, den, K, theta0)
                assert np.max(np.abs(a - b)) < 1e-12

    def test_grid_eval_on_multiple_period(self):
        f = series(2, -1, [1, 0, 1j])
        th = lp.lp_sample_grid(6, 32)
        assert np.max(np.abs(lp.lp_eval_grid(f, 6, 32) - lp.lp_eval(f, th))) < 1e-12

    def test_grid_eval_rejects_incompatible_period(self):
        f = series(2, 1, [1.0])
        with pytest.raises(ShapeError):
            lp.lp_eval_grid(f, 3, 16)


class TestRecovery:
    def test_round_trip(self):
        rng = np.random.default_rng(4)
        c = rng.normal(size=5) + 1j * rng.normal(size=5)
        f = series(2, -2, c)
        K = 32
        th = lp.lp_sample_grid(2, K)
        g = lp._recover(lp.lp_eval(f, th), 2, 1e-13, th[0])
        assert lp.lp_sub(f, g).coeff_scale < 1e-12

    def test_alias_flagged(self):
        # e^{i theta/2} sampled on a 2 pi grid is not 2 pi periodic
        f = lp.lp_monomial(1, den=2)
        th = lp.lp_sample_grid(1, 32)
        with pytest.raises(AliasError):
            lp._recover(lp.lp_eval(f, th), 1, 1e-13, th[0], alias_tol=1e-9)

    def test_ambient_scale_suppresses_noise(self):
        # pure rounding junk must come back as the zero series, not trip
        # the alias guard
        noise = (np.random.default_rng(9).normal(size=16)) * 1e-17
        f = lp._recover(noise.astype(complex), 1, 1e-13, -np.pi, alias_tol=1e-9, scale=1.0)
        assert f.coeff_scale == 0.0

    def test_offset_grid(self):
        f = series(1, -3, [1, 0, 2, 0, 0.5, 1, 1])
        th = lp.lp_sample_grid(1, 16, theta0=0.4)
        g = lp._recover(lp.lp_eval(f, th), 1, 1e-13, 0.4)
        assert lp.lp_sub(f, g).coeff_scale < 1e-12


class TestParaConj:
    def test_involution(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            den = int(rng.integers(1, 4))
            c = rng.normal(size=7) + 1j * rng.normal(size=7)
            f = series(den, int(rng.integers(-5, 0)), c)
            g = lp.lp_para_conj(lp.lp_para_conj(f))
            assert lp.lp_sub(f, g).coeff_scale < 1e-14

    def test_is_conjugate_on_circle(self):
        f = series(2, -2, [1j, 2, 0, -1, 0.5j])
        th = np.linspace(0, 4 * np.pi, 13)
        a = lp.lp_eval(lp.lp_para_conj(f), th)
        b = np.conj(lp.lp_eval(f, th))
        assert np.max(np.abs(a - b)) < 1e-13

    def test_real_on_circle_means_self_adjoint(self):
        # c0 real and c_{-k} = conj(c_k) -> f = f^P
        f = series(1, -1, [1 - 2j, 0.7, 1 + 2j])
        assert lp.lp_sub(f, lp.lp_para_conj(f)).coeff_scale < 1e-15


class TestJson:
    def test_round_trip(self):
        f = series(2, -3, [1, 0, 2j, 0, -0.5])
        g = lp.lp_from_json(lp.lp_to_json(f))
        assert lp.lp_sub(f, g).coeff_scale == 0.0

    def test_zero_series(self):
        g = lp.lp_from_json({"den": 1, "terms": []})
        assert g.coeff_scale == 0.0

    def test_bad_json_raises(self):
        from paraherm.errors import ParseError

        with pytest.raises(ParseError):
            lp.lp_from_json({"terms": [{"k": 0, "re": 1.0}]})
