"""Scalar fractional Laurent series on the unit circle.

A FracLaurent with denominator N holds a finite sum

    f(z) = sum_{k=lo}^{hi} a_k z^(k/N),

where z^(1/N) means the principal branch e^(i theta / N) for z = e^(i theta),
theta in (-pi, pi] extended continuously -- i.e. f is an honest function of
theta with period 2 pi N, sampled and manipulated through its Fourier
coefficients in the variable w = z^(1/N).

What lives here:
  * construction + canonicalization (minimal denominator, trimmed support)
  * lp_eval        -- evaluate at angles theta
  * lp_para_conj   -- the involution f^P(z) = conj(f(1/conj(z))), which on
                      coefficients sends a_k -> conj(a_{-k})
  * lp_from_samples -- FFT recovery from equispaced samples over a full
                      period, with an alias guard at the window boundary
  * lp_add / lp_sub / lp_mul / lp_scale -- ring operations
  * JSON round-trip in the {"den": N, "terms": [{"k", "re", "im"}]} format

Everything returns canonical series; inputs with different denominators are
lifted to the lcm first.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import AliasError, ParseError, ShapeError

# relative truncation threshold used by canonical()
TRUNC_TOL = 1e-12

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class FracLaurent:
    """Finite fractional Laurent series sum a_k z^(k/den), k = lo..hi."""

    den: int
    lo: int
    hi: int
    coeffs: np.ndarray  # complex, length hi - lo + 1

    def __post_init__(self):
        if self.den < 1:
            raise ShapeError(f"denominator must be >= 1, got {self.den}")
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1:
            raise ShapeError("coeffs must be a 1-d array")
        if self.hi - self.lo + 1 != c.size:
            raise ShapeError(
                f"coeff length {c.size} does not match index range "
                f"{self.lo}..{self.hi}"
            )
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # -- conveniences ------------------------------------------------------

    def coeff(self, k: int) -> complex:
        """Coefficient of z^(k/den) (0 outside the stored range)."""
        if self.lo <= k <= self.hi:
            return complex(self.coeffs[k - self.lo])
        return 0.0 + 0.0j

    @property
    def period(self) -> float:
        """Period in theta: 2 pi den."""
        return TWO_PI * self.den

    @property
    def coeff_scale(self) -> float:
        """Largest coefficient magnitude (0 for the zero series)."""
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def ks(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    def __repr__(self):
        nz = int(np.count_nonzero(self.coeffs))
        return (
            f"FracLaurent(den={self.den}, k={self.lo}..{self.hi}, "
            f"{nz} nonzero)"
        )


def lp_zero() -> FracLaurent:
    """The zero series in canonical form (den 1, single zero coefficient)."""
    return FracLaurent(1, 0, 0, np.zeros(1, dtype=complex))


def lp_const(c) -> FracLaurent:
    return FracLaurent(1, 0, 0, np.array([c], dtype=complex))


def lp_monomial(k: int, den: int = 1, c=1.0) -> FracLaurent:
    """c * z^(k/den), canonicalized."""
    return canonical(FracLaurent(den, k, k, np.array([c], dtype=complex)))


def canonical(f: FracLaurent, tol: float = TRUNC_TOL) -> FracLaurent:
    """Canonical form: truncate relatively tiny coefficients, trim the
    support, and reduce to the minimal denominator via the gcd of the
    surviving exponents.  The zero series canonicalizes to den 1."""
    c = np.asarray(f.coeffs, dtype=complex)
    amax = np.max(np.abs(c)) if c.size else 0.0
    if amax == 0.0:
        return lp_zero()
    keep = np.abs(c) > tol * amax
    if not keep.any():
        return lp_zero()
    idx = np.nonzero(keep)[0]
    first, last = idx[0], idx[-1]
    c = c[first : last + 1].copy()
    # zero out the dropped interior coefficients as well
    interior = np.abs(c) <= tol * amax
    c[interior] = 0.0
    lo = f.lo + int(first)
    hi = f.lo + int(last)
    ks = np.arange(lo, hi + 1)[np.abs(c) > 0]
    g = f.den
    for k in ks:
        g = math.gcd(g, abs(int(k)))
        if g == 1:
            break
    if g > 1:
        # the trimmed endpoints are nonzero, so g divides lo and hi; every
        # skipped slot between surviving exponents holds an exact zero
        return FracLaurent(f.den // g, lo // g, hi // g, c[::g])
    return FracLaurent(f.den, lo, hi, c)


def _lift(f: FracLaurent, den: int) -> FracLaurent:
    """Rewrite f with the (multiple) denominator den, spacing exponents."""
    if den == f.den:
        return f
    if den % f.den:
        raise ShapeError(f"{den} is not a multiple of den {f.den}")
    m = den // f.den
    c = np.zeros((f.hi - f.lo) * m + 1, dtype=complex)
    c[::m] = f.coeffs
    return FracLaurent(den, f.lo * m, f.hi * m, c)


def _common(f: FracLaurent, g: FracLaurent):
    den = f.den * g.den // math.gcd(f.den, g.den)
    return _lift(f, den), _lift(g, den), den


# -- evaluation -------------------------------------------------------------


def lp_eval(f: FracLaurent, theta):
    """Evaluate f at z = e^(i theta).

    theta may be a scalar or an array; angles are reduced modulo the period
    2 pi den before use.  Returns a complex scalar / array of matching shape.
    """
    th = np.asarray(theta, dtype=float)
    scalar = th.ndim == 0
    th = np.atleast_1d(th)
    th = np.mod(th, f.period)
    ks = f.ks()
    out = np.empty(th.size, dtype=complex)
    # chunk the outer product so huge grid x huge support stays in memory
    step = max(1, (1 << 22) // max(1, ks.size))
    for a in range(0, th.size, step):
        b = min(a + step, th.size)
        out[a:b] = np.exp(1j * np.outer(th[a:b], ks) / f.den) @ f.coeffs
    return complex(out[0]) if scalar else out


# -- the para-conjugate involution ------------------------------------------


def lp_para_conj(f: FracLaurent) -> FracLaurent:
    """f^P(z) = conj(f(1 / conj(z))): coefficient k picks up conj(a_{-k}).

    On the unit circle this is plain complex conjugation of the values.
    """
    c = np.conj(f.coeffs[::-1])
    return canonical(FracLaurent(f.den, -f.hi, -f.lo, c))


# -- arithmetic --------------------------------------------------------------


def lp_add(f: FracLaurent, g: FracLaurent) -> FracLaurent:
    f2, g2, den = _common(f, g)
    lo = min(f2.lo, g2.lo)
    hi = max(f2.hi, g2.hi)
    c = np.zeros(hi - lo + 1, dtype=complex)
    c[f2.lo - lo : f2.hi - lo + 1] += f2.coeffs
    c[g2.lo - lo : g2.hi - lo + 1] += g2.coeffs
    return canonical(FracLaurent(den, lo, hi, c))


def lp_sub(f: FracLaurent, g: FracLaurent) -> FracLaurent:
    return lp_add(f, lp_scale(-1.0, g))


def lp_mul(f: FracLaurent, g: FracLaurent) -> FracLaurent:
    f2, g2, den = _common(f, g)
    c = np.convolve(f2.coeffs, g2.coeffs)
    return canonical(FracLaurent(den, f2.lo + g2.lo, f2.hi + g2.hi, c))


def lp_scale(a, f: FracLaurent) -> FracLaurent:
    return canonical(FracLaurent(f.den, f.lo, f.hi, a * f.coeffs))


def lp_rotate(f: FracLaurent, p: int) -> FracLaurent:
    """g with g(theta) = f(theta + 2 pi p) for integer p: coefficient k picks
    up the exact rational phase e^(2 pi i p k / den).  This realizes the
    branch shift mu(theta + 2 pi p) without touching samples."""
    ks = f.ks()
    phases = np.exp(2j * np.pi * p * ks / f.den)
    return FracLaurent(f.den, f.lo, f.hi, f.coeffs * phases)


def lp_allclose(f: FracLaurent, g: FracLaurent, tol: float = 1e-10) -> bool:
    """Coefficientwise comparison after lifting to a common denominator."""
    d = lp_sub(f, g)
    return float(np.max(np.abs(d.coeffs))) <= tol


# -- sampling / recovery ------------------------------------------------------


def lp_sample_grid(den: int, K: int, theta0: float | None = None) -> np.ndarray:
    """K equispaced angles covering one period 2 pi den, starting at theta0
    (canonical start -pi den when omitted)."""
    if theta0 is None:
        theta0 = -np.pi * den
    return theta0 + TWO_PI * den * np.arange(K) / K


def lp_eval_grid(f: FracLaurent, den: int, K: int,
                 theta0: float | None = None) -> np.ndarray:
    """Values of f on the lp_sample_grid(den, K, theta0) nodes, via one FFT.

    On a uniform grid every term c z^(k/f.den) lands in Fourier bin
    k * (den // f.den) mod K, so binning the (phase-shifted) coefficients and
    running a single inverse transform reproduces lp_eval exactly there --
    at K log K cost instead of K times the support size.  den must be a
    multiple of f.den."""
    if den % f.den:
        raise ShapeError(f"grid period {den} is not a multiple of {f.den}")
    if theta0 is None:
        theta0 = -np.pi * den
    m = den // f.den
    ks = f.ks()
    bins = np.zeros(K, dtype=complex)
    np.add.at(bins, (ks * m) % K, f.coeffs * np.exp(1j * theta0 * ks / f.den))
    return np.fft.ifft(bins) * K


def _recover(
    samples,
    den: int,
    tol: float,
    theta0: float,
    alias_tol: float | None = None,
    scale: float | None = None,
) -> FracLaurent:
    """Shared FFT recovery.  Samples are f on lp_sample_grid(den, K, theta0);
    any even K >= 4 works here (the public wrapper is stricter).  Raises
    AliasError when the outermost frequency slots carry more than
    10 * alias_tol (default: 10 * tol) of the largest coefficient -- the
    telltale of out-of-band content.  tol itself is the relative truncation
    threshold for the returned series.  scale, when given, is the magnitude
    of the surrounding problem: a signal whose coefficients all sit below
    tol * scale is the zero function (so mere rounding noise neither trips
    the alias guard nor survives as junk coefficients)."""
    s = np.asarray(samples, dtype=complex)
    if s.ndim != 1 or s.size < 4 or s.size % 2:
        raise ShapeError(f"need an even number >= 4 of samples, got {s.shape}")
    K = s.size
    ahat = np.fft.fft(s) / K
    ks = np.fft.fftfreq(K, d=1.0 / K).astype(int)  # 0,1,..,K/2-1,-K/2,..,-1
    # undo the grid-start phase: sample_j = sum_k a_k e^(i theta0 k/den) w^(jk)
    a = ahat * np.exp(-1j * theta0 * ks / den)
    order = np.argsort(ks)
    ks = ks[order]
    a = a[order]
    amax = float(np.max(np.abs(a)))
    if scale is not None and amax <= tol * scale:
        return lp_zero()
    guard = 10.0 * (tol if alias_tol is None else alias_tol)
    if amax > 0.0:
        edge = max(abs(a[0]), abs(a[-1]))
        if edge > guard * max(amax, scale or 0.0):
            raise AliasError(
                "significant coefficient mass at the recovery window "
                f"boundary (|a| = {edge:.3e} vs max {amax:.3e}); "
                "the sample grid is too coarse for this function",
                boundary=float(edge),
                max_coeff=amax,
                K=K,
            )
    f = FracLaurent(den, int(ks[0]), int(ks[-1]), a)
    return canonical(f, tol)


def lp_from_samples(samples, den: int, tol: float = 1e-10) -> FracLaurent:
    """Recover a FracLaurent from K samples on the canonical grid
    theta_j = -pi den + 2 pi den j / K, j = 0..K-1, K a power of two.

    tol plays two roles: relative truncation of the recovered coefficients,
    and the alias guard (boundary coefficients above 10*tol of the max
    trigger AliasError)."""
    s = np.asarray(samples, dtype=complex)
    K = s.size
    if K < 4 or (K & (K - 1)):
        raise ShapeError(f"sample count must be a power of two >= 4, got {K}")
    return _recover(s, den, tol, -np.pi * den)


# -- JSON --------------------------------------------------------------------


def lp_to_json(f: FracLaurent) -> dict:
    """{"den": N, "terms": [{"k", "re", "im"}, ...]} with nonzero terms only,
    k ascending."""
    f = canonical(f)
    terms = []
    for k, a in zip(f.ks(), f.coeffs):
        if a != 0:
            terms.append({"k": int(k), "re": float(a.real), "im": float(a.imag)})
    return {"den": int(f.den), "terms": terms}


def lp_from_json(obj) -> FracLaurent:
    if isinstance(obj, str):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as e:
            raise ParseError(f"bad JSON for Laurent series: {e}") from e
    try:
        den = int(obj["den"])
        terms = obj["terms"]
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"Laurent JSON needs 'den' and 'terms': {e}") from e
    if den < 1:
        raise ParseError(f"denominator must be >= 1, got {den}")
    if not terms:
        return lp_zero()
    try:
        ks = [int(t["k"]) for t in terms]
        vals = [complex(float(t["re"]), float(t.get("im", 0.0))) for t in terms]
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"bad term in Laurent JSON: {e}") from e
    lo, hi = min(ks), max(ks)
    c = np.zeros(hi - lo + 1, dtype=complex)
    for k, v in zip(ks, vals):
        c[k - lo] += v
    return canonical(FracLaurent(den, lo, hi, c))
