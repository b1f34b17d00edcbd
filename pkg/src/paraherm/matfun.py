"""Matrix-valued fractional Laurent functions.

A LaurentMatrix is an m x n grid of FracLaurent entries, all interpreted at
the same z = e^(i theta).  The para-conjugate

    A^P(z) = conj(A(1/conj(z)))^T          (entrywise lp_para_conj + transpose)

agrees with the conjugate transpose A(theta)* on the unit circle, which is
what makes "A = A^P" the right notion of Hermitian and "U U^P = I" the right
notion of unitary for analytic families.

Residual conventions (used by the is_* checks): the coefficient residual is
the max coefficient magnitude of the defect, measured relative to the largest
coefficient of the input; the grid residual is the max Frobenius norm of the
pointwise defect over an evaluation grid.  is_para_hermitian's verdict uses
the coefficient residual, is_para_unitary's the grid residual (a product of
two series amplifies coefficient noise, the pointwise defect is the honest
measure there).  Both numbers are always reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import laurent as lp
from .errors import AliasError, ParseError, ShapeError
from .laurent import FracLaurent


def _next_pow2(k: int) -> int:
    n = 1
    while n < k:
        n *= 2
    return n


@dataclass(frozen=True)
class LaurentMatrix:
    """m x n matrix of FracLaurent entries (stored row-major, canonical)."""

    m: int
    n: int
    entries: tuple  # tuple of m tuples of n FracLaurent

    def __post_init__(self):
        if len(self.entries) != self.m or any(
            len(row) != self.n for row in self.entries
        ):
            raise ShapeError("entries do not form an m x n grid")

    def entry(self, i: int, j: int) -> FracLaurent:
        return self.entries[i][j]

    @property
    def den(self) -> int:
        d = 1
        for row in self.entries:
            for f in row:
                d = d * f.den // math.gcd(d, f.den)
        return d

    @property
    def bandwidth(self) -> int:
        """Largest |exponent| across entries, in units of the common
        denominator (i.e. of w = z^(1/den))."""
        d = self.den
        b = 0
        for row in self.entries:
            for f in row:
                s = d // f.den
                b = max(b, abs(f.lo) * s, abs(f.hi) * s)
        return b

    @property
    def coeff_scale(self) -> float:
        """Largest coefficient magnitude over all entries (>= 0)."""
        return max(
            (float(np.max(np.abs(f.coeffs))) for row in self.entries for f in row),
            default=0.0,
        )

    def __repr__(self):
        return f"LaurentMatrix({self.m}x{self.n}, den={self.den}, bw={self.bandwidth})"


@dataclass(frozen=True)
class GridSamples:
    """Pointwise values of a LaurentMatrix on an equispaced theta grid.

    values[j] == A(e^(i thetas[j])) entrywise; den records the denominator
    the grid was built for (thetas span one period 2 pi den)."""

    thetas: np.ndarray  # (K,)
    values: np.ndarray  # (K, m, n) complex
    den: int

    def __post_init__(self):
        t = np.asarray(self.thetas, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 3 or v.shape[0] != t.size:
            raise ShapeError("values must be (K, m, n) matching thetas")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "thetas", t)
        object.__setattr__(self, "values", v)


# -- construction ------------------------------------------------------------


def _coerce(x) -> FracLaurent:
    if isinstance(x, FracLaurent):
        return lp.canonical(x)
    return lp.lp_const(complex(x))


def mat_from_entries(rows) -> LaurentMatrix:
    """Build from a nested list of FracLaurent / plain numbers."""
    grid = tuple(tuple(_coerce(x) for x in row) for row in rows)
    m = len(grid)
    if m == 0 or len(grid[0]) == 0:
        raise ShapeError("matrix needs at least one row and one column")
    return LaurentMatrix(m, len(grid[0]), grid)


def mat_eye(n: int) -> LaurentMatrix:
    return mat_from_entries(
        [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    )


def mat_scale(a, A: LaurentMatrix) -> LaurentMatrix:
    return mat_from_entries(
        [[lp.lp_scale(a, A.entry(i, j)) for j in range(A.n)] for i in range(A.m)]
    )


def mat_add(A: LaurentMatrix, B: LaurentMatrix) -> LaurentMatrix:
    if (A.m, A.n) != (B.m, B.n):
        raise ShapeError(f"shape mismatch {A.m}x{A.n} vs {B.m}x{B.n}")
    return mat_from_entries(
        [
            [lp.lp_add(A.entry(i, j), B.entry(i, j)) for j in range(A.n)]
            for i in range(A.m)
        ]
    )


def mat_sub(A: LaurentMatrix, B: LaurentMatrix) -> LaurentMatrix:
    return mat_add(A, mat_scale(-1.0, B))


def mat_mul(A: LaurentMatrix, B: LaurentMatrix) -> LaurentMatrix:
    """Exact coefficient-level product (convolutions entrywise)."""
    if A.n != B.m:
        raise ShapeError(f"cannot multiply {A.m}x{A.n} by {B.m}x{B.n}")
    out = []
    for i in range(A.m):
        row = []
        for j in range(B.n):
            acc = lp.lp_zero()
            for k in range(A.n):
                acc = lp.lp_add(acc, lp.lp_mul(A.entry(i, k), B.entry(k, j)))
            row.append(acc)
        out.append(row)
    return mat_from_entries(out)


def mat_para_conj(A: LaurentMatrix) -> LaurentMatrix:
    """A^P: transpose + entrywise para-conjugate."""
    return mat_from_entries(
        [[lp.lp_para_conj(A.entry(i, j)) for i in range(A.m)] for j in range(A.n)]
    )


# -- evaluation ---------------------------------------------------------------


def default_grid_size(A: LaurentMatrix) -> int:
    """max(64, 8 * bandwidth), rounded up to a power of two."""
    return _next_pow2(max(64, 8 * max(1, A.bandwidth)))


def eval_theta(A: LaurentMatrix, theta) -> np.ndarray:
    """A(e^(i theta)) for scalar theta or an array (returns (..., m, n))."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    out = np.empty((th.size, A.m, A.n), dtype=complex)
    for i in range(A.m):
        for j in range(A.n):
            out[:, i, j] = lp.lp_eval(A.entry(i, j), th)
    if np.ndim(theta) == 0:
        return out[0]
    return out


def eval_uniform(A: LaurentMatrix, den: int, K: int,
                 theta0: float | None = None) -> np.ndarray:
    """A on the lp_sample_grid(den, K, theta0) nodes as a (K, m, n) stack.

    Same values eval_theta would give there, but each entry goes through the
    FFT fast path (lp_eval_grid), which is what makes verification sweeps on
    fine grids affordable."""
    out = np.empty((K, A.m, A.n), dtype=complex)
    for i in range(A.m):
        for j in range(A.n):
            out[:, i, j] = lp.lp_eval_grid(A.entry(i, j), den, K, theta0)
    return out


def eval_grid(A: LaurentMatrix, K: int | None = None, theta0: float | None = None) -> GridSamples:
    """Sample A on K equispaced nodes over one period 2 pi den.

    K defaults to default_grid_size(A); it must be a power of two and at
    least 4x the bandwidth, otherwise the samples cannot round-trip through
    lp_from_samples without aliasing."""
    if K is None:
        K = default_grid_size(A)
    if K < 4 or (K & (K - 1)):
        raise ShapeError(f"grid size must be a power of two >= 4, got {K}")
    if K < 4 * A.bandwidth:
        raise AliasError(
            f"grid size {K} below 4x bandwidth {A.bandwidth}; "
            "recovered coefficients would alias",
            K=K,
            bandwidth=A.bandwidth,
        )
    den = A.den
    thetas = lp.lp_sample_grid(den, K, theta0)
    return GridSamples(thetas, eval_theta(A, thetas), den)


def det_trace_grid(A: LaurentMatrix, K: int | None = None):
    """(det A(theta_j), trace A(theta_j)) over the canonical grid."""
    if A.m != A.n:
        raise ShapeError("determinant/trace need a square matrix")
    g = eval_grid(A, K)
    return np.linalg.det(g.values), np.einsum("kii->k", g.values)


# -- structure checks ---------------------------------------------------------


def _grid_defect(A: LaurentMatrix, B: LaurentMatrix, K: int) -> float:
    """max_j ||A(theta_j) - B(theta_j)||_F over a shared K-node grid."""
    den = A.den * B.den // math.gcd(A.den, B.den)
    thetas = lp.lp_sample_grid(den, K)
    va = eval_theta(A, thetas)
    vb = eval_theta(B, thetas)
    return float(np.max(np.linalg.norm(va - vb, axis=(1, 2))))


def is_para_hermitian(A: LaurentMatrix, tol: float = 1e-10) -> dict:
    """Check A == A^P.  Returns {"ok", "residual", "grid_residual"};
    the verdict compares the coefficient residual (relative to the
    largest coefficient of A) against tol."""
    if A.m != A.n:
        raise ShapeError("para-Hermitian only makes sense for square matrices")
    D = mat_sub(A, mat_para_conj(A))
    scale = max(1.0, A.coeff_scale)
    res = D.coeff_scale / scale
    gres = _grid_defect(A, mat_para_conj(A), max(64, 4 * A.den * A.n))
    return {"ok": bool(res <= tol), "residual": res, "grid_residual": gres}


def is_para_unitary(U: LaurentMatrix, tol: float = 1e-8) -> dict:
    """Check U U^P == I.  The verdict uses the grid residual: the max over a
    grid of at least 4 * den * n nodes of ||U(theta) U(theta)* - I||_F."""
    if U.m != U.n:
        raise ShapeError("para-unitary only makes sense for square matrices")
    G = mat_mul(U, mat_para_conj(U))
    D = mat_sub(G, mat_eye(U.n))
    K = max(64, _next_pow2(4 * U.den * U.n))
    gres = _grid_defect(G, mat_eye(U.n), K)
    return {"ok": bool(gres <= tol), "residual": gres, "coeff_residual": D.coeff_scale}


def is_para_isometry(V: LaurentMatrix, tol: float = 1e-8) -> dict:
    """Check V^P V == I_r (orthonormal columns on the circle), r = V.n."""
    G = mat_mul(mat_para_conj(V), V)
    K = max(64, _next_pow2(4 * V.den * max(V.m, V.n)))
    gres = _grid_defect(G, mat_eye(V.n), K)
    return {"ok": bool(gres <= tol), "residual": gres}


# -- JSON ----------------------------------------------------------------------


def mat_to_json(A: LaurentMatrix) -> dict:
    return {
        "m": A.m,
        "n": A.n,
        "entries": [
            [lp.lp_to_json(A.entry(i, j)) for j in range(A.n)] for i in range(A.m)
        ],
    }


def mat_from_json(obj) -> LaurentMatrix:
    import json as _json

    if isinstance(obj, str):
        try:
            obj = _json.loads(obj)
        except _json.JSONDecodeError as e:
            raise ParseError(f"bad matrix JSON: {e}") from e
    try:
        m, n = int(obj["m"]), int(obj["n"])
        rows = obj["entries"]
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"matrix JSON needs 'm', 'n', 'entries': {e}") from e
    if len(rows) != m or any(len(r) != n for r in rows):
        raise ParseError("matrix JSON entries do not form an m x n grid")
    return mat_from_entries(
        [[lp.lp_from_json(rows[i][j]) for j in range(n)] for i in range(m)]
    )
