"""Sign characteristics of *-palindromic matrix polynomials.

A polynomial P(z) = sum P_i z^i with P_i = P_{g-i}^* (conjugate transpose,
g the grade) has its spectrum symmetric under z -> 1/conj(z), and the
eigenvalues sitting exactly on the unit circle each carry a sign.  The trick
that makes the sign computable: R(z) = z^{-g/2} P(z) is para-Hermitian, so
its eigenvalue curves theta -> F_i(theta) are real analytic, and the way the
vanishing curves cross zero at theta0 = arg(lambda) (order of tangency,
direction, leading size) is exactly the partial multiplicity / sign / leading
coefficient data.  For odd grades the square root forces a branch choice;
everything here uses the principal branch rotated by branch_angle (the point
-e^{i tau} is excluded -- flipping the branch flips every sign at once, so
nothing observable is lost).
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateFit,
    MinusOneEigenvalue,
    NearDegenerate,
    NotEigenvector,
    NotPalindromic,
    NotRegular,
    RangeError,
    ResidualError,
    ShapeError,
)
from . import laurent as lp
from . import matfun as mf
from .evd import analytic_evd

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# the polynomial itself
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PalindromicPoly:
    """P(z) = sum_{i=0}^{g} coeffs[i] z^i with coeffs[i] = coeffs[g-i]^*.

    The grade g is len(coeffs) - 1; a zero leading block is allowed (grade
    above the actual degree), as long as the palindromic pairing still holds.
    Construction validates shape and the pairing, so everything downstream
    can take the symmetry for granted."""

    coeffs: tuple

    def __post_init__(self):
        mats = []
        for i, c in enumerate(self.coeffs):
            a = np.array(c, dtype=complex)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise ShapeError(
                    f"coefficient {i} is {a.shape}, want square 2-d"
                )
            a.setflags(write=False)
            mats.append(a)
        if not mats:
            raise ShapeError("need at least one coefficient matrix")
        n = mats[0].shape[0]
        if any(a.shape[0] != n for a in mats):
            raise ShapeError("coefficient matrices must share one size")
        object.__setattr__(self, "coeffs", tuple(mats))
        g = len(mats) - 1
        scale = max(float(np.linalg.norm(a)) for a in mats)
        bar = 1e-12 * max(scale, 1.0)
        for i in range(g + 1):
            defect = float(np.linalg.norm(mats[i] - mats[g - i].conj().T))
            if defect > bar:
                raise NotPalindromic(
                    f"P_{i} != P_{g - i}^* (defect {defect:.3e}, allowed "
                    f"{bar:.1e})",
                    index=i,
                    defect=defect,
                )

    @property
    def g(self) -> int:
        return len(self.coeffs) - 1

    @property
    def n(self) -> int:
        return self.coeffs[0].shape[0]

    def __call__(self, z: complex) -> np.ndarray:
        """P evaluated at a point (plain Horner)."""
        acc = np.array(self.coeffs[-1], dtype=complex)
        for a in reversed(self.coeffs[:-1]):
            acc = acc * z + a
        return acc

    def deriv(self, z: complex) -> np.ndarray:
        """dP/dz at a point."""
        acc = np.zeros_like(self.coeffs[0], dtype=complex)
        for i in range(self.g, 0, -1):
            acc = acc * z + i * self.coeffs[i]
        return acc

    def norm(self) -> float:
        """Sum of coefficient Frobenius norms; bounds ||P(z)|| on |z| = 1."""
        return float(sum(np.linalg.norm(a) for a in self.coeffs))


@dataclass(frozen=True)
class SignReport:
    """Sign data of one unimodular eigenvalue.

    entries holds one dict per eigenvalue curve of R that vanishes at theta0
    (and is not identically zero): m is the order of the zero, eps the sign
    of the leading Taylor coefficient, c its magnitude, and feature the
    combination eps * (1 - (-1)^m) / 2 -- so eps for odd m, 0 for even m.
    Ordered by m, then c."""

    lam: complex
    theta0: float
    entries: tuple


# ---------------------------------------------------------------------------
# angles and the branch line
# ---------------------------------------------------------------------------


def _window_angle(lam: complex, branch_angle: float) -> float:
    """arg(lam) shifted into the branch window (tau - pi, tau + pi]."""
    th = float(np.angle(lam))
    lo = branch_angle - np.pi
    th += TWO_PI * np.floor((branch_angle + np.pi - th) / TWO_PI)
    if th <= lo:  # numerical edge of the floor above
        th += TWO_PI
    return th


def _check_unimodular(lam: complex, tol: float = 1e-6):
    off = abs(abs(lam) - 1.0)
    if off > tol:
        raise RangeError(
            f"lambda = {lam} is not on the unit circle (| |lambda| - 1 | = "
            f"{off:.3e})",
            modulus=float(abs(lam)),
        )


def _check_branch_cut(lam: complex, branch_angle: float, radius: float = 1e-6):
    cut = -np.exp(1j * branch_angle)
    if abs(lam - cut) <= radius:
        raise MinusOneEigenvalue(
            f"lambda = {lam} sits on the branch cut at {cut:.6f}; rotate "
            f"branch_angle to move the excluded point",
            branch_angle=float(branch_angle),
        )


# ---------------------------------------------------------------------------
# the para-Hermitian reduction
# ---------------------------------------------------------------------------


def to_para_hermitian(P: PalindromicPoly):
    """R(z) = z^{-g/2} P(z) as a LaurentMatrix.

    Integer powers when the grade is even; half-integer powers (denominator
    2) when it is odd, on the principal square-root branch.  The palindromic
    pairing turns into R = R^P exactly, which is what the analytic
    eigendecomposition machinery wants to see."""
    g = P.g
    n = P.n
    den = 1 if g % 2 == 0 else 2
    half = (g * den) // 2
    rows = []
    for r in range(n):
        row = []
        for c in range(n):
            ks = np.zeros(g * den + 1, dtype=complex)
            for i in range(g + 1):
                ks[i * den] = P.coeffs[i][r, c]
            row.append(lp.canonical(lp.FracLaurent(den, -half, g * den - half, ks)))
        rows.append(row)
    return mf.mat_from_entries(rows)


# ---------------------------------------------------------------------------
# eigenvalues via linearization
# ---------------------------------------------------------------------------


def _require_regular(P: PalindromicPoly):
    """det P must not vanish identically; 64 circle nodes settle it, since
    det P is a polynomial of degree at most n*g < 64 at desk scale."""
    K = 64
    zs = np.exp(2j * np.pi * np.arange(K) / K)
    dets = np.array([np.linalg.det(P(z)) for z in zs])
    scale = max(P.norm() ** P.n, 1.0)
    if float(np.max(np.abs(dets))) <= 1e-10 * scale:
        raise NotRegular(
            "det P vanishes on the whole circle; the polynomial is singular"
        )


def _finite_eigenvalues(P: PalindromicPoly) -> np.ndarray:
    """All finite roots of det P via the block companion pencil."""
    g, n = P.g, P.n
    if g == 0:
        return np.empty(0, dtype=complex)
    N = n * g
    A = np.zeros((N, N), dtype=complex)
    B = np.eye(N, dtype=complex)
    for i in range(g - 1):
        A[i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n] = np.eye(n)
    for i in range(g):
        A[(g - 1) * n:, i * n:(i + 1) * n] = -P.coeffs[i]
    B[(g - 1) * n:, (g - 1) * n:] = P.coeffs[g]
    w = scipy.linalg.eig(A, B, right=False, homogeneous_eigvals=True)
    alpha, beta = w[0], w[1]
    keep = np.abs(beta) > 1e-10 * (np.abs(alpha) + np.abs(beta))
    return alpha[keep] / beta[keep]


def _cluster_points(vals: np.ndarray, radius: float):
    """Single-linkage clustering of points in the plane; returns
    (center, count) pairs with the center the cluster mean."""
    rest = list(vals)
    out = []
    while rest:
        group = [rest.pop()]
        grew = True
        while grew:
            grew = False
            for v in rest[:]:
                if any(abs(v - w) <= radius for w in group):
                    group.append(v)
                    rest.remove(v)
                    grew = True
        out.append((complex(np.mean(group)), len(group)))
    return out


def unimodular_eigenvalues(
    P: PalindromicPoly,
    tol: float = 1e-6,
    branch_angle: float = 0.0,
):
    """Eigenvalues of P on the unit circle, as (lambda, multiplicity) pairs.

    Runs the full n*g companion eigenproblem, keeps the finite eigenvalues
    within tol of the circle, and merges nearby roots (radius max(tol, 1e-6))
    so a numerically split multiple root reports once with its cluster size
    as the multiplicity.  An eigenvalue on the branch cut -e^{i branch_angle}
    raises MinusOneEigenvalue -- the sign machinery downstream has no
    analytic definition there.  Sorted by angle within the branch window."""
    if not (0.0 < tol <= 1e-2):
        raise RangeError(f"tol must be in (0, 1e-2], got {tol}")
    _require_regular(P)
    vals = _finite_eigenvalues(P)
    near = vals[np.abs(np.abs(vals) - 1.0) <= tol]
    if near.size == 0:
        return []
    radius = max(tol, 1e-6)
    clusters = _cluster_points(near, radius)
    for lam, _ in clusters:
        _check_branch_cut(lam, branch_angle, radius)
    clusters.sort(key=lambda t: _window_angle(t[0], branch_angle))
    return clusters


def null_eigenvector(P: PalindromicPoly, lam: complex) -> np.ndarray:
    """Unit eigenvector for lam: smallest right singular vector of P(lam)."""
    _, _, vh = np.linalg.svd(P(lam))
    return vh[-1].conj()


# ---------------------------------------------------------------------------
# sign characteristics: the Taylor route
# ---------------------------------------------------------------------------


def _fit_window(fun, theta0, w, m_max, floor_abs):
    """Least-squares polynomial fit of fun over [theta0 - w, theta0 + w].

    17 nodes, degree m_max + 2, on the scaled variable x = (theta-theta0)/w
    so the returned b[k] is the size of the order-k term at the window edge.
    Returns (m, eps, c) for the first order whose coefficient rises above
    both the absolute noise floor and a relative one, or None if all of
    1..m_max stay below."""
    nodes = theta0 + np.linspace(-w, w, 17)
    y = fun(nodes)
    x = np.linspace(-1.0, 1.0, 17)
    V = np.vander(x, m_max + 3, increasing=True)
    b, *_ = np.linalg.lstsq(V, y, rcond=None)
    bar = max(floor_abs, 1e-4 * float(np.max(np.abs(b))))
    for k in range(1, m_max + 1):
        if abs(b[k]) > bar:
            c = abs(b[k]) / w**k
            return k, (1 if b[k] > 0 else -1), float(c)
    return None


def sign_characteristics(
    P: PalindromicPoly,
    lam: complex,
    branch_angle: float = 0.0,
    m_max: int = 6,
    evd=None,
    K: int | None = None,
    tol: float = 1e-8,
) -> SignReport:
    """Partial multiplicities, signs, and leading coefficients at lam.

    Decomposes R(z) = z^{-g/2} P(z) analytically and looks at every
    eigenvalue curve F_i of R that crosses zero at theta0 = arg(lam): a
    two-window polynomial fit reads off the order m_i of the zero, the sign
    eps_i of its leading coefficient and the magnitude c_i.  The fits at
    window 0.05 and at half that must agree on (m, eps) and within 10% on c,
    otherwise DegenerateFit -- better loud than a confidently wrong order.

    Pass evd to reuse an already computed decomposition of R (the report for
    every eigenvalue of one P can share it).  Identically zero curves of a
    singular P carry no finite order and are left out of the report."""
    _check_unimodular(lam)
    _check_branch_cut(lam, branch_angle)
    theta0 = _window_angle(lam, branch_angle)
    if evd is None:
        R = to_para_hermitian(P)
        evd = analytic_evd(R, K=K, tol=tol)
    n = P.n

    branches = [evd.D.entry(i, i) for i in range(n)]
    sups = []
    for f in branches:
        Kv = 256
        sups.append(float(np.max(np.abs(lp.lp_eval_grid(f, f.den, Kv)))))
    scale = max(max(sups), 1e-300)
    floor_abs = 1e3 * np.finfo(float).eps * scale

    entries = []
    for i, f in enumerate(branches):
        if sups[i] <= 1e-10 * scale:
            continue  # identically zero curve: no finite vanishing order
        f0 = complex(lp.lp_eval(f, theta0))
        if abs(f0) > 1e-6 * scale:
            continue  # curve does not vanish here

        def curve(ths, _f=f):
            return np.real(lp.lp_eval(_f, ths))

        w = 0.05
        fit1 = _fit_window(curve, theta0, w, m_max, floor_abs)
        fit2 = _fit_window(curve, theta0, w / 2, m_max, floor_abs)
        if fit1 is None or fit2 is None:
            raise DegenerateFit(
                f"curve {i} vanishes at theta0 = {theta0:.6f} beyond order "
                f"{m_max}; no derivative cleared the noise floor",
                branch=i,
            )
        m1, e1, c1 = fit1
        m2, e2, c2 = fit2
        if m1 != m2 or e1 != e2 or abs(c1 - c2) > 0.1 * max(c1, c2):
            raise DegenerateFit(
                f"window fits disagree on curve {i} at theta0 = "
                f"{theta0:.6f}: ({m1}, {e1}, {c1:.6g}) vs ({m2}, {e2}, "
                f"{c2:.6g})",
                branch=i,
            )
        feature = e1 * ((1 - (-1) ** m1) // 2)
        entries.append({"m": m1, "eps": e1, "c": c1, "feature": feature})

    entries.sort(key=lambda d: (d["m"], d["c"]))
    return SignReport(lam=complex(lam), theta0=theta0, entries=tuple(entries))


# ---------------------------------------------------------------------------
# sign of a simple eigenvalue: the derivative formula
# ---------------------------------------------------------------------------


def sign_simple(
    P: PalindromicPoly,
    lam: complex,
    v: np.ndarray,
    rtol: float = 1e-8,
    branch_angle: float = 0.0,
) -> dict:
    """Sign of a simple unimodular eigenvalue from one eigenvector.

    value = Re( i lambda^{1 - g/2} v^* P'(lambda) v ), and the sign
    characteristic is its sign.  Scaling v by any nonzero constant scales
    value by |const|^2 and leaves the sign alone.  The half power for odd
    grades uses the branch window picked by branch_angle, consistent with
    sign_characteristics.

    rtol bounds how far v may be from an exact null vector of P(lambda),
    relative to ||P|| ||v||; loosen it when feeding vectors quoted to a few
    digits.  NearDegenerate fires when another eigenvalue curve of R passes
    too close at theta0 for the simple-eigenvalue formula to mean anything."""
    _check_unimodular(lam)
    _check_branch_cut(lam, branch_angle)
    v = np.asarray(v, dtype=complex).reshape(-1)
    if v.shape[0] != P.n:
        raise ShapeError(f"eigenvector has size {v.shape[0]}, P is {P.n}")
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        raise NotEigenvector("eigenvector must be nonzero")
    res = float(np.linalg.norm(P(lam) @ v))
    bar = rtol * P.norm() * nv
    if res > bar:
        raise NotEigenvector(
            f"||P(lambda) v|| = {res:.3e} exceeds {bar:.3e}; not an "
            f"eigenvector at this tolerance",
            residual=res,
        )

    theta0 = _window_angle(lam, branch_angle)
    R = to_para_hermitian(P)
    H = mf.eval_theta(R, theta0)
    ew = np.linalg.eigvalsh((H + H.conj().T) / 2.0)
    diameter = float(ew.max() - ew.min())
    near = np.sort(np.abs(ew))
    if near.size > 1 and near[1] < 1e-8 * max(diameter, 1.0):
        raise NearDegenerate(
            f"second eigenvalue curve only {near[1]:.3e} away at theta0 = "
            f"{theta0:.6f}; lambda is not numerically simple",
            gap=float(near[1]),
        )

    power = np.exp((1.0 - P.g / 2.0) * (np.log(abs(lam)) + 1j * theta0))
    raw = 1j * power * np.vdot(v, P.deriv(lam) @ v)
    value = float(raw.real)
    drift = abs(raw.imag)
    if drift > 1e-8 * max(abs(value), 1e3 * np.finfo(float).eps * P.norm() * nv**2):
        raise ResidualError(
            f"sign value came out non-real (imaginary part {drift:.3e} vs "
            f"real part {value:.3e}); lambda or v is too far off",
            imag=drift,
        )
    return {"value": value, "sign": 1 if value > 0 else -1}


# ---------------------------------------------------------------------------
# perturbations
# ---------------------------------------------------------------------------


def perturbation_check(
    P: PalindromicPoly,
    dP: PalindromicPoly,
    lambda_cluster,
    tol: float = 1e-8,
) -> dict:
    """Where does a palindromic perturbation send the eigenvalues near a
    cluster?

    lambda_cluster may be one eigenvalue, a list of them, or the
    (lambda, multiplicity) pairs unimodular_eigenvalues returns.  The total
    multiplicity says how many eigenvalues of P + dP to pull out (the ones
    nearest the cluster); moved_off_circle reports whether any of those left
    the unit circle by more than tol."""
    if dP.g != P.g:
        raise ShapeError(f"perturbation has grade {dP.g}, P has {P.g}")
    if dP.n != P.n:
        raise ShapeError(f"perturbation is {dP.n} x {dP.n}, P is {P.n} x {P.n}")

    if isinstance(lambda_cluster, (complex, float, int)):
        cluster = [(complex(lambda_cluster), 1)]
    else:
        cluster = []
        for item in lambda_cluster:
            if isinstance(item, tuple):
                cluster.append((complex(item[0]), int(item[1])))
            else:
                cluster.append((complex(item), 1))
    if not cluster:
        raise RangeError("lambda_cluster must name at least one eigenvalue")
    count = sum(m for _, m in cluster)

    Q = PalindromicPoly(
        tuple(P.coeffs[i] + dP.coeffs[i] for i in range(P.g + 1))
    )
    _require_regular(Q)
    vals = _finite_eigenvalues(Q)
    if vals.size < count:
        raise NotRegular(
            f"perturbed polynomial has only {vals.size} finite eigenvalues, "
            f"cluster asks for {count}"
        )
    dists = np.min(
        np.abs(vals[:, None] - np.array([lam for lam, _ in cluster])[None, :]),
        axis=1,
    )
    picked = vals[np.argsort(dists)[:count]]
    off = np.abs(np.abs(picked) - 1.0)
    return {
        "moved_off_circle": bool(np.any(off > tol)),
        "new_eigenvalues": [complex(z) for z in picked],
        "max_off_circle": float(np.max(off)),
    }
