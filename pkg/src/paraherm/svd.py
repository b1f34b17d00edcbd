"""Analytic SVD on the circle through the doubled para-Hermitian embedding.

Stacking A into H = [[0, A], [A^P, 0]] turns singular values into symmetric
pairs of eigenvalue branches: lambda is a nonzero branch of H exactly when
-lambda is, with eigenvectors [b; c] and [b; -c].  Running the analytic
eigendecomposition on H and keeping one branch per pair yields A = U S V^P
with para-unitary U, V and a diagonal S that is real on |z| = 1 -- at the
price that the "singular values" may be negative somewhere and come in no
particular order.  That relaxation is what buys analyticity; the classical
sorted nonnegative values generally kink where branches cross zero, and
``has_den1_obstruction`` demonstrates exactly that failure for inputs like
1 + z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import laurent as lp
from . import matfun as mf
from .errors import PairingError, RangeError, ResidualError
from .evd import EvdResult, analytic_evd, complete_para_unitary
from .matfun import LaurentMatrix

__all__ = [
    "SvdResult",
    "doubled_embedding",
    "pair_pm_branches",
    "analytic_svd",
    "has_den1_obstruction",
    "svd_to_json",
]


@dataclass(frozen=True)
class SvdResult:
    """A = U S V^P with U (m x m), V (n x n) para-unitary and S (m x n)
    diagonal, real on the circle.  Entries of S are signed and unordered;
    exactly ``r`` of them are not identically zero.  N is the overall
    root order: every factor lives in series of z^(1/N)."""

    U: LaurentMatrix
    S: LaurentMatrix
    V: LaurentMatrix
    N: int
    r: int
    residuals: dict


def doubled_embedding(A: LaurentMatrix) -> LaurentMatrix:
    """The (m+n) x (m+n) para-Hermitian block matrix [[0, A], [A^P, 0]].

    Its pointwise spectrum is {+-sigma_k(A(theta))} plus m + n - 2r zeros,
    which is the bridge from eigenvalue branches back to singular values."""
    Ap = mf.mat_para_conj(A)
    rows = []
    for i in range(A.m):
        rows.append(
            [lp.lp_zero()] * A.m + [A.entry(i, j) for j in range(A.n)]
        )
    for i in range(A.n):
        rows.append(
            [Ap.entry(i, j) for j in range(A.m)] + [lp.lp_zero()] * A.n
        )
    return mf.mat_from_entries(rows)


def _column_grid(ev: EvdResult, min_nodes: int = 256):
    """Dense evaluation of the EVD factors over their full common period."""
    dens = [ev.D.entry(i, i).den for i in range(ev.D.n)]
    dens += [f.den for row in ev.U.entries for f in row]
    period = math.lcm(*dens)
    bw = max(1, ev.U.bandwidth, ev.D.bandwidth)
    Kv = mf._next_pow2(max(min_nodes, 4 * bw))
    thetas = np.linspace(0.0, 2.0 * np.pi * period, Kv, endpoint=False)
    nn = ev.U.n
    dv = np.stack(
        [
            lp.lp_eval_grid(ev.D.entry(i, i), period, Kv, 0.0)
            for i in range(nn)
        ],
        axis=1,
    )
    Uv = mf.eval_uniform(ev.U, period, Kv, 0.0)
    return thetas, period, dv, Uv


def pair_pm_branches(ev: EvdResult, m: int, n: int, tol: float = 1e-8):
    """Split the eigendecomposition of a doubled matrix into SVD factors.

    Matches every branch that is not identically zero with its negated
    mirror (they always coexist, with eigenvectors related by flipping the
    sign of the lower block), keeps the branch of each pair that is positive
    where its magnitude peaks, and reads off

        B = sqrt(2) (top m rows),  C = sqrt(2) (bottom n rows),  Lambda.

    Both returned B and C have orthonormal columns on the circle.  The value
    matching is decisive; the block-sign overlap |<J u_i, u_j>| only breaks
    ties among equal-valued candidates, so multiplicities cannot derail the
    pairing.  Returns (None, None, None) when every branch is zero (r = 0).
    """
    nn = ev.U.n
    if nn != m + n:
        raise RangeError(
            f"eigendecomposition is {nn} x {nn} but m + n = {m + n}"
        )
    thetas, period, dv, Uv = _column_grid(ev)
    scale = float(np.max(np.abs(dv)))
    sup = np.max(np.abs(dv), axis=0)  # per-branch sup norm
    live = [i for i in range(nn) if sup[i] > 1e-10 * scale] if scale > 0 else []
    if not live:
        return None, None, None

    J = np.concatenate([np.ones(m), -np.ones(n)])
    nl = len(live)
    mism = np.full((nl, nl), np.inf)
    pref = np.zeros((nl, nl))
    for a, i in enumerate(live):
        for b, j in enumerate(live):
            if b <= a:
                continue
            mism[a, b] = np.max(np.abs(dv[:, i] + dv[:, j])) / scale
            ov = np.abs(
                np.einsum("tk,k,tk->t", Uv[:, :, i].conj(), J, Uv[:, :, j])
            )
            pref[a, b] = 0.1 * (1.0 - float(np.mean(ov)))

    remaining = list(range(nl))
    pairs = []
    while remaining:
        best = None
        for ai in remaining:
            for bi in remaining:
                if bi <= ai:
                    continue
                c = mism[ai, bi] + pref[ai, bi]
                if best is None or c < best[0]:
                    best = (c, ai, bi)
        if best is None or mism[best[1], best[2]] > tol:
            closest = min(
                (mism[a, b] for a in remaining for b in remaining if b > a),
                default=float("inf"),
            )
            raise PairingError(
                f"branch {live[remaining[0]]} has no negated mirror within "
                f"{tol:.1e} (closest value mismatch {closest:.3e}); the "
                f"embedding spectrum is not sign-symmetric",
                branch=live[remaining[0]],
            )
        _, ai, bi = best
        remaining.remove(ai)
        remaining.remove(bi)
        i, j = live[ai], live[bi]
        t_star = int(np.argmax(np.abs(dv[:, i])))
        rep, mirror = (i, j) if dv[t_star, i].real > 0 else (j, i)
        pairs.append((rep, mirror))
    pairs.sort()

    root2 = math.sqrt(2.0)
    bcols, ccols, lams = [], [], []
    for rep, _ in pairs:
        bcols.append([lp.lp_scale(root2, ev.U.entry(i, rep)) for i in range(m)])
        ccols.append(
            [lp.lp_scale(root2, ev.U.entry(m + i, rep)) for i in range(n)]
        )
        lams.append(ev.D.entry(rep, rep))
    r = len(pairs)
    B = mf.mat_from_entries([[bcols[l][i] for l in range(r)] for i in range(m)])
    C = mf.mat_from_entries([[ccols[l][i] for l in range(r)] for i in range(n)])
    Lam = mf.mat_from_entries(
        [
            [lams[i] if i == j else lp.lp_zero() for j in range(r)]
            for i in range(r)
        ]
    )

    # the defining relation A C = B Lambda, on the same grid; A(theta) is
    # the top-right block of the doubled matrix, rebuilt here from the
    # eigendecomposition so this check needs no extra inputs
    Kv = thetas.size
    diag = np.stack(
        [lp.lp_eval_grid(lams[i], period, Kv, 0.0) for i in range(r)], axis=1
    )
    Bv = mf.eval_uniform(B, period, Kv, 0.0)
    Cv = mf.eval_uniform(C, period, Kv, 0.0)
    Hv = np.einsum("tik,tk,tjk->tij", Uv, dv, Uv.conj())
    Av = Hv[:, :m, m:]
    defect = float(np.max(np.abs(Av @ Cv - Bv * diag[:, None, :])))
    if defect > tol * max(scale, 1.0):
        raise ResidualError(
            f"extracted factors violate A C = B Lambda "
            f"(defect {defect:.3e} vs tol {tol * max(scale, 1.0):.1e})",
            defect=defect,
        )
    return B, C, Lam


def analytic_svd(
    A: LaurentMatrix,
    K: int | None = None,
    tol: float = 1e-8,
    gap_rel: float = 1e-6,
    max_period: int | None = None,
) -> SvdResult:
    """Analytic singular value decomposition A = U S V^P on the circle.

    Eigendecomposes the doubled embedding, pairs the +-lambda branches,
    completes sqrt(2) B and sqrt(2) C to full para-unitaries independently,
    and pads Lambda with zero rows/columns to m x n.  For rank-zero input
    both completions fall back to identities.  Residuals are verified on a
    dense grid over the full period; ``pointwise`` is the largest absolute
    gap between sorted |S(theta)| and the classical singular values of
    A(theta)."""
    m, n = A.m, A.n
    H = doubled_embedding(A)
    ev = analytic_evd(H, K=K, tol=tol, gap_rel=gap_rel, max_period=max_period)
    B, C, Lam = pair_pm_branches(ev, m, n, tol=tol)
    r = 0 if Lam is None else Lam.n

    if r == 0:
        U = mf.mat_eye(m)
        V = mf.mat_eye(n)
    else:
        U = complete_para_unitary(B, tol=tol)
        V = complete_para_unitary(C, tol=tol)
    S = mf.mat_from_entries(
        [
            [
                Lam.entry(i, j) if i < r and j < r else lp.lp_zero()
                for j in range(n)
            ]
            for i in range(m)
        ]
    )
    N = math.lcm(U.den, S.den, V.den)

    # ---- a-posteriori verification --------------------------------------
    bw = max(1, U.bandwidth, S.bandwidth, V.bandwidth, A.bandwidth)
    Kv = mf._next_pow2(max(256, 4 * bw))
    gden = math.lcm(N, A.den)
    thetas = np.linspace(0.0, 2.0 * np.pi * gden, Kv, endpoint=False)
    Av = mf.eval_uniform(A, gden, Kv, 0.0)
    Uv = mf.eval_uniform(U, gden, Kv, 0.0)
    Sv = mf.eval_uniform(S, gden, Kv, 0.0)
    Vv = mf.eval_uniform(V, gden, Kv, 0.0)
    recon = Uv @ Sv @ Vv.conj().transpose(0, 2, 1)
    rres = float(np.max(np.linalg.norm(Av - recon, axis=(1, 2))))
    eye_m, eye_n = np.eye(m), np.eye(n)
    pu_u = float(
        np.max(np.linalg.norm(Uv @ Uv.conj().transpose(0, 2, 1) - eye_m, axis=(1, 2)))
    )
    pu_v = float(
        np.max(np.linalg.norm(Vv @ Vv.conj().transpose(0, 2, 1) - eye_n, axis=(1, 2)))
    )
    diag = Sv[:, np.arange(min(m, n)), np.arange(min(m, n))]
    realness = float(np.max(np.abs(diag.imag))) if diag.size else 0.0
    sing = np.linalg.svd(Av, compute_uv=False)
    mine = np.sort(np.abs(diag), axis=1)[:, ::-1]
    pw = float(np.max(np.abs(mine - sing))) if diag.size else 0.0
    scale = max(1.0, float(np.max(np.linalg.norm(Av, axis=(1, 2)))))
    if rres > tol * scale or max(pu_u, pu_v) > tol:
        raise ResidualError(
            f"SVD verification failed: reconstruction {rres:.3e} "
            f"(tol {tol * scale:.1e}), para-unitarity "
            f"{max(pu_u, pu_v):.3e}",
            reconstruction=rres,
            para_unitarity=max(pu_u, pu_v),
        )
    return SvdResult(
        U=U,
        S=S,
        V=V,
        N=N,
        r=r,
        residuals={
            "reconstruction": rres,
            "para_unitarity_u": pu_u,
            "para_unitarity_v": pu_v,
            "realness": realness,
            "pointwise": pw,
        },
    )


def has_den1_obstruction(A: LaurentMatrix, K: int = 512, tol: float = 1e-8) -> bool:
    """Can the magnitude-sorted singular values be 2 pi periodic series?

    Samples the classical (sorted, nonnegative) singular values of A on a
    denominator-1 grid and attempts Fourier recovery of each curve.  True
    means recovery rejects them: some curve has a kink (|1 + e^(i theta)|
    being the canonical case), its Fourier tail decays too slowly, and no
    denominator-1 singular value selection by magnitude exists.  False
    means the sorted values pass as honest 2 pi periodic functions.

    This is the direct obstruction probe; it says nothing about signed or
    unordered selections (for those, run analytic_svd and inspect N)."""
    Kv = max(K, mf._next_pow2(4 * max(1, A.bandwidth)))
    if Kv & (Kv - 1):
        raise RangeError(f"grid size must be a power of two, got {K}")
    thetas = lp.lp_sample_grid(1, Kv)
    Av = mf.eval_theta(A, thetas)
    sing = np.linalg.svd(Av, compute_uv=False)
    scale = max(float(np.max(sing)), 1.0)
    for l in range(sing.shape[1]):
        try:
            lp._recover(
                sing[:, l].astype(complex), 1, 1e-12, thetas[0],
                alias_tol=tol, scale=scale,
            )
        except lp.AliasError:
            return True
    return False


def svd_to_json(res: SvdResult) -> dict:
    return {
        "U": mf.mat_to_json(res.U),
        "S": mf.mat_to_json(res.S),
        "V": mf.mat_to_json(res.V),
        "rank": res.r,
        "residuals": dict(res.residuals) | {"N": res.N},
    }
