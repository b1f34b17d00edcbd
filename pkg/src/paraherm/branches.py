"""Eigenvalue-branch continuation for para-Hermitian matrix functions.

A para-Hermitian A(z) evaluated along z = e^(i theta) gives a Hermitian
matrix family H(theta) with period 2 pi den(A).  Its eigenvalues, followed
*analytically* in theta, are generally not 2 pi den periodic: after one base
period they come back permuted,

    mu_i(theta + 2 pi den) = mu_{sigma(i)}(theta),

and only after L = order(sigma) base periods does everything close up.  This
module does the numerical legwork:

  * pointwise_evd      -- dense Hermitian solve at one node
  * continue_branches  -- march the eigendecomposition across a theta grid,
                          keeping branch identities by eigenvector overlap
                          (never by value order), with local grid refinement
                          and Procrustes alignment inside degenerate clusters
  * detect_permutation -- find sigma across the one-period shift, refine its
                          cycles so orbit length = minimal period multiplier
  * landau             -- max lcm over partitions of n (the worst case L)
  * trace_branches     -- driver: sample, continue, detect, and extend the
                          grid until every branch covers its full period;
                          retries with shifted grids when a node lands on a
                          spurious (isolated) degeneracy

Grids deliberately start off the canonical angles: branch crossings of
structured inputs love to sit exactly at theta = 0 or pi, and a node placed
on a crossing is blind (the eigensolver returns an arbitrary basis there).
The driver offsets the grid by an irrational-ish fraction of the spacing so
this cannot happen twice.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import laurent as lp
from . import matfun as mf
from .errors import (
    ContinuationError,
    NotHermitian,
    OrbitError,
    PeriodUndetected,
    RangeError,
    ShapeError,
)
from .matfun import GridSamples, LaurentMatrix

# grid offsets tried by trace_branches, as fractions of the node spacing
GRID_OFFSETS = (0.5, 0.6180339887498949, 0.3183098861837907)


# ---------------------------------------------------------------------------
# Landau's function
# ---------------------------------------------------------------------------


def _partition_lcms(n: int, largest: int) -> set:
    if n == 0:
        return {1}
    out = set()
    for part in range(min(n, largest), 0, -1):
        for rest in _partition_lcms(n - part, part):
            out.add(math.lcm(part, rest))
    return out


def landau(n: int) -> int:
    """Largest order of a permutation of n symbols: max lcm of the parts
    over all integer partitions of n, by exhaustive enumeration."""
    if not 1 <= n <= 20:
        raise RangeError(f"landau(n) supported for 1 <= n <= 20, got {n}")
    return max(_partition_lcms(n, n))


# ---------------------------------------------------------------------------
# pointwise eigendecomposition
# ---------------------------------------------------------------------------


def pointwise_evd(H):
    """Eigendecomposition of a single dense Hermitian matrix.

    Returns (eigenvalues ascending, eigenvectors as columns).  Raises
    NotHermitian when ||H - H*|| exceeds 1e-10 ||H||."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ShapeError(f"need a square matrix, got {H.shape}")
    scale = np.linalg.norm(H)
    defect = np.linalg.norm(H - H.conj().T)
    if defect > 1e-10 * max(scale, 1e-300):
        raise NotHermitian(
            f"matrix is not Hermitian: ||H - H*|| = {defect:.3e} "
            f"(||H|| = {scale:.3e})",
            defect=float(defect),
        )
    vals, vecs = np.linalg.eigh((H + H.conj().T) / 2.0)
    return vals, vecs


# ---------------------------------------------------------------------------
# BranchSet
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BranchSet:
    """Continued eigenvalue/eigenvector branches over an extended grid.

    values[i, j] is branch i at thetas[j]; vectors[j][:, i] the matching
    unit eigenvector.  The grid spans whole base periods (2 pi den each) of
    nodes_per_period nodes plus one wrap node at the far end.  sigma, orbits,
    alphas and L are filled in by detect_permutation (None before that);
    sigma[i] is the branch whose values continue branch i after one base
    period.  blind_nodes lists grid indices where two or more branches were
    numerically indistinguishable (gap below gap_abs)."""

    thetas: np.ndarray  # (J,)
    values: np.ndarray  # (n, J) real
    vectors: np.ndarray  # (J, n, n) complex
    den: int
    nodes_per_period: int
    gap_abs: float
    blind_nodes: tuple = ()
    confidence: float = 1.0
    sigma: tuple | None = None
    orbits: tuple | None = None
    alphas: tuple | None = None
    L: int | None = None

    def __post_init__(self):
        for name in ("thetas", "values", "vectors"):
            a = np.asarray(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def periods(self) -> int:
        """Whole base periods covered by the grid (excluding the wrap node)."""
        return (self.thetas.size - 1) // self.nodes_per_period


# ---------------------------------------------------------------------------
# continuation
# ---------------------------------------------------------------------------


def _clusters(vals_sorted_idx, vals, gap_abs):
    """Group eigenvalue indices into clusters separated by gaps < gap_abs.
    vals_sorted_idx: index array sorting vals ascending."""
    groups = []
    cur = [vals_sorted_idx[0]]
    for a, b in zip(vals_sorted_idx[:-1], vals_sorted_idx[1:]):
        if vals[b] - vals[a] < gap_abs:
            cur.append(b)
        else:
            groups.append(cur)
            cur = [b]
    groups.append(cur)
    return groups


def _align_step(V_prev, vals_new, W_new, gap_abs):
    """Match the freshly computed eigenpairs (vals_new, W_new) to the branch
    order of V_prev.  Returns (vals, V, confidence, blind).

    Assignment maximizes total |<v_prev_i, w_j>|; inside each degenerate
    cluster of new eigenvalues the basis is re-aligned onto the previous
    frame by orthogonal Procrustes, the rest gets a positive-real phase."""
    n = V_prev.shape[1]
    O = np.abs(V_prev.conj().T @ W_new)  # (branch, new col)
    rows, cols = linear_sum_assignment(1.0 - O)
    col_of = np.empty(n, dtype=int)
    col_of[rows] = cols

    order = np.argsort(vals_new, kind="stable")
    clusters = _clusters(order, vals_new, gap_abs)
    blind = any(len(c) > 1 for c in clusters)

    vals = vals_new[col_of]
    V = W_new[:, col_of].copy()
    conf = 1.0
    handled = np.zeros(n, dtype=bool)
    for cl in clusters:
        if len(cl) == 1:
            continue
        # branches routed into this cluster
        S = np.nonzero(np.isin(col_of, cl))[0]
        B = W_new[:, col_of[S]]
        M = B.conj().T @ V_prev[:, S]
        u, s, vt = np.linalg.svd(M)
        V[:, S] = B @ (u @ vt)
        conf = min(conf, float(s.min()))
        handled[S] = True
    for i in range(n):
        if handled[i]:
            continue
        ip = np.vdot(V_prev[:, i], V[:, i])
        mag = abs(ip)
        conf = min(conf, mag)
        if mag > 0:
            V[:, i] *= np.conj(ip) / mag
    return vals, V, conf, blind


def _eigh_node(H, scale, n):
    defect = np.linalg.norm(H - H.conj().T)
    if defect > 1e-10 * max(scale, 1e-300):
        raise NotHermitian(
            f"sample matrix not Hermitian (defect {defect:.3e})",
            defect=float(defect),
        )
    return np.linalg.eigh((H + H.conj().T) / 2.0)


def _advance(V_prev, th_prev, th_next, H_next, sampler, gap_abs, scale, depth,
             pre=None):
    """One continuation step th_prev -> th_next, recursively bisecting when
    the assignment is ambiguous (confidence < 0.9) and a sampler for fresh
    angles is available.  Returns (vals, V, confidence, blind).

    pre, when given, is the already-diagonalized (vals, vecs) of H_next --
    grid nodes come through here batched, only bisection midpoints pay for
    an individual factorization."""
    n = V_prev.shape[1]
    vals_new, W_new = pre if pre is not None else _eigh_node(H_next, scale, n)
    vals, V, conf, blind = _align_step(V_prev, vals_new, W_new, gap_abs)
    if conf >= 0.9 or depth == 0 or sampler is None:
        return vals, V, conf, blind
    th_mid = 0.5 * (th_prev + th_next)
    H_mid = sampler(th_mid)
    _, V_mid, c1, _ = _advance(
        V_prev, th_prev, th_mid, H_mid, sampler, gap_abs, scale, depth - 1
    )
    vals2, V2, c2, blind2 = _advance(
        V_mid, th_mid, th_next, H_next, sampler, gap_abs, scale, depth - 1,
        pre=(vals_new, W_new),
    )
    if min(c1, c2) > conf:
        return vals2, V2, min(c1, c2), blind2
    return vals, V, conf, blind


def continue_branches(
    samples: GridSamples,
    sampler=None,
    gap_rel: float = 1e-6,
    refine_rounds: int = 2,
) -> BranchSet:
    """Continue eigenvalue/eigenvector branches across the sample grid.

    samples must cover whole base periods of equispaced nodes plus a final
    wrap node (trace_branches builds such grids).  sampler, when given, maps
    an angle to the matrix value there and enables local bisection where the
    node-to-node assignment is ambiguous.  Raises ContinuationError when the
    best achievable overlap stays below 0.5."""
    th = samples.thetas
    vals3 = samples.values
    J, n, n2 = vals3.shape
    if n != n2:
        raise ShapeError("branch continuation needs square sample matrices")
    if J < 3:
        raise ShapeError("need at least 3 grid nodes")
    h = th[1] - th[0]
    if np.max(np.abs(np.diff(th) - h)) > 1e-9 * abs(h):
        raise ShapeError("sample grid must be equispaced")
    period = lp.TWO_PI * samples.den
    K = int(round(period / h))
    if abs(K * h - period) > 1e-6 * period or (J - 1) % K:
        raise ShapeError(
            "grid must cover whole periods (K nodes each) plus a wrap node"
        )

    scale = float(np.max(np.abs(vals3))) if vals3.size else 1.0

    # diagonalize every node in one batched call; the continuation sweep
    # below only has to align precomputed frames
    defects = np.linalg.norm(
        vals3 - vals3.conj().transpose(0, 2, 1), axis=(1, 2)
    )
    if float(defects.max()) > 1e-10 * max(scale, 1e-300):
        j_bad = int(np.argmax(defects))
        raise NotHermitian(
            f"sample matrix not Hermitian at theta = {th[j_bad]:.6f} "
            f"(defect {defects[j_bad]:.3e})",
            defect=float(defects[j_bad]),
        )
    ew_all, evec_all = np.linalg.eigh(
        (vals3 + vals3.conj().transpose(0, 2, 1)) / 2.0
    )

    # first node sets the branch order: eigenvalues ascending
    vals0, V0 = ew_all[0], evec_all[0]
    values = np.empty((n, J))
    vectors = np.empty((J, n, n), dtype=complex)
    values[:, 0] = vals0
    vectors[0] = V0

    # spectral diameter over the whole grid -> absolute degeneracy threshold
    diameter = float(ew_all.max() - ew_all.min())
    gap_abs = gap_rel * max(diameter, 1e-300)

    blind = []
    worst = 1.0
    if any(np.diff(ew_all[0]) < gap_abs):
        blind.append(0)
    for j in range(1, J):
        vals_j, V_j, conf, is_blind = _advance(
            vectors[j - 1],
            th[j - 1],
            th[j],
            vals3[j],
            sampler,
            gap_abs,
            scale,
            refine_rounds,
            pre=(ew_all[j], evec_all[j]),
        )
        if conf < 0.5:
            raise ContinuationError(
                f"branch assignment ambiguous at theta = {th[j]:.6f} "
                f"(best overlap {conf:.3f} after {refine_rounds} refinement "
                "rounds); the grid cannot resolve this input",
                theta=float(th[j]),
                confidence=float(conf),
            )
        worst = min(worst, conf)
        values[:, j] = vals_j
        vectors[j] = V_j
        if is_blind:
            blind.append(j)

    return BranchSet(
        thetas=th,
        values=values,
        vectors=vectors,
        den=samples.den,
        nodes_per_period=K,
        gap_abs=gap_abs,
        blind_nodes=tuple(blind),
        confidence=worst,
    )


# ---------------------------------------------------------------------------
# period permutation
# ---------------------------------------------------------------------------


def _cycles_of(perm):
    n = len(perm)
    seen = [False] * n
    out = []
    for i in range(n):
        if seen[i]:
            continue
        cyc = []
        j = i
        while not seen[j]:
            seen[j] = True
            cyc.append(j)
            j = perm[j]
        out.append(tuple(cyc))
    return tuple(out)


def detect_permutation(b: BranchSet, tol: float = 1e-8):
    """Find sigma with mu_i(theta + 2 pi den) = mu_{sigma(i)}(theta), refine
    its cycles, and return (sigma, orbits, alphas, L).

    Needs at least two continued base periods.  Cycle refinement: when the
    values of branch i already repeat after p < cycle-length periods, the
    cycle splits into cycles of length p, so that each orbit length is the
    *minimal* period multiplier of its branches.  PeriodUndetected when no
    permutation matches within tol."""
    K = b.nodes_per_period
    J = b.thetas.size
    n = b.n
    if J < 2 * K + 1:
        raise ShapeError("detect_permutation needs at least two base periods")
    W = J - K  # comparable window length
    scale = max(1.0, float(np.max(np.abs(b.values))))

    shifted = b.values[:, K:]  # mu_i(theta + period), theta over window
    base = b.values[:, :W]
    # cost[i, k] = how badly branch k's values fit branch i's shifted values
    cost = np.empty((n, n))
    for i in range(n):
        cost[i] = np.max(np.abs(base - shifted[i][None, :]), axis=1)
    cost = cost / scale
    # nudge ties toward the identity so coincident branches get the shortest
    # possible cycles before refinement even runs
    cost = cost + 1e-12 * (1.0 - np.eye(n))
    rows, cols = linear_sum_assignment(cost)
    sigma = np.empty(n, dtype=int)
    sigma[rows] = cols
    matched = cost[rows, cols]
    if np.max(matched) > tol:
        raise PeriodUndetected(
            "no period permutation matches the one-period shift within "
            f"tolerance (worst branch mismatch {np.max(matched):.3e} "
            f"relative, tol {tol:.1e})",
            mismatch=float(np.max(matched) * scale),
        )

    # refine cycles: inside a cycle, equal value-functions shorten the period
    def _equal(i, k):
        return np.max(np.abs(b.values[i, :W] - b.values[k, :W])) <= tol * scale

    refined = list(sigma)
    for cyc in _cycles_of(tuple(sigma)):
        q = len(cyc)
        p = q
        for cand in range(1, q):
            if q % cand:
                continue
            if all(_equal(cyc[m], cyc[(m + cand) % q]) for m in range(q)):
                p = cand
                break
        if p == q:
            continue
        for start in range(0, q, p):
            for m in range(p):
                src = cyc[start + m]
                dst = cyc[start + (m + 1) % p]
                refined[src] = dst
    sigma = tuple(int(x) for x in refined)

    orbits = _cycles_of(sigma)
    alphas = [0] * n
    for cyc in orbits:
        for i in cyc:
            alphas[i] = len(cyc)
    L = math.lcm(*(len(c) for c in orbits))
    if sorted(x for c in orbits for x in c) != list(range(n)):
        raise OrbitError("orbit decomposition is not a partition of branches")
    return sigma, orbits, tuple(alphas), L


def with_permutation(b: BranchSet, tol: float = 1e-8) -> BranchSet:
    """Return a copy of b with sigma/orbits/alphas/L filled in."""
    sigma, orbits, alphas, L = detect_permutation(b, tol)
    return replace(b, sigma=sigma, orbits=orbits, alphas=alphas, L=L)


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def _build_grid(A: LaurentMatrix, K: int, periods: int, offset: float):
    den = A.den
    h = lp.TWO_PI * den / K
    start = -np.pi * den + offset * h
    th = start + h * np.arange(periods * K + 1)
    return GridSamples(th, mf.eval_theta(A, th), den)


def trace_branches(
    A: LaurentMatrix,
    K: int | None = None,
    tol: float = 1e-8,
    gap_rel: float = 1e-6,
    max_period: int | None = None,
    refine_rounds: int = 2,
) -> BranchSet:
    """Sample A, continue its branches, detect the period permutation, and
    extend the grid so every orbit covers its own full period (alpha_i base
    periods) plus the wrap node.

    Nodes that land on isolated degeneracies make the continuation locally
    blind; when that happens the whole grid is retried at a different
    fractional offset (a degeneracy can sit on at most one of the offsets).
    Degeneracies present at *every* node are genuine multiplicity and are
    carried as aligned frames instead.  max_period bounds the achievable
    denominator den(A) * L; default landau(n) * den(A)."""
    if A.m != A.n:
        raise ShapeError("branch tracing needs a square matrix function")
    den = A.den
    if K is None:
        K = mf.default_grid_size(A)
    if max_period is None:
        max_period = landau(A.n) * den
    L_max = max(1, max_period // den)

    def sampler(theta):
        return mf.eval_theta(A, float(theta))

    best = None
    last_err = None
    for offset in GRID_OFFSETS:
        samples = _build_grid(A, K, 2, offset)
        try:
            b = continue_branches(samples, sampler, gap_rel, refine_rounds)
        except ContinuationError as e:
            last_err = e
            continue
        isolated_blind = 0 < len(b.blind_nodes) < b.thetas.size
        if best is None or len(b.blind_nodes) < len(best[0].blind_nodes):
            best = (b, offset)
        if not isolated_blind:
            best = (b, offset)
            break
    if best is None:
        raise last_err
    b, offset = best

    b = with_permutation(b, tol)
    if b.L > L_max:
        raise PeriodUndetected(
            f"detected permutation order {b.L} exceeds max_period "
            f"{max_period} (base denominator {den})",
            L=b.L,
            max_period=max_period,
        )
    need = max(b.alphas)
    if need > 2:
        samples = _build_grid(A, K, need, offset)
        b2 = continue_branches(samples, sampler, gap_rel, refine_rounds)
        b2 = with_permutation(b2, tol)
        if b2.L != b.L or b2.alphas != b.alphas:
            raise OrbitError(
                "period structure changed when the grid was extended "
                f"(L {b.L} -> {b2.L}); input is on the edge of resolution",
                L_short=b.L,
                L_long=b2.L,
            )
        b = b2
    return b


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------


def branch_csv(b: BranchSet) -> str:
    """Branch curves as CSV text with columns theta,branch_index,mu."""
    buf = io.StringIO()
    buf.write("theta,branch_index,mu\n")
    for i in range(b.n):
        for j in range(b.thetas.size):
            buf.write(f"{b.thetas[j]:.17g},{i},{b.values[i, j]:.17g}\n")
    return buf.getvalue()
