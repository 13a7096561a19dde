"""Numba kernels: coordinate descent and the banded natural-spline solve.

Everything here is deliberately plain loops. fastmath stays off so float
summation order is fixed, which keeps runs bit-reproducible and lets the
path builder compute the same gradients the solver sees (exact zeros at the
first path point depend on that).
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _dot(col, r, n):
    """Four-lane dot product with a fixed summation order.

    The independent accumulators let LLVM vectorize without reassociating,
    so results are bit-stable across runs and match column_gradients exactly.
    """
    acc0 = 0.0
    acc1 = 0.0
    acc2 = 0.0
    acc3 = 0.0
    i = 0
    while i + 4 <= n:
        acc0 += col[i] * r[i]
        acc1 += col[i + 1] * r[i + 1]
        acc2 += col[i + 2] * r[i + 2]
        acc3 += col[i + 3] * r[i + 3]
        i += 4
    tail = 0.0
    while i < n:
        tail += col[i] * r[i]
        i += 1
    return ((acc0 + acc1) + (acc2 + acc3)) + tail


@njit(cache=True)
def column_gradients(x, r):
    """g[j] = (1/n) <x_j, r> with the same summation order cd_solve uses."""
    n, q = x.shape
    g = np.zeros(q)
    for j in range(q):
        g[j] = _dot(x[:, j], r, n) / n
    return g


@njit(cache=True)
def column_sq_norms(x):
    """(1/n) sum_i x[i, j]^2 per column."""
    n, q = x.shape
    out = np.zeros(q)
    for j in range(q):
        out[j] = _dot(x[:, j], x[:, j], n) / n
    return out


INNER_SWEEP_CAP = 100  # settle sweeps between exact checks


@njit(cache=True)
def cd_solve(
    x, r, denom, lam, pen, usable, beta, coef_tol, kkt_tol, kkt_relaxed,
    max_passes,
):
    """Cyclic coordinate descent for one penalty level.

    Minimizes (1/(2n)) ||r_full||^2 + lam * sum_j pen_j |beta_j| where
    r_full = z - x beta; the caller passes x Fortran-ordered, the residual r
    consistent with the warm-start beta (both updated in place), and
    denom[j] = (1/n) sum_i x[i,j]^2. Intercepts are handled by the caller
    (gaussian: centering; GLMs: an unpenalized sqrt-weight column).

    Active-set sweeps run until the largest standardized coefficient move
    drops below coef_tol, capped at INNER_SWEEP_CAP sweeps so a nearly
    singular active set cannot starve the exact check; each full sweep is
    followed by an exact stationarity pass. The solve stops once the worst
    violation is at most kkt_tol. On saturated, nearly singular active sets
    float rounding can pin the violation above that (observed ~1e-7 scale
    limit cycles), so a plateau - three consecutive checks without a 1%
    improvement, or three quarters of the pass budget spent - is accepted
    when the violation is at most kkt_relaxed.

    Returns (worst_violation, passes_used, converged_flag).
    """
    n, q = x.shape

    ok = np.zeros(q, dtype=np.uint8)
    active = np.zeros(q, dtype=np.uint8)
    for j in range(q):
        if usable[j] and denom[j] > 0.0:
            ok[j] = 1
            # Unpenalized usable columns stay permanently in the active set.
            if beta[j] != 0.0 or pen[j] == 0.0:
                active[j] = 1

    passes = 0
    worst = np.inf
    prev_worst = np.inf
    stalled_checks = 0
    while passes < max_passes:
        # Converge on the current active set.
        inner = 0
        while passes < max_passes and inner < INNER_SWEEP_CAP:
            passes += 1
            inner += 1
            dmax = 0.0
            for j in range(q):
                if not active[j]:
                    continue
                col = x[:, j]
                g = _dot(col, r, n) / n + denom[j] * beta[j]
                t = lam * pen[j]
                if g > t:
                    bnew = (g - t) / denom[j]
                elif g < -t:
                    bnew = (g + t) / denom[j]
                else:
                    bnew = 0.0
                d = bnew - beta[j]
                if d != 0.0:
                    beta[j] = bnew
                    for i in range(n):
                        r[i] -= d * col[i]
                    step = abs(d) * np.sqrt(denom[j])
                    if step > dmax:
                        dmax = step
            if dmax < coef_tol:
                break

        # One full sweep over every usable column (may grow the active set).
        passes += 1
        for j in range(q):
            if not ok[j]:
                continue
            col = x[:, j]
            g = _dot(col, r, n) / n + denom[j] * beta[j]
            t = lam * pen[j]
            if g > t:
                bnew = (g - t) / denom[j]
            elif g < -t:
                bnew = (g + t) / denom[j]
            else:
                bnew = 0.0
            d = bnew - beta[j]
            if d != 0.0:
                beta[j] = bnew
                if bnew != 0.0:
                    active[j] = 1
                for i in range(n):
                    r[i] -= d * col[i]

        # Exact stationarity check at the current iterate.
        worst = 0.0
        for j in range(q):
            if not ok[j]:
                continue
            g = _dot(x[:, j], r, n) / n
            t = lam * pen[j]
            if beta[j] != 0.0:
                s = 1.0 if beta[j] > 0.0 else -1.0
                v = abs(g - t * s)
            else:
                v = abs(g) - t
                if v < 0.0:
                    v = 0.0
            if v > kkt_tol:
                active[j] = 1
            if v > worst:
                worst = v
        if worst <= kkt_tol:
            return worst, passes, True
        if worst > 0.99 * prev_worst:
            stalled_checks += 1
        else:
            stalled_checks = 0
        prev_worst = worst
        if worst <= kkt_relaxed and (
            stalled_checks >= 3 or 4 * passes >= 3 * max_passes
        ):
            return worst, passes, True

    return worst, passes, False


@njit(cache=True)
def cov_sweep(G, gfull, lam, pen, idx, beta):
    """One cyclic soft-threshold sweep over idx in covariance mode.

    G is the (1/n) X'X Gram matrix and gfull the (1/n) X'y gradients, so a
    coordinate's partial residual correlation never touches the n rows.
    Used to settle signs (especially of freshly activated coordinates)
    before an exact solve on the working set.
    """
    a = idx.size
    for t in range(a):
        j = idx[t]
        acc = 0.0
        for u in range(a):
            k = idx[u]
            if k != j:
                acc += G[j, k] * beta[k]
        z = gfull[j] - acc
        thr = lam * pen[j]
        d = G[j, j]
        if z > thr:
            beta[j] = (z - thr) / d
        elif z < -thr:
            beta[j] = (z + thr) / d
        else:
            beta[j] = 0.0


@njit(cache=True)
def _ldl_band2(b0, b1, b2):
    """LDL^T factorization of a symmetric pentadiagonal SPD matrix.

    b0 is the diagonal (m,), b1 the first subdiagonal (m-1,), b2 the second
    (m-2,). Returns (d, l1, l2, ok). ok is False when a pivot is not
    positive, i.e. the matrix was not numerically SPD.
    """
    m = b0.shape[0]
    d = np.zeros(m)
    l1 = np.zeros(m - 1 if m > 1 else 0)
    l2 = np.zeros(m - 2 if m > 2 else 0)
    for i in range(m):
        di = b0[i]
        if i >= 1:
            di -= l1[i - 1] * l1[i - 1] * d[i - 1]
        if i >= 2:
            di -= l2[i - 2] * l2[i - 2] * d[i - 2]
        if di <= 0.0:
            return d, l1, l2, False
        d[i] = di
        if i + 1 < m:
            num = b1[i]
            if i >= 1:
                num -= l2[i - 1] * d[i - 1] * l1[i - 1]
            l1[i] = num / di
        if i + 2 < m:
            l2[i] = b2[i] / di
    return d, l1, l2, True


@njit(cache=True)
def _ldl_solve_band2(d, l1, l2, rhs):
    """Solve L D L^T gamma = rhs for the factorization from _ldl_band2."""
    m = d.shape[0]
    zvec = np.zeros(m)
    for i in range(m):
        acc = rhs[i]
        if i >= 1:
            acc -= l1[i - 1] * zvec[i - 1]
        if i >= 2:
            acc -= l2[i - 2] * zvec[i - 2]
        zvec[i] = acc
    gamma = np.zeros(m)
    for i in range(m - 1, -1, -1):
        acc = zvec[i] / d[i]
        if i + 1 < m:
            acc -= l1[i] * gamma[i + 1]
        if i + 2 < m:
            acc -= l2[i] * gamma[i + 2]
        gamma[i] = acc
    return gamma


@njit(cache=True)
def _band_inverse_trace(d, l1, l2, m0, m1, m2):
    """tr(B^{-1} M) for pentadiagonal symmetric B (factored) and M (bands m0..m2).

    Uses the Takahashi recursion: entries of B^{-1} on the band of L^T are
    exact and computable from the banded factorization alone, backwards.
    """
    m = d.shape[0]
    c0 = np.zeros(m)            # C[i, i]
    c1 = np.zeros(m - 1 if m > 1 else 0)  # C[i, i+1]
    c2 = np.zeros(m - 2 if m > 2 else 0)  # C[i, i+2]
    for i in range(m - 1, -1, -1):
        if i + 2 < m:
            # uses row i+1 (c1[i+1]) and row i+2 (c0[i+2]); both already done
            c2[i] = -(l1[i] * c1[i + 1] + l2[i] * c0[i + 2])
        if i + 1 < m:
            acc = -l1[i] * c0[i + 1]
            if i + 2 < m:
                acc -= l2[i] * c1[i + 1]
            c1[i] = acc
        acc = 1.0 / d[i]
        if i + 1 < m:
            acc -= l1[i] * c1[i]
        if i + 2 < m:
            acc -= l2[i] * c2[i]
        c0[i] = acc
    trace = 0.0
    for i in range(m):
        trace += c0[i] * m0[i]
    for i in range(m - 1):
        trace += 2.0 * c1[i] * m1[i]
    for i in range(m - 2):
        trace += 2.0 * c2[i] * m2[i]
    return trace


@njit(cache=True)
def spline_bands(h, winv):
    """Bands of the Reinsch system for knot gaps h and inverse weights winv.

    Returns (r0, r1, m0, m1, m2): the tridiagonal curvature-penalty matrix R
    and the pentadiagonal Q^T W^{-1} Q, both over the K-2 interior knots.
    """
    k = h.shape[0] + 1
    m = k - 2
    qt = np.zeros(m)  # Q[i, i]     = 1/h[i]
    qm = np.zeros(m)  # Q[i+1, i]   = -(1/h[i] + 1/h[i+1])
    qb = np.zeros(m)  # Q[i+2, i]   = 1/h[i+1]
    for i in range(m):
        qt[i] = 1.0 / h[i]
        qb[i] = 1.0 / h[i + 1]
        qm[i] = -(qt[i] + qb[i])
    r0 = np.zeros(m)
    r1 = np.zeros(m - 1 if m > 1 else 0)
    for i in range(m):
        r0[i] = (h[i] + h[i + 1]) / 3.0
    for i in range(m - 1):
        r1[i] = h[i + 1] / 6.0
    m0 = np.zeros(m)
    m1 = np.zeros(m - 1 if m > 1 else 0)
    m2 = np.zeros(m - 2 if m > 2 else 0)
    for i in range(m):
        m0[i] = (
            qt[i] * qt[i] * winv[i]
            + qm[i] * qm[i] * winv[i + 1]
            + qb[i] * qb[i] * winv[i + 2]
        )
    for i in range(m - 1):
        m1[i] = qm[i] * winv[i + 1] * qt[i + 1] + qb[i] * winv[i + 2] * qm[i + 1]
    for i in range(m - 2):
        m2[i] = qb[i] * winv[i + 2] * qt[i + 2]
    return r0, r1, m0, m1, m2


@njit(cache=True)
def spline_trace(h, winv, lam):
    """Effective degrees of freedom tr(S) at penalty lam; -1.0 signals failure."""
    k = h.shape[0] + 1
    r0, r1, m0, m1, m2 = spline_bands(h, winv)
    m = r0.shape[0]
    b0 = np.empty(m)
    b1 = np.empty(m - 1 if m > 1 else 0)
    b2 = np.empty(m - 2 if m > 2 else 0)
    for i in range(m):
        b0[i] = r0[i] + lam * m0[i]
    for i in range(m - 1):
        b1[i] = r1[i] + lam * m1[i]
    for i in range(m - 2):
        b2[i] = lam * m2[i]
    d, l1, l2, ok = _ldl_band2(b0, b1, b2)
    if not ok:
        return -1.0
    return k - lam * _band_inverse_trace(d, l1, l2, m0, m1, m2)


@njit(cache=True)
def spline_solve(h, winv, rbar, lam):
    """Fit the penalized natural spline at a fixed penalty.

    Returns (g, gamma, edf, ok): fitted knot values, interior second
    derivatives, effective degrees of freedom, and a success flag.
    """
    k = h.shape[0] + 1
    r0, r1, m0, m1, m2 = spline_bands(h, winv)
    m = r0.shape[0]
    b0 = np.empty(m)
    b1 = np.empty(m - 1 if m > 1 else 0)
    b2 = np.empty(m - 2 if m > 2 else 0)
    for i in range(m):
        b0[i] = r0[i] + lam * m0[i]
    for i in range(m - 1):
        b1[i] = r1[i] + lam * m1[i]
    for i in range(m - 2):
        b2[i] = lam * m2[i]
    rhs = np.zeros(m)
    for i in range(m):
        rhs[i] = (rbar[i + 2] - rbar[i + 1]) / h[i + 1] - (rbar[i + 1] - rbar[i]) / h[i]
    d, l1, l2, ok = _ldl_band2(b0, b1, b2)
    if not ok:
        return rbar.copy(), np.zeros(m), -1.0, False
    gamma = _ldl_solve_band2(d, l1, l2, rhs)
    g = rbar.copy()
    if lam != 0.0:
        for i in range(m):
            # scatter lam * W^{-1} Q gamma into the three affected rows
            gi = gamma[i]
            g[i] -= lam * winv[i] * gi / h[i]
            g[i + 1] += lam * winv[i + 1] * gi * (1.0 / h[i] + 1.0 / h[i + 1])
            g[i + 2] -= lam * winv[i + 2] * gi / h[i + 1]
    edf = k - lam * _band_inverse_trace(d, l1, l2, m0, m1, m2)
    return g, gamma, edf, ok
