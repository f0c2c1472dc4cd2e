"""Pure numpy implementations of the hot kernels.

Semantics mirror ``_core.pyx`` operation for operation, so either backend
yields the same results (bit-identical for the integer-valued MCS scan).
"""
from __future__ import annotations

import math

import numpy as np

CONTINUE, STOP_BETA, STOP_MAX_ITER = 0, 1, 2
TAU = 1e-12


def beta_value(failures: int, n: int) -> float:
    """Coefficient of variation of the LOLP estimate.

    inf while the sample variance is zero (no failure yet, or every state
    failed): a degenerate sample carries no evidence of convergence.
    """
    if failures == 0 or failures >= n:
        return math.inf
    p = failures / n
    return math.sqrt(p * (1.0 - p) / n) / p


def copper_scan(u, for_rate, pmax, load, failures, n, beta_thr, max_iter):
    """Feed a block of uniform rows through the copper-plate test with the stop rule.

    Row ``r`` of ``u`` holds one uniform per unit; unit ``k`` is down when
    ``u[r, k] < for_rate[k]``.  Returns ``(failures, n, status)``.
    """
    up = u >= for_rate
    cap = np.zeros(u.shape[0])
    for k in range(u.shape[1]):
        cap = cap + np.where(up[:, k], pmax[k], 0.0)
    return indicator_scan(cap < load, failures, n, beta_thr, max_iter)


def indicator_scan(fail, failures, n, beta_thr, max_iter):
    """Append 0/1 failure indicators to running counts until a stop rule fires.

    Stops after the first iteration with n >= 2, 0 < failures < n and
    beta < ``beta_thr``, or when n reaches ``max_iter``.  Returns
    ``(failures, n, status)``.
    """
    rows = min(len(fail), max_iter - n)
    if rows <= 0:
        return failures, n, STOP_MAX_ITER
    counts = failures + np.cumsum(np.asarray(fail[:rows], dtype=np.int64))
    ns = n + np.arange(1, rows + 1, dtype=np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = counts / ns
        beta = np.sqrt(p * (1.0 - p) / ns) / p
    hit = np.flatnonzero((ns >= 2) & (counts > 0) & (counts < ns) & (beta < beta_thr))
    if hit.size:
        r = int(hit[0])
        return int(counts[r]), int(ns[r]), STOP_BETA
    status = STOP_MAX_ITER if ns[-1] == max_iter else CONTINUE
    return int(counts[-1]), int(ns[-1]), status


def smo_svr(K, z, C, eps, tol, max_iter):
    """SMO for the epsilon-SVR dual with second-order working-set selection.

    ``K`` is the l x l kernel matrix and ``z`` the targets.  Variables are the
    2l stacked multipliers ``[alpha; alpha_star]``; returns ``(a, iterations)``.
    """
    K = np.ascontiguousarray(K, dtype=float)
    z = np.asarray(z, dtype=float)
    l = z.shape[0]
    m = 2 * l
    y = np.concatenate([np.ones(l), -np.ones(l)])
    src = np.concatenate([np.arange(l), np.arange(l)])
    QD = K[src, src]
    a = np.zeros(m)
    G = np.concatenate([eps - z, eps + z])
    rev = slice(None, None, -1)

    it = 0
    while it < max_iter:
        # i: maximal violator; ties go to the last index, like the compiled loop
        cand = np.where(y > 0, np.where(a < C, -G, -np.inf), np.where(a > 0, G, -np.inf))
        i = m - 1 - int(np.argmax(cand[rev]))
        Gmax = cand[i]
        if Gmax == -np.inf:
            break
        Qi = (y[i] * y) * K[src[i], src]

        pos_ok = (y > 0) & (a > 0)
        neg_ok = (y < 0) & (a < C)
        g2 = np.where(pos_ok, G, np.where(neg_ok, -G, -np.inf))
        Gmax2 = g2.max()
        grad_diff = np.where(pos_ok, Gmax + G, np.where(neg_ok, Gmax - G, 0.0))
        quad = np.where(y > 0, QD[i] + QD - 2.0 * y[i] * Qi, QD[i] + QD + 2.0 * y[i] * Qi)
        quad = np.where(quad > 0, quad, TAU)
        obj = np.where((pos_ok | neg_ok) & (grad_diff > 0), -(grad_diff * grad_diff) / quad, np.inf)
        if Gmax + Gmax2 < tol or obj.min() == np.inf:
            break
        j = m - 1 - int(np.argmin(obj[rev]))
        Qj = (y[j] * y) * K[src[j], src]

        ai_old, aj_old = a[i], a[j]
        if y[i] != y[j]:
            qc = QD[i] + QD[j] + 2 * Qi[j]
            if qc <= 0:
                qc = TAU
            delta = (-G[i] - G[j]) / qc
            diff = a[i] - a[j]
            ai, aj = a[i] + delta, a[j] + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            else:
                if ai < 0:
                    ai, aj = 0.0, -diff
            if diff > 0.0:
                if ai > C:
                    ai, aj = C, C - diff
            else:
                if aj > C:
                    aj, ai = C, C + diff
        else:
            qc = QD[i] + QD[j] - 2 * Qi[j]
            if qc <= 0:
                qc = TAU
            delta = (G[i] - G[j]) / qc
            s = a[i] + a[j]
            ai, aj = a[i] - delta, a[j] + delta
            if s > C:
                if ai > C:
                    ai, aj = C, s - C
            else:
                if aj < 0:
                    aj, ai = 0.0, s
            if s > C:
                if aj > C:
                    aj, ai = C, s - C
            else:
                if ai < 0:
                    ai, aj = 0.0, s
        a[i], a[j] = ai, aj
        G += Qi * (ai - ai_old) + Qj * (aj - aj_old)
        it += 1
    return a, it


def best_stump(X, order, r):
    """Exhaustive one-split search on residuals ``r``.

    ``order[j]`` is the stable argsort of column ``j``.  Splits are only placed
    between consecutive distinct values.  Returns ``(feature, threshold, left,
    right, score)`` where ``score = S_L^2/n_L + S_R^2/n_R``; the first maximum
    in (feature, threshold) order wins.  ``feature == -1`` when no split exists.
    """
    n, d = X.shape
    total = float(np.cumsum(r)[-1]) if n else 0.0
    if n < 2 or d == 0:
        mean = total / n if n else 0.0
        return -1, 0.0, mean, mean, -math.inf
    R = r[order]  # d x n
    xs = np.take_along_axis(X.T, order, axis=1)
    cs = np.cumsum(R, axis=1)[:, :-1]
    nl = np.arange(1, n, dtype=float)
    nr = n - nl
    sr = total - cs
    score = cs * cs / nl + sr * sr / nr
    valid = xs[:, :-1] != xs[:, 1:]
    score = np.where(valid, score, -np.inf)
    flat = int(np.argmax(score))
    if score.flat[flat] == -np.inf:
        mean = total / n
        return -1, 0.0, mean, mean, -math.inf
    j, k = divmod(flat, n - 1)
    thr = 0.5 * (xs[j, k] + xs[j, k + 1])
    left = cs[j, k] / nl[k]
    right = sr[j, k] / nr[k]
    return j, float(thr), float(left), float(right), float(score[j, k])
