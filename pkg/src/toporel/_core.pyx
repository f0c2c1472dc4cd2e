# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_core_py`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()

DEF TAU = 1e-12

CONTINUE = 0
STOP_BETA = 1
STOP_MAX_ITER = 2


def beta_value(long long failures, long long n):
    if failures == 0 or failures >= n:
        return INFINITY
    cdef double p = <double>failures / <double>n
    return sqrt(p * (1.0 - p) / n) / p


def copper_scan(const double[:, ::1] u, const double[::1] for_rate, const double[::1] pmax,
                double load, long long failures, long long n, double beta_thr, long long max_iter):
    cdef Py_ssize_t rows = u.shape[0], m = u.shape[1], r, k
    cdef double cap, p, beta
    if n >= max_iter:
        return failures, n, STOP_MAX_ITER
    for r in range(rows):
        cap = 0.0
        for k in range(m):
            if u[r, k] >= for_rate[k]:
                cap = cap + pmax[k]
            else:
                cap = cap + 0.0
        if cap < load:
            failures += 1
        n += 1
        if n >= 2 and failures > 0 and failures < n:
            p = <double>failures / <double>n
            beta = sqrt(p * (1.0 - p) / n) / p
            if beta < beta_thr:
                return failures, n, STOP_BETA
        if n == max_iter:
            return failures, n, STOP_MAX_ITER
    return failures, n, CONTINUE


def indicator_scan(fail_in, long long failures, long long n, double beta_thr, long long max_iter):
    cdef const unsigned char[::1] fail = np.ascontiguousarray(fail_in, dtype=np.uint8)
    cdef Py_ssize_t r
    cdef double p, beta
    if n >= max_iter:
        return failures, n, STOP_MAX_ITER
    for r in range(fail.shape[0]):
        if fail[r]:
            failures += 1
        n += 1
        if n >= 2 and failures > 0 and failures < n:
            p = <double>failures / <double>n
            beta = sqrt(p * (1.0 - p) / n) / p
            if beta < beta_thr:
                return failures, n, STOP_BETA
        if n == max_iter:
            return failures, n, STOP_MAX_ITER
    return failures, n, CONTINUE


def smo_svr(K_in, z_in, double C, double eps, double tol, long long max_iter):
    cdef double[:, ::1] K = np.ascontiguousarray(K_in, dtype=np.float64)
    cdef double[::1] z = np.ascontiguousarray(z_in, dtype=np.float64)
    cdef Py_ssize_t l = z.shape[0], m = 2 * l, t, i, j, si, sj
    a_arr = np.zeros(m)
    G_arr = np.empty(m)
    y_arr = np.empty(m)
    QD_arr = np.empty(m)
    Qi_arr = np.empty(m)
    Qj_arr = np.empty(m)
    cdef double[::1] a = a_arr, G = G_arr, y = y_arr, QD = QD_arr, Qi = Qi_arr, Qj = Qj_arr
    cdef double Gmax, Gmax2, grad_diff, quad, obj, obj_min, qc, delta, diff, s, ai, aj, ai_old, aj_old, dai, daj
    cdef long long it = 0
    for t in range(l):
        y[t] = 1.0
        y[t + l] = -1.0
        G[t] = eps - z[t]
        G[t + l] = eps + z[t]
        QD[t] = K[t, t]
        QD[t + l] = K[t, t]

    while it < max_iter:
        Gmax = -INFINITY
        i = -1
        for t in range(m):
            if y[t] > 0:
                if a[t] < C:
                    if -G[t] >= Gmax:
                        Gmax = -G[t]
                        i = t
            else:
                if a[t] > 0:
                    if G[t] >= Gmax:
                        Gmax = G[t]
                        i = t
        if i == -1:
            break
        si = i % l
        for t in range(m):
            Qi[t] = (y[i] * y[t]) * K[si, t % l]

        Gmax2 = -INFINITY
        j = -1
        obj_min = INFINITY
        for t in range(m):
            if y[t] > 0:
                if a[t] > 0:
                    grad_diff = Gmax + G[t]
                    if G[t] >= Gmax2:
                        Gmax2 = G[t]
                    if grad_diff > 0:
                        quad = QD[i] + QD[t] - 2.0 * y[i] * Qi[t]
                        if not quad > 0:
                            quad = TAU
                        obj = -(grad_diff * grad_diff) / quad
                        if obj <= obj_min:
                            obj_min = obj
                            j = t
            else:
                if a[t] < C:
                    grad_diff = Gmax - G[t]
                    if -G[t] >= Gmax2:
                        Gmax2 = -G[t]
                    if grad_diff > 0:
                        quad = QD[i] + QD[t] + 2.0 * y[i] * Qi[t]
                        if not quad > 0:
                            quad = TAU
                        obj = -(grad_diff * grad_diff) / quad
                        if obj <= obj_min:
                            obj_min = obj
                            j = t
        if Gmax + Gmax2 < tol or j == -1:
            break
        sj = j % l
        for t in range(m):
            Qj[t] = (y[j] * y[t]) * K[sj, t % l]

        ai_old = a[i]
        aj_old = a[j]
        if y[i] != y[j]:
            qc = QD[i] + QD[j] + 2 * Qi[j]
            if qc <= 0:
                qc = TAU
            delta = (-G[i] - G[j]) / qc
            diff = a[i] - a[j]
            ai = a[i] + delta
            aj = a[j] + delta
            if diff > 0:
                if aj < 0:
                    aj = 0.0
                    ai = diff
            else:
                if ai < 0:
                    ai = 0.0
                    aj = -diff
            if diff > 0.0:
                if ai > C:
                    ai = C
                    aj = C - diff
            else:
                if aj > C:
                    aj = C
                    ai = C + diff
        else:
            qc = QD[i] + QD[j] - 2 * Qi[j]
            if qc <= 0:
                qc = TAU
            delta = (G[i] - G[j]) / qc
            s = a[i] + a[j]
            ai = a[i] - delta
            aj = a[j] + delta
            if s > C:
                if ai > C:
                    ai = C
                    aj = s - C
            else:
                if aj < 0:
                    aj = 0.0
                    ai = s
            if s > C:
                if aj > C:
                    aj = C
                    ai = s - C
            else:
                if ai < 0:
                    ai = 0.0
                    aj = s
        a[i] = ai
        a[j] = aj
        dai = ai - ai_old
        daj = aj - aj_old
        for t in range(m):
            G[t] = G[t] + (Qi[t] * dai + Qj[t] * daj)
        it += 1
    return a_arr, it


def best_stump(X_in, order_in, r_in):
    cdef double[:, ::1] X = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef long long[:, ::1] order = np.ascontiguousarray(order_in, dtype=np.int64)
    cdef double[::1] r = np.ascontiguousarray(r_in, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], j, k, a, b
    cdef double total = 0.0, sl, sr, score, best = -INFINITY, nl, nr
    cdef Py_ssize_t bj = -1, bk = -1
    cdef double bl = 0.0, br = 0.0, bthr = 0.0
    for k in range(n):
        total = total + r[k]
    if n < 2 or d == 0:
        mean = total / n if n else 0.0
        return -1, 0.0, mean, mean, -INFINITY
    for j in range(d):
        sl = 0.0
        for k in range(n - 1):
            a = order[j, k]
            b = order[j, k + 1]
            sl = sl + r[a]
            if X[a, j] == X[b, j]:
                continue
            nl = <double>(k + 1)
            nr = <double>(n - k - 1)
            sr = total - sl
            score = sl * sl / nl + sr * sr / nr
            if score > best:
                best = score
                bj = j
                bk = k
                bl = sl / nl
                br = sr / nr
                bthr = 0.5 * (X[a, j] + X[b, j])
    if bj == -1:
        mean = total / n
        return -1, 0.0, mean, mean, -INFINITY
    return int(bj), bthr, bl, br, best
