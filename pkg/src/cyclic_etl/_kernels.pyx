# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled sender loop. Mirrors _kernels_py.py operation for operation."""
from libc.math cimport exp, fabs, INFINITY

NAME = "cython"


cdef inline double _dplus(const long long[::1] counts, long long n_times,
                          const double[::1] table) noexcept nogil:
    cdef Py_ssize_t tau
    cdef long long cum = 0
    cdef double best = 0.0
    cdef double diff
    for tau in range(1, table.shape[0]):
        cum += counts[tau]
        diff = <double>cum / <double>n_times - table[tau]
        if diff > best:
            best = diff
    return best


def ks_dplus(const long long[::1] counts, long long n_times, const double[::1] table):
    return _dplus(counts, n_times, table)


def scan(const double[::1] xs, Py_ssize_t start, Py_ssize_t stop, const double[::1] traj,
         double[::1] fstate, long long[::1] istate, long long[::1] counts,
         const double[::1] table, long long h, double delta, double eta, long long t_min,
         double[::1] xhat_out, double[::1] d_out, double[::1] p_out,
         signed char[::1] gs_out, long long[::1] j_out):
    cdef double x_hat = fstate[0]
    cdef double p = fstate[1]
    cdef long long j = istate[0]
    cdef long long gap = istate[1]
    cdef long long n_times = istate[2]
    cdef long long below = istate[3]
    cdef long long initialized = istate[4]
    cdef long long n_hat = traj.shape[0]
    cdef long long top = table.shape[0] - 1
    cdef long long tau
    cdef Py_ssize_t k
    cdef Py_ssize_t fired = -1
    cdef double x, pred, d, dplus
    cdef signed char gamma
    with nogil:
        for k in range(start, stop):
            x = xs[k]
            if j < n_hat:
                j = j + 1
            else:
                j = 1
            if not initialized:
                initialized = 1
                x_hat = x
                d = INFINITY
                gamma = 1
            else:
                pred = x_hat + traj[j - 1] + 0.0
                d = fabs(x - pred)
                if d < delta:
                    x_hat = pred
                    gap += 1
                    gamma = 0
                else:
                    x_hat = x
                    tau = gap + 1
                    if tau > top:
                        tau = top
                    counts[tau] += 1
                    n_times += 1
                    gap = 0
                    gamma = 1
                    dplus = _dplus(counts, n_times, table)
                    p = exp(-2.0 * dplus * dplus * <double>n_times * <double>h / <double>(n_times + h))
            if n_times == 0:
                p = 1.0
            if p < eta:
                below += 1
            else:
                below = 0
            xhat_out[k] = x_hat
            d_out[k] = d
            p_out[k] = p
            gs_out[k] = gamma
            j_out[k] = j
            if below >= t_min + 1:
                below = 0
                fired = k
                break
    fstate[0] = x_hat
    fstate[1] = p
    istate[0] = j
    istate[1] = gap
    istate[2] = n_times
    istate[3] = below
    istate[4] = initialized
    return fired
