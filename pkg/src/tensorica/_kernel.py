"""Compiled inner loop for :func:`tensorica.solver.run`.

Performs exactly the update of :func:`tensorica.solver.sgd_step`, one
observation at a time, and evaluates the closest-component tan-angle after
every step.  ``tests/test_solver.py`` checks it against the pure numpy path.
"""

import numpy as np
from numba import njit

WARM_TAN = 1.0 / np.sqrt(3.0)


@njit(cache=True)
def _closest(u, A):
    d = A.shape[0]
    best = -1.0
    idx = 0
    for i in range(d):
        s = 0.0
        for j in range(d):
            s += A[j, i] * u[j]
        s = abs(s)
        if s > best:
            best = s
            idx = i
    if best > 0.0:
        tan = np.sqrt(max(1.0 - best * best, 0.0)) / best
    else:
        tan = np.inf
    return tan, idx + 1


@njit(cache=True)
def run_block(u, X, t0, T, boundary, eta1, eta2, sign, A, stride,
              window_start, rec_t, rec_tan, rec_idx, rec_phase, rec_u,
              n_rec, keep_u, state):
    """Advance ``u`` in place over the rows of ``X``.

    ``state`` holds running accumulators:
    [window_sum, window_count, first_warm_t, last_tan, last_idx].
    Returns the updated record count, or ``-t`` if the pre-projection
    vector vanished at iteration ``t``.
    """
    d = u.shape[0]
    w = np.empty(d)
    for r in range(X.shape[0]):
        t = t0 + r + 1
        eta = eta1 if t <= boundary else eta2
        dot = 0.0
        for j in range(d):
            dot += u[j] * X[r, j]
        c = eta * sign * dot * dot * dot
        nrm = 0.0
        for j in range(d):
            w[j] = u[j] + c * X[r, j]
            nrm += w[j] * w[j]
        nrm = np.sqrt(nrm)
        if not (nrm > 1e-300) or not np.isfinite(nrm):
            return -t
        for j in range(d):
            u[j] = w[j] / nrm

        tan, idx = _closest(u, A)
        state[3] = tan
        state[4] = idx
        if state[2] < 0 and tan <= WARM_TAN:
            state[2] = t
        if t > window_start:
            state[0] += tan
            state[1] += 1.0
        if t % stride == 0 or t == T:
            rec_t[n_rec] = t
            rec_tan[n_rec] = tan
            rec_idx[n_rec] = idx
            rec_phase[n_rec] = 1 if t <= boundary else 2
            if keep_u:
                for j in range(d):
                    rec_u[n_rec, j] = u[j]
            n_rec += 1
    return n_rec
