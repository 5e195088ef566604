"""Serial inner loop of the descent recursion, compiled with numba when present.

The kernel consumes pre-generated blocks of directions, noise draws, and step
sizes; it contains no randomness and only +,-,*,/ arithmetic in a fixed order,
so the compiled and interpreted paths produce bit-identical iterates.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None


def _run_chunk_py(
    hess, lin, const, gamma, etas, dirs, noises, k0, total_steps, burn_in, x, xbar, traj
):
    m = etas.shape[0]
    d = x.shape[0]
    record = traj.shape[0] > 0
    xp = np.empty(d)
    xm = np.empty(d)
    for i in range(m):
        k = k0 + i
        for j in range(d):
            xp[j] = x[j] + gamma * dirs[i, j]
            xm[j] = x[j] - gamma * dirs[i, j]
        fp = const
        fm = const
        for j in range(d):
            accp = 0.0
            accm = 0.0
            for l in range(d):
                accp += hess[j, l] * xp[l]
                accm += hess[j, l] * xm[l]
            fp += 0.5 * xp[j] * accp + (lin[j] + noises[i, j]) * xp[j]
            fm += 0.5 * xm[j] * accm + (lin[j] + noises[i, j]) * xm[j]
        s = 1.0 if fp - fm >= 0.0 else -1.0
        se = s * etas[i]
        for j in range(d):
            x[j] -= se * dirs[i, j]
        if record:
            for j in range(d):
                traj[k, j] = x[j]
        if k >= burn_in and k < total_steps:
            w = 1.0 / (k - burn_in + 1.0)
            for j in range(d):
                xbar[j] += (x[j] - xbar[j]) * w
    return 0


if njit is not None:
    run_chunk = njit(cache=True)(_run_chunk_py)
else:  # pragma: no cover
    run_chunk = _run_chunk_py
