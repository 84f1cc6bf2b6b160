"""Hot loops, compiled with numba when it is available.

Each loop kernel has a plain implementation (``py_*``) and a public name
that is bound to the compiled version unless ``NLSVAR_DISABLE_NUMBA`` is
set. The product-tree expansion stays in numpy: its batched LAPACK calls
beat a compiled per-matrix loop.
"""

from __future__ import annotations

import numpy as np

from nlsvar._accel import HAVE_NUMBA, njit
from nlsvar.normal import cdf_scalar


def py_expand_level(frontier, mats):
    """Extend every product in ``frontier`` by every matrix in ``mats``.

    Child ``a * m + i`` is ``mats[i] @ frontier[a]``. Returns the children,
    their spectral norms and their spectral radii.
    """
    kids = np.matmul(mats[None, :, :, :], frontier[:, None, :, :])
    kids = kids.reshape(-1, *frontier.shape[1:])
    norms = np.linalg.norm(kids, ord=2, axis=(1, 2))
    rhos = np.abs(np.linalg.eigvals(kids)).max(axis=1)
    return kids, norms, rhos


def _count_below(edges, x):
    # number of edges strictly below x; with half-open bands (e[l-1], e[l]]
    # this is the band index of x
    n = 0
    for e in edges:
        if e < x:
            n += 1
    return n


_count_below_jit = njit(_count_below)


def py_simulate_threshold(a, tau, offsets, mats, c, b, nu, inv0, window0, shocks):
    """Iterate a threshold-affine (or linear, L = 1) model.

    ``window0`` holds ``z_0, z_{-1}, ..., z_{-k+1}``. The left-hand map is
    inverted with the closed form: the band of ``y`` is read off ``b'y``
    against the transformed thresholds ``nu``.
    """
    k = window0.shape[0]
    T, p = shocks.shape
    hist = window0.copy()
    path = np.empty((T, p))
    for t in range(T):
        rhs = c + shocks[t]
        for i in range(1, k + 1):
            z = hist[i - 1]
            l = _count_below_jit(tau, np.dot(a, z))
            rhs = rhs + offsets[i, l] + mats[i, l] @ z
        l0 = _count_below_jit(nu, np.dot(b, rhs))
        znew = inv0[l0] @ (rhs - offsets[0, l0])
        for j in range(k - 1, 0, -1):
            hist[j] = hist[j - 1]
        hist[0] = znew
        path[t] = znew
    return path


def py_transitory_limit(z0, alpha_inner, alpha_outer, beta, eq_tol, max_steps):
    """Run the smooth-transition error-correction model without shocks.

    The loading is ``(1 - L) alpha_inner + L alpha_outer`` with
    ``L = 2 |N(x) - 1/2|`` and ``x = beta'z``. Stops once ``|x| <= eq_tol``.
    Returns the final state and the number of steps taken.
    """
    z = z0.copy()
    steps = 0
    while steps < max_steps:
        x = np.dot(beta, z)
        if abs(x) <= eq_tol:
            break
        lam = 2.0 * abs(cdf_scalar(x) - 0.5)
        z = z + ((1.0 - lam) * alpha_inner + lam * alpha_outer) * x
        steps += 1
    return z, steps


expand_level = py_expand_level

if HAVE_NUMBA:
    simulate_threshold = njit(py_simulate_threshold)
    transitory_limit = njit(py_transitory_limit)
else:
    simulate_threshold = py_simulate_threshold
    transitory_limit = py_transitory_limit
