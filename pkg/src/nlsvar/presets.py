"""Small reference models used in examples, tests and the CLI."""

from __future__ import annotations

import numpy as np

from nlsvar.model import ModelSpec, conic_model, linear_model, smoothed_model, threshold_model

LOADING = np.array([-0.5, 0.0])
COINT = np.array([1.0, -1.0])


def linear_example(alpha=LOADING, beta=COINT) -> ModelSpec:
    """Bivariate VAR(1) with one cointegrating relation.

    ``f_0 = I`` and ``f_1 = I + alpha beta'``; with the defaults the
    equilibrium error contracts by ``1 + beta'alpha = 0.5`` per period.
    """
    alpha, beta = np.asarray(alpha, float), np.asarray(beta, float)
    return linear_model([np.eye(2), np.eye(2) + np.outer(alpha, beta)])


def threshold_example(tau: float = 1.0) -> ModelSpec:
    """Two-regime version of ``linear_example`` switching on ``z_2``.

    Below the threshold the cointegrating vector is (1, -1), above it
    (1, -0.5). Both regimes share the loading (-0.5, 0). The lag offsets
    above the threshold keep ``f_1`` continuous at ``z_2 = tau``.
    """
    a = np.array([0.0, 1.0])
    b1, b2 = COINT, np.array([1.0, -0.5])
    phi = np.zeros((2, 2, 2, 2))
    phi[0] = np.eye(2)
    phi[1, 0] = np.eye(2) + np.outer(LOADING, b1)
    phi[1, 1] = np.eye(2) + np.outer(LOADING, b2)
    n = (phi[1, 1] - phi[1, 0]) @ a / (a @ a)
    offsets = np.zeros((2, 2, 2))
    offsets[1, 1] = -n * tau
    return threshold_model(a, [tau], phi, offsets)


def smoothed_example(sigma: float = 0.5, tau: float = 1.0) -> ModelSpec:
    return smoothed_model(threshold_example(tau), sigma)


def conic_example(slope: float = 0.6) -> ModelSpec:
    """Two cones split by ``z_1 = z_2``; the cointegrating vector is scaled by
    1 where ``z_1 >= z_2`` and by ``slope`` elsewhere, which keeps ``f_1``
    continuous across the split."""
    basis = np.array([[1.0, -1.0], [1.0, 1.0]])
    phi = np.zeros((2, 2, 2, 2))
    phi[0] = np.eye(2)
    phi[1, 0] = np.eye(2) + np.outer(LOADING, COINT)
    phi[1, 1] = np.eye(2) + np.outer(LOADING, slope * COINT)
    # bit 0 of the sign pattern is a_1'z >= 0
    return conic_model(basis, [1, 0, 1, 0], phi)


def transitory_figure_config() -> dict:
    """Smooth-transition loadings whose transitory shock direction bends with shock size."""
    return {
        "alpha_tilde": [-1.0, -0.5],
        "alpha": [-1.0, -0.25],
        "beta": [1.0, -1.0],
        "lambda": "gauss_abs",
        "magnitudes": {"start": 0.0, "stop": 10.0, "num": 20},
    }
