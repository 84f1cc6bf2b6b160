"""Independent reference computations and random model generators for tests.

Nothing here calls into the package's numerical routines; the generators
build models straight from their defining relations.
"""

from __future__ import annotations

import itertools
import math
from pathlib import Path

import numpy as np
from scipy import integrate
from scipy.linalg import null_space

FIXTURES = Path(__file__).parent / "fixtures"


# joint spectral radius


def brute_jsr_lower(mats, depth: int) -> float:
    """Largest ``rho(P)^(1/t)`` over every product of length ``t <= depth``."""
    mats = [np.asarray(m, dtype=float) for m in mats]
    best = 0.0
    for t in range(1, depth + 1):
        for word in itertools.product(range(len(mats)), repeat=t):
            P = np.eye(mats[0].shape[0])
            for i in word:
                P = mats[i] @ P
            best = max(best, np.abs(np.linalg.eigvals(P)).max() ** (1.0 / t))
    return best


# model construction from error-correction primitives


def lags_from_vecm(phi0, pi, gammas):
    """Recover ``Phi_1..Phi_k`` from ``Phi_0``, ``Pi`` and ``Gamma_1..Gamma_{k-1}``.

    Uses ``Gamma_j = -sum_{i>j} Phi_i`` and ``Pi = -Phi_0 + sum_{i>=1} Phi_i``.
    """
    k = len(gammas) + 1
    g = [-(pi + phi0)] + list(gammas) + [np.zeros_like(pi)]
    return [g[i] - g[i - 1] for i in range(1, k + 1)]


def _loadings(rng, phi0, p, r):
    alpha = rng.standard_normal((p, r))
    M = np.linalg.solve(phi0, alpha)
    S = np.diag(rng.uniform(0.3, 0.7, r))
    beta = -M @ np.linalg.solve(M.T @ M, S)
    return alpha, beta


def random_linear_parts(rng, p: int, k: int, r: int):
    """Random ``(phi, alpha, beta)`` of a linear error-correction model."""
    phi0 = np.eye(p) + 0.2 * rng.standard_normal((p, p))
    while np.linalg.det(phi0) <= 0.2:
        phi0 = np.eye(p) + 0.2 * rng.standard_normal((p, p))
    alpha, beta = _loadings(rng, phi0, p, r)
    gammas = [0.05 * rng.standard_normal((p, p)) for _ in range(k - 1)]
    phi = [phi0] + lags_from_vecm(phi0, alpha @ beta.T, gammas)
    return np.array(phi), alpha, beta


def random_threshold_parts(rng, p: int, k: int, r: int, n_regimes: int = 2, bend_f0: bool = True):
    """Random continuous threshold model whose ``Pi`` pieces share ``alpha``.

    Returns ``(a, tau, phi, offsets, alpha)`` with ``phi`` of shape
    (k+1, L, p, p) and ``offsets`` of shape (k+1, L, p). With ``bend_f0``
    false the left-hand map is shared by every regime.
    """
    phi_lin, alpha, _ = random_linear_parts(rng, p, k, r)
    a = rng.standard_normal(p)
    a /= np.linalg.norm(a)
    tau = np.sort(rng.uniform(-1.0, 1.0, n_regimes - 1))
    L = n_regimes
    phi = np.repeat(phi_lin[:, None], L, axis=1).copy()
    offsets = np.zeros((k + 1, L, p))
    inc = np.zeros((k + 1, p))
    for l in range(1, L):
        d0 = 0.15 * rng.standard_normal(p) if bend_f0 else np.zeros(p)
        d1 = d0 + alpha @ (0.1 * rng.standard_normal(r))
        for i, d in ((0, d0), (1, d1)):
            inc[i] += d
            phi[i, l] = phi_lin[i] + np.outer(inc[i], a)
            offsets[i, l] = offsets[i, l - 1] - d * tau[l - 1]
        for i in range(2, k + 1):
            offsets[i, l] = offsets[i, l - 1]
    return a, tau, phi, offsets, alpha


def bent_threshold_parts():
    """Bivariate threshold model whose left-hand map bends at ``z_2 = 0.5``."""
    a = np.array([0.0, 1.0])
    tau = np.array([0.5])
    alpha = np.array([-0.5, 0.1])
    n = np.array([0.5, 0.3])
    delta = 0.2
    beta0 = np.array([1.0, -1.0])
    phi = np.zeros((2, 2, 2, 2))
    phi[0, 0] = np.eye(2)
    phi[0, 1] = np.eye(2) + np.outer(n, a)
    phi[1, 0] = phi[0, 0] + np.outer(alpha, beta0)
    phi[1, 1] = phi[0, 1] + np.outer(alpha, beta0 + delta * a)
    offsets = np.zeros((2, 2, 2))
    offsets[0, 1] = -n * tau[0]
    offsets[1, 1] = -(n + delta * alpha) * tau[0]
    return a, tau, phi, offsets


# inverses and multipliers


def brute_threshold_inverse(a, tau, phi0, off0, y, tol=1e-12):
    """Try every band and keep the preimage that lands in its own band."""
    edges = np.concatenate(([-np.inf], tau, [np.inf]))
    for l in range(len(phi0)):
        z = np.linalg.solve(phi0[l], y - off0[l])
        s = a @ z
        if edges[l] - tol * (1 + abs(s)) < s <= edges[l + 1] + tol * (1 + abs(s)):
            return z
    raise AssertionError("no band accepts a preimage")


def linear_longrun_multiplier(alpha, beta, H):
    """``beta_perp (alpha_perp' H beta_perp)^{-1} alpha_perp'``."""
    ap = null_space(np.asarray(alpha).T)
    bp = null_space(np.asarray(beta).T)
    return bp @ np.linalg.inv(ap.T @ H @ bp) @ ap.T


# smoothing


def smoothed_quad(a, tau, phi_i, off_i, sigma, z):
    """``E f_i(z + u)`` for ``u ~ N(0, sigma^2 I)`` by adaptive quadrature.

    Only the component of ``u`` along ``a`` moves the regime, and the
    orthogonal part averages out of the affine pieces, so a one-dimensional
    integral over ``s = a'u / |a|`` suffices. Each piece contributes its
    zeroth and first Gaussian moments over the piece's interval.
    """
    a = np.asarray(a, float)
    na = np.linalg.norm(a)
    e = a / na
    z = np.asarray(z, float)
    x = a @ z

    # mass beyond 14 sigma is below 1e-44
    edge = 14.0 * sigma
    breaks = sorted(b for b in ((t - x) / na for t in tau) if -edge < b < edge)
    pieces = [-edge] + breaks + [edge]
    c = 1.0 / (sigma * math.sqrt(2.0 * math.pi))

    def pdf(s):
        return c * math.exp(-0.5 * (s / sigma) ** 2)

    out = np.zeros(z.size)
    for lo, hi in zip(pieces[:-1], pieces[1:]):
        # on one piece f_i(z + s e) = off + Phi z + s Phi e
        l = int(np.searchsorted(tau, a @ (z + 0.5 * (lo + hi) * e), side="left"))
        m0 = integrate.quad(pdf, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
        m1 = integrate.quad(lambda s: s * pdf(s), lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
        out += (off_i[l] + phi_i[l] @ z) * m0 + (phi_i[l] @ e) * m1
    return out
