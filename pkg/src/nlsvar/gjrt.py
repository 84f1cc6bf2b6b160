"""Common-trend / equilibrium-error coordinates and path decompositions.

For a class member the map ``chi(z) = (alpha_perp' h(z), theta(z))`` with
``h = f_0 - sum_j gamma_j`` and ``theta = alpha' pi`` is a homeomorphism, and
every path satisfies

    chi(z_t) = [alpha_perp' hbar(z_0 window) + alpha_perp' sum_{s<=t} u_s; -mu] + S' xi_t

where ``xi_t = (mu + theta(z_t), zeta_t - zeta_{t-1})`` follows a jointly
contractive recursion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from nlsvar.dynamics import ImpulseShocks, PathResult, candidate_inverse, simulate
from nlsvar.errors import NewtonDivergence
from nlsvar.membership import MembershipReport, orthonormal_complement, require_member
from nlsvar.model import Linear, ModelSpec, Smoothed, eval_all, regime_weights
from nlsvar.vecm import derive_vecm, gammas_at, zeta_from


@dataclass(frozen=True)
class ChiValue:
    psi: np.ndarray  # (q,) common-trend coordinate
    theta: np.ndarray  # (r,) equilibrium error

    def vector(self) -> np.ndarray:
        return np.concatenate([self.psi, self.theta])


def chi_vec(model: ModelSpec, report: MembershipReport, z) -> np.ndarray:
    fs = eval_all(model, z)
    gam = -np.cumsum(fs[::-1], axis=0)[::-1][2:]
    h = fs[0] - gam.sum(axis=0)
    pi = fs[1:].sum(axis=0) - fs[0]
    return np.concatenate([report.alpha_perp.T @ h, report.alpha.T @ pi])


def chi(model: ModelSpec, report: MembershipReport, z) -> ChiValue:
    require_member(report)
    v = chi_vec(model, report, z)
    return ChiValue(v[: report.q], v[report.q :])


def chi_pieces(report: MembershipReport) -> tuple[np.ndarray, np.ndarray]:
    """Regime-wise affine form of chi: matrices (L, p, p) and offsets (L, p)."""
    vecm = report.vecm
    H = vecm.h_mats()
    hbar = vecm.h_offsets()
    X = np.concatenate([report.alpha_perp.T[None] @ H, np.transpose(report.betas, (0, 2, 1))], axis=1)
    off = np.concatenate([hbar @ report.alpha_perp, report.mu_bars], axis=1)
    return X, off


def chi_jacobian(model: ModelSpec, report: MembershipReport, z) -> np.ndarray:
    """Jacobian of chi; for piecewise models the active regime's matrix."""
    X, _ = chi_pieces(report)
    return np.einsum("l,lpq->pq", regime_weights(model, z), X)


def chi_inverse(model: ModelSpec, report: MembershipReport, y, tol: float = 1e-10, max_iter: int = 200) -> np.ndarray:
    require_member(report)
    y = np.asarray(y, dtype=float)
    X, off = chi_pieces(report)
    if isinstance(model.family, Linear):
        return np.linalg.solve(X[0], y - off[0])
    z = candidate_inverse(model, X, off, y)
    if not isinstance(model.family, Smoothed):
        return z
    return _newton(model, report, y, z, tol, max_iter)


def _newton(model, report, y, z, tol, max_iter):
    target = tol * (1.0 + np.linalg.norm(y))
    res = chi_vec(model, report, z) - y
    rn = np.linalg.norm(res)
    for _ in range(max_iter):
        if rn <= target:
            # one more full step tightens the result to rounding level
            step = np.linalg.solve(chi_jacobian(model, report, z), res)
            z2 = z - step
            r2 = np.linalg.norm(chi_vec(model, report, z2) - y)
            return z2 if r2 <= rn else z
        step = np.linalg.solve(chi_jacobian(model, report, z), res)
        lam = 1.0
        while True:
            z_new = z - lam * step
            res_new = chi_vec(model, report, z_new) - y
            if np.linalg.norm(res_new) < rn or lam < 1e-12:
                break
            lam *= 0.5
        z, res, rn = z_new, res_new, np.linalg.norm(res_new)
    raise NewtonDivergence(f"chi inverse did not converge (residual {rn:.3e})")


def linear_chi_inverse(H, alpha_perp, beta, y) -> np.ndarray:
    """Closed-form inverse of ``z -> (alpha_perp' H z, beta' z)``."""
    H, alpha_perp, beta = (np.asarray(m, dtype=float) for m in (H, alpha_perp, beta))
    q = alpha_perp.shape[1]
    y = np.asarray(y, dtype=float)
    psi, theta = y[:q], y[q:]
    bperp = orthonormal_complement(beta)
    K = bperp @ np.linalg.inv(alpha_perp.T @ H @ bperp)
    part = beta @ np.linalg.solve(beta.T @ beta, theta) if beta.shape[1] else np.zeros(H.shape[0])
    return K @ psi + (np.eye(H.shape[0]) - K @ alpha_perp.T @ H) @ part


def selector_matrix(report: MembershipReport) -> np.ndarray:
    """``S'`` with ``S' xi = (-alpha_perp' sum_j dzeta_j, xi_1)``."""
    p, r, q = report.alpha.shape[0], report.r, report.q
    k = report.vecm.k
    S = np.zeros((p, r + p * (k - 1)))
    S[:q, r:] = np.tile(-report.alpha_perp.T, (1, k - 1))
    S[q:, :r] = np.eye(r)
    return S


def hbar(model: ModelSpec, window) -> np.ndarray:
    """``f_0(z_(1)) - sum_{i=1}^{k-1} gamma_i(z_(i+1))`` for a recent-first window."""
    w = np.asarray(window, dtype=float).reshape(model.k, model.p)
    out = eval_all(model, w[0])[0].copy()
    if model.k > 1:
        vecm = derive_vecm(model)
        for i in range(1, model.k):
            out -= gammas_at(vecm, w[i])[i - 1]
    return out


@dataclass(frozen=True, eq=False)
class GjrtDecomposition:
    init_term: np.ndarray  # (q,)
    trend: np.ndarray  # (T, q), cumulative alpha_perp' u
    xi: np.ndarray  # (T+1, r + p(k-1)), rows xi_0..xi_T
    S: np.ndarray  # (p, r + p(k-1))
    chi_path: np.ndarray  # (T, p), chi(z_t)
    residual: np.ndarray  # (T,), ||z_t - chi^{-1}(reconstruction)||
    chi_residual: np.ndarray  # (T,), ||chi(z_t) - reconstruction||

    def reconstruction(self, mu) -> np.ndarray:
        """The right-hand side of the chi identity, shape (T, p)."""
        q = self.init_term.shape[0]
        T = self.trend.shape[0]
        base = np.zeros((T, q + len(mu)))
        base[:, :q] = self.init_term + self.trend
        base[:, q:] = -np.asarray(mu)
        return base + self.xi[1:] @ self.S.T


def xi_series(model: ModelSpec, report: MembershipReport, full: np.ndarray, k: int) -> np.ndarray:
    """``xi_t`` for every ``t`` with a complete window in the chronological ``full``."""
    vecm = report.vecm
    p = model.p
    n_t = full.shape[0] - (k - 1)  # t = 0..T
    zetas = np.zeros((n_t + 1, p * (k - 1)))  # zeta_{-1}..zeta_T
    if k > 1:
        for j in range(n_t + 1):
            s = j + k - 2  # chronological index of z_{j-1}
            zetas[j] = zeta_from(vecm, full[s - k + 2 : s + 1][::-1])
    thetas = np.array([_theta(model, report, full[k - 1 + t]) for t in range(n_t)]).reshape(n_t, report.r)
    return np.hstack([report.mu + thetas, np.diff(zetas, axis=0)])


def _theta(model, report, z):
    fs = eval_all(model, z)
    return report.alpha.T @ (fs[1:].sum(axis=0) - fs[0])


def decompose(model: ModelSpec, report: MembershipReport, result: PathResult) -> GjrtDecomposition:
    require_member(report)
    k = model.k
    full = result.full()
    xi = xi_series(model, report, full, k)
    init = report.alpha_perp.T @ hbar(model, result.window0)
    trend = np.cumsum(result.shocks, axis=0) @ report.alpha_perp
    S = selector_matrix(report)
    T = result.path.shape[0]
    dec = GjrtDecomposition(init, trend, xi, S, np.zeros((T, model.p)), np.zeros(T), np.zeros(T))
    rhs = dec.reconstruction(report.mu)
    chis = np.array([chi_vec(model, report, z) for z in result.path])
    res = np.array([np.linalg.norm(z - chi_inverse(model, report, y)) for z, y in zip(result.path, rhs)])
    return GjrtDecomposition(init, trend, xi, S, chis, res, np.linalg.norm(chis - rhs, axis=1))


def xi_certificates(report: MembershipReport, dec: GjrtDecomposition, shocks) -> np.ndarray:
    """Residual of the best convex-weighted ``beta_t`` at each step.

    Solves ``min ||sum_l w_l beta_l' v_t - (xi_t - xi_{t-1})||`` over the
    simplex, with ``v_t = alpha xi_{t-1} + (u_t, 0)``.
    """
    bold = report.bold
    B = bold.beta_t  # (L, n, pk)
    A = bold.alpha
    p = report.alpha.shape[0]
    T = dec.xi.shape[0] - 1
    out = np.empty(T)
    for t in range(1, T + 1):
        v = A @ dec.xi[t - 1]
        v[:p] += shocks[t - 1]
        target = dec.xi[t] - dec.xi[t - 1]
        W = np.einsum("lnm,m->nl", B, v)
        if W.shape[1] == 1:
            out[t - 1] = np.linalg.norm(W[:, 0] - target)
            continue
        omega = 1e6 * max(1.0, np.abs(W).max())
        Aug = np.vstack([W, omega * np.ones((1, W.shape[1]))])
        lam, _ = nnls(Aug, np.concatenate([target, [omega]]))
        lam = lam / lam.sum()
        out[t - 1] = np.linalg.norm(W @ lam - target)
    return out


@dataclass(frozen=True)
class StabilityCheck:
    rho_hat: float
    ok: bool
    xi_norms: np.ndarray


def verify_exponential_stability(
    model: ModelSpec, report: MembershipReport, window0, u, T: int = 200, tau: int = 1
) -> StabilityCheck:
    """Fit the post-impulse decay rate of ``||xi_t||``."""
    require_member(report)
    res = simulate(model, window0, ImpulseShocks(np.asarray(u, dtype=float), tau, T))
    xi = xi_series(model, report, res.full(), model.k)
    norms = np.linalg.norm(xi, axis=1)  # t = 0..T
    ref = norms[tau]
    if ref == 0.0:
        return StabilityCheck(0.0, bool(np.all(norms[tau:] == 0.0)), norms)
    ts = np.arange(tau, T + 1)
    tail = norms[tau:]
    good = tail > 1e-13 * ref
    if good.sum() < 2:
        rho_hat = 0.0
    else:
        slope = np.polyfit(ts[good], np.log(tail[good]), 1)[0]
        rho_hat = float(np.exp(slope))
    upper = report.jsr.upper if report.jsr is not None else 1.0
    ok = rho_hat <= upper + 0.05 and norms[-1] <= 1e-8 * ref
    return StabilityCheck(rho_hat, bool(ok), norms)
