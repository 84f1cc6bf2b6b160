"""Error-correction form and stacked state representation.

With ``gamma_j = -sum_{i>j} f_i`` and ``pi = -f_0 + sum_i f_i`` the model
becomes

    f_0(z_t) - f_0(z_{t-1}) = c + pi(z_{t-1}) + sum_j [gamma_j(z_{t-j}) - gamma_j(z_{t-j-1})] + u_t

which is tracked by the state ``(z_t, zeta_{t-1})`` where
``zeta_{j,t} = sum_{i=j}^{k-1} gamma_i(z_{t-i+j})``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nlsvar.errors import ModelError
from nlsvar.model import ModelSpec, eval_all


@dataclass(frozen=True, eq=False)
class VecmForm:
    model: ModelSpec
    gamma_offsets: np.ndarray  # (k-1, L, p)
    gamma_mats: np.ndarray  # (k-1, L, p, p)
    pi_offsets: np.ndarray  # (L, p)
    pi_mats: np.ndarray  # (L, p, p)
    D: np.ndarray  # (p(k-1), p(k-1))
    D1: np.ndarray  # (p, p(k-1))
    E: np.ndarray  # (p(k-1), p)

    @property
    def p(self) -> int:
        return self.model.p

    @property
    def k(self) -> int:
        return self.model.k

    @property
    def n_regimes(self) -> int:
        return self.pi_mats.shape[0]

    def stacked_gamma(self, l: int) -> np.ndarray:
        """``[Gamma_1; ...; Gamma_{k-1}]`` for regime ``l``, shape (p(k-1), p)."""
        return self.gamma_mats[:, l].reshape(-1, self.p)

    def h_offsets(self) -> np.ndarray:
        """Per-regime offset of ``h = f_0 - sum_j gamma_j``, shape (L, p)."""
        return self.model.piece_offsets[0] - self.gamma_offsets.sum(axis=0)

    def h_mats(self) -> np.ndarray:
        """Per-regime ``H = Phi_0 - sum_j Gamma_j``, shape (L, p, p)."""
        return self.model.piece_matrices[0] - self.gamma_mats.sum(axis=0)


def difference_matrix(p: int, k: int) -> np.ndarray:
    """Block bidiagonal matrix with -I on the diagonal and I above it."""
    n = k - 1
    if n <= 0:
        return np.zeros((0, 0))
    return np.kron(np.eye(n, k=1) - np.eye(n), np.eye(p))


def selector(p: int, k: int) -> np.ndarray:
    """``E = [I_p; 0]`` with p(k-1) rows (empty when k = 1)."""
    E = np.zeros((p * (k - 1), p))
    if k > 1:
        E[:p] = np.eye(p)
    return E


def derive_vecm(model: ModelSpec) -> VecmForm:
    p, k = model.p, model.k
    mats = model.piece_matrices
    offs = model.piece_offsets
    # tail[j] = sum_{i >= j} of the lag-i pieces
    tail_m = np.cumsum(mats[::-1], axis=0)[::-1]
    tail_o = np.cumsum(offs[::-1], axis=0)[::-1]
    gamma_mats = -tail_m[2:]
    gamma_offs = -tail_o[2:]
    pi_mats = -mats[0] + tail_m[1]
    pi_offs = -offs[0] + tail_o[1]
    D = difference_matrix(p, k)
    return VecmForm(model, gamma_offs, gamma_mats, pi_offs, pi_mats, D, D[:p], selector(p, k))


def gammas_at(vecm: VecmForm, z) -> np.ndarray:
    """``gamma_1(z), ..., gamma_{k-1}(z)`` as rows, shape (k-1, p)."""
    fs = eval_all(vecm.model, z)
    return -np.cumsum(fs[::-1], axis=0)[::-1][2:]


def pi_at(vecm: VecmForm, z) -> np.ndarray:
    fs = eval_all(vecm.model, z)
    return fs[1:].sum(axis=0) - fs[0]


def h_at(vecm: VecmForm, z) -> np.ndarray:
    """``h(z) = f_0(z) - sum_j gamma_j(z)``."""
    fs = eval_all(vecm.model, z)
    return fs[0] - gammas_at(vecm, z).sum(axis=0)


def zeta_from(vecm: VecmForm, recent_first) -> np.ndarray:
    """Stacked ``zeta_s`` from rows ``z_s, z_{s-1}, ..., z_{s-k+2}``."""
    k, p = vecm.k, vecm.p
    rows = np.asarray(recent_first, dtype=float).reshape(-1, p)
    if k == 1:
        return np.zeros(0)
    if rows.shape[0] < k - 1:
        raise ModelError(f"need {k - 1} lagged values to form zeta, got {rows.shape[0]}")
    G = np.array([gammas_at(vecm, rows[m]) for m in range(k - 1)])  # G[m, i-1] = gamma_i(z_{s-m})
    zeta = np.zeros((k - 1, p))
    for j in range(1, k):
        for i in range(j, k):
            zeta[j - 1] += G[i - j, i - 1]
    return zeta.ravel()


@dataclass(frozen=True)
class BoldState:
    z: np.ndarray
    zeta: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.z, self.zeta])


def build_state(vecm: VecmForm, window) -> BoldState:
    """State ``(z_t, zeta_{t-1})`` from the window ``z_t, ..., z_{t-k+1}``."""
    w = np.asarray(window, dtype=float)
    if w.ndim != 2 or w.shape != (vecm.k, vecm.p):
        raise ModelError(f"window must have shape ({vecm.k}, {vecm.p}), got {w.shape}")
    return BoldState(w[0].copy(), zeta_from(vecm, w[1:]))


def step_identity_check(model: ModelSpec, window, u) -> float:
    """Discrepancy of the stacked error-correction system at one step.

    ``window`` holds ``z_t, ..., z_{t-k}`` (k+1 rows). The left side is
    ``(f_0(z_t) - f_0(z_{t-1}), zeta_{t-1} - zeta_{t-2})`` from raw function
    evaluations; the right side is ``c + pi(z_{t-1}) + D z_{t-1} + u_t`` in
    stacked form.
    """
    vecm = derive_vecm(model)
    p, k = model.p, model.k
    w = np.asarray(window, dtype=float)
    if w.shape != (k + 1, p):
        raise ModelError(f"window must have shape ({k + 1}, {p}), got {w.shape}")
    u = np.asarray(u, dtype=float)
    z_now, z_prev = w[0], w[1]
    zeta_1 = zeta_from(vecm, w[1:k])  # zeta_{t-1}
    zeta_2 = zeta_from(vecm, w[2 : k + 1])  # zeta_{t-2}
    lhs = np.concatenate(
        [eval_all(model, z_now)[0] - eval_all(model, z_prev)[0], zeta_1 - zeta_2]
    )
    gam = gammas_at(vecm, z_prev)
    top = model.c + pi_at(vecm, z_prev) + u
    if k > 1:
        top = top + gam[0] + vecm.D1 @ zeta_2
    rhs = np.concatenate([top, gam.ravel() + vecm.D @ zeta_2])
    return float(np.linalg.norm(lhs - rhs))


@dataclass(frozen=True, eq=False)
class BoldMatrices:
    alpha: np.ndarray  # (pk, p(k-1)+r)
    alpha_perp: np.ndarray  # (pk, q)
    beta_t: np.ndarray  # (L, p(k-1)+r, pk), transposed layout
    D0: np.ndarray  # (p(k-1)+r, pk)

    def transition(self) -> np.ndarray:
        """``I + beta_l' alpha`` for every regime, shape (L, n, n)."""
        n = self.alpha.shape[1]
        return np.eye(n)[None] + self.beta_t @ self.alpha


def bold_matrices(vecm: VecmForm, alpha, betas, alpha_perp) -> BoldMatrices:
    """Stack the loadings and per-regime cointegrating maps.

    ``betas`` has shape (L, p, r).
    """
    p, k = vecm.p, vecm.k
    alpha = np.asarray(alpha, dtype=float).reshape(p, -1)
    r = alpha.shape[1]
    n = p * (k - 1)
    E = vecm.E
    A = np.zeros((p * k, n + r))
    A[:p, :r] = alpha
    A[:p, r:] = E.T
    A[p:, r:] = np.eye(n)
    Aperp = np.vstack([np.eye(p), -E]) @ np.asarray(alpha_perp, dtype=float).reshape(p, -1)
    phi0 = vecm.model.piece_matrices[0]
    B = np.zeros((vecm.n_regimes, n + r, p * k))
    for l in range(vecm.n_regimes):
        inv0 = np.linalg.inv(phi0[l])
        B[l, :r, :p] = np.asarray(betas[l]).T @ inv0
        B[l, r:, :p] = vecm.stacked_gamma(l) @ inv0
        B[l, r:, p:] = vecm.D
    D0 = np.zeros((n + r, p * k))
    D0[r:, p:] = vecm.D
    return BoldMatrices(A, Aperp, B, D0)
