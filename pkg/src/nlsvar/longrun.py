"""Attractors, deterministic limits, long-run multipliers and identification.

After a last shock ``u`` a member model settles at

    z_inf(u; state) = chi^{-1}(alpha_perp'(hbar(state) + u), -mu)

so shocks in ``span(alpha)`` have no permanent effect and the long-run
multiplier is ``J^{-1} [I_q; 0] alpha_perp'`` with ``J`` the Jacobian of chi.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from nlsvar import kernels
from nlsvar.errors import OffAttractorError, StationaryModelError
from nlsvar.gjrt import chi_inverse, chi_jacobian, chi_pieces, chi_vec, hbar
from nlsvar.membership import MembershipReport, orthonormal_complement, require_member
from nlsvar.model import Linear, ModelSpec, Smoothed, in_regime
from nlsvar.vecm import h_at

__all__ = [
    "AttractorSample",
    "AffineSubspace",
    "MultiplierResult",
    "TransitoryConfig",
    "TransitoryCurve",
    "attractor_points",
    "domain_of_attraction",
    "hbar",
    "linear_multiplier",
    "longrun_multipliers",
    "lr_identify_check",
    "lr_identify_construct",
    "multiplier_fd",
    "transitory_direction_curve",
    "z_infinity",
]


@dataclass(frozen=True, eq=False)
class AttractorSample:
    points: np.ndarray  # (n, p)
    grid: np.ndarray  # (n, q)


def _require_trends(report: MembershipReport) -> None:
    require_member(report)
    if report.q == 0:
        raise StationaryModelError("stationary model (r = p) has no attractor directions")


def attractor_points(model: ModelSpec, report: MembershipReport, grid) -> AttractorSample:
    """Steady states ``chi^{-1}(w, -mu)`` for each row ``w`` of ``grid``."""
    _require_trends(report)
    grid = np.asarray(grid, dtype=float).reshape(-1, report.q)
    pts = np.array([chi_inverse(model, report, np.concatenate([w, -report.mu])) for w in grid])
    return AttractorSample(pts.reshape(-1, model.p), grid)


def z_infinity(model: ModelSpec, report: MembershipReport, u, state) -> np.ndarray:
    """Deterministic limit after a final shock ``u`` from the window ``state``."""
    require_member(report)
    psi = report.alpha_perp.T @ (hbar(model, state) + np.asarray(u, dtype=float))
    return chi_inverse(model, report, np.concatenate([psi, -report.mu]))


def _attractor_gap(model, report, z) -> float:
    return float(np.linalg.norm(chi_vec(model, report, z)[report.q :] + report.mu))


def _require_on_attractor(model, report, z, tol=1e-8) -> None:
    gap = _attractor_gap(model, report, z)
    if gap > tol * (1.0 + np.linalg.norm(z)):
        raise OffAttractorError(f"point is off the attractor (|theta + mu| = {gap:.3e})")


@dataclass(frozen=True, eq=False)
class AffineSubspace:
    basis: np.ndarray  # (p, r)
    offset: np.ndarray  # (p,)

    def contains(self, u, tol: float = 1e-8) -> bool:
        d = np.asarray(u, dtype=float) - self.offset
        if self.basis.shape[1]:
            d = d - self.basis @ np.linalg.lstsq(self.basis, d, rcond=None)[0]
        return bool(np.linalg.norm(d) <= tol * (1.0 + np.linalg.norm(u)))


def domain_of_attraction(model: ModelSpec, report: MembershipReport, z, state) -> AffineSubspace:
    """All final shocks that send the system from ``state`` to ``z``."""
    require_member(report)
    _require_on_attractor(model, report, z)
    return AffineSubspace(report.alpha.copy(), h_at(report.vecm, z) - hbar(model, state))


@dataclass(frozen=True, eq=False)
class MultiplierResult:
    z: np.ndarray
    theta_inf: np.ndarray  # (p, p); NaN where not differentiable
    rank: int
    kernel_basis: np.ndarray  # (p, p - rank)
    differentiable: bool
    regimes: tuple[int, ...] = field(default=())


def _rank_and_kernel(M: np.ndarray, rtol: float = 1e-10):
    _, s, Vt = np.linalg.svd(M)
    cut = rtol * max(s.max(), 1e-300) if s.size else 0.0
    rank = int(np.sum(s > cut))
    return rank, Vt[rank:].T


def longrun_multipliers(model: ModelSpec, report: MembershipReport, z, boundary_tol: float = 1e-7) -> MultiplierResult:
    """Jacobian of ``z_inf`` with respect to the final shock at ``z``."""
    _require_trends(report)
    z = np.asarray(z, dtype=float)
    _require_on_attractor(model, report, z)
    p, q = model.p, report.q
    X, _ = chi_pieces(report)
    regimes: tuple[int, ...] = ()
    if model.is_piecewise:
        slack = boundary_tol * (1.0 + np.linalg.norm(z))
        regimes = tuple(l for l in range(model.n_regimes) if in_regime(model, z, l, slack))
        distinct = {tuple(np.round(X[l], 12).ravel()) for l in regimes}
        if len(distinct) > 1:
            nan = np.full((p, p), np.nan)
            return MultiplierResult(z, nan, -1, np.zeros((p, 0)), False, regimes)
        J = X[regimes[0]]
    elif isinstance(model.family, (Linear, Smoothed)):
        J = chi_jacobian(model, report, z)
    select = np.zeros((p, q))
    select[:q] = np.eye(q)
    rhs = select @ report.alpha_perp.T
    if np.linalg.cond(J) < 1e12:
        theta = np.linalg.solve(J, rhs)
    else:
        theta = np.linalg.pinv(J) @ rhs
    rank, ker = _rank_and_kernel(theta)
    return MultiplierResult(z, theta, rank, ker, True, regimes)


def multiplier_fd(model: ModelSpec, report: MembershipReport, z, h: float = 1e-5) -> np.ndarray:
    """Central differences of ``z_inf`` in ``u`` from the steady window at ``z``."""
    p = model.p
    state = np.tile(np.asarray(z, dtype=float), (model.k, 1))
    out = np.empty((p, p))
    for j in range(p):
        e = np.zeros(p)
        e[j] = h
        out[:, j] = (z_infinity(model, report, e, state) - z_infinity(model, report, -e, state)) / (2 * h)
    return out


def linear_multiplier(report: MembershipReport, H) -> np.ndarray:
    """``beta_perp (alpha_perp' H beta_perp)^{-1} alpha_perp'`` for linear models."""
    beta = report.betas[0]
    bperp = orthonormal_complement(beta)
    ap = report.alpha_perp
    return bperp @ np.linalg.solve(ap.T @ np.asarray(H, dtype=float) @ bperp, ap.T)


def lr_identify_construct(report: MembershipReport, m: int) -> np.ndarray:
    """Orthogonal rotation whose first ``m`` columns span only transitory shocks."""
    if not 1 <= m <= report.r:
        raise ValueError(f"m must lie in 1..r = {report.r}, got {m}")
    return np.hstack([report.alpha, report.alpha_perp])


def lr_identify_check(report: MembershipReport, upsilon, m: int, tol: float = 1e-10) -> tuple[bool, float]:
    """Whether the first ``m`` structural shocks have no long-run effect."""
    ups = np.asarray(upsilon, dtype=float)
    p = report.alpha.shape[0]
    if ups.shape != (p, p):
        raise ValueError(f"rotation must be {p}x{p}")
    if not 1 <= m <= p:
        raise ValueError(f"m must lie in 1..{p}")
    orth = np.linalg.norm(ups.T @ ups - np.eye(p))
    if orth > max(tol, 1e-12):
        raise ValueError(f"rotation is not orthogonal (|U'U - I| = {orth:.3e})")
    res = float(np.linalg.norm(report.alpha_perp.T @ ups[:, :m]))
    return res <= tol, res


# transitory shock directions in a smooth-transition model


@dataclass(frozen=True)
class TransitoryConfig:
    """Bivariate model ``dz_t = a(x) x + u_t`` with ``x = beta'z_{t-1}``.

    The loading ``a(x) = (1 - L(x)) alpha_tilde + L(x) alpha`` moves from
    ``alpha_tilde`` near equilibrium to ``alpha`` far from it, where
    ``L(x) = 2 |N(x) - 1/2|``.
    """

    alpha_tilde: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self) -> None:
        for name in ("alpha_tilde", "alpha", "beta"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (2,):
                raise ValueError(f"{name} must have length 2")
            object.__setattr__(self, name, v)
        for name in ("alpha_tilde", "alpha"):
            eig = 1.0 + self.beta @ getattr(self, name)
            if not abs(eig) < 1.0:
                raise ValueError(f"1 + beta'{name} = {eig:.6g} is not inside the unit circle")


@dataclass(frozen=True, eq=False)
class TransitoryCurve:
    magnitudes: np.ndarray
    ratios: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    roots: list = field(default_factory=list)  # every root angle found per magnitude


def _limit_offset(cfg, perp, u, eq_tol, horizon):
    z, steps = kernels.transitory_limit(u, cfg.alpha_tilde, cfg.alpha, cfg.beta, eq_tol, horizon)
    return float(perp @ z), steps < horizon or abs(cfg.beta @ z) <= eq_tol


def _bisect(g, lo, hi, glo, tol, max_iter=200):
    it = 0
    mid, gm = lo, glo
    while it < max_iter:
        it += 1
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(gm) <= tol or hi - lo <= 1e-15:
            return mid, it, True
        if np.sign(gm) == np.sign(glo):
            lo, glo = mid, gm
        else:
            hi = mid
    return mid, it, False


def transitory_direction_curve(
    cfg: TransitoryConfig, magnitudes, horizon: int = 100_000, tol: float = 1e-9, scan: int = 32
) -> TransitoryCurve:
    """Direction of the shock of each size that leaves no permanent effect.

    For size ``m`` and angle ``phi`` the shock ``m (cos phi, sin phi)`` hits
    the system at equilibrium 0; ``g(phi)`` is the final position along the
    attractor ``span(beta_perp)``. Roots of ``g`` are found by scanning the
    angle bracket spanned by the two loadings (widened if needed) and
    bisecting every sign change. The reported ratio is ``tan`` of the first
    root; at size 0 it is the linearised answer ``alpha_tilde_2 / alpha_tilde_1``.
    """
    mags = np.asarray(magnitudes, dtype=float).ravel()
    perp = orthonormal_complement(cfg.beta[:, None])[:, 0]
    eq_tol = tol * 1e-3
    angles = sorted([np.arctan2(cfg.alpha_tilde[1], cfg.alpha_tilde[0]), np.arctan2(cfg.alpha[1], cfg.alpha[0])])
    ratios = np.full(mags.size, np.nan)
    conv = np.zeros(mags.size, dtype=bool)
    iters = np.zeros(mags.size, dtype=int)
    roots: list = []
    for n, m in enumerate(mags):
        if m == 0.0:
            ratios[n] = cfg.alpha_tilde[1] / cfg.alpha_tilde[0]
            conv[n] = True
            roots.append([float(np.arctan2(cfg.alpha_tilde[1], cfg.alpha_tilde[0]))])
            continue
        ok_all = [True]

        def g(phi, m=m):
            val, ok = _limit_offset(cfg, perp, m * np.array([np.cos(phi), np.sin(phi)]), eq_tol, horizon)
            ok_all[0] &= ok
            return val

        found = []
        lo, hi = angles
        for _ in range(8):
            phis = np.linspace(lo, hi, scan + 1)
            vals = np.array([g(ph) for ph in phis])
            iters[n] += phis.size
            for j in range(scan):
                if vals[j] == 0.0:
                    found.append((phis[j], 0, True))
                elif np.sign(vals[j]) != np.sign(vals[j + 1]) and vals[j + 1] != 0.0:
                    root, it, ok = _bisect(g, phis[j], phis[j + 1], vals[j], tol)
                    iters[n] += it
                    found.append((root, it, ok))
            if vals[-1] == 0.0:
                found.append((phis[-1], 0, True))
            if found:
                break
            lo, hi = lo - 0.2, hi + 0.2
        if found:
            ratios[n] = np.tan(found[0][0])
            conv[n] = all(f[2] for f in found) and ok_all[0]
        roots.append([float(f[0]) for f in found])
    return TransitoryCurve(mags, ratios, conv, iters, roots)
