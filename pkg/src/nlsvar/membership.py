"""Decide whether a model belongs to the cointegrated class.

Three conditions are checked: the error-correction map has a common column
space spanned by a loading matrix ``alpha`` (for intercepts as well as
slopes), the left-hand map ``f_0`` is a homeomorphism, and the equilibrium
error dynamics ``I + beta' alpha`` are jointly contractive over the regime
vertices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from nlsvar.errors import CrscViolation, FamilyMismatch
from nlsvar.jsr import JsrBracket, jsr_decision
from nlsvar.model import Linear, ModelSpec, validate_continuity
from nlsvar.vecm import BoldMatrices, VecmForm, bold_matrices, derive_vecm

MEMBER = "member"
NOT_MEMBER = "not_member"
INCONCLUSIVE = "inconclusive"


def _sign_normalize(basis: np.ndarray) -> np.ndarray:
    """Flip columns so that the first clearly nonzero entry is positive."""
    out = basis.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-12 * max(np.abs(col).max(), 1e-300))
        if big.size and col[big[0]] < 0:
            out[:, j] = -col
    return out


def orthonormal_complement(alpha: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the null space of ``alpha'`` (sign normalised)."""
    p, r = alpha.shape
    if r == 0:
        return np.eye(p)
    U, _, _ = np.linalg.svd(alpha, full_matrices=True)
    return _sign_normalize(U[:, r:])


@dataclass(frozen=True)
class CrscFactors:
    r: int
    alpha: np.ndarray  # (p, r), orthonormal columns
    betas: np.ndarray  # (L, p, r)
    mu: np.ndarray  # (r,)
    mu_bars: np.ndarray  # (L, r)


def default_rank_tol(p: int, L: int) -> float:
    return 1e-9 * max(p, L)


def factorize_crsc(vecm: VecmForm, c, tol: float | None = None) -> CrscFactors:
    """Factor every regime's ``Pi = alpha beta'`` with a shared ``alpha``.

    Raises ``CrscViolation`` when the regimes do not share one column space.
    """
    p, L = vecm.p, vecm.n_regimes
    tol = default_rank_tol(p, L) if tol is None else tol
    c = np.asarray(c, dtype=float)
    M = np.hstack([*vecm.pi_mats, vecm.pi_offsets.T, c[:, None]])
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    smax = s[0] if s.size else 0.0
    r = int(np.sum(s > tol * smax)) if smax > 0 else 0
    alpha = _sign_normalize(U[:, :r])
    proj = np.eye(p) - alpha @ alpha.T
    for l in range(L):
        Pi = vecm.pi_mats[l]
        scale = 1.0 + np.linalg.norm(Pi, 2)
        res = np.linalg.norm(proj @ Pi, 2)
        if res > tol * scale:
            raise CrscViolation(l, res, "columns leave the common subspace")
        # the regime must reach all of span(alpha), not just part of it
        sl = np.linalg.svd(alpha.T @ Pi, compute_uv=False) if r else np.zeros(0)
        if r and sl.min() <= tol * max(smax, 1.0):
            Ul = np.linalg.svd(Pi)[0][:, : int(np.sum(sl > tol * max(smax, 1.0)))]
            missed = np.linalg.norm(alpha - Ul @ (Ul.T @ alpha), 2)
            raise CrscViolation(l, missed, f"rank {int(np.sum(sl > tol * max(smax, 1.0)))} below common rank {r}")
    for what, vec in [("intercept", c)] + [(f"offset of regime {l}", vecm.pi_offsets[l]) for l in range(L)]:
        res = np.linalg.norm(proj @ vec)
        if res > tol * (1.0 + np.linalg.norm(vec)):
            l = -1 if what == "intercept" else int(what.rsplit(" ", 1)[1])
            raise CrscViolation(l, res, f"{what} leaves the common subspace")
    betas = np.stack([Pi.T @ alpha for Pi in vecm.pi_mats])
    mu = alpha.T @ c
    mu_bars = vecm.pi_offsets @ alpha
    return CrscFactors(r, alpha, betas, mu, mu_bars)


@dataclass(frozen=True)
class HomeoResult:
    ok: bool
    dets: np.ndarray
    reason: str = ""


def check_homeomorphism(model: ModelSpec) -> HomeoResult:
    """``f_0`` is invertible iff all regime determinants share a nonzero sign."""
    dets = np.array([np.linalg.det(m) for m in model.piece_matrices[0]])
    scale = np.array([np.prod(np.linalg.norm(m, axis=1)) for m in model.piece_matrices[0]])
    singular = np.abs(dets) <= 1e-12 * np.maximum(scale, 1e-300)
    if np.any(singular):
        return HomeoResult(False, dets, f"f_0 is singular in regime {int(np.flatnonzero(singular)[0])}")
    if np.any(np.sign(dets) != np.sign(dets[0])):
        bad = int(np.flatnonzero(np.sign(dets) != np.sign(dets[0]))[0])
        return HomeoResult(False, dets, f"determinant of f_0 changes sign in regime {bad}")
    return HomeoResult(True, dets)


@dataclass(frozen=True, eq=False)
class MembershipReport:
    r: int
    alpha: np.ndarray
    alpha_perp: np.ndarray
    mu: np.ndarray
    betas: np.ndarray
    mu_bars: np.ndarray
    b_bar: float
    jsr: JsrBracket | None
    homeo_ok: bool
    verdict: str
    reason: str = ""
    stationary: bool = False
    vecm: VecmForm | None = field(default=None, repr=False)
    bold: BoldMatrices | None = field(default=None, repr=False)
    dets: np.ndarray | None = field(default=None, repr=False)

    @property
    def q(self) -> int:
        return self.alpha_perp.shape[1]

    @property
    def is_member(self) -> bool:
        return self.verdict == MEMBER

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "reason": self.reason or None,
            "stationary": self.stationary,
            "r": self.r,
            "q": self.q,
            "alpha": self.alpha.tolist(),
            "alpha_perp": self.alpha_perp.tolist(),
            "mu": self.mu.tolist(),
            "betas": self.betas.tolist(),
            "mu_bars": self.mu_bars.tolist(),
            "b_bar": self.b_bar,
            "homeo_ok": self.homeo_ok,
            "determinants": None if self.dets is None else self.dets.tolist(),
            "jsr": None if self.jsr is None else self.jsr.to_dict(),
        }


def _failed(model, vecm, verdict, reason, homeo, dets, factors=None) -> MembershipReport:
    p = model.p
    if factors is None:
        empty = np.zeros((p, 0))
        return MembershipReport(0, empty, np.eye(p), np.zeros(0), np.zeros((model.n_regimes, p, 0)),
                                np.zeros((model.n_regimes, 0)), float("nan"), None, homeo, verdict,
                                reason, False, vecm, None, dets)
    return MembershipReport(factors.r, factors.alpha, orthonormal_complement(factors.alpha), factors.mu,
                            factors.betas, factors.mu_bars, float("nan"), None, homeo, verdict, reason,
                            False, vecm, None, dets)


def check_membership(
    model: ModelSpec, rho_bar: float = 1.0, depth: int = 12, tol: float | None = None
) -> MembershipReport:
    vecm = derive_vecm(model)
    homeo = check_homeomorphism(model)
    if model.kind != "linear":
        scale = max(1.0, float(np.abs(model.piece_matrices).max()), float(np.abs(model.piece_offsets).max()))
        bad = validate_continuity(model, 1e-9 * scale)
        if bad:
            v = bad[0]
            return _failed(model, vecm, NOT_MEMBER,
                           f"f_{v.lag} is discontinuous between regimes {v.boundary}", homeo.ok, homeo.dets)
    if not homeo.ok:
        return _failed(model, vecm, NOT_MEMBER, homeo.reason, False, homeo.dets)
    try:
        fac = factorize_crsc(vecm, model.c, tol)
    except CrscViolation as exc:
        return _failed(model, vecm, NOT_MEMBER, str(exc), True, homeo.dets)
    aperp = orthonormal_complement(fac.alpha)
    bold = bold_matrices(vecm, fac.alpha, fac.betas, aperp)
    b_bar = float(max(np.linalg.norm(B, 2) for B in bold.beta_t)) if bold.beta_t.size else 0.0
    trans = bold.transition()
    stationary = fac.r == model.p

    def report(verdict, reason, br):
        return MembershipReport(fac.r, fac.alpha, aperp, fac.mu, fac.betas, fac.mu_bars, b_bar, br, True,
                                verdict, reason, stationary, vecm, bold, homeo.dets)

    if trans.shape[1] == 0:
        return report(MEMBER, "", JsrBracket(0.0, 0.0, 0, True, 0))
    radii = np.abs(np.linalg.eigvals(trans)).max(axis=1)
    if np.any(radii >= rho_bar):
        l = int(np.argmax(radii))
        br = JsrBracket(float(radii.max()), float("inf"), 1, True, len(radii))
        return report(NOT_MEMBER, f"regime {l} alone has spectral radius {radii[l]:.6g} >= {rho_bar}", br)
    decision, br = jsr_decision(list(trans), rho_bar, depth)
    if decision == "below":
        return report(MEMBER, "", br)
    if decision == "above":
        return report(NOT_MEMBER, f"joint spectral radius is at least {br.lower:.6g}", br)
    return report(INCONCLUSIVE, f"joint spectral radius bracket [{br.lower:.6g}, {br.upper:.6g}] straddles {rho_bar}", br)


def require_member(report: MembershipReport) -> None:
    from nlsvar.errors import NotMemberError

    if not report.is_member:
        raise NotMemberError(f"model is not a class member ({report.verdict}: {report.reason})")


@dataclass(frozen=True)
class LinearDiagnostics:
    roots: np.ndarray
    n_unit_roots: int
    H: np.ndarray


def linear_diagnostics(model: ModelSpec, tol: float = 1e-6) -> LinearDiagnostics:
    """Roots of ``det(Phi_0 - sum_i Phi_i lambda^i)`` and ``H = Phi_0 - sum_j Gamma_j``.

    Roots are reciprocals of the nonzero companion eigenvalues; roots at
    infinity are dropped.
    """
    if not isinstance(model.family, Linear):
        raise FamilyMismatch("linear diagnostics need a linear model")
    p, k = model.p, model.k
    phi = model.family.phi
    inv0 = np.linalg.inv(phi[0])
    C = np.zeros((p * k, p * k))
    C[:p] = np.hstack([inv0 @ phi[i] for i in range(1, k + 1)])
    C[p:, :-p] = np.eye(p * (k - 1))
    eig = np.linalg.eigvals(C)
    eig = eig[np.abs(eig) > 1e-14]
    roots = 1.0 / eig
    roots = roots[np.argsort(np.abs(roots), kind="stable")]
    n_unit = int(np.sum(np.abs(roots - 1.0) <= tol))
    H = derive_vecm(model).h_mats()[0]
    return LinearDiagnostics(roots, n_unit, H)
