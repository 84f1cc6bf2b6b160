"""Simulation of model paths and inversion of the left-hand map ``f_0``."""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from nlsvar import kernels
from nlsvar.errors import ModelError, NoRegimeAccepts
from nlsvar.model import Conic, Linear, ModelSpec, Smoothed, Threshold, eval_all, in_regime

_SLACKS = (1e-9, 1e-6)


@dataclass(frozen=True, eq=False)
class _ThresholdInverse:
    b: np.ndarray  # (p,)
    nu: np.ndarray  # (L-1,), band edges for b'y
    inv0: np.ndarray  # (L, p, p)


_inverse_cache: "weakref.WeakKeyDictionary[ModelSpec, _ThresholdInverse]" = weakref.WeakKeyDictionary()


def threshold_inverse_data(model: ModelSpec) -> _ThresholdInverse:
    """Closed-form inverse of a threshold-affine (or linear) ``f_0``.

    With ``b = Phi_0^(0)^{-T} a`` and ``c_l = det Phi_0^(l) / det Phi_0^(0)``,
    ``b'f_0(z) = c_l a'z + b'offset_l`` inside band ``l``, so the band of ``y``
    is found by comparing ``b'y`` with ``nu_l = c_l tau_l + b'offset_l``.
    """
    hit = _inverse_cache.get(model)
    if hit is not None:
        return hit
    phi0 = model.piece_matrices[0]
    inv0 = np.linalg.inv(phi0)
    if isinstance(model.family, Linear):
        data = _ThresholdInverse(np.zeros(model.p), np.zeros(0), inv0)
    else:
        fam = model.threshold_data()
        b = inv0[0].T @ fam.a
        dets = np.linalg.det(phi0)
        ratio = dets / dets[0]
        off0 = fam.offsets[0]
        nu = ratio[:-1] * fam.tau + off0[:-1] @ b
        data = _ThresholdInverse(b, nu, inv0)
    _inverse_cache[model] = data
    return data


def candidate_inverse(model: ModelSpec, mats, offsets, y) -> np.ndarray:
    """Invert a continuous piecewise-affine map regime by regime.

    Regime ``l`` maps ``z`` to ``offsets[l] + mats[l] z``. The first regime
    whose candidate preimage lies in that regime (up to a small slack) wins.
    """
    y = np.asarray(y, dtype=float)
    cands = []
    for l in range(len(mats)):
        try:
            cands.append(np.linalg.solve(mats[l], y - offsets[l]))
        except np.linalg.LinAlgError:
            cands.append(None)
    for slack in _SLACKS:
        for l, z in enumerate(cands):
            if z is not None and in_regime(model, z, l, slack * (1.0 + np.linalg.norm(z))):
                return z
    raise NoRegimeAccepts(f"no regime accepts a preimage of y = {y.tolist()}")


def f0_inverse(model: ModelSpec, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    fam = model.family
    if isinstance(fam, Linear):
        return np.linalg.solve(fam.phi[0], y)
    if isinstance(fam, Smoothed):
        # f_0 is affine once smoothed: the shared matrix and offset
        return np.linalg.solve(fam.base.phi[0, 0], y - fam.base.offsets[0, 0])
    if isinstance(fam, Threshold):
        inv = threshold_inverse_data(model)
        l = int(np.searchsorted(inv.nu, inv.b @ y, side="left"))
        return inv.inv0[l] @ (y - fam.offsets[0, l])
    if isinstance(fam, Conic):
        return candidate_inverse(model, fam.phi[0], np.zeros((fam.phi.shape[1], model.p)), y)
    raise ModelError(f"unknown family {model.kind}")


# shocks


def gaussian_shocks(sigma, T: int, seed: int) -> np.ndarray:
    """``T`` i.i.d. N(0, sigma) draws from numpy's PCG64 generator."""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if sigma.shape[0] != sigma.shape[1] or not np.allclose(sigma, sigma.T):
        raise ValueError("covariance must be a symmetric square matrix")
    if T < 1:
        raise ValueError("T must be positive")
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance is not positive definite") from exc
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.standard_normal((T, sigma.shape[0])) @ chol.T


@dataclass(frozen=True)
class GivenShocks:
    values: np.ndarray

    def realize(self, p: int) -> np.ndarray:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] != p or v.shape[0] < 1:
            raise ModelError(f"shock sequence must have shape (T, {p})")
        return v.copy()


@dataclass(frozen=True)
class GaussianShocks:
    sigma: np.ndarray
    seed: int
    T: int

    def realize(self, p: int) -> np.ndarray:
        out = gaussian_shocks(self.sigma, self.T, self.seed)
        if out.shape[1] != p:
            raise ModelError(f"covariance must be {p}x{p}")
        return out


@dataclass(frozen=True)
class ImpulseShocks:
    """A single shock ``u`` at period ``tau`` (1 based) and zeros elsewhere."""

    u: np.ndarray
    tau: int
    T: int

    def realize(self, p: int) -> np.ndarray:
        if not 1 <= self.tau <= self.T:
            raise ValueError("impulse period must lie in 1..T")
        out = np.zeros((self.T, p))
        out[self.tau - 1] = self.u
        return out


ShockPlan = GivenShocks | GaussianShocks | ImpulseShocks


@dataclass(frozen=True, eq=False)
class PathResult:
    path: np.ndarray  # (T, p): z_1..z_T
    window0: np.ndarray  # (k, p): z_0, z_{-1}, ..., z_{-k+1}
    shocks: np.ndarray  # (T, p): realised u_1..u_T

    def full(self) -> np.ndarray:
        """Chronological series ``z_{-k+1}, ..., z_0, z_1, ..., z_T``."""
        return np.vstack([self.window0[::-1], self.path])


def simulate(model: ModelSpec, window0, shocks, upsilon=None) -> PathResult:
    """Iterate ``z_t = f_0^{-1}(c + sum_i f_i(z_{t-i}) + u_t)``.

    ``shocks`` is a shock plan or a (T, p) array. With ``upsilon`` the shocks
    are structural and the reduced-form shocks are ``u_t = upsilon eps_t``.
    """
    p, k = model.p, model.k
    w0 = np.asarray(window0, dtype=float)
    if w0.ndim == 1 and k == 1:
        w0 = w0[None]
    if w0.shape != (k, p):
        raise ModelError(f"initial window must have shape ({k}, {p}), got {w0.shape}")
    u = shocks.realize(p) if hasattr(shocks, "realize") else GivenShocks(shocks).realize(p)
    if upsilon is not None:
        ups = np.asarray(upsilon, dtype=float)
        if ups.shape != (p, p) or np.linalg.norm(ups.T @ ups - np.eye(p)) > 1e-10:
            raise ValueError("structural rotation must be a p x p orthogonal matrix")
        u = u @ ups.T
    fam = model.family
    if isinstance(fam, (Linear, Threshold)):
        inv = threshold_inverse_data(model)
        if isinstance(fam, Linear):
            a, tau = np.zeros(p), np.zeros(0)
        else:
            a, tau = fam.a, fam.tau
        # writable C-order copies keep a single compiled signature (numba types read-only arrays separately)
        args = (a, tau, model.piece_offsets, model.piece_matrices, model.c, inv.b, inv.nu, inv.inv0, w0, u)
        path = kernels.simulate_threshold(*(np.array(x, dtype=float, order="C") for x in args))
    else:
        path = np.empty_like(u)
        hist = [row for row in w0]
        for t in range(u.shape[0]):
            rhs = model.c + u[t]
            for i in range(1, k + 1):
                rhs = rhs + eval_all(model, hist[i - 1])[i]
            try:
                znew = f0_inverse(model, rhs)
            except NoRegimeAccepts as exc:
                raise NoRegimeAccepts(f"at t = {t + 1}: {exc}") from exc
            hist = [znew] + hist[:-1]
            path[t] = znew
    return PathResult(path, w0.copy(), u)


def path_residuals(model: ModelSpec, result: PathResult) -> np.ndarray:
    """Per-period defect of the model equation along a simulated path."""
    zs = result.full()
    k = model.k
    out = np.empty(result.path.shape[0])
    for t in range(result.path.shape[0]):
        s = t + k  # index of z_{t+1} in the chronological series
        rhs = model.c + result.shocks[t]
        for i in range(1, k + 1):
            rhs = rhs + eval_all(model, zs[s - i])[i]
        out[t] = np.linalg.norm(eval_all(model, zs[s])[0] - rhs)
    return out
