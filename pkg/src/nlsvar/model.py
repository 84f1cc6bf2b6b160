"""Model specifications for additively separable nonlinear VAR(k) systems.

A model is ``f_0(z_t) = c + sum_{i=1..k} f_i(z_{t-i}) + u_t`` where every
``f_i`` belongs to one of four families:

* ``Linear``: ``f_i(z) = Phi_i z``.
* ``Threshold``: regimes are bands ``tau[l-1] < a'z <= tau[l]`` and
  ``f_i`` is affine on each band.
* ``Conic``: regimes are unions of the cones cut out by the signs of
  ``a_j'z`` for a basis ``a_1..a_p``; ``f_i`` is linear on each regime.
* ``Smoothed``: a threshold model convolved with an isotropic Gaussian.

Regime indices are zero based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

from nlsvar import normal
from nlsvar.errors import FamilyMismatch, ModelError


def _frozen(x, dtype=float) -> np.ndarray:
    arr = np.array(x, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Linear:
    phi: np.ndarray  # (k+1, p, p)

    kind = "linear"

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi", _frozen(self.phi))


@dataclass(frozen=True, eq=False)
class Threshold:
    a: np.ndarray  # (p,)
    tau: np.ndarray  # (L-1,), strictly increasing
    phi: np.ndarray  # (k+1, L, p, p)
    offsets: np.ndarray  # (k+1, L, p)

    kind = "threshold"

    def __post_init__(self) -> None:
        for name in ("a", "tau", "phi", "offsets"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))


@dataclass(frozen=True, eq=False)
class Conic:
    basis: np.ndarray  # (p, p); row j is a_j
    cone_regimes: np.ndarray  # (2**p,); bit j of the index set iff a_j'z >= 0
    phi: np.ndarray  # (k+1, L, p, p)

    kind = "conic"

    def __post_init__(self) -> None:
        object.__setattr__(self, "basis", _frozen(self.basis))
        object.__setattr__(self, "cone_regimes", _frozen(self.cone_regimes, dtype=np.int64))
        object.__setattr__(self, "phi", _frozen(self.phi))


@dataclass(frozen=True, eq=False)
class Smoothed:
    base: Threshold
    sigma: float

    kind = "smoothed"


Family = Union[Linear, Threshold, Conic, Smoothed]


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Validated, immutable model specification."""

    p: int
    k: int
    c: np.ndarray
    family: Family

    def __post_init__(self) -> None:
        object.__setattr__(self, "c", _frozen(self.c))
        _validate(self)

    @property
    def kind(self) -> str:
        return self.family.kind

    @property
    def is_piecewise(self) -> bool:
        return self.kind in ("threshold", "conic")

    @property
    def n_regimes(self) -> int:
        fam = self.family
        if isinstance(fam, Linear):
            return 1
        if isinstance(fam, Smoothed):
            return fam.base.phi.shape[1]
        return fam.phi.shape[1]

    @cached_property
    def piece_matrices(self) -> np.ndarray:
        """Regime matrices with shape (k+1, L, p, p); L = 1 for linear models."""
        fam = self.family
        if isinstance(fam, Linear):
            out = fam.phi[:, None, :, :]
        elif isinstance(fam, Smoothed):
            out = fam.base.phi
        else:
            out = fam.phi
        return _frozen(out)

    @cached_property
    def piece_offsets(self) -> np.ndarray:
        """Regime offsets with shape (k+1, L, p); zero for linear and conic models."""
        fam = self.family
        if isinstance(fam, Threshold):
            return fam.offsets
        if isinstance(fam, Smoothed):
            return fam.base.offsets
        return _frozen(np.zeros((self.k + 1, self.n_regimes, self.p)))

    def threshold_data(self) -> Threshold:
        fam = self.family
        if isinstance(fam, Threshold):
            return fam
        if isinstance(fam, Smoothed):
            return fam.base
        raise FamilyMismatch(f"{self.kind} model has no threshold partition")


# construction helpers


def linear_model(phi, c=None) -> ModelSpec:
    """Build a linear model from the list ``[Phi_0, ..., Phi_k]``."""
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 3 or phi.shape[0] < 2:
        raise ModelError("linear model needs a stack of k+1 >= 2 square matrices")
    p = phi.shape[1]
    c = np.zeros(p) if c is None else c
    return ModelSpec(p, phi.shape[0] - 1, c, Linear(phi))


def threshold_model(a, tau, phi, offsets=None, c=None) -> ModelSpec:
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 4:
        raise ModelError("threshold phi must have shape (k+1, L, p, p)")
    k1, L, p, _ = phi.shape
    offsets = np.zeros((k1, L, p)) if offsets is None else offsets
    c = np.zeros(p) if c is None else c
    return ModelSpec(p, k1 - 1, c, Threshold(np.asarray(a, float), np.atleast_1d(np.asarray(tau, float)), phi, offsets))


def conic_model(basis, cone_regimes, phi, c=None) -> ModelSpec:
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 4:
        raise ModelError("conic phi must have shape (k+1, L, p, p)")
    p = phi.shape[2]
    c = np.zeros(p) if c is None else c
    return ModelSpec(p, phi.shape[0] - 1, c, Conic(basis, cone_regimes, phi))


def smoothed_model(base: ModelSpec, sigma: float) -> ModelSpec:
    if not isinstance(base.family, Threshold):
        raise FamilyMismatch("only threshold models can be smoothed")
    return ModelSpec(base.p, base.k, base.c, Smoothed(base.family, float(sigma)))


# validation


def _check_shape(arr: np.ndarray, shape: tuple, what: str) -> None:
    if arr.shape != shape:
        raise ModelError(f"{what}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelError(f"{what}: non-finite entries")


def _validate_threshold(fam: Threshold, p: int, k: int, what: str) -> None:
    if fam.phi.ndim != 4:
        raise ModelError(f"{what}.phi must be 4-dimensional")
    L = fam.phi.shape[1]
    if L < 1:
        raise ModelError(f"{what}: need at least one regime")
    _check_shape(fam.a, (p,), f"{what}.a")
    if not np.any(fam.a != 0):
        raise ModelError(f"{what}.a must be nonzero")
    _check_shape(fam.tau, (L - 1,), f"{what}.tau")
    if np.any(np.diff(fam.tau) <= 0):
        raise ModelError(f"{what}.tau must be strictly increasing")
    _check_shape(fam.phi, (k + 1, L, p, p), f"{what}.phi")
    _check_shape(fam.offsets, (k + 1, L, p), f"{what}.offsets")


def _validate(m: ModelSpec) -> None:
    if not (isinstance(m.p, (int, np.integer)) and m.p >= 1):
        raise ModelError("p must be a positive integer")
    if not (isinstance(m.k, (int, np.integer)) and m.k >= 1):
        raise ModelError("k must be a positive integer")
    p, k = int(m.p), int(m.k)
    _check_shape(m.c, (p,), "c")
    fam = m.family
    if isinstance(fam, Linear):
        _check_shape(fam.phi, (k + 1, p, p), "family.phi")
    elif isinstance(fam, Threshold):
        _validate_threshold(fam, p, k, "family")
    elif isinstance(fam, Conic):
        _check_shape(fam.basis, (p, p), "family.basis")
        if np.linalg.matrix_rank(fam.basis) < p:
            raise ModelError("family.basis must span R^p")
        if fam.phi.ndim != 4:
            raise ModelError("family.phi must be 4-dimensional")
        L = fam.phi.shape[1]
        _check_shape(fam.phi, (k + 1, L, p, p), "family.phi")
        if fam.cone_regimes.shape != (2**p,):
            raise ModelError(f"family.cone_regimes must list all {2**p} sign patterns")
        if fam.cone_regimes.min() < 0 or fam.cone_regimes.max() >= L:
            raise ModelError("family.cone_regimes refers to a missing regime")
    elif isinstance(fam, Smoothed):
        _validate_threshold(fam.base, p, k, "family.base")
        if not (np.isfinite(fam.sigma) and fam.sigma > 0):
            raise ModelError("family.sigma must be positive")
        phi0 = fam.base.phi[0]
        if not np.allclose(phi0, phi0[0], rtol=0.0, atol=1e-12):
            raise ModelError("smoothed models need the same f_0 matrix in every regime")
    else:
        raise ModelError(f"unknown family {type(fam).__name__}")


# regimes


def regime_of(model: ModelSpec, z) -> int:
    """Index of the regime containing ``z``."""
    fam = model.family
    z = np.asarray(z, dtype=float)
    if isinstance(fam, Threshold):
        # band l is (tau[l-1], tau[l]]; the boundary belongs to the lower band
        return int(np.searchsorted(fam.tau, fam.a @ z, side="left"))
    if isinstance(fam, Conic):
        return int(fam.cone_regimes[cone_index(fam.basis, z)])
    raise FamilyMismatch(f"regime_of is undefined for {model.kind} models")


def cone_index(basis: np.ndarray, z) -> int:
    signs = basis @ np.asarray(z, dtype=float) >= 0
    return int(np.dot(signs, 1 << np.arange(basis.shape[0])))


def regimes_of(model: ModelSpec, zs) -> np.ndarray:
    """Vectorised ``regime_of`` over the rows of ``zs``."""
    fam = model.family
    zs = np.atleast_2d(np.asarray(zs, dtype=float))
    if isinstance(fam, Threshold):
        return np.searchsorted(fam.tau, zs @ fam.a, side="left")
    if isinstance(fam, Conic):
        bits = (zs @ fam.basis.T >= 0).astype(np.int64)
        return fam.cone_regimes[bits @ (1 << np.arange(model.p))]
    raise FamilyMismatch(f"regime_of is undefined for {model.kind} models")


def smoothing_weights(model: ModelSpec, z) -> tuple[np.ndarray, np.ndarray]:
    """Slab probabilities and first moments for a smoothed model.

    Returns ``(w, m)`` with ``w[l] = P(z + u in regime l)`` and
    ``m[l] = E[u 1{z + u in regime l}]`` for ``u ~ N(0, sigma^2 I)``.
    """
    fam = model.family
    if not isinstance(fam, Smoothed):
        raise FamilyMismatch("smoothing weights need a smoothed model")
    a = fam.base.a
    aa = a @ a
    s = fam.sigma * np.sqrt(aa)
    x = a @ np.asarray(z, dtype=float)
    edges = np.concatenate(([-np.inf], fam.base.tau, [np.inf]))
    std = (edges - x) / s
    cdf = normal.cdf(std)
    pdf = normal.pdf(std)
    w = np.diff(cdf)
    # E[v 1{lo < v <= hi}] for v ~ N(0, s^2) is s (pdf(lo/s) - pdf(hi/s))
    first = s * (pdf[:-1] - pdf[1:])
    return w, np.outer(first, a / aa)


def regime_weights(model: ModelSpec, z) -> np.ndarray:
    """Weight of each regime in the Jacobian of every ``f_i`` at ``z``.

    One-hot for piecewise models, the Gaussian slab probabilities for smoothed
    models and ``[1]`` for linear ones.
    """
    fam = model.family
    if isinstance(fam, Linear):
        return np.ones(1)
    if isinstance(fam, Smoothed):
        return smoothing_weights(model, z)[0]
    w = np.zeros(model.n_regimes)
    w[regime_of(model, z)] = 1.0
    return w


# evaluation


def eval_all(model: ModelSpec, z) -> np.ndarray:
    """Evaluate ``f_0, ..., f_k`` at ``z``; returns shape (k+1, p)."""
    z = np.asarray(z, dtype=float)
    fam = model.family
    if isinstance(fam, Linear):
        return fam.phi @ z
    if isinstance(fam, Smoothed):
        w, first = smoothing_weights(model, z)
        base = fam.base
        arg = w[:, None] * z[None, :] + first  # (L, p)
        return np.einsum("ilp,l->ip", base.offsets, w) + np.einsum("ilpq,lq->ip", base.phi, arg)
    l = regime_of(model, z)
    return model.piece_offsets[:, l] + model.piece_matrices[:, l] @ z


def eval_f(model: ModelSpec, i: int, z) -> np.ndarray:
    if not 0 <= i <= model.k:
        raise ModelError(f"lag index {i} outside 0..{model.k}")
    return eval_all(model, z)[i]


def jacobian_all(model: ModelSpec, z) -> np.ndarray:
    """Jacobians of ``f_0..f_k`` at ``z``, shape (k+1, p, p).

    For smoothed models this is the weight average of the regime matrices,
    which is exact because the unsmoothed maps are Lipschitz.
    """
    w = regime_weights(model, z)
    return np.einsum("l,ilpq->ipq", w, model.piece_matrices)


# continuity


@dataclass(frozen=True)
class ContinuityViolation:
    lag: int
    boundary: tuple[int, int]
    kind: str  # "matrix" or "offset"
    residual: float


def validate_continuity(model: ModelSpec, tol: float = 1e-10) -> list[ContinuityViolation]:
    """List every place where some ``f_i`` jumps across a regime boundary."""
    fam = model.family
    if isinstance(fam, Smoothed):
        fam = fam.base
    if isinstance(fam, Threshold):
        return _threshold_violations(fam, tol)
    if isinstance(fam, Conic):
        return _conic_violations(fam, tol)
    raise FamilyMismatch(f"continuity check is undefined for {model.kind} models")


def _threshold_violations(fam: Threshold, tol: float) -> list[ContinuityViolation]:
    out = []
    a = fam.a
    for i in range(fam.phi.shape[0]):
        for l in range(1, fam.phi.shape[1]):
            dphi = fam.phi[i, l] - fam.phi[i, l - 1]
            n = dphi @ a / (a @ a)
            res = np.linalg.norm(dphi - np.outer(n, a))
            if res > tol:
                out.append(ContinuityViolation(i, (l - 1, l), "matrix", float(res)))
            res = np.linalg.norm(fam.offsets[i, l] - fam.offsets[i, l - 1] + n * fam.tau[l - 1])
            if res > tol:
                out.append(ContinuityViolation(i, (l - 1, l), "offset", float(res)))
    return out


def _conic_violations(fam: Conic, tol: float) -> list[ContinuityViolation]:
    out = []
    p = fam.basis.shape[0]
    seen = set()
    for mask in range(2**p):
        for j in range(p):
            other = mask ^ (1 << j)
            la, lb = int(fam.cone_regimes[mask]), int(fam.cone_regimes[other])
            if la == lb or (min(la, lb), max(la, lb), j) in seen:
                continue
            seen.add((min(la, lb), max(la, lb), j))
            aj = fam.basis[j]
            proj = np.eye(p) - np.outer(aj, aj) / (aj @ aj)
            for i in range(fam.phi.shape[0]):
                res = np.linalg.norm((fam.phi[i, la] - fam.phi[i, lb]) @ proj)
                if res > tol:
                    out.append(ContinuityViolation(i, (min(la, lb), max(la, lb)), "matrix", float(res)))
    return out


def spec_equal(a: ModelSpec, b: ModelSpec) -> bool:
    """Field-level equality of two specifications."""
    if (a.p, a.k, a.kind) != (b.p, b.k, b.kind) or not np.array_equal(a.c, b.c):
        return False
    fa, fb = a.family, b.family
    if isinstance(fa, Smoothed):
        if fa.sigma != fb.sigma:
            return False
        fa, fb = fa.base, fb.base
    names = [n for n in ("phi", "a", "tau", "offsets", "basis", "cone_regimes") if hasattr(fa, n)]
    return all(np.array_equal(getattr(fa, n), getattr(fb, n)) for n in names)


def in_regime(model: ModelSpec, z, l: int, slack: float = 0.0) -> bool:
    """Whether ``z`` satisfies regime ``l``'s inequalities up to ``slack``.

    Distances are measured along unit normals, so ``slack`` is in the units
    of ``z``.
    """
    z = np.asarray(z, dtype=float)
    fam = model.family
    if isinstance(fam, Smoothed):
        fam = fam.base
    if isinstance(fam, Threshold):
        na = np.linalg.norm(fam.a)
        x = fam.a @ z / na
        lo = fam.tau[l - 1] / na if l > 0 else -np.inf
        hi = fam.tau[l] / na if l < len(fam.tau) else np.inf
        return bool(lo - slack < x <= hi + slack)
    if isinstance(fam, Conic):
        p = model.p
        unit = fam.basis / np.linalg.norm(fam.basis, axis=1, keepdims=True)
        s = unit @ z
        masks = np.flatnonzero(fam.cone_regimes == l)
        if masks.size == 0:
            return False
        bits = (masks[:, None] >> np.arange(p)) & 1
        margins = np.min(np.where(bits == 1, s, -s), axis=1)
        return bool(margins.max() >= -slack)
    if isinstance(fam, Linear):
        return l == 0
    raise FamilyMismatch(f"unknown family {model.kind}")


def boundary_distance(model: ModelSpec, z) -> float:
    """Distance from ``z`` to the nearest regime boundary (inf for linear)."""
    z = np.asarray(z, dtype=float)
    fam = model.family
    if isinstance(fam, Smoothed):
        fam = fam.base
    if isinstance(fam, Threshold):
        if fam.tau.size == 0:
            return np.inf
        na = np.linalg.norm(fam.a)
        return float(np.min(np.abs(fam.a @ z - fam.tau)) / na)
    if isinstance(fam, Conic):
        unit = fam.basis / np.linalg.norm(fam.basis, axis=1, keepdims=True)
        s = np.abs(unit @ z)
        # only hyperplanes that separate distinct regimes count
        p = model.p
        mask = cone_index(fam.basis, z)
        here = fam.cone_regimes[mask]
        live = [j for j in range(p) if fam.cone_regimes[mask ^ (1 << j)] != here]
        return float(s[live].min()) if live else np.inf
    return np.inf
