"""Bounds on the joint spectral radius of a finite matrix set.

The search walks the tree of products ``A_{i_t} ... A_{i_1}``. Every node
carries ``v = min_s ||P_s||^{1/s}`` over its prefixes ``P_s``. Any infinite
product splits into consecutive blocks that each realise some node's ``v``,
so ``max v`` over a complete layer of the tree bounds the JSR from above.
A node whose ``v`` is already no larger than the best lower bound cannot
raise that maximum and is not expanded further; its ``v`` is remembered.
Lower bounds are ``rho(P)^{1/t}`` over all visited products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nlsvar import kernels

_PRUNE_RTOL = 1e-12


@dataclass(frozen=True)
class JsrBracket:
    lower: float
    upper: float
    depth: int
    certified: bool  # False when the node budget stopped the search early
    nodes: int = 0

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "depth": self.depth,
            "certified": self.certified,
            "nodes": self.nodes,
        }


def _as_stack(matrices) -> np.ndarray:
    mats = [np.asarray(m, dtype=float) for m in matrices]
    if not mats:
        raise ValueError("matrix set is empty")
    shape = mats[0].shape
    if len(shape) != 2 or shape[0] != shape[1]:
        raise ValueError(f"matrices must be square, got shape {shape}")
    for m in mats:
        if m.shape != shape:
            raise ValueError(f"dimension mismatch in matrix set: {m.shape} vs {shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix set contains non-finite entries")
    return np.ascontiguousarray(np.stack(mats))


def balancing_transform(mats: np.ndarray) -> np.ndarray | None:
    """Similarity ``T`` making ``||T A T^-1||_2`` a balanced norm for the set.

    ``P`` solves ``P = I + (1/(m g)) sum_i A_i' P A_i`` where ``g`` is 1.1 times
    the spectral radius of the averaged Gram operator, and ``T`` is the
    Cholesky factor of ``P``. Returns None when this is ill-posed.
    """
    m, n, _ = mats.shape
    S = sum(np.kron(A.T, A.T) for A in mats) / m
    rho = np.abs(np.linalg.eigvals(S)).max()
    if not np.isfinite(rho) or rho <= 1e-300:
        return None
    try:
        vec = np.linalg.solve(np.eye(n * n) - S / (1.1 * rho), np.eye(n).ravel())
        P = vec.reshape(n, n)
        P = 0.5 * (P + P.T)
        if np.linalg.cond(P) > 1e12:
            return None
        return np.linalg.cholesky(P).T
    except np.linalg.LinAlgError:
        return None


def _search(mats: np.ndarray, depth: int, target: float | None, budget: int):
    m = mats.shape[0]
    _, norms, rhos = kernels.expand_level(np.eye(mats.shape[1])[None], mats)
    lower = float(rhos.max())
    frontier, v = mats, norms
    pruned_max = 0.0
    upper = np.inf
    nodes = m
    reached = 1
    certified = True
    t = 1
    while True:
        keep = v > lower * (1.0 + _PRUNE_RTOL)
        if not keep.all():
            pruned_max = max(pruned_max, float(v[~keep].max()))
        frontier, v = frontier[keep], v[keep]
        level = max(pruned_max, float(v.max()) if v.size else 0.0)
        upper = min(upper, level)
        reached = t
        if v.size == 0 or t >= depth:
            break
        if target is not None and (upper < target or lower >= target):
            break
        if frontier.shape[0] * m > budget:
            certified = False
            break
        t += 1
        kids, norms, rhos = kernels.expand_level(np.ascontiguousarray(frontier), mats)
        nodes += kids.shape[0]
        lower = max(lower, float(rhos.max()) ** (1.0 / t))
        v = np.minimum(np.repeat(v, m), norms ** (1.0 / t))
        frontier = kids
    return lower, max(upper, lower), reached, certified, nodes


def jsr_bounds(
    matrices,
    depth: int = 12,
    target: float | None = None,
    precondition: bool = True,
    node_budget: int = 50_000,
) -> JsrBracket:
    """Bracket the joint spectral radius of ``matrices``.

    With ``precondition`` the search is run both in the spectral norm and in
    the balanced norm from ``balancing_transform``; the tighter bracket wins.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    mats = _as_stack(matrices)
    if mats.shape[1] == 0:
        return JsrBracket(0.0, 0.0, 0, True, 0)
    if mats.shape[0] == 1:
        # Gelfand: a single matrix has JSR equal to its spectral radius
        rho = float(np.abs(np.linalg.eigvals(mats[0])).max())
        return JsrBracket(rho, rho, 1, True, 1)
    lower, upper, reached, cert, nodes = _search(mats, depth, target, node_budget)
    if precondition and upper > lower:
        T = balancing_transform(mats)
        if T is not None:
            Tinv = np.linalg.inv(T)
            lo2, up2, reached2, cert2, nodes2 = _search(np.ascontiguousarray(T @ mats @ Tinv), depth, target, node_budget)
            nodes += nodes2
            lower = max(lower, lo2)
            if up2 < upper:
                upper, reached, cert = up2, reached2, cert2
            upper = max(upper, lower)
    return JsrBracket(float(lower), float(upper), int(reached), bool(cert), int(nodes))


def jsr_decision(matrices, rho_bar: float, max_depth: int = 12, **kwargs) -> tuple[str, JsrBracket]:
    """Compare the JSR with ``rho_bar``: "below", "above" or "inconclusive"."""
    if not 0.0 < rho_bar <= 1.0:
        raise ValueError("rho_bar must lie in (0, 1]")
    br = jsr_bounds(matrices, depth=max_depth, target=rho_bar, **kwargs)
    if br.upper < rho_bar:
        return "below", br
    if br.lower >= rho_bar:
        return "above", br
    return "inconclusive", br
