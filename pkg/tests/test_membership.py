from __future__ import annotations

import numpy as np
import pytest
from oracles import bent_threshold_parts, random_linear_parts, random_threshold_parts

from nlsvar import presets
from nlsvar.errors import CrscViolation, FamilyMismatch, NotMemberError
from nlsvar.membership import (
    INCONCLUSIVE,
    MEMBER,
    NOT_MEMBER,
    check_homeomorphism,
    check_membership,
    factorize_crsc,
    linear_diagnostics,
    orthonormal_complement,
    require_member,
)
from nlsvar.model import linear_model, threshold_model
from nlsvar.vecm import derive_vecm


def test_linear_example_is_member():
    rep = check_membership(presets.linear_example())
    assert rep.verdict == MEMBER and rep.r == 1 and rep.q == 1
    np.testing.assert_allclose(rep.alpha[:, 0], [1.0, 0.0])
    np.testing.assert_allclose(rep.alpha_perp[:, 0], [0.0, 1.0], atol=1e-15)
    # alpha beta' reproduces Pi
    np.testing.assert_allclose(rep.alpha @ rep.betas[0].T, np.outer([-0.5, 0], [1, -1]), atol=1e-14)
    assert rep.jsr.upper == pytest.approx(0.5)


def test_report_serialises():
    d = check_membership(presets.threshold_example()).to_dict()
    assert d["verdict"] == "member" and d["r"] == 1 and d["jsr"]["certified"]


def test_threshold_and_smoothed_share_verdict():
    base = check_membership(presets.threshold_example())
    sm = check_membership(presets.smoothed_example())
    assert base.verdict == sm.verdict == MEMBER
    assert sm.jsr.lower == base.jsr.lower and sm.jsr.upper == base.jsr.upper


def test_unit_eigenvalue_is_rejected():
    rep = check_membership(presets.linear_example(alpha=(-2.0, 0.0)))
    assert rep.verdict == NOT_MEMBER and "spectral radius" in rep.reason
    with pytest.raises(NotMemberError):
        require_member(rep)


def test_determinant_sign_flip_is_rejected():
    a, tau, phi, off = bent_threshold_parts()
    n = np.array([0.0, -2.0])  # det(I + n a') = -1
    phi = phi.copy()
    off = off.copy()
    phi[0, 1] = np.eye(2) + np.outer(n, a)
    off[0, 1] = -n * tau[0]
    phi[1, 1] = phi[1, 0] + np.outer(n, a)
    off[1, 1] = -n * tau[0]
    m = threshold_model(a, tau, phi, off)
    assert not check_homeomorphism(m).ok
    rep = check_membership(m)
    assert rep.verdict == NOT_MEMBER and "sign" in rep.reason


def test_crsc_violation_raises_and_rejects():
    # regime 1 corrects along e_2 instead of e_1
    a = np.array([0.0, 1.0])
    phi = np.zeros((2, 2, 2, 2))
    phi[0] = np.eye(2)
    phi[1, 0] = np.eye(2) + np.outer([-0.5, 0.0], a)
    phi[1, 1] = np.eye(2) + np.outer([0.0, -0.5], a)
    m = threshold_model(a, [0.0], phi)  # threshold at 0 needs no offsets
    with pytest.raises(CrscViolation):
        factorize_crsc(derive_vecm(m), m.c)
    assert check_membership(m).verdict == NOT_MEMBER


def test_intercept_outside_span_is_violation():
    m = linear_model(presets.linear_example().family.phi, c=[0.0, 1.0])
    with pytest.raises(CrscViolation):
        factorize_crsc(derive_vecm(m), m.c)


def test_discontinuous_model_is_rejected():
    m = presets.threshold_example()
    off = np.array(m.family.offsets)
    off[1, 1] += 0.5
    bad = threshold_model(m.family.a, m.family.tau, m.family.phi, off)
    rep = check_membership(bad)
    assert rep.verdict == NOT_MEMBER and "discontinuous" in rep.reason


def _two_regime_r2_model():
    # p = 3, r = 2; the regimes switch on z_1 and their equilibrium-error maps
    # differ by a rank-one term, as continuity requires
    alpha = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    a = np.array([1.0, 0.0, 0.0])
    T0 = np.array([[0.5, 1.2], [0.0, 0.5]])
    B0 = np.zeros((3, 2))
    B0[:2] = (T0 - np.eye(2)).T
    B1 = B0 + np.outer(a, [-0.5, 0.3])
    phi = np.zeros((2, 2, 3, 3))
    phi[0] = np.eye(3)
    phi[1, 0] = np.eye(3) + alpha @ B0.T
    phi[1, 1] = np.eye(3) + alpha @ B1.T
    return threshold_model(a, [0.0], phi)


def test_inconclusive_bracket_is_reported():
    m = _two_regime_r2_model()
    full = check_membership(m)
    assert full.verdict == MEMBER and full.r == 2
    lo, hi = full.jsr.lower, full.jsr.upper
    assert lo < hi
    rep = check_membership(m, rho_bar=0.5 * (lo + hi), depth=1)
    assert rep.verdict == INCONCLUSIVE and "straddles" in rep.reason
    with pytest.raises(NotMemberError):
        require_member(rep)


def test_random_members_factor_consistently():
    rng = np.random.default_rng(11)
    for _ in range(10):
        p = int(rng.integers(2, 5))
        r = int(rng.integers(1, p))
        k = int(rng.integers(1, 4))
        a, tau, phi, off, alpha = random_threshold_parts(rng, p, k, r)
        m = threshold_model(a, tau, phi, off)
        rep = check_membership(m)
        if rep.verdict != MEMBER:
            continue
        assert rep.r == r
        # span(alpha) recovered
        P = rep.alpha @ rep.alpha.T
        np.testing.assert_allclose(P @ alpha, alpha, atol=1e-9)
        np.testing.assert_allclose(rep.alpha.T @ rep.alpha, np.eye(r), atol=1e-12)
        np.testing.assert_allclose(rep.alpha.T @ rep.alpha_perp, 0.0, atol=1e-12)
        v = rep.vecm
        for l in range(v.n_regimes):
            np.testing.assert_allclose(rep.alpha @ rep.betas[l].T, v.pi_mats[l], atol=1e-10)


def test_orthonormal_complement():
    A = np.array([[1.0], [1.0], [0.0]]) / np.sqrt(2)
    C = orthonormal_complement(A)
    assert C.shape == (3, 2)
    np.testing.assert_allclose(A.T @ C, 0.0, atol=1e-15)
    np.testing.assert_allclose(C.T @ C, np.eye(2), atol=1e-15)


def test_linear_diagnostics():
    d = linear_diagnostics(presets.linear_example())
    np.testing.assert_allclose(np.sort(d.roots.real), [1.0, 2.0])
    assert d.n_unit_roots == 1
    np.testing.assert_allclose(d.H, np.eye(2))
    rng = np.random.default_rng(4)
    phi, _, _ = random_linear_parts(rng, 3, 2, 1)
    d = linear_diagnostics(linear_model(phi))
    assert d.n_unit_roots == 2  # p - r unit roots
    with pytest.raises(FamilyMismatch):
        linear_diagnostics(presets.threshold_example())
