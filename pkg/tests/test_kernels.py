from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from nlsvar import _accel, kernels, presets
from nlsvar.dynamics import threshold_inverse_data

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba backend not active")


def test_backend_flag_disables_numba():
    env = dict(os.environ, NLSVAR_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from nlsvar import _accel, kernels; print(_accel.backend(), kernels.simulate_threshold is kernels.py_simulate_threshold)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.split() == ["numpy", "True"]


@needs_numba
def test_simulate_backends_agree():
    m = presets.threshold_example()
    inv = threshold_inverse_data(m)
    fam = m.family
    u = np.random.default_rng(1).standard_normal((200, 2))
    args = (fam.a, fam.tau, np.ascontiguousarray(m.piece_offsets), np.ascontiguousarray(m.piece_matrices),
            m.c, inv.b, inv.nu, inv.inv0, np.zeros((1, 2)), u)
    np.testing.assert_allclose(kernels.py_simulate_threshold(*args), kernels.simulate_threshold(*args),
                               rtol=1e-13, atol=1e-13)


@needs_numba
def test_transitory_backends_agree():
    args = (np.array([3.0, 1.0]), np.array([-1.0, -0.5]), np.array([-1.0, -0.25]), np.array([1.0, -1.0]), 1e-12, 10_000)
    za, na = kernels.py_transitory_limit(*args)
    zb, nb = kernels.transitory_limit(*args)
    assert na == nb
    np.testing.assert_allclose(za, zb, rtol=1e-13, atol=1e-13)


def test_count_below_matches_searchsorted():
    edges = np.array([-1.0, 0.0, 2.5])
    for x in (-2.0, -1.0, -0.5, 0.0, 1.0, 2.5, 3.0):
        assert kernels._count_below(edges, x) == np.searchsorted(edges, x, side="left")
