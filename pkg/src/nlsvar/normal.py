"""Standard normal density and distribution function.

The cdf is evaluated as ``0.5 * erfc(-x / sqrt(2))``. The complementary
error function (C library ``erfc`` for scalars, Cephes via scipy for arrays)
is accurate to a few ulps, so there is no cancellation in the lower tail and
the absolute error stays below 1e-15 everywhere.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from nlsvar._accel import njit

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _cdf_scalar(x):
    return 0.5 * math.erfc(-x / 1.4142135623730951)


def _pdf_scalar(x):
    return 0.3989422804014327 * math.exp(-0.5 * x * x)


# scalar versions are compiled so that numba kernels can call them
cdf_scalar = njit(_cdf_scalar)
pdf_scalar = njit(_pdf_scalar)


def cdf(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * special.erfc(-x / SQRT2)


def pdf(x):
    x = np.asarray(x, dtype=float)
    return INV_SQRT_2PI * np.exp(-0.5 * x * x)
