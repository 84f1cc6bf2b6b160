"""Nonlinear cointegrated VAR models: membership checks, common-trend
decompositions, attractors and long-run multipliers."""

__version__ = "0.1.0"
