"""Pairwise losses for AUC-style risks.

A pairwise loss scores an ordered pair of model outputs (u, v) where u comes
from the point that should rank higher. The square surrogate is what the
stochastic trainer differentiates; the 0-1 loss defines the risks the exact
identities hold for.
"""

from __future__ import annotations

import numpy as np


class SquarePairLoss:
    """l(u, v) = (1 - u + v)^2, convex surrogate for the ranking error."""

    def value(self, u, v):
        m = 1.0 - np.asarray(u, dtype=np.float64) + np.asarray(v, dtype=np.float64)
        return m * m

    def grads(self, u, v):
        """(dl/du, dl/dv); dv = -du = 2*(1 - u + v)."""
        m = 1.0 - np.asarray(u, dtype=np.float64) + np.asarray(v, dtype=np.float64)
        return -2.0 * m, 2.0 * m


class ZeroOneLoss:
    """l(u, v) = 1 if u < v, 1/2 if u == v, else 0. Not differentiable."""

    def value(self, u, v):
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        return 0.5 * (1.0 - np.sign(u - v))


square_loss = SquarePairLoss()
zero_one_loss = ZeroOneLoss()
