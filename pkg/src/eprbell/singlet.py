"""Closed-form singlet-state pair statistics and a sampler reproducing them.

All angles follow the spin-1/2 convention: the joint up-up probability is
``0.5 * sin(theta / 2)**2`` for a relative detector angle ``theta``.
Polarization-analyzer angles of photon experiments must be doubled by the
caller before use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import TWO_PI, Outcome


@dataclass(frozen=True)
class SingletPrediction:
    theta: float
    p_uu: float
    p_ud: float
    p_du: float
    p_dd: float

    @property
    def expectation(self):
        return self.p_uu + self.p_dd - self.p_ud - self.p_du

    @property
    def cumulative(self):
        """Cumulative probabilities in the fixed cell order uu, ud, du, dd."""
        return np.cumsum([self.p_uu, self.p_ud, self.p_du, self.p_dd])


def reduce_angle(theta):
    """Map any angle onto the relative-angle range [0, pi]."""
    t = np.abs(np.asarray(theta, dtype=float)) % TWO_PI
    return np.minimum(t, TWO_PI - t)


def singlet_joint(theta: float) -> SingletPrediction:
    theta = float(reduce_angle(theta))
    same = 0.5 * math.sin(theta / 2) ** 2
    mixed = 0.5 * math.cos(theta / 2) ** 2
    return SingletPrediction(theta, same, mixed, mixed, same)


def singlet_expectation(theta):
    """Product-outcome expectation, -cos(theta)."""
    return -np.cos(reduce_angle(theta))


def singlet_sample(theta: float, rng: np.random.Generator) -> tuple[Outcome, Outcome]:
    """Draw one outcome pair from a single uniform variate."""
    o1, o2 = singlet_sample_many(np.array([theta]), rng)
    return Outcome(int(o1[0])), Outcome(int(o2[0]))


def singlet_sample_many(theta, rng: np.random.Generator):
    """Vectorised sampler: one uniform variate per pair, cells ordered uu, ud, du, dd.

    Returns two int8 arrays of +1/-1 outcomes.
    """
    theta = reduce_angle(theta)
    same = 0.5 * np.sin(theta / 2) ** 2
    mixed = 0.5 - same
    u = rng.random(theta.shape)
    cell = ((u >= same).astype(np.int8) + (u >= 0.5).astype(np.int8)
            + (u >= 0.5 + mixed).astype(np.int8))
    o1 = np.where(cell < 2, 1, -1).astype(np.int8)
    o2 = np.where(cell % 2 == 0, 1, -1).astype(np.int8)
    return o1, o2


def qm_bi_margin(theta_ab, theta_bc, theta_ac):
    """sin^2(ab/2) + sin^2(bc/2) - sin^2(ac/2); negative means violation."""
    s = lambda t: math.sin(float(reduce_angle(t)) / 2) ** 2
    return s(theta_ab) + s(theta_bc) - s(theta_ac)
