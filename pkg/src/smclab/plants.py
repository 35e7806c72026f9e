"""Closed-form plant dynamics.

Every state-rate function here is a pure map on plain floats and returns a
tuple, so it can be called millions of times from the integrator without
array overhead. States are ``(x1, x2, x3, x4)``: position, velocity, swing
angle, angular rate. The swing angle is never wrapped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

from .errors import SingularGain, SingularInertia, ZeroCoupling

GAIN_TOL = 1e-9
INERTIA_TOL = 1e-12


class State(NamedTuple):
    x1: float
    x2: float
    x3: float
    x4: float


class PlantTerms(NamedTuple):
    """Drift and input gain of the actuated (f1, b1) and unactuated (f2, b2) chains."""

    f1: float
    b1: float
    f2: float
    b2: float


@dataclass(frozen=True)
class CraneParams:
    """Overhead crane: cart mass ``M``, payload ``m``, rope ``L``, target ``x_d``."""

    M: float = 1.0
    m: float = 0.8
    L: float = 0.305
    g: float = 9.8
    x_d: float = 2.0

    def __post_init__(self):
        if not (self.M > 0 and self.m >= 0 and self.L > 0 and self.g > 0):
            raise ValueError(f"invalid crane parameters: {self}")


@dataclass(frozen=True)
class PendubotParams:
    m1: float
    m2: float
    l1: float
    lc1: float
    lc2: float
    I1: float
    I2: float
    g: float = 9.8

    def __post_init__(self):
        values = (self.m1, self.m2, self.l1, self.lc1, self.lc2, self.I1, self.I2)
        if any(v < 0 for v in values) or self.g <= 0:
            raise ValueError(f"invalid pendubot parameters: {self}")

    @property
    def q1(self):
        return self.m1 * self.lc1**2 + self.m2 * self.l1**2 + self.I1

    @property
    def q2(self):
        return self.m2 * self.lc2**2 + self.I2

    @property
    def q3(self):
        return self.m2 * self.l1 * self.lc2

    @property
    def q4(self):
        return self.m1 * self.lc1 + self.m2 * self.l1

    @property
    def q5(self):
        return self.m2 * self.lc2

    def inertia_positive_definite(self) -> bool:
        # det D(theta) >= q1*q2 - q3^2 for every theta
        return self.q1 * self.q2 - self.q3**2 > 0


def crane_terms(state: Sequence[float], p: CraneParams) -> PlantTerms:
    """Evaluate (f1, b1, f2, b2) of the crane at ``state``."""
    x3, x4 = state[2], state[3]
    s, c = math.sin(x3), math.cos(x3)
    den = p.M + p.m * s * s
    mlw2 = p.m * p.L * x4 * x4
    f1 = (mlw2 * s + p.m * p.g * s * c) / den
    b1 = 1.0 / den
    f2 = -((p.m + p.M) * p.g * s + mlw2 * s * c) / (den * p.L)
    b2 = -c / (den * p.L)
    return PlantTerms(f1, b1, f2, b2)


def crane_derivative(state: Sequence[float], u: float, p: CraneParams) -> tuple:
    f1, b1, f2, b2 = crane_terms(state, p)
    return (state[1], f1 + b1 * u, state[3], f2 + b2 * u)


def pendubot_matrices(theta, theta_dot, p: PendubotParams):
    """Return ``(D, C, G)`` as nested tuples for joint angles ``theta``."""
    t1, t2 = theta
    w1, w2 = theta_dot
    c2 = math.cos(t2)
    q1, q2, q3, q4, q5 = p.q1, p.q2, p.q3, p.q4, p.q5
    D = ((q1 + q2 + 2 * q3 * c2, q2 + q3 * c2), (q2 + q3 * c2, q2))
    h = q3 * math.sin(t2)
    C = ((-h * w2, -h * (w2 + w1)), (h * w1, 0.0))
    g12 = q5 * p.g * math.cos(t1 + t2)
    G = (q4 * p.g * math.cos(t1) + g12, g12)
    return D, C, G


def pendubot_derivative(theta, theta_dot, tau1: float, p: PendubotParams) -> tuple:
    """Full Pendubot rate ``(theta_dot, D^-1 (tau - C theta_dot - G))``; joint 2 unactuated."""
    D, C, G = pendubot_matrices(theta, theta_dot, p)
    w1, w2 = theta_dot
    (d11, d12), (d21, d22) = D
    det = d11 * d22 - d12 * d21
    if abs(det) < INERTIA_TOL:
        raise SingularInertia(f"|det D| = {abs(det):.3e}")
    r1 = tau1 - (C[0][0] * w1 + C[0][1] * w2) - G[0]
    r2 = 0.0 - (C[1][0] * w1 + C[1][1] * w2) - G[1]
    a1 = (d22 * r1 - d12 * r2) / det
    a2 = (-d21 * r1 + d11 * r2) / det
    return (w1, w2, a1, a2)


def degenerate_pendubot_derivative(state: Sequence[float], u: float) -> tuple:
    """Pendubot with the second link's mass centre on its joint: ``(x2, u, x4, -u)``."""
    return (state[1], u, state[3], -u)


def coupled_pair_derivative(
    state: Sequence[float],
    u: float,
    k: float,
    base_terms: Callable[[Sequence[float]], tuple],
) -> tuple:
    """Plant with ``f1 = k f2`` and ``b1 = k b2``.

    ``base_terms(state)`` supplies ``(f2, b2)``.
    """
    if k == 0:
        raise ZeroCoupling("coupling constant k must be nonzero")
    f2, b2 = base_terms(state)
    a = f2 + b2 * u
    return (state[1], k * a, state[3], a)


def reduced_s1_dynamics(x1, x3, x4, c1, p: CraneParams) -> tuple:
    """Swing dynamics while the cart slides on ``x2 + c1 x1 = 0``."""
    return (x4, -(p.g / p.L) * math.sin(x3) - (c1 * c1 / p.L) * x1 * math.cos(x3))


def asymptotic_pendulum_derivative(x3, x4, p: CraneParams) -> tuple:
    return (x4, -(p.g / p.L) * math.sin(x3))


def pendulum_energy(x3, x4, p: CraneParams) -> float:
    return 0.5 * x4 * x4 + p.g / p.L * (1.0 - math.cos(x3))


def surface_S_x4(x1, x2, x3, c1, c2, alpha1) -> float:
    """Angular rate implied by ``S = alpha1 (x2 + c1 x1) + x4 + c2 x3 = 0``."""
    return -c2 * x3 - alpha1 * (x2 + c1 * x1)


def surface_S_equivalent_control(x1, x2, x3, p: CraneParams, c1, c2, alpha1) -> float:
    """Control holding ``dS/dt = 0`` on ``S = 0`` (with unit weight on s2)."""
    x4 = surface_S_x4(x1, x2, x3, c1, c2, alpha1)
    f1, b1, f2, b2 = crane_terms((x1, x2, x3, x4), p)
    den = b2 + alpha1 * b1
    if abs(den) < GAIN_TOL:
        raise SingularGain("b2+alpha1*b1", den)
    num = (
        alpha1 * f1
        + f2
        - c1 * c2 * alpha1 * x1
        + alpha1 * (c1 - c2) * x2
        - c2 * c2 * x3
    )
    return -num / den


def reduced_S_dynamics(x1, x2, x3, p: CraneParams, c1, c2, alpha1) -> tuple:
    """Third-order crane dynamics restricted to ``S = dS/dt = 0``."""
    x4 = surface_S_x4(x1, x2, x3, c1, c2, alpha1)
    u = surface_S_equivalent_control(x1, x2, x3, p, c1, c2, alpha1)
    f1, b1, _, _ = crane_terms((x1, x2, x3, x4), p)
    return (x2, f1 + b1 * u, x4)
