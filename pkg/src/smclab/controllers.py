"""Sliding-mode control laws for the crane and a linear state-feedback baseline.

The IHSSMC (incremental hierarchical) and AHSSMC (aggregated hierarchical)
laws follow the reference simulation code line by line, including its
``sign(0) = 0`` convention. Controllers act on the *raw* state; the target
position ``x_d`` is subtracted inside, as in the reference code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import SingularGain
from .plants import (
    GAIN_TOL,
    CraneParams,
    PlantTerms,
    crane_terms,
    surface_S_equivalent_control,
)


def sign(v: float) -> float:
    """Sign with ``sign(0) = 0``."""
    if v > 0:
        return 1.0
    if v < 0:
        return -1.0
    return 0.0


def switch(v: float, boundary_layer: float = 0.0) -> float:
    """``sign(v)``, or the saturation ``clip(v / boundary_layer, -1, 1)`` if a layer is set."""
    if boundary_layer > 0:
        return max(-1.0, min(1.0, v / boundary_layer))
    return sign(v)


@dataclass(frozen=True)
class IhssmcParams:
    C1: float = 1.4
    C2: float = 0.2
    C3: float = 0.1
    eta: float = 1.0
    k: float = 0.1
    x_d: float = 2.0
    boundary_layer: float = 0.0

    def __post_init__(self):
        if not (self.C1 > 0 and self.C2 >= 0 and self.C3 >= 0 and self.eta >= 0 and self.k >= 0):
            raise ValueError(f"invalid IHSSMC gains: {self}")


@dataclass(frozen=True)
class AhssmcParams:
    # c2 may be negative (the corrected design gives one)
    c1: float = 0.8
    c2: float = 35.0
    alpha1: float = 10.0
    alpha2: float = 1.0
    eta: float = 3.5
    k: float = 6.0
    x_d: float = 2.0
    boundary_layer: float = 0.0

    def __post_init__(self):
        if self.alpha1 == 0 and self.alpha2 == 0:
            raise ValueError("alpha1 and alpha2 cannot both be zero")
        if self.eta < 0 or self.k < 0:
            raise ValueError(f"invalid AHSSMC reaching gains: {self}")


class IhssmcSurfaces(NamedTuple):
    s1: float
    s2: float
    s3: float
    c2_eff: float
    c3_eff: float

    @property
    def top(self):
        return self.s3


class AhssmcSurfaces(NamedTuple):
    s1: float
    s2: float
    S: float

    @property
    def top(self):
        return self.S


def ihssmc_surfaces(state: Sequence[float], p: IhssmcParams) -> IhssmcSurfaces:
    x1, x2, x3, x4 = state
    s1 = x2 + p.C1 * (x1 - p.x_d)
    c2 = p.C2 * sign(x3 * s1)
    s2 = s1 + c2 * x3
    c3 = p.C3 * sign(x4 * s2)
    s3 = s2 + c3 * x4
    return IhssmcSurfaces(s1, s2, s3, c2, c3)


def ihssmc_control(state: Sequence[float], p: IhssmcParams, terms: PlantTerms) -> float:
    f1, b1, f2, b2 = terms
    s = ihssmc_surfaces(state, p)
    c2, c3 = s.c2_eff, s.c3_eff
    den = c3 * b2 + b1
    if abs(den) < GAIN_TOL:
        raise SingularGain("c3*b2+b1", den)
    ueq = -(c3 * f2 + c2 * state[3] + f1 + p.C1 * state[1]) / den
    usw = -(p.eta * switch(s.s3, p.boundary_layer) + p.k * s.s3) / den
    return ueq + usw


def ahssmc_surfaces(state: Sequence[float], p: AhssmcParams) -> AhssmcSurfaces:
    x1, x2, x3, x4 = state
    s1 = x2 + p.c1 * (x1 - p.x_d)
    s2 = x4 + p.c2 * x3
    return AhssmcSurfaces(s1, s2, p.alpha1 * s1 + p.alpha2 * s2)


def ahssmc_equivalent_terms(state: Sequence[float], p: AhssmcParams, terms: PlantTerms) -> tuple:
    """Per-subsystem equivalent controls ``(ueq1, ueq2)``; they do not depend on the weights."""
    f1, b1, f2, b2 = terms
    if abs(b1) < GAIN_TOL:
        raise SingularGain("b1", b1)
    if abs(b2) < GAIN_TOL:
        raise SingularGain("b2", b2)
    return -(f1 + p.c1 * state[1]) / b1, -(f2 + p.c2 * state[3]) / b2


def ahssmc_control(state: Sequence[float], p: AhssmcParams, terms: PlantTerms) -> float:
    _, b1, _, b2 = terms
    ueq1, ueq2 = ahssmc_equivalent_terms(state, p, terms)
    den = p.alpha1 * b1 + p.alpha2 * b2
    if abs(den) < GAIN_TOL:
        raise SingularGain("alpha1*b1+alpha2*b2", den)
    S = ahssmc_surfaces(state, p).S
    usw = -(
        p.alpha1 * b1 * ueq2
        + p.alpha2 * b2 * ueq1
        + p.eta * switch(S, p.boundary_layer)
        + p.k * S
    ) / den
    return ueq1 + ueq2 + usw


def equivalent_control_s1(state: Sequence[float], c1: float, p: CraneParams) -> float:
    """Control keeping the cart on ``x2 + c1 x1 = 0``; ``state`` in error coordinates.

    ``x2`` is replaced by ``-c1 x1`` before evaluating the plant terms.
    """
    x1, _, x3, x4 = state
    f1, b1, _, _ = crane_terms((x1, -c1 * x1, x3, x4), p)
    return (c1 * c1 * x1 - f1) / b1


def equivalent_control_S(state: Sequence[float], p: AhssmcParams, cp: CraneParams) -> float:
    """Equivalent control on ``S = 0`` with x4 eliminated; ``state`` in error coordinates.

    The weights are normalised so that ``alpha2 = 1``.
    """
    x1, x2, x3 = state[0], state[1], state[2]
    return surface_S_equivalent_control(x1, x2, x3, cp, p.c1, p.c2, p.alpha1 / p.alpha2)


def linear_feedback(state: Sequence[float], K, x_d: float = 2.0) -> float:
    K = np.asarray(K, dtype=float).ravel()
    err = (state[0] - x_d, state[1], state[2], state[3])
    return -float(sum(k * e for k, e in zip(K, err)))
