"""Adaptive Dormand-Prince 5(4) integration with divergence guarding.

The right-hand side may be discontinuous (raw ``sign`` switching); the step
controller simply shrinks the step around switching instants. There is no
event location. Every accepted step is recorded.

The inner loop works on plain Python floats: state dimensions are tiny and
per-call array overhead would dominate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import SingularGain

# Dormand & Prince (1980) tableau, 5th-order solution with 4th-order embedded estimate
C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
E = tuple(b5 - b4 for b5, b4 in zip(B5, B4))

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 5.0


class Status(enum.Enum):
    COMPLETED = "Completed"
    DIVERGED = "Diverged"
    SINGULAR_GAIN = "SingularGain"
    STEP_UNDERFLOW = "StepUnderflow"


@dataclass(frozen=True)
class IntegratorConfig:
    """Solver settings. Defaults mirror the reference code (rtol 1e-3, atol 1e-4, 10 s)."""

    rtol: float = 1e-3
    atol: float = 1e-4
    h_init: float = 1e-3
    h_min: float = 1e-12
    h_max: float = 0.1
    t_end: float = 10.0
    diverge_norm: float = 1e6

    def __post_init__(self):
        if not 0 < self.h_min <= self.h_init <= self.h_max:
            raise ValueError("need 0 < h_min <= h_init <= h_max")
        if self.rtol <= 0 or self.atol <= 0 or self.diverge_norm <= 0:
            raise ValueError("rtol, atol and diverge_norm must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    status: Status = Status.COMPLETED
    status_time: Optional[float] = None
    controls: Optional[np.ndarray] = None
    surfaces: Optional[np.ndarray] = None
    n_rejected: int = 0
    message: str = ""
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def n_accepted(self) -> int:
        """Accepted steps (the initial sample is not a step)."""
        return max(len(self.times) - 1, 0)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def _error_norm(err, y, y_new, atol, rtol):
    """Max-norm of the local error weighted by ``atol + rtol * max(|y|, |y_new|)``."""
    worst = 0.0
    for e, a, b in zip(err, y, y_new):
        r = abs(e) / (atol + rtol * max(abs(a), abs(b)))
        if not r <= worst:
            worst = r
    return worst


def integrate(
    rhs: Callable[[float, Sequence[float]], Sequence[float]],
    y0: Sequence[float],
    cfg: IntegratorConfig = IntegratorConfig(),
    t0: float = 0.0,
) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t0 + cfg.t_end``.

    Never raises for run-time faults: divergence, singular control gains and
    step underflow end the run early and are reported in ``Trajectory.status``.
    """
    y = [float(v) for v in y0]
    n = len(y)
    t = float(t0)
    t_final = t + cfg.t_end
    times = [t]
    states = [tuple(y)]
    rtol, atol = cfg.rtol, cfg.atol
    h = cfg.h_init
    status, status_time, message = Status.COMPLETED, None, ""
    n_rejected = 0

    def finish():
        return Trajectory(
            times=np.array(times),
            states=np.array(states, dtype=float).reshape(len(times), n),
            status=status,
            status_time=status_time,
            n_rejected=n_rejected,
            message=message,
        )

    if cfg.t_end == 0:
        return finish()

    try:
        k1 = [float(v) for v in rhs(t, y)]
    except SingularGain as exc:
        status, status_time, message = Status.SINGULAR_GAIN, t, str(exc)
        return finish()

    while t_final - t > cfg.h_min * 0.5:
        h = min(h, cfg.h_max)
        last = False
        if t + h >= t_final - cfg.h_min * 0.5:
            h = t_final - t
            last = True
        ks = [k1]
        try:
            for i in range(1, 7):
                ai = A[i]
                yi = [
                    y[j] + h * sum(ai[s] * ks[s][j] for s in range(i)) for j in range(n)
                ]
                ks.append([float(v) for v in rhs(t + C[i] * h, yi)])
        except SingularGain as exc:
            status, status_time, message = Status.SINGULAR_GAIN, t, str(exc)
            return finish()
        # stage 7 is evaluated at the 5th-order solution (FSAL)
        y_new = yi
        err = [h * sum(E[s] * ks[s][j] for s in range(7)) for j in range(n)]
        err_norm = _error_norm(err, y, y_new, atol, rtol)

        if not math.isfinite(err_norm) or not all(math.isfinite(v) for v in y_new):
            n_rejected += 1
            h *= FAC_MIN
            if h < cfg.h_min:
                status, status_time = Status.STEP_UNDERFLOW, t
                message = "non-finite state with step below h_min"
                return finish()
            continue

        if err_norm <= 1.0:
            t = t_final if last else t + h
            y = y_new
            k1 = ks[6]
            times.append(t)
            states.append(tuple(y))
            if max(abs(v) for v in y) > cfg.diverge_norm:
                status, status_time = Status.DIVERGED, t
                message = f"state max-norm exceeded {cfg.diverge_norm:g}"
                return finish()
            fac = FAC_MAX if err_norm == 0 else min(FAC_MAX, SAFETY * err_norm ** -0.2)
            h = max(h * fac, cfg.h_min)
        else:
            n_rejected += 1
            h_new = h * max(FAC_MIN, SAFETY * err_norm ** -0.2)
            if h_new < cfg.h_min:
                status, status_time = Status.STEP_UNDERFLOW, t
                message = f"required step {h_new:.3e} below h_min"
                return finish()
            h = h_new
    return finish()


def fixed_step(rhs, y0, h: float, n_steps: int, t0: float = 0.0) -> np.ndarray:
    """Advance ``n_steps`` fixed Dormand-Prince steps (5th-order solution); returns final state."""
    y = [float(v) for v in y0]
    n = len(y)
    t = t0
    for _ in range(n_steps):
        ks = [[float(v) for v in rhs(t, y)]]
        for i in range(1, 7):
            ai = A[i]
            yi = [y[j] + h * sum(ai[s] * ks[s][j] for s in range(i)) for j in range(n)]
            ks.append([float(v) for v in rhs(t + C[i] * h, yi)])
        y = [y[j] + h * sum(B5[s] * ks[s][j] for s in range(6)) for j in range(n)]
        t += h
    return np.array(y)


def harmonic_rhs(t, y):
    return (y[1], -y[0])


def step_order_check(h: float = 0.01, t_end: float = 1.0) -> float:
    """Observed convergence order of the 5th-order solution on ``x'' = -x``.

    Runs fixed steps ``h`` and ``h/2`` from ``(1, 0)`` and compares both with
    ``(cos t, -sin t)``.
    """
    exact = np.array([math.cos(t_end), -math.sin(t_end)])
    n = round(t_end / h)
    e1 = np.max(np.abs(fixed_step(harmonic_rhs, (1.0, 0.0), h, n) - exact))
    e2 = np.max(np.abs(fixed_step(harmonic_rhs, (1.0, 0.0), h / 2, 2 * n) - exact))
    return math.log2(e1 / e2)
