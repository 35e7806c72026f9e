"""Scenario runner: closed-loop assembly, builtin figure scenarios and metrics.

Trajectories hold the *raw* integrator state, exactly like the reference
simulation code: for the crane, ``x1`` is the cart position and the target
``x_d`` is subtracted only where an error is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np

from . import controllers as ctl
from . import plants
from .errors import ConfigError, SingularGain, ZeroCoupling
from .linalg import (
    LinearizationConstants,
    ackermann_gain,
    crane_linearization,
    eigenvalues,
    hurwitz_check,
    sliding_char_coeffs,
    sliding_linearization,
    solve_surface_params,
)
from .ode import IntegratorConfig, Status, Trajectory, integrate

PLANTS = ("crane", "coupled_pair", "degenerate_pendubot", "pendulum")
CONTROLLERS = ("ihssmc", "ahssmc", "linear", "open_loop")
METRICS = (
    "final_error",
    "s1_settle_time",
    "swing_amplitude_tail",
    "swing_decay_ratio",
    "divergence_time",
    "surface_max_after_crossing",
    "energy_drift",
    "offset_drift",
    "min_chain_separation",
)
SETTLE_BAND = 1e-2
CRANE_POLES = (-3.0, -2.8, -2.6, -2.4)

U_PROFILES: dict = {
    "zero": lambda t: 0.0,
    "sin": math.sin,
    "cos": math.cos,
    "step": lambda t: 1.0,
    "square": lambda t: 1.0 if math.sin(2 * t) >= 0 else -1.0,
}


@dataclass(frozen=True)
class Scenario:
    """One closed- or open-loop run.

    ``gains`` is an :class:`IhssmcParams`, :class:`AhssmcParams`, a 4-tuple of
    feedback gains (``controller="linear"``) or ``None``. ``coupling`` is the
    constant ``k`` of the coupled-pair plant and ``u_profile`` names the
    open-loop input.
    """

    name: str
    plant: str = "crane"
    crane: plants.CraneParams = plants.CraneParams()
    controller: str = "open_loop"
    gains: Union[ctl.IhssmcParams, ctl.AhssmcParams, tuple, None] = None
    u_profile: str = "zero"
    coupling: float = -1.0
    y0: tuple = (0.0, 0.0, 0.0, 0.0)
    integrator: IntegratorConfig = IntegratorConfig()
    metrics: tuple = ("final_error",)
    description: str = ""


@dataclass
class MetricsReport:
    requested: tuple
    final_error: Optional[float] = None
    s1_settle_time: Optional[float] = None
    swing_amplitude_tail: Optional[float] = None
    swing_decay_ratio: Optional[float] = None
    divergence_time: Optional[float] = None
    surface_max_after_crossing: Optional[float] = None
    energy_drift: Optional[float] = None
    offset_drift: Optional[float] = None
    min_chain_separation: Optional[float] = None
    notes: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {name: getattr(self, name) for name in self.requested}
        out.update(self.notes)
        return out


def validate(s: Scenario) -> None:
    if s.plant not in PLANTS:
        raise ConfigError(f"unknown plant {s.plant!r}; choose from {PLANTS}")
    if s.controller not in CONTROLLERS:
        raise ConfigError(f"unknown controller {s.controller!r}; choose from {CONTROLLERS}")
    expected = {"ihssmc": ctl.IhssmcParams, "ahssmc": ctl.AhssmcParams}
    if s.controller in expected and not isinstance(s.gains, expected[s.controller]):
        raise ConfigError(f"{s.controller} needs {expected[s.controller].__name__} gains")
    if s.controller == "linear" and (s.gains is None or len(s.gains) != 4):
        raise ConfigError("linear controller needs four gains")
    if s.controller == "open_loop" and s.u_profile not in U_PROFILES:
        raise ConfigError(f"unknown u profile {s.u_profile!r}; choose from {tuple(U_PROFILES)}")
    if s.plant == "pendulum" and s.controller != "open_loop":
        raise ConfigError("the pendulum reduced model takes no control input")
    if s.plant == "coupled_pair" and s.coupling == 0:
        raise ZeroCoupling("coupling constant k must be nonzero")
    if len(s.y0) != 4:
        raise ConfigError("y0 needs four components")
    unknown = set(s.metrics) - set(METRICS)
    if unknown:
        raise ConfigError(f"unknown metrics {sorted(unknown)}")


def _terms_fn(s: Scenario) -> Callable:
    """State -> PlantTerms for the scenario's plant."""
    if s.plant == "crane":
        cp = s.crane
        return lambda y: plants.crane_terms(y, cp)
    if s.plant == "degenerate_pendubot":
        return lambda y: plants.PlantTerms(0.0, 1.0, 0.0, -1.0)
    if s.plant == "coupled_pair":
        k = s.coupling
        # unit base chain: f2 = 0, b2 = -1; k = -1 is the degenerate Pendubot
        return lambda y: plants.PlantTerms(0.0, -k, 0.0, -1.0)
    return lambda y: plants.PlantTerms(0.0, 0.0, 0.0, 0.0)


def _control_fn(s: Scenario) -> Callable:
    """(t, y, terms) -> u."""
    if s.controller == "ihssmc":
        p = s.gains
        return lambda t, y, terms: ctl.ihssmc_control(y, p, terms)
    if s.controller == "ahssmc":
        p = s.gains
        return lambda t, y, terms: ctl.ahssmc_control(y, p, terms)
    if s.controller == "linear":
        K = tuple(float(k) for k in s.gains)
        x_d = s.crane.x_d
        return lambda t, y, terms: -(
            K[0] * (y[0] - x_d) + K[1] * y[1] + K[2] * y[2] + K[3] * y[3]
        )
    profile = U_PROFILES[s.u_profile]
    return lambda t, y, terms: profile(t)


def _surface_fn(s: Scenario) -> Optional[Callable]:
    if s.controller == "ihssmc":
        return lambda y: ctl.ihssmc_surfaces(y, s.gains)
    if s.controller == "ahssmc":
        return lambda y: ctl.ahssmc_surfaces(y, s.gains)
    return None


def closed_loop_rhs(s: Scenario) -> Callable:
    validate(s)
    if s.plant == "pendulum":
        cp = s.crane

        def rhs(t, y):
            d3, d4 = plants.asymptotic_pendulum_derivative(y[2], y[3], cp)
            return (0.0, 0.0, d3, d4)

        return rhs

    terms_of = _terms_fn(s)
    control = _control_fn(s)
    if s.plant == "crane":
        cp = s.crane

        def rhs(t, y):
            terms = plants.crane_terms(y, cp)
            u = control(t, y, terms)
            return (y[1], terms.f1 + terms.b1 * u, y[3], terms.f2 + terms.b2 * u)

        return rhs

    if s.plant == "degenerate_pendubot":

        def rhs(t, y):
            return plants.degenerate_pendubot_derivative(y, control(t, y, terms_of(y)))

        return rhs

    k = s.coupling
    base = lambda y: (0.0, -1.0)  # noqa: E731

    def rhs(t, y):
        return plants.coupled_pair_derivative(y, control(t, y, terms_of(y)), k, base)

    return rhs


def target(s: Scenario) -> np.ndarray:
    x_d = s.crane.x_d if s.plant == "crane" else 0.0
    return np.array([x_d, 0.0, 0.0, 0.0])


def _record_signals(s: Scenario, traj: Trajectory) -> None:
    """Recompute the (stateless) control and surfaces at every recorded sample."""
    if s.plant == "pendulum":
        return
    terms_of = _terms_fn(s)
    control = _control_fn(s)
    surf = _surface_fn(s)
    us = np.empty(len(traj))
    ss = np.full((len(traj), 3), np.nan) if surf else None
    for i, (t, y) in enumerate(zip(traj.times, traj.states)):
        y = tuple(float(v) for v in y)
        try:
            us[i] = control(t, y, terms_of(y))
        except SingularGain:
            us[i] = np.nan
        if surf:
            sv = surf(y)
            ss[i] = (sv.s1, sv.s2, sv.top)
    traj.controls = us
    traj.surfaces = ss


def compute_metrics(s: Scenario, traj: Trajectory) -> MetricsReport:
    rep = MetricsReport(requested=tuple(s.metrics))
    t = traj.times
    X = traj.states
    want = set(s.metrics)
    if "final_error" in want:
        rep.final_error = float(np.max(np.abs(X[-1] - target(s))))
    if "s1_settle_time" in want and traj.surfaces is not None:
        rep.s1_settle_time = settle_time(t, traj.surfaces[:, 0], SETTLE_BAND)
    t_end = s.integrator.t_end
    if "swing_amplitude_tail" in want:
        tail = t >= 0.8 * t_end
        rep.swing_amplitude_tail = float(np.max(np.abs(X[tail, 2]))) if tail.any() else None
    if "swing_decay_ratio" in want:
        rep.swing_decay_ratio = swing_decay_ratio(t, X[:, 2], t_end)
    if "divergence_time" in want:
        rep.divergence_time = traj.status_time if traj.status is Status.DIVERGED else None
    if "surface_max_after_crossing" in want and traj.surfaces is not None:
        rep.surface_max_after_crossing = max_after_first_crossing(traj.surfaces[:, 2])
    if "energy_drift" in want:
        V = np.array([plants.pendulum_energy(a, b, s.crane) for a, b in X[:, 2:]])
        rep.energy_drift = float(np.max(np.abs(V - V[0])))
    if "offset_drift" in want:
        k = -1.0 if s.plant == "degenerate_pendubot" else s.coupling
        off = X[:, 0] - k * X[:, 2]
        rep.offset_drift = float(np.max(np.abs(off - off[0])))
    if "min_chain_separation" in want:
        rep.min_chain_separation = float(np.min(np.maximum(np.abs(X[:, 0]), np.abs(X[:, 2]))))
    rep.notes["status"] = traj.status.value
    return rep


def settle_time(t, signal, band) -> Optional[float]:
    """First time after which ``|signal|`` stays within ``band`` for the rest of the record."""
    outside = np.flatnonzero(np.abs(signal) > band)
    if len(outside) == 0:
        return float(t[0])
    i = outside[-1] + 1
    return float(t[i]) if i < len(t) else None


def swing_decay_ratio(t, x3, t_end) -> Optional[float]:
    """``max|x3|`` over the last fifth of the run divided by ``max|x3|`` over [0.2, 0.4] of it.

    For the 10 s horizon these are the windows [8, 10] and [2, 4] s.
    """
    late = np.abs(x3[t >= 0.8 * t_end])
    early = np.abs(x3[(t >= 0.2 * t_end) & (t <= 0.4 * t_end)])
    if len(late) == 0 or len(early) == 0 or early.max() == 0:
        return None
    return float(late.max() / early.max())


def max_after_first_crossing(S) -> Optional[float]:
    """``max|S|`` from the first sign change (or exact zero) of ``S`` onward."""
    S = np.asarray(S)
    sgn = np.sign(S)
    idx = np.flatnonzero((sgn[1:] != sgn[:-1]) | (sgn[1:] == 0))
    if len(idx) == 0:
        return None
    return float(np.max(np.abs(S[idx[0] + 1 :])))


def run_scenario(s: Scenario) -> tuple:
    """Integrate a scenario and compute its metrics; returns ``(Trajectory, MetricsReport)``."""
    rhs = closed_loop_rhs(s)
    traj = integrate(rhs, s.y0, s.integrator)
    _record_signals(s, traj)
    traj.extra["scenario"] = s.name
    return traj, compute_metrics(s, traj)


# -- builtin scenarios -------------------------------------------------------

FIG_METRICS = (
    "final_error",
    "s1_settle_time",
    "swing_amplitude_tail",
    "swing_decay_ratio",
    "divergence_time",
    "surface_max_after_crossing",
)


def crane_pole_placement_gain(cp: plants.CraneParams = plants.CraneParams()) -> tuple:
    return tuple(float(k) for k in ackermann_gain(crane_linearization(cp), CRANE_POLES))


def corrected_ahssmc_params(d=(12.0, 47.0, 60.0), cp=plants.CraneParams()) -> ctl.AhssmcParams:
    design = solve_surface_params(LinearizationConstants.from_crane(cp), *d)
    return ctl.AhssmcParams(c1=design.c1, c2=design.c2, alpha1=design.alpha1, alpha2=1.0, eta=3.5, k=6.0)


def builtin_scenarios() -> dict:
    cp = plants.CraneParams()
    scen = [
        Scenario(
            "fig_b",
            controller="ihssmc",
            gains=ctl.IhssmcParams(),
            metrics=FIG_METRICS,
            description="crane under IHSSMC, original gains: cart settles, swing persists",
        ),
        Scenario(
            "fig_c",
            controller="linear",
            gains=crane_pole_placement_gain(cp),
            metrics=FIG_METRICS,
            description="crane under pole-placement feedback: all states converge",
        ),
        Scenario(
            "fig_d",
            controller="ahssmc",
            gains=ctl.AhssmcParams(),
            integrator=IntegratorConfig(diverge_norm=1e3),
            metrics=FIG_METRICS,
            description="crane under AHSSMC, original gains: S reaches zero, states diverge",
        ),
        Scenario(
            "fig_e",
            controller="ahssmc",
            gains=corrected_ahssmc_params(cp=cp),
            metrics=FIG_METRICS,
            description="crane under AHSSMC with Hurwitz sliding dynamics: all states converge",
        ),
        Scenario(
            "pendulum",
            plant="pendulum",
            y0=(0.0, 0.0, 0.5, 0.0),
            integrator=IntegratorConfig(rtol=1e-9, atol=1e-12),
            metrics=("energy_drift",),
            description="limiting swing dynamics on s1 = 0: energy is conserved",
        ),
        Scenario(
            "counterexample",
            plant="coupled_pair",
            coupling=-1.0,
            u_profile="sin",
            y0=(1.0, 0.0, 0.0, 0.0),
            integrator=IntegratorConfig(rtol=1e-9, atol=1e-12),
            metrics=("offset_drift", "min_chain_separation"),
            description="degenerate Pendubot (k = -1) under u = sin t: x1 + x3 stays 1",
        ),
    ]
    return {s.name: s for s in scen}


def layout_for(s: Scenario) -> str:
    return "six" if s.controller == "ahssmc" else "four"


def run_fig_e(d=(12.0, 47.0, 60.0), params: Optional[ctl.AhssmcParams] = None) -> tuple:
    """Corrected-surface AHSSMC run with an eigenvalue precheck in ``metrics.notes``.

    Passing ``params`` replaces the designed surface (e.g. the original gains).
    """
    cp = plants.CraneParams()
    lc = LinearizationConstants.from_crane(cp)
    p = params if params is not None else corrected_ahssmc_params(d, cp)
    A2 = sliding_linearization(lc, p.c1, p.c2, p.alpha1 / p.alpha2)
    lam = eigenvalues(A2)
    coeffs = sliding_char_coeffs(lc, p.c1, p.c2, p.alpha1 / p.alpha2)
    s = replace(
        builtin_scenarios()["fig_e"],
        gains=p,
        integrator=IntegratorConfig(diverge_norm=1e3),
        metrics=FIG_METRICS,
    )
    traj, rep = run_scenario(s)
    rep.notes["sliding_eigenvalues"] = [[z.real, z.imag] for z in lam]
    rep.notes["sliding_hurwitz"] = hurwitz_check((1.0, *coeffs))
    return traj, rep


@dataclass
class CounterexampleReport:
    k: float
    u_profile: str
    offset_drift: float
    min_chain_separation: float
    status: str
    trajectory: Trajectory = field(repr=False)

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "u_profile": self.u_profile,
            "offset_drift": self.offset_drift,
            "min_chain_separation": self.min_chain_separation,
            "status": self.status,
        }


def run_counterexample(
    k: float,
    y0=(1.0, 0.0, 0.0, 0.0),
    u_profile: str = "sin",
    t_end: float = 10.0,
    cfg: Optional[IntegratorConfig] = None,
) -> CounterexampleReport:
    """Drive the coupled pair ``f1 = k f2, b1 = k b2`` and measure the conserved offset.

    ``u_profile`` is an open-loop signal name or ``"ihssmc"`` / ``"ahssmc"``
    to close the loop with the sliding-mode laws (target at the origin).
    """
    if k == 0:
        raise ZeroCoupling("coupling constant k must be nonzero")
    if cfg is None:
        closed = u_profile in ("ihssmc", "ahssmc")
        # switching laws chatter; tight tolerances would only shrink the steps
        cfg = IntegratorConfig(t_end=t_end) if closed else IntegratorConfig(rtol=1e-9, atol=1e-12, t_end=t_end)
    base = dict(
        name=f"counterexample_k{k:g}_{u_profile}",
        plant="coupled_pair",
        coupling=float(k),
        y0=tuple(float(v) for v in y0),
        integrator=cfg,
        metrics=("offset_drift", "min_chain_separation"),
    )
    if u_profile == "ihssmc":
        s = Scenario(controller="ihssmc", gains=ctl.IhssmcParams(x_d=0.0), **base)
    elif u_profile == "ahssmc":
        s = Scenario(controller="ahssmc", gains=ctl.AhssmcParams(x_d=0.0), **base)
    else:
        s = Scenario(controller="open_loop", u_profile=u_profile, **base)
    traj, rep = run_scenario(s)
    return CounterexampleReport(
        k=float(k),
        u_profile=u_profile,
        offset_drift=rep.offset_drift,
        min_chain_separation=rep.min_chain_separation,
        status=traj.status.value,
        trajectory=traj,
    )
