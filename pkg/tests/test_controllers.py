import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smclab import controllers as ctl
from smclab import plants
from smclab.errors import SingularGain
from smclab.ode import IntegratorConfig, integrate
from smclab.plants import CraneParams

CP = CraneParams()
IP = ctl.IhssmcParams()
AP = ctl.AhssmcParams()
finite = st.floats(-50, 50, allow_nan=False)


def test_sign_convention():
    assert ctl.sign(0.0) == 0.0
    assert ctl.sign(-0.0) == 0.0
    assert ctl.sign(3.0) == 1.0 and ctl.sign(-1e-300) == -1.0
    assert ctl.switch(0.05, 0.1) == pytest.approx(0.5)
    assert ctl.switch(5, 0.1) == 1.0


def test_ihssmc_surfaces_at_target():
    s = ctl.ihssmc_surfaces((2.0, 0, 0, 0), IP)
    assert s == (0, 0, 0, 0, 0)


def test_ihssmc_surfaces_hand_values():
    # error x1 = 1 -> raw x1 = 3
    s = ctl.ihssmc_surfaces((3.0, 0.0, 0.5, -0.2), IP)
    assert s.s1 == pytest.approx(1.4)
    assert s.s2 == pytest.approx(1.5)
    assert s.s3 == pytest.approx(1.4 + 0.2 * 0.5 + 0.1 * 0.2)
    assert s.s3 == pytest.approx(1.52)


@settings(max_examples=500, deadline=None)
@given(finite, finite, finite, finite)
def test_surface_collapse_identity(x1, x2, x3, x4):
    s = ctl.ihssmc_surfaces((x1, x2, x3, x4), IP)
    expect = ctl.sign(s.s1) * (abs(s.s1) + IP.C2 * abs(x3) + IP.C3 * abs(x4))
    assert s.s3 == pytest.approx(expect, rel=1e-12, abs=1e-12)
    assert (s.s3 == 0) == (s.s1 == 0)
    assert abs(s.s3) >= abs(s.s1)
    if s.s1 != 0:
        assert ctl.sign(s.s3) == ctl.sign(s.s1)


def test_ihssmc_control_zero_error():
    state = (2.0, 0, 0, 0)
    assert ctl.ihssmc_control(state, IP, plants.crane_terms(state, CP)) == 0.0


def test_ihssmc_control_initial_value():
    state = (0.0, 0.0, 0.0, 0.0)
    # s1 = -2.8, den = b1 = 1, u = -(1*(-1) + 0.1*(-2.8)) = 1.28
    assert ctl.ihssmc_control(state, IP, plants.crane_terms(state, CP)) == pytest.approx(1.28)


def test_ihssmc_singular_denominator():
    # c3*b2 + b1 = 0 needs b2 = -b1/c3 = -10 b1; unreachable for the crane, so use synthetic terms
    state = (3.0, 0.0, 0.5, 0.4)
    s = ctl.ihssmc_surfaces(state, IP)
    assert s.c3_eff == pytest.approx(0.1)
    b1 = 1.0
    eps = 1e-11
    terms = plants.PlantTerms(0.0, b1, 0.0, (-b1 + eps) / s.c3_eff)
    with pytest.raises(SingularGain):
        ctl.ihssmc_control(state, IP, terms)
    ok = plants.PlantTerms(0.0, b1, 0.0, (-b1 + 1e-6) / s.c3_eff)
    assert math.isfinite(ctl.ihssmc_control(state, IP, ok))


def test_ahssmc_surfaces():
    assert ctl.ahssmc_surfaces((2.0, 0, 0, 0), AP).S == 0
    s = ctl.ahssmc_surfaces((0, 0, 0, 0), AP)
    assert (s.s1, s.s2, s.S) == pytest.approx((-1.6, 0.0, -16.0))


@settings(max_examples=200, deadline=None)
@given(finite, finite, finite)
def test_ahssmc_zero_surface_relation(x1, x2, x3):
    x4 = plants.surface_S_x4(x1 - AP.x_d, x2, x3, AP.c1, AP.c2, AP.alpha1)
    S = ctl.ahssmc_surfaces((x1, x2, x3, x4), AP).S
    assert abs(S) <= 1e-12 * max(1.0, abs(x1), abs(x2), abs(x3), abs(x4)) * AP.alpha1 * AP.c2


def test_ahssmc_control_zero_error():
    p = ctl.AhssmcParams(eta=0.0, k=0.0)
    state = (2.0, 0, 0, 0)
    assert ctl.ahssmc_control(state, p, plants.crane_terms(state, CP)) == 0.0


def test_ahssmc_control_initial_value():
    state = (0.0, 0.0, 0.0, 0.0)
    terms = plants.crane_terms(state, CP)
    ueq1, ueq2 = ctl.ahssmc_equivalent_terms(state, AP, terms)
    assert ueq1 == 0 and ueq2 == 0
    # usw = -(3.5*(-1) + 6*(-16)) / (10 - 1/0.305) = 99.5 / 6.7213115
    assert ctl.ahssmc_control(state, AP, terms) == pytest.approx(14.803659, abs=1e-6)


def test_ahssmc_singular_b2():
    state = (0.0, 0.0, math.pi / 2, 0.0)
    with pytest.raises(SingularGain) as exc:
        ctl.ahssmc_control(state, AP, plants.crane_terms(state, CP))
    assert exc.value.which == "b2"


@settings(max_examples=200, deadline=None)
@given(finite, finite, st.floats(-1.4, 1.4), finite, st.floats(0.1, 20))
def test_ahssmc_weight_scaling(x1, x2, x3, x4, lam):
    state = (x1, x2, x3, x4)
    terms = plants.crane_terms(state, CP)
    scaled = ctl.AhssmcParams(alpha1=AP.alpha1 * lam, alpha2=AP.alpha2 * lam)
    assert ctl.ahssmc_surfaces(state, scaled).S == pytest.approx(
        lam * ctl.ahssmc_surfaces(state, AP).S, rel=1e-9, abs=1e-9
    )
    assert ctl.ahssmc_equivalent_terms(state, scaled, terms) == ctl.ahssmc_equivalent_terms(state, AP, terms)


def test_equivalent_control_s1_values():
    assert ctl.equivalent_control_s1((0, 0, 0, 0), 1.4, CP) == 0
    assert ctl.equivalent_control_s1((1, 0, 0, 0), 1.4, CP) == pytest.approx(1.96)


def test_equivalent_control_s1_holds_surface():
    c1 = 1.4

    def rhs(t, y):
        return plants.crane_derivative(y, ctl.equivalent_control_s1(y, c1, CP), CP)

    y0 = (0.5, -c1 * 0.5, 0.3, 0.0)
    traj = integrate(rhs, y0, IntegratorConfig(rtol=1e-11, atol=1e-13, t_end=3.0))
    s1 = traj.states[:, 1] + c1 * traj.states[:, 0]
    assert abs(s1).max() <= 1e-7


def test_reduced_s1_model_matches_full_system():
    c1 = 1.4

    def full(t, y):
        return plants.crane_derivative(y, ctl.equivalent_control_s1(y, c1, CP), CP)

    def reduced(t, y):
        return (-c1 * y[0], *plants.reduced_s1_dynamics(y[0], y[1], y[2], c1, CP))

    cfg = IntegratorConfig(rtol=1e-11, atol=1e-13, t_end=3.0)
    a = integrate(full, (0.5, -0.7, 0.3, 0.0), cfg)
    b = integrate(reduced, (0.5, 0.3, 0.0), cfg)
    assert a.final_state[2:] == pytest.approx(b.final_state[1:], abs=1e-6)


DESIGN = dict(c1=60 / 47, c2=-21.89636163175303, alpha1=10.363836824696802)


def test_equivalent_control_S_origin():
    p = ctl.AhssmcParams(**DESIGN)
    assert ctl.equivalent_control_S((0, 0, 0, 0), p, CP) == pytest.approx(0.0, abs=1e-15)


def test_equivalent_control_S_against_independent_expansion():
    p = ctl.AhssmcParams(**DESIGN)
    x1, x2, x3 = 0.3, -0.2, 0.05
    c1, c2, a1 = p.c1, p.c2, p.alpha1
    x4 = -c2 * x3 - a1 * (x2 + c1 * x1)
    M, m, L, g = CP.M, CP.m, CP.L, CP.g
    sn, cs = math.sin(x3), math.cos(x3)
    den = M + m * sn**2
    f1 = (m * L * x4**2 * sn + m * g * sn * cs) / den
    f2 = -((m + M) * g * sn + m * L * x4**2 * sn * cs) / (den * L)
    b1, b2 = 1 / den, -cs / (den * L)
    # solve dS/dt = 0 directly from its unexpanded form
    # a1*(f1 + b1 u) + a1*c1*x2 + f2 + b2 u + c2*x4 = 0
    u = -(a1 * f1 + a1 * c1 * x2 + f2 + c2 * x4) / (a1 * b1 + b2)
    assert ctl.equivalent_control_S((x1, x2, x3, 99.0), p, CP) == pytest.approx(u, rel=1e-12)
    r = plants.reduced_S_dynamics(x1, x2, x3, CP, c1, c2, a1)
    assert r == pytest.approx((x2, f1 + b1 * u, x4), rel=1e-12)


def test_equivalent_control_S_alpha2_normalisation():
    p1 = ctl.AhssmcParams(**DESIGN)
    p2 = ctl.AhssmcParams(c1=p1.c1, c2=p1.c2, alpha1=2 * p1.alpha1, alpha2=2.0)
    st_ = (0.1, 0.2, 0.03, 0.0)
    assert ctl.equivalent_control_S(st_, p1, CP) == pytest.approx(ctl.equivalent_control_S(st_, p2, CP))


def test_S_held_along_equivalent_control_trajectory():
    p = ctl.AhssmcParams(**DESIGN)

    def rhs(t, y):
        return plants.crane_derivative(y, ctl.equivalent_control_S(y, p, CP), CP)

    x1, x2, x3 = 0.2, 0.0, 0.0
    y0 = (x1, x2, x3, plants.surface_S_x4(x1, x2, x3, p.c1, p.c2, p.alpha1))
    traj = integrate(rhs, y0, IntegratorConfig(rtol=1e-11, atol=1e-13, t_end=2.0))
    X = traj.states
    S = p.alpha1 * (X[:, 1] + p.c1 * X[:, 0]) + X[:, 3] + p.c2 * X[:, 2]
    assert abs(S).max() <= 1e-7
    dS = np.diff(S) / np.diff(traj.times)
    assert abs(dS).max() <= 1e-5


def test_linear_feedback():
    K = [1.3051, 1.9468, 7.3103, -2.1602]
    assert ctl.linear_feedback((2.0, 0, 0, 0), K, 2.0) == 0
    assert ctl.linear_feedback((0.0, 0, 0, 0), K, 2.0) == pytest.approx(2.6102)
    assert ctl.linear_feedback((1.0, 0, 0, 0), [1, 0, 0, 0], 0.0) == -1


def test_param_validation():
    with pytest.raises(ValueError):
        ctl.IhssmcParams(C1=0)
    with pytest.raises(ValueError):
        ctl.AhssmcParams(alpha1=0, alpha2=0)
    ctl.AhssmcParams(c2=-21.9)
