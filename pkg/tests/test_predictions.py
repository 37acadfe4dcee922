import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cslkit import constants as K
from cslkit.core import ModelParams, ValidationError
from cslkit.predictions import (DiscSpec, SpeciesCensus, com_vanishing_demo, disc_diffusion,
                                energy_gain_rate, excitation_rate, fractional_energy_gain,
                                interference_decay_bound, sphere_collapse_rate)

GRW = ModelParams()


def test_energy_gain_examples():
    frac = fractional_energy_gain(K.NUCLEON_MASS, GRW, K.AGE_OF_UNIVERSE_YR)
    assert frac == pytest.approx(1.3e-16, rel=0.2)
    census = SpeciesCensus.single(K.NUCLEON_MASS)
    assert energy_gain_rate(census, ModelParams(lam=0.0))[0] == 0.0
    r1, _ = energy_gain_rate(SpeciesCensus.single(K.NUCLEON_MASS, alpha=1.0), GRW)
    r2, _ = energy_gain_rate(SpeciesCensus.single(K.NUCLEON_MASS, alpha=2.0), GRW)
    assert r2 == pytest.approx(4 * r1, rel=1e-15)


def test_census_sums_species():
    both = SpeciesCensus(((1.0, 2.0, 1e-24), (0.5, 3.0, 2e-24)))
    r, e = energy_gain_rate(both, GRW, duration=10.0)
    a, _ = energy_gain_rate(SpeciesCensus(((1.0, 2.0, 1e-24),)), GRW)
    b, _ = energy_gain_rate(SpeciesCensus(((0.5, 3.0, 2e-24),)), GRW)
    assert r == pytest.approx(a + b, rel=1e-15)
    assert e == pytest.approx(10 * r, rel=1e-15)
    with pytest.raises(ValidationError):
        SpeciesCensus(((1.0, -1.0, 1e-24),))


def test_excitation_and_com_demo():
    assert excitation_rate(GRW, 0.0) == 0.0
    assert excitation_rate(ModelParams(lam=2.0, a=1.0), 3.0) == pytest.approx(9.0)
    generic = com_vanishing_demo((1.0, 3.0), (1.0, 1.0))
    prop = com_vanishing_demo((1.0, 3.0), (1.0, 3.0))
    assert generic > 1e-3
    assert prop < 1e-10 * generic
    with pytest.raises(ValidationError):
        com_vanishing_demo(omega_cm=0.5)


def test_interference_bound_examples():
    b = interference_decay_bound(0.05, 720, 0.01)
    assert b.lambda_max == pytest.approx(3.86e-7, rel=2e-3)
    assert b.inverse_lambda_min == pytest.approx(2.59e6, rel=2e-3)
    assert b.inverse_lambda_min > 1e6
    b2 = interference_decay_bound(0.05, 1440, 0.01)
    assert b.lambda_max / b2.lambda_max == pytest.approx(4.0, rel=1e-14)
    b3 = interference_decay_bound(0.05, 720, 1.0)
    assert b3.lambda_max == pytest.approx(1 / (0.05 * 720 ** 2), rel=1e-15)


def test_sphere_examples():
    r, expo = sphere_collapse_rate(1e-16, 6e8, 2.5e12, 1e-3)
    assert r == pytest.approx(1.5e5, rel=1e-14)
    assert expo == pytest.approx(150.0, rel=1e-14)
    assert sphere_collapse_rate(1e-16, 0, 2.5e12, 1e-3)[0] == 0.0
    assert sphere_collapse_rate(1e-16, 6e8, 0, 1e-3)[0] == 0.0


def test_disc_examples():
    d = disc_diffusion(DiscSpec(), GRW, 70.0)
    assert 35.0 <= d.time_to_2pi <= 140.0
    assert d.ratio >= 100
    assert d.amplification == pytest.approx((d.mass / GRW.m0) ** 2)
    d2 = disc_diffusion(DiscSpec(), GRW, 140.0)
    assert d2.delta_theta_qm == pytest.approx(2 * d.delta_theta_qm, rel=1e-15)
    at = disc_diffusion(DiscSpec(), GRW, d.time_to_2pi)
    assert at.delta_theta_csl == pytest.approx(2 * math.pi, rel=1e-12)
    bare = disc_diffusion(DiscSpec(amplification=1.0), GRW, 70.0)
    assert bare.time_to_2pi > 1e6


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 1e6))
def test_lambda_scaling(c):
    scaled = ModelParams(lam=GRW.lam * c)
    census = SpeciesCensus.single(K.PROTON_MASS)
    assert energy_gain_rate(census, scaled)[0] == pytest.approx(c * energy_gain_rate(census, GRW)[0], rel=1e-12)
    assert excitation_rate(scaled, 1e-8) == pytest.approx(c * excitation_rate(GRW, 1e-8), rel=1e-12)
    assert sphere_collapse_rate(scaled.lam, 6e8, 2.5e12, 1e-3)[0] == pytest.approx(
        c * sphere_collapse_rate(GRW.lam, 6e8, 2.5e12, 1e-3)[0], rel=1e-12)
    base = interference_decay_bound(0.05, 720, 0.01)
    # the decay exponent is lambda * t n^2
    assert scaled.lam * base.decay_exponent_per_lambda == pytest.approx(
        c * GRW.lam * base.decay_exponent_per_lambda, rel=1e-12)
    disc = DiscSpec(amplification=5.0)
    assert disc_diffusion(disc, scaled, 10.0).delta_theta_csl == pytest.approx(
        math.sqrt(c) * disc_diffusion(disc, GRW, 10.0).delta_theta_csl, rel=1e-12)


def _si_params(p: ModelParams) -> ModelParams:
    return ModelParams(lam=p.lam, a=p.a * K.CM_TO_M, m0=p.m0 * K.G_TO_KG, dt=p.dt)


HBAR_SI = K.HBAR * K.ERG_TO_J   # J s


def test_si_audit():
    m = K.PROTON_MASS
    cgs, _ = energy_gain_rate(SpeciesCensus.single(m), GRW)
    si, _ = energy_gain_rate(SpeciesCensus.single(m * K.G_TO_KG), _si_params(GRW), hbar=HBAR_SI)
    assert si / K.ERG_TO_J == pytest.approx(cgs, rel=1e-10)

    x = 3e-9
    assert excitation_rate(_si_params(GRW), x * K.CM_TO_M) == pytest.approx(
        excitation_rate(GRW, x), rel=1e-10)

    disc_cgs = DiscSpec()
    disc_si = DiscSpec(disc_cgs.radius * K.CM_TO_M, disc_cgs.thickness * K.CM_TO_M,
                       disc_cgs.density * K.G_TO_KG / K.CM_TO_M ** 3)
    a = disc_diffusion(disc_cgs, GRW, 70.0)
    b = disc_diffusion(disc_si, _si_params(GRW), 70.0, hbar=HBAR_SI)
    assert b.mass / K.G_TO_KG == pytest.approx(a.mass, rel=1e-10)
    for field in ("delta_theta_csl", "delta_theta_qm", "time_to_2pi", "amplification"):
        assert getattr(b, field) == pytest.approx(getattr(a, field), rel=1e-10)


def test_documented_constants():
    assert K.GE_ELECTRON_RATIO_BOUND == 13.0
    assert K.SNO_NEUTRON_PROTON_SPREAD == 4e-3
    assert (K.EQUILIBRIUM_PACKET_WIDTH, K.EQUILIBRIUM_PACKET_TIME) == (1e-8, 0.6)


def test_input_validation():
    with pytest.raises(ValidationError):
        interference_decay_bound(0, 720, 0.01)
    with pytest.raises(ValidationError):
        sphere_collapse_rate(-1, 1, 1, 1)
    with pytest.raises(ValidationError):
        DiscSpec(radius=0)
    with pytest.raises(ValidationError):
        disc_diffusion(DiscSpec(), GRW, 0.0)
