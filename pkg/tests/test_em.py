import math

import numpy as np
import pytest

from leafradar import em
from leafradar.errors import OutOfRange, TotalInternalReflection


def test_refractive_index_real_vacuum():
    assert em.refractive_index_real(em.ComplexPermittivity(1.0, 0.0)) == 1.0


def test_refractive_index_real_lossless():
    assert em.refractive_index_real(em.ComplexPermittivity(9.0, 0.0)) == pytest.approx(3.0)


def test_refractive_index_real_lossy():
    # |eps| = 5, (5+3)/2 = 4, sqrt = 2
    assert em.refractive_index_real(em.ComplexPermittivity(3.0, 4.0)) == pytest.approx(2.0)


def test_refractive_index_real_matches_sqrt_for_lossless():
    for epsr in np.linspace(1.0, 30.0, 40):
        n = em.refractive_index_real(em.ComplexPermittivity(float(epsr), 0.0))
        assert n == pytest.approx(math.sqrt(epsr), rel=1e-12)


def test_complex_index_upper_half_plane():
    rng = np.random.default_rng(0)
    for _ in range(100):
        eps = em.ComplexPermittivity(float(rng.uniform(1, 40)), float(rng.uniform(0, 40)))
        nc = em.refractive_index(eps).complex_value
        assert nc.imag >= 0
        assert (nc * nc).real == pytest.approx(eps.real_part, rel=1e-12)


def test_negative_loss_rejected():
    with pytest.raises(ValueError):
        em.ComplexPermittivity(2.0, -0.1)


def test_fresnel_normal_values():
    assert em.fresnel_normal(1.0) == 0.0
    assert em.fresnel_normal(3.0) == pytest.approx(0.5)


def test_fresnel_normal_chained_from_permittivity():
    n = em.refractive_index_real(em.ComplexPermittivity(9.0, 0.0))
    assert em.fresnel_normal(n) == pytest.approx(0.5)


def test_snell_normal_incidence_passthrough():
    assert em.snell_refract(1.0, 1.5, 0.0) == 0.0


def test_snell_value():
    got = em.snell_refract(1.0, 2.0, math.radians(30.0))
    assert math.degrees(got) == pytest.approx(14.4775121859, abs=1e-9)


def test_snell_total_internal_reflection():
    with pytest.raises(TotalInternalReflection):
        em.snell_refract(2.0, 1.0, math.radians(60.0))


def test_snell_bends_toward_denser_medium():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = float(rng.uniform(1.0 + 1e-6, 10.0))
        th = float(rng.uniform(1e-6, math.pi / 2 - 1e-6))
        assert em.snell_refract(1.0, n, th) < th


def test_fresnel_oblique_no_interface():
    assert em.fresnel_oblique(1.5, 1.5, 0.3, em.TE) == 0


def test_fresnel_oblique_normal_matches_fresnel_normal():
    rng = np.random.default_rng(2)
    for _ in range(200):
        n = float(rng.uniform(1.0, 10.0))
        for pol in (em.TE, em.TM):
            r = em.fresnel_oblique(1.0, n, 0.0, pol)
            assert abs(r) == pytest.approx(em.fresnel_normal(n), rel=1e-12, abs=1e-12)


def test_fresnel_oblique_brewster():
    theta_b = math.atan(1.5)
    r = em.fresnel_oblique(1.0, 1.5, theta_b, em.TM)
    assert abs(r) < 1e-10


def test_fresnel_oblique_energy_bound():
    # lossless incident medium (the configuration used by the leaf model);
    # a lossy incident medium supports inhomogeneous waves with |r| > 1
    rng = np.random.default_rng(3)
    for _ in range(500):
        n1 = float(rng.uniform(1, 6))
        n2 = complex(rng.uniform(1, 6), rng.uniform(0, 4))
        th = float(rng.uniform(0, math.pi / 2 - 1e-4))
        for pol in (em.TE, em.TM):
            assert abs(em.fresnel_oblique(n1, n2, th, pol)) <= 1.0 + 1e-12


def test_debye_static_limit():
    # closed-form limit; the public op's domain starts at 1 GHz
    real, imag = em._debye_eval(1e3)
    assert real == pytest.approx(80.1, abs=1e-9)
    assert imag == pytest.approx(0.0, abs=1e-5)
    band_edge = em.debye_water_permittivity(1e9)
    assert band_edge.real_part == pytest.approx(80.1, abs=0.5)
    assert band_edge.imag_part < 4.5


def test_debye_peak_condition():
    # at w*tau = 1 the loss is exactly (eps_s - eps_inf)/2
    freq = 1.0 / (2.0 * math.pi * em.WATER_TAU_S)
    eps = em.debye_water_permittivity(freq)
    assert eps.imag_part == pytest.approx(37.415, abs=1e-9)


def test_debye_79ghz_golden():
    # frozen from an independent high-precision evaluation of the closed form
    eps = em.debye_water_permittivity(79e9)
    assert eps.real_part == pytest.approx(8.55626066776, abs=1e-9)
    assert eps.imag_part == pytest.approx(15.3333419903, abs=1e-9)


def test_debye_out_of_band():
    with pytest.raises(OutOfRange):
        em.debye_water_permittivity(1e6)
    with pytest.raises(OutOfRange):
        em.debye_water_permittivity(1e12)


def test_mix_endpoints_and_midpoint():
    dry = em.mix_permittivity(0.0, 79e9)
    assert (dry.real_part, dry.imag_part) == (2.5, 0.2)
    wet = em.mix_permittivity(1.0, 79e9)
    ref = em.debye_water_permittivity(79e9)
    assert wet == ref
    mid = em.mix_permittivity(0.5, 79e9)
    assert mid.real_part == pytest.approx((dry.real_part + ref.real_part) / 2)
    assert mid.imag_part == pytest.approx((dry.imag_part + ref.imag_part) / 2)


def test_mix_monotone_in_water_fraction():
    ws = np.linspace(0, 1, 51)
    vals = [em.mix_permittivity(float(w), 79e9) for w in ws]
    re = [v.real_part for v in vals]
    im = [v.imag_part for v in vals]
    assert all(b >= a for a, b in zip(re, re[1:]))
    assert all(b >= a for a, b in zip(im, im[1:]))
