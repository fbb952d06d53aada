import math

import numpy as np
import pytest

from leafradar import em
from leafradar.leaf import (
    LeafSpec,
    layer_water_fractions,
    leaf_state,
    multilayer_reflection,
    rcs,
    roughness_factor,
)

FREQ = 79e9
LAM = 299792458.0 / FREQ


def test_layer_fractions_turgid_ratio():
    spec = LeafSpec(turgid_water_fraction_palisade=0.8)
    pal, spo = layer_water_fractions(100.0, spec)
    assert pal == pytest.approx(0.8)
    assert spo == pytest.approx(0.2)
    assert pal == pytest.approx(4.0 * spo)


def test_layer_fractions_equal_at_50():
    spec = LeafSpec()
    pal, spo = layer_water_fractions(50.0, spec)
    assert pal == pytest.approx(spo)


def test_layer_fractions_75_golden():
    # midpoint of the linear ratio schedule: ratio 2.5, spongy 0.15
    spec = LeafSpec(turgid_water_fraction_palisade=0.8)
    pal, spo = layer_water_fractions(75.0, spec)
    assert spo == pytest.approx(0.15)
    assert pal == pytest.approx(0.375)


def test_layer_fractions_monotone_in_rwc():
    spec = LeafSpec()
    pals, spos = zip(*(layer_water_fractions(r, spec) for r in np.linspace(0, 100, 101)))
    assert all(b >= a for a, b in zip(pals, pals[1:]))
    assert all(b >= a for a, b in zip(spos, spos[1:]))


def test_roughness_factor_smooth():
    assert roughness_factor(0.0, 0.3, LAM) == 1.0


def test_roughness_factor_threshold_point():
    got = roughness_factor(LAM / 32.0, 0.0, LAM)
    assert got == pytest.approx(math.exp(-((math.pi / 8.0) ** 2) / 2.0), rel=1e-12)
    assert got == pytest.approx(0.925791451204, abs=1e-9)


def test_roughness_factor_grazing_limit():
    assert roughness_factor(1e-3, math.pi / 2, LAM) == pytest.approx(1.0)


def test_roughness_factor_decreasing_in_sigma():
    sigmas = np.linspace(0, 2e-3, 50)
    vals = [roughness_factor(float(s), 0.2, LAM) for s in sigmas]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert all(0 < v <= 1 for v in vals)


def test_matched_layers_no_internal_reflection():
    # equal water fractions -> impedance-matched internal boundary -> the
    # interface path vanishes and the surface term is the bare Fresnel one
    spec = LeafSpec(roughness_sigma=0.0)
    state = leaf_state(spec, 50.0)
    assert state.water_fraction_palisade == pytest.approx(state.water_fraction_spongy)
    res = multilayer_reflection(state, 0.0, FREQ)
    assert abs(res.interface_amplitude) < 1e-15
    n1 = em.refractive_index(em.mix_permittivity(state.water_fraction_palisade, FREQ)).complex_value
    r01 = em.fresnel_oblique(1.0, n1, 0.0, em.TE)
    assert res.surface_amplitude == pytest.approx(r01, abs=1e-12)


def test_coherent_sum_exact():
    state = leaf_state(LeafSpec(), 80.0)
    for th in (0.0, 0.2, 0.6):
        res = multilayer_reflection(state, th, FREQ)
        assert res.total_amplitude == res.surface_amplitude + res.volumetric_amplitude
        assert res.volumetric_amplitude == res.interface_amplitude + res.backface_amplitude


def test_surface_dominates_at_high_rwc():
    state = leaf_state(LeafSpec(), 100.0)
    res = multilayer_reflection(state, 0.0, FREQ)
    assert abs(res.surface_amplitude) > abs(res.volumetric_amplitude)
    assert res.rcs_surface > res.rcs_volumetric


def test_volumetric_dominates_at_low_rwc():
    state = leaf_state(LeafSpec(), 50.0)
    res = multilayer_reflection(state, 0.0, FREQ)
    assert abs(res.volumetric_amplitude) >= abs(res.surface_amplitude)
    assert res.rcs_volumetric >= res.rcs_surface


def test_crossover_rwc_golden():
    # default leaf at theta=0: surface overtakes volumetric at rwc=72
    # (frozen from an integer-rwc scan of this model)
    spec = LeafSpec()
    dominant_surface = [
        r
        for r in range(50, 101)
        if abs(multilayer_reflection(leaf_state(spec, r), 0.0, FREQ).surface_amplitude)
        > abs(multilayer_reflection(leaf_state(spec, r), 0.0, FREQ).volumetric_amplitude)
    ]
    assert min(dominant_surface) == 72
    assert max(dominant_surface) == 100


def test_rcs_specular_peak_for_smooth_wet_leaf():
    state = leaf_state(LeafSpec(roughness_sigma=0.0), 100.0)
    thetas = np.radians(np.linspace(0, 60, 61))
    vals = [rcs(state, float(t), FREQ).rcs_total for t in thetas]
    assert int(np.argmax(vals)) == 0


def test_rcs_high_exceeds_low():
    spec = LeafSpec()
    hi = rcs(leaf_state(spec, 100.0), 0.0, FREQ).rcs_total
    lo = rcs(leaf_state(spec, 50.0), 0.0, FREQ).rcs_total
    assert hi > lo


def test_rcs_finite_on_grid():
    spec = LeafSpec()
    for r in np.linspace(50, 100, 51):
        state = leaf_state(spec, float(r))
        for t in np.radians(np.linspace(0, 60, 61)):
            res = rcs(state, float(t), FREQ)
            assert math.isfinite(res.rcs_total)
            assert math.isfinite(res.rcs_surface)
            assert math.isfinite(res.rcs_volumetric)


def test_rcs_monotone_in_rwc_smooth_leaf():
    spec = LeafSpec(roughness_sigma=0.0)
    vals = [rcs(leaf_state(spec, float(r)), 0.0, FREQ).rcs_total for r in np.arange(50, 101)]
    diffs = np.diff(vals)
    assert (diffs >= 0).all()


def test_rcs_monotone_in_rwc_smooth_leaf_tm():
    spec = LeafSpec(roughness_sigma=0.0)
    vals = [rcs(leaf_state(spec, float(r)), 0.0, FREQ, pol=em.TM).rcs_total for r in np.arange(50, 101)]
    assert (np.diff(vals) >= 0).all()


def test_theta_domain_enforced():
    state = leaf_state(LeafSpec(), 80.0)
    with pytest.raises(ValueError):
        multilayer_reflection(state, math.radians(61.0), FREQ)


def test_spec_validation():
    with pytest.raises(ValueError):
        LeafSpec(palisade_fraction=0.0)
    with pytest.raises(ValueError):
        LeafSpec(roughness_sigma=-1e-3)
    with pytest.raises(ValueError):
        LeafSpec(total_thickness=0.0)
