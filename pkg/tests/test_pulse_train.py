import numpy as np
import pytest

from aokr.pulse_train import (
    PulseShapeParams,
    TwoFreqTrainSpec,
    build_train_spec,
    normalize_height,
    pulse_envelope,
    resolve_timeline,
    single_train_spec,
    unit_pulse_area,
)
from aokr.pulse_train import _threshold_window
from oracles import brute_force_split, envelope_area_quadrature

KBAR = 3.12


def measured_shape(t1_us=30.0):
    return PulseShapeParams.from_physical_ns(104.0, 121.0, 396.0, t1_us)


class TestShapeParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            PulseShapeParams(0.001, 0.001, 0.0)
        with pytest.raises(ValueError):
            PulseShapeParams(0.001, 0.001, 0.01, on_threshold_fraction=0.5)
        with pytest.raises(ValueError):
            PulseShapeParams(-0.001, 0.001, 0.01)

    def test_physical_conversion(self):
        shape = measured_shape()
        assert shape.fwhm == pytest.approx(396e-9 / 30e-6)
        assert shape.rise_time == pytest.approx(104e-9 / 30e-6)


class TestEnvelope:
    def test_zero_far_before(self):
        shape = measured_shape()
        assert pulse_envelope(-1.0, 5.0, shape) == 0.0
        assert pulse_envelope(+1.0, 5.0, shape) == 0.0

    def test_half_maximum_at_leading_edge(self):
        shape = measured_shape()
        assert pulse_envelope(-shape.fwhm / 2, 4.0, shape) == pytest.approx(2.0, rel=1e-4)

    def test_plateau_reaches_k_max(self):
        shape = measured_shape()
        assert pulse_envelope(0.0, 4.0, shape) == pytest.approx(4.0, rel=1e-3)

    def test_clamped_below_threshold(self):
        shape = measured_shape()
        on, off = _threshold_window(shape)
        assert pulse_envelope(on - 1e-6, 1.0, shape) == 0.0
        assert pulse_envelope(on + 1e-6, 1.0, shape) >= 0.1 * (1 - 1e-3)

    def test_square_profile(self):
        shape = PulseShapeParams.square(0.016)
        assert pulse_envelope(0.0, 631.25, shape) == 631.25
        assert pulse_envelope(0.0079, 631.25, shape) == 631.25
        assert pulse_envelope(0.0081, 631.25, shape) == 0.0


class TestNormalizeHeight:
    def test_square_pulse_arithmetic(self):
        shape = PulseShapeParams.square(0.016)
        assert normalize_height(10.1, shape) == pytest.approx(631.25, rel=1e-12)

    def test_zero_kappa(self):
        assert normalize_height(0.0, measured_shape()) == 0.0

    def test_measured_shape_against_quadrature_oracle(self):
        shape = measured_shape()
        k_max = normalize_height(10.1, shape)
        on, off = _threshold_window(shape)
        area = envelope_area_quadrature(lambda t: pulse_envelope(t, k_max, shape), on, off)
        assert abs(area - 10.1) < 1e-8

    def test_negative_kappa_rejected(self):
        with pytest.raises(ValueError):
            normalize_height(-1.0, measured_shape())


class TestBuildTrainSpec:
    def test_half_phase_split(self):
        spec = build_train_spec(1.0, 0.5, 30, 10.1, 10.1, measured_shape(), KBAR)
        assert (spec.n_first, spec.n_second) == (15, 15)

    def test_full_overlap_split(self):
        spec = build_train_spec(1.0, 0.0, 30, 10.1, 10.1, measured_shape(), KBAR)
        assert (spec.n_first, spec.n_second) == (15, 15)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(17)
        shape = measured_shape()
        for _ in range(50):
            r = rng.uniform(0.3, 3.0)
            alpha0 = rng.uniform(0.0, 1.0 - 1e-9)
            n_tot = int(rng.integers(1, 80))
            spec = build_train_spec(r, alpha0, n_tot, 1.0, 1.0, shape, KBAR)
            assert (spec.n_first, spec.n_second) == brute_force_split(r, alpha0, n_tot)

    def test_specific_derived_case(self):
        spec = build_train_spec(1.4, 0.2, 30, 10.1, 10.1, measured_shape(), KBAR)
        assert (spec.n_first, spec.n_second) == brute_force_split(1.4, 0.2, 30)

    def test_parameter_errors(self):
        with pytest.raises(ValueError):
            build_train_spec(-1.0, 0.0, 30, 1.0, 1.0, measured_shape(), KBAR)
        with pytest.raises(ValueError):
            build_train_spec(1.0, 0.0, 0, 1.0, 1.0, measured_shape(), KBAR)
        with pytest.raises(ValueError):
            build_train_spec(1.0, 1.2, 30, 1.0, 1.0, measured_shape(), KBAR)


class TestResolveTimeline:
    def test_full_overlap_halves_pulse_count_and_doubles_area(self):
        spec = build_train_spec(1.0, 0.0, 30, 10.1, 10.1, measured_shape(), KBAR)
        tl = resolve_timeline(spec)
        assert tl.n_res == 15
        for pulse in tl.pulses:
            assert pulse.area == pytest.approx(20.2, rel=1e-12)
            assert pulse.n_constituents == 2

    def test_half_phase_is_periodic(self):
        spec = build_train_spec(1.0, 0.5, 30, 10.1, 10.1, measured_shape(), KBAR)
        tl = resolve_timeline(spec)
        assert tl.n_res == 30
        starts = np.array([p.start for p in tl.pulses])
        assert np.allclose(np.diff(starts), 0.5, atol=1e-12)
        gaps = np.array(tl.gaps)
        assert np.allclose(gaps, gaps[0], atol=1e-12)

    def test_single_train_square_grid(self):
        spec = single_train_spec(8, 10.1, PulseShapeParams.square(0.016), KBAR)
        tl = resolve_timeline(spec)
        assert tl.n_res == 8
        for pulse in tl.pulses:
            assert pulse.n_steps == 16
            assert np.allclose(pulse.k_mid, 631.25)

    def test_area_conservation_random_configs(self):
        rng = np.random.default_rng(4)
        shape = measured_shape()
        for _ in range(25):
            r = rng.uniform(0.4, 2.5)
            alpha0 = rng.uniform(0.0, 1.0 - 1e-9)
            k1 = rng.uniform(0.0, 20.0)
            k2 = rng.uniform(0.1, 20.0)
            spec = build_train_spec(r, alpha0, int(rng.integers(2, 40)), k1, k2, shape, KBAR)
            tl = resolve_timeline(spec)
            expected = spec.n_first * k1 + spec.n_second * k2
            if expected == 0:
                assert tl.n_res == 0
            else:
                assert tl.total_area == pytest.approx(expected, rel=1e-6)

    def test_overlap_area_against_quadrature(self):
        spec = build_train_spec(1.0, 0.0, 4, 10.1, 10.1, measured_shape(), KBAR)
        tl = resolve_timeline(spec)
        pulse = tl.pulses[0]
        area = envelope_area_quadrature(
            lambda t: float(tl.envelope(t)), pulse.start, pulse.end
        )
        assert area == pytest.approx(pulse.area, rel=1e-9)

    def test_overlap_lengthened_pulse_keeps_step_size(self):
        # alpha0 small enough that windows overlap partially
        shape = measured_shape()
        on, off = _threshold_window(shape)
        width = off - on
        alpha0 = width / 2
        spec = build_train_spec(1.0, alpha0, 10, 10.1, 10.1, shape, KBAR)
        tl = resolve_timeline(spec)
        base = width / tl.min_steps_per_pulse
        for pulse in tl.pulses:
            assert pulse.n_steps >= 16
            assert pulse.step <= base * (1 + 1e-12)

    def test_refined_grid_has_shorter_steps(self):
        spec = single_train_spec(3, 10.1, measured_shape(), KBAR)
        tl16 = resolve_timeline(spec, 16)
        tl32 = resolve_timeline(spec, 32)
        assert tl32.pulses[0].n_steps == 2 * tl16.pulses[0].n_steps

    def test_envelope_nonnegative(self):
        spec = build_train_spec(1.37, 0.41, 12, 8.0, 11.0, measured_shape(), KBAR)
        tl = resolve_timeline(spec)
        for pulse in tl.pulses:
            assert np.all(pulse.k_mid >= 0)

    def test_pulses_disjoint_and_ordered(self):
        spec = build_train_spec(1.21, 0.13, 25, 10.0, 10.0, measured_shape(), KBAR)
        tl = resolve_timeline(spec)
        assert tl.n_res <= spec.n_total
        for a, b in zip(tl.pulses, tl.pulses[1:]):
            assert a.end <= b.start

    def test_csv_export(self, tmp_path):
        spec = single_train_spec(2, 10.1, measured_shape(), KBAR)
        tl = resolve_timeline(spec)
        path = tmp_path / "timeline.csv"
        tl.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[1] == "tau,k"
        assert len(lines) > 2 + 2 * 16


class TestSpecValidation:
    def test_alpha0_range(self):
        with pytest.raises(ValueError):
            TwoFreqTrainSpec(1.0, 1.0, 5, 5, 1.0, 1.0, measured_shape(), KBAR)

    def test_kbar_positive(self):
        with pytest.raises(ValueError):
            TwoFreqTrainSpec(1.0, 0.0, 5, 5, 1.0, 1.0, measured_shape(), 0.0)
