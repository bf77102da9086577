import math
import random

import pytest

from ebikesim.powersplit import (
    CommandTooHigh,
    CommandTooLow,
    DegenerateSweep,
    FitError,
    PowerSplitParams,
    Sector,
    SectorBounds,
    classify_sector,
    electrical_power,
    fit_noload_params,
    human_wheel_power,
    motor_wheel_power,
    pedal_power,
    power_split,
    sector_bounds,
    y_to_ytilde,
    ytilde_to_y,
)


class TestCommandCodec:
    def test_band_endpoints(self):
        assert y_to_ytilde(90) == 1
        assert y_to_ytilde(165) == 16
        assert ytilde_to_y(1) == 90
        assert ytilde_to_y(16) == 165

    def test_midpoints(self):
        assert y_to_ytilde(125) == 8
        assert ytilde_to_y(10) == 135

    def test_out_of_band(self):
        with pytest.raises(CommandTooLow):
            y_to_ytilde(89)
        with pytest.raises(CommandTooHigh):
            y_to_ytilde(166)
        with pytest.raises(ValueError):
            ytilde_to_y(0)
        with pytest.raises(ValueError):
            ytilde_to_y(17)

    def test_round_trip_on_grid(self):
        for y in range(90, 166, 5):
            assert ytilde_to_y(y_to_ytilde(y)) == y

    def test_rounding_between_grid_points(self):
        # 92 -> 1.4 -> 1; 93 -> 1.6 -> 2
        assert y_to_ytilde(92) == 1
        assert y_to_ytilde(93) == 2


class TestPedalAndWheelPower:
    def test_pedal_power(self):
        assert pedal_power(0.0, 2.0) == 0.0
        assert pedal_power(50.0, 2 * math.pi) == pytest.approx(314.159265, abs=1e-6)
        assert pedal_power(50.0, 0.0) == 0.0

    def test_human_wheel_bias_cancel(self):
        p = PowerSplitParams()
        assert human_wheel_power(45.0, 2 * math.pi, p) == 0.0
        assert human_wheel_power(40.0, 2 * math.pi, p) == 0.0

    def test_human_wheel_hand_value(self):
        # 1.5 * 0.9 * (65-45) * 2*pi = 169.646
        p = PowerSplitParams()
        assert human_wheel_power(65.0, 2 * math.pi, p) == pytest.approx(169.646, abs=1e-3)

    def test_human_wheel_monotone_in_torque(self):
        p = PowerSplitParams()
        values = [human_wheel_power(tau, 5.0, p) for tau in range(0, 120, 5)]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert all(v == 0 for tau, v in zip(range(0, 120, 5), values) if tau <= 45)

    def test_motor_wheel_hand_value(self):
        p = PowerSplitParams(noload_slope=3.0, noload_intercept=5.0)
        assert motor_wheel_power(300.0, 10, p) == pytest.approx(205.0)

    def test_motor_wheel_noload_point(self):
        p = PowerSplitParams()
        noload = (3.0 * 10 + 5.0) / p.motor_efficiency
        assert motor_wheel_power(noload, 10, p) == pytest.approx(0.0, abs=1e-12)

    def test_motor_wheel_clamped(self):
        p = PowerSplitParams()
        assert motor_wheel_power(0.0, 10, p) == 0.0

    def test_motor_wheel_monotonicity(self):
        p = PowerSplitParams()
        by_level = [motor_wheel_power(200.0, y, p) for y in range(1, 17)]
        assert all(b <= a for a, b in zip(by_level, by_level[1:]))
        by_power = [motor_wheel_power(w, 8, p) for w in range(0, 300, 10)]
        assert all(b >= a for a, b in zip(by_power, by_power[1:]))

    def test_electrical_power(self):
        assert electrical_power(36.0, 5.0) == pytest.approx(180.0)
        assert electrical_power(36.0, 0.0) == 0.0
        assert electrical_power(41.0, 6.1) == pytest.approx(250.1)


class TestPowerSplit:
    def test_all_motor(self):
        split = power_split(0.0, 200.0)
        assert split.defined and split.share == 0.0

    def test_all_human(self):
        split = power_split(100.0, 0.0)
        assert split.defined and split.share == 1.0

    def test_ratio(self):
        split = power_split(150.0, 50.0)
        assert split.share == pytest.approx(0.75)

    def test_undefined(self):
        split = power_split(0.0, 0.0)
        assert not split.defined

    def test_identities_random(self):
        rng = random.Random(7)
        for _ in range(500):
            h = rng.uniform(0.0, 400.0)
            m = rng.uniform(0.0, 400.0)
            split = power_split(h, m)
            assert split.wheel_power == h + m  # stored sum is exact
            assert split.share == h / (h + m)
            assert 0.0 <= split.share <= 1.0
            assert split.share * split.wheel_power == pytest.approx(h, rel=1e-12)
            assert (1 - split.share) * split.wheel_power == pytest.approx(m, rel=1e-9, abs=1e-9)


def fit_oracle(samples):
    """Normal-equations least squares, independent of the library path."""
    n = len(samples)
    sx = sum(s[0] for s in samples)
    sy = sum(s[1] for s in samples)
    sxx = sum(s[0] * s[0] for s in samples)
    sxy = sum(s[0] * s[1] for s in samples)
    det = n * sxx - sx * sx
    slope = (n * sxy - sx * sy) / det
    intercept = (sy * sxx - sx * sxy) / det
    return slope, intercept


class TestNoloadFit:
    def test_noiseless_recovery(self):
        samples = [(y, 3.0 * y + 5.0) for y in range(1, 17)]
        slope, intercept = fit_noload_params(samples)
        assert slope == pytest.approx(3.0, abs=1e-9)
        assert intercept == pytest.approx(5.0, abs=1e-9)

    def test_two_point_line(self):
        slope, intercept = fit_noload_params([(1, 8.0), (16, 53.0)])
        assert slope == pytest.approx(3.0, abs=1e-9)
        assert intercept == pytest.approx(5.0, abs=1e-9)

    def test_efficiency_scaling(self):
        eta = 0.8
        samples = [(y, (3.0 * y + 5.0) / eta) for y in range(1, 17)]
        slope, intercept = fit_noload_params(samples, motor_efficiency=eta)
        assert slope == pytest.approx(3.0, abs=1e-9)
        assert intercept == pytest.approx(5.0, abs=1e-9)

    def test_rank_deficient(self):
        with pytest.raises(FitError):
            fit_noload_params([(10, 35.0), (10, 36.0), (10, 34.0)])
        with pytest.raises(FitError):
            fit_noload_params([(10, 35.0)])

    def test_matches_normal_equations_oracle(self):
        rng = random.Random(123)
        for _ in range(100):
            n = rng.randint(3, 40)
            xs = [rng.uniform(1, 16) for _ in range(n)]
            if max(xs) - min(xs) < 1e-6:
                xs[0] += 1.0
            samples = [(x, rng.uniform(-2, 2) + 4.0 * x + rng.gauss(0, 3)) for x in xs]
            slope, intercept = fit_noload_params(samples)
            o_slope, o_intercept = fit_oracle(samples)
            assert slope == pytest.approx(o_slope, rel=1e-9, abs=1e-9)
            assert intercept == pytest.approx(o_intercept, rel=1e-9, abs=1e-9)


class TestSectors:
    def synthetic_sweep(self):
        # human power starts at 8 km/h, motor reaches zero at 22 km/h
        rows = []
        for s in range(0, 31):
            human = max(s - 8, 0) * 10.0
            motor = max(22 - s, 0) * 5.0
            rows.append((float(s), human, motor))
        return rows

    def test_constructed_bounds(self):
        bounds = sector_bounds(self.synthetic_sweep())
        assert bounds.s1 == 9.0  # first sample with human power strictly positive
        assert bounds.s2 == 22.0

    def test_bounds_example_with_exact_onsets(self):
        rows = [(s, 1.0 if s >= 8 else 0.0, 1.0 if s < 22 else 0.0) for s in range(0, 31)]
        bounds = sector_bounds(rows)
        assert (bounds.s1, bounds.s2) == (8.0, 22.0)

    def test_human_positive_everywhere(self):
        rows = [(float(s), 5.0, max(10 - s, 0) * 1.0) for s in range(0, 20)]
        assert sector_bounds(rows).s1 == 0.0

    def test_motor_never_freewheels(self):
        rows = [(float(s), max(s - 3, 0) * 1.0, 5.0) for s in range(0, 20)]
        with pytest.raises(DegenerateSweep):
            sector_bounds(rows)

    def test_classify(self):
        bounds = SectorBounds(8.0, 22.0)
        assert classify_sector(5.0, bounds) is Sector.HUMAN_FREEWHEEL
        assert classify_sector(15.0, bounds) is Sector.SHARED
        assert classify_sector(30.0, bounds) is Sector.MOTOR_FREEWHEEL
        # boundaries are inclusive to the shared sector
        assert classify_sector(8.0, bounds) is Sector.SHARED
        assert classify_sector(22.0, bounds) is Sector.SHARED

    def test_bounds_require_order(self):
        with pytest.raises(ValueError):
            SectorBounds(10.0, 10.0)


class TestParamValidation:
    def test_bad_params(self):
        with pytest.raises(ValueError):
            PowerSplitParams(torque_bias=-1.0)
        with pytest.raises(ValueError):
            PowerSplitParams(crank_efficiency=0.0)
        with pytest.raises(ValueError):
            PowerSplitParams(motor_efficiency=1.5)
        with pytest.raises(ValueError):
            PowerSplitParams(scaling=0.0)
