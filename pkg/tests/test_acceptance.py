"""Acceptance suite: one test per release criterion, each printing a
pass/fail line with the measured values (run with pytest -s to see them
all; any failure also fails the pytest run)."""

import math
import random
import statistics
import time

import pytest

from ebikesim.control import RiderInputs, arbitrate, throttle_to_request
from ebikesim.physics import drafting_factor
from ebikesim.powersplit import fit_noload_params, sector_bounds
from ebikesim.report import steady_zone_ventilation
from ebikesim.scenario import default_closed_loop_scenario, default_open_loop_scenario
from ebikesim.sim import run, sweep_experiment
from ebikesim.telemetry import (
    CommandStreamParser,
    TelemetryFrame,
    encode_command,
    encode_frame,
    parse_command_stream,
    parse_frame,
    pwm_to_voltage,
)

WARMUP_S = 30.0


def _verdict(criterion: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    assert ok, f"{criterion}: {detail}"


@pytest.fixture(scope="module")
def closed_run():
    t0 = time.perf_counter()
    log = run(default_closed_loop_scenario())
    return log, time.perf_counter() - t0


@pytest.fixture(scope="module")
def open_run():
    return run(default_open_loop_scenario())


@pytest.fixture(scope="module")
def baseline_run():
    return run(default_closed_loop_scenario(fixed_target=0.9))


def test_criterion_1_closed_loop_tracking(closed_run):
    log, elapsed = closed_run
    errors = [r.e for r in log.records if r.e is not None and r.t > WARMUP_S]
    frac = sum(1 for e in errors if abs(e) <= 0.10) / len(errors)
    median = statistics.median(errors)
    ok = frac >= 0.90 and abs(median) <= 0.02 and elapsed < 5.0
    _verdict(
        "1 closed-loop tracking",
        ok,
        f"|e|<=0.10 on {frac * 100.0:.1f}% of ticks (need >=90%), "
        f"median e {median:+.4f} (need |.|<=0.02), runtime {elapsed:.2f}s (need <5s)",
    )


def test_criterion_2_ventilation_reduction(closed_run):
    log, _ = closed_run
    rows = [{"t": r.t, "zone": r.zone, "ve": r.ve} for r in log.records]
    means = steady_zone_ventilation(rows, settle_s=30.0)
    ratio = means["polluted"] / means["non_polluted"]
    ok = 0.35 <= ratio <= 0.55
    _verdict(
        "2 ventilation reduction",
        ok,
        f"steady VE {means['polluted']:.1f}/{means['non_polluted']:.1f} L/min, "
        f"ratio {ratio:.3f} (need within [0.35, 0.55])",
    )


def test_criterion_3_open_loop_hr_profile(open_run):
    resting = default_open_loop_scenario().hr_params.resting_hr
    peak_np = max(r.hr for r in open_run.records if r.zone == "non_polluted")
    end_polluted = [r.hr for r in open_run.records if r.zone == "polluted"][-1]
    ok = peak_np >= 1.5 * resting and end_polluted <= 1.15 * resting
    _verdict(
        "3 open-loop HR profile",
        ok,
        f"peak {peak_np:.1f} BPM (need >={1.5 * resting:.0f}), "
        f"end-of-polluted {end_polluted:.1f} BPM (need <={1.15 * resting:.1f})",
    )


def test_criterion_4_power_split_identities(closed_run, open_run, baseline_run):
    records = closed_run[0].records + open_run.records + baseline_run.records
    checked = 0
    for r in records:
        assert r.p_hw + r.p_mw >= 0.0
        if r.m is not None:
            assert r.m == r.p_hw / (r.p_hw + r.p_mw)
            assert 0.0 <= r.m <= 1.0
        if r.tau_p <= 45.0:
            assert r.p_hw == 0.0
        checked += 1
    _verdict(
        "4 power-split identities",
        True,
        f"sum/share/bias identities hold on all {checked} simulated ticks",
    )


def test_criterion_5_beta_recovery():
    worst_abs = 0.0
    for slope, intercept in ((3.0, 5.0), (1.7, 2.2), (4.5, 0.5)):
        samples = [(y, slope * y + intercept) for y in range(1, 17)]
        got_slope, got_intercept = fit_noload_params(samples)
        worst_abs = max(worst_abs, abs(got_slope - slope), abs(got_intercept - intercept))
    assert worst_abs < 1e-6

    def oracle(samples):
        n = len(samples)
        sx = sum(s[0] for s in samples)
        sy = sum(s[1] for s in samples)
        sxx = sum(s[0] * s[0] for s in samples)
        sxy = sum(s[0] * s[1] for s in samples)
        det = n * sxx - sx * sx
        return (n * sxy - sx * sy) / det, (sy * sxx - sx * sxy) / det

    rng = random.Random(555)
    worst_rel = 0.0
    for _ in range(100):
        n = rng.randint(3, 50)
        samples = [
            (rng.uniform(1, 16), rng.uniform(0, 10) + rng.gauss(0, 5))
            for _ in range(n)
        ]
        if max(s[0] for s in samples) - min(s[0] for s in samples) < 1e-3:
            samples.append((16.0, 1.0))
        got = fit_noload_params(samples)
        want = oracle(samples)
        for g, w in zip(got, want):
            worst_rel = max(worst_rel, abs(g - w) / max(abs(w), 1e-12))
    ok = worst_rel < 1e-9
    _verdict(
        "5 no-load fit recovery",
        ok,
        f"noiseless abs err {worst_abs:.2e} (need <1e-6), "
        f"oracle rel err {worst_rel:.2e} over 100 instances (need <1e-9)",
    )


def test_criterion_6_sector_monotonicity():
    cfg = default_closed_loop_scenario()
    bounds = []
    for level in (2, 6, 10, 14):
        rows = sweep_experiment(cfg, level)
        bounds.append(sector_bounds([(r.wheel_speed_kmh, r.p_hw, r.p_mw) for r in rows]))
    s1 = [b.s1 for b in bounds]
    s2 = [b.s2 for b in bounds]
    ok = (
        all(b >= a for a, b in zip(s1, s1[1:]))
        and all(b >= a for a, b in zip(s2, s2[1:]))
        and all(b.s1 < b.s2 for b in bounds)
    )
    _verdict(
        "6 sector monotonicity",
        ok,
        "S1=" + "/".join(f"{v:.1f}" for v in s1) + " S2=" + "/".join(f"{v:.1f}" for v in s2)
        + " km/h over levels 2/6/10/14 (need non-decreasing, S1<S2)",
    )


def test_criterion_7_codec_exactness():
    rng = random.Random(424242)
    for _ in range(10_000):
        frame = TelemetryFrame(*(rng.uniform(-1e4, 1e4) for _ in range(6)))
        assert parse_frame(encode_frame(frame)).values() == frame.values()
    parser = CommandStreamParser()
    for _ in range(10_000):
        value = rng.randint(0, 255)
        commands, errors = parser.feed(encode_command(value))
        assert not errors and [c.value for c in commands] == [value]
    for _ in range(200):
        blob = bytes(rng.choice(b"0123456789!z") for _ in range(rng.randint(0, 50)))
        whole = parse_command_stream([blob])
        cut = rng.randint(0, len(blob))
        split = parse_command_stream([blob[:cut], blob[cut:]])
        assert [c.value for c in whole[0]] == [c.value for c in split[0]]
        assert [e.kind for e in whole[1]] == [e.kind for e in split[1]]
    ok = pwm_to_voltage(0) == 0.0 and pwm_to_voltage(255) == 5.0 and drafting_factor(0.0) == 0.62
    _verdict(
        "7 codec exactness",
        ok,
        "frame/command round trips bit-exact over 1e4 messages, chunking invariant, "
        f"pwm endpoints ({pwm_to_voltage(0)}, {pwm_to_voltage(255)}) V, draft(0)={drafting_factor(0.0)}",
    )


def test_criterion_8_arbitration_dominance():
    combos = 0
    for left in (False, True):
        for right in (False, True):
            for tenths in range(0, 51):
                voltage = tenths / 10.0
                inputs = RiderInputs(left, right, voltage)
                for analytics in range(0, 256, 15):
                    out = arbitrate(inputs, analytics)
                    if left or right:
                        assert out == 0
                    elif voltage > 1.0:
                        assert out == throttle_to_request(voltage)
                    else:
                        assert out == analytics
                    combos += 1
    _verdict("8 arbitration dominance", True, f"hierarchy holds on all {combos} input combinations")


def test_criterion_9_determinism_and_refinement(closed_run):
    from dataclasses import replace

    log_a, _ = closed_run
    log_b = run(default_closed_loop_scenario())
    identical = len(log_a.records) == len(log_b.records) and all(
        x.row() == y.row() for x, y in zip(log_a.records, log_b.records)
    )
    cfg = default_closed_loop_scenario()
    v_coarse = log_a.records[-1].v
    v_fine = run(replace(cfg, substeps=2)).records[-1].v
    drift = abs(v_coarse - v_fine) / v_coarse
    ok = identical and drift < 0.02
    _verdict(
        "9 determinism & refinement",
        ok,
        f"rerun bit-identical: {identical}; halving the integrator step moves "
        f"final speed {drift * 100.0:.3f}% (need <2%)",
    )


def test_criterion_10_dose_monotonicity(closed_run, baseline_run):
    tracked = closed_run[0].records[-1].dose
    baseline = baseline_run.records[-1].dose
    ok = tracked < baseline
    _verdict(
        "10 dose monotonicity",
        ok,
        f"controller dose {tracked:.2f} ug < fixed-0.9 baseline {baseline:.2f} ug",
    )
