"""Acceptance gate: one test per release criterion, cheap checks first.

Run with -v to get one pass/fail line per criterion. The study-level
criteria at the bottom run the full five-condition, seventeen-seed batch
twice (once for the trends and wall-clock budget, once for bit-exact
repeatability), so this module dominates suite runtime by design.
"""

import math
import random
import time

import pytest

import test_plane
import test_stats
from telescale.core import DelayLine, make_clock
from telescale.harness import run_study, summarize
from telescale.operators import make_operator
from telescale.plane import fit_plane, scale_grid
from telescale.scaling import PositionalScaling, filtered_velocity
from telescale.scenario import preset, preset_conditions
from telescale.server import LiveSession, replay_session
from telescale.stats import paired_t_test
from telescale.world import ErrorEvent, ErrorKind, weighted_error


def test_delay_line_shifts_bit_exactly():
    clock = make_clock(1000.0, 0.75)
    assert clock.one_way_samples == 375
    rng = random.Random(2024)
    started = time.perf_counter()
    for _ in range(1000):
        n = rng.randrange(400, 650)
        seq = [rng.random() for _ in range(n)]
        line = DelayLine(clock.one_way_samples)
        out = [line.push(v) for v in seq]
        for i, v in enumerate(out):
            assert v == seq[max(0, i - clock.one_way_samples)]
    assert time.perf_counter() - started < 1.0


def test_velocity_filter_matches_weighted_difference_identity():
    rng = random.Random(4096)
    fs = 1000.0
    worst = 0.0
    for _ in range(100_000):
        h = [(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))
             for _ in range(4)]
        got = filtered_velocity(h, fs)
        for axis in range(3):
            d1 = (h[0][axis] - h[1][axis]) * fs
            d2 = (h[1][axis] - h[2][axis]) * fs
            d3 = (h[2][axis] - h[3][axis]) * fs
            ref = 0.25 * d1 + 0.5 * d2 + 0.25 * d3
            worst = max(worst, abs(got[axis] - ref))
    assert worst < 1e-12


def test_plane_fit_matches_normal_equation_oracle():
    rng = random.Random(7007)
    for i in range(1000):
        coplanar = i % 3 == 0
        pts = test_plane.random_layout(rng, coplanar=coplanar)
        plane = fit_plane(pts)
        ref = test_plane.brute_force_fit(pts)
        assert abs(plane.a - ref[0]) < 1e-9
        assert abs(plane.b - ref[1]) < 1e-9
        assert abs(plane.c - ref[2]) < 1e-9
        if coplanar:
            for (x, y, z) in pts:
                assert abs(plane.a * x + plane.b * y + z - plane.c) < 1e-9


def test_positional_scale_map_and_total_gain_bounds():
    cfg = PositionalScaling()
    assert (cfg.scale_m, cfg.k, cfg.minscale, cfg.maxscale) \
        == (0.2, 100.0, 0.5, 1.0)
    pegs = ((0.030, 0.040, 0.010), (0.030, 0.060, 0.010),
            (0.070, 0.040, 0.010), (0.070, 0.060, 0.010))
    rows = scale_grid(pegs, cfg, (0.0, 0.100), (0.0, 0.100), samples=51)
    field = {(round(x, 6), round(y, 6)): s for x, y, s in rows}
    for px, py, _pz in pegs:
        assert field[(px, py)] == 0.5  # exact clamp at the peg
    for cx in (0.0, 0.100):
        for cy in (0.0, 0.100):
            assert field[(cx, cy)] == 1.0  # exact clamp at the corners
    for _x, _y, s in rows:
        gain = cfg.scale_m * s
        assert 0.1 <= gain <= 0.2


def test_weighted_error_sums_match_the_penalty_table():
    table = {
        ErrorKind.TOUCH_PEG: 1,
        ErrorKind.TOUCH_GROUND: 2,
        ErrorKind.STRETCH_HANDOFF_SHORT: 2,
        ErrorKind.DROP_RING: 3,
        ErrorKind.STRETCH_ON_PEG_SHORT: 4,
        ErrorKind.STRETCH_ADDITIONAL_SECOND: 4,
        ErrorKind.STRETCH_OR_MOVE_PEG: 10,
        ErrorKind.KNOCK_DOWN_PEG: 20,
    }
    for kind, weight in table.items():
        assert ErrorEvent(0, kind, "left").weight == weight

    def total(*kinds):
        return weighted_error([ErrorEvent(i, k, "left")
                               for i, k in enumerate(kinds)])

    assert total(ErrorKind.TOUCH_PEG, ErrorKind.DROP_RING) == 4
    assert total(ErrorKind.STRETCH_OR_MOVE_PEG,
                 ErrorKind.KNOCK_DOWN_PEG) == 30
    assert total() == 0
    assert total(*table) == sum(table.values())


def test_paired_t_test_matches_frozen_references():
    cases = test_stats.REFERENCE_CASES
    assert len(cases) >= 5
    for _name, x, y, t_ref, p_ref in cases:
        r = paired_t_test(x, y)
        assert r.t == pytest.approx(t_ref, abs=1e-6)
        assert r.p == pytest.approx(p_ref, abs=1e-6)
    same = paired_t_test([4.0, 7.5, 9.25], [4.0, 7.5, 9.25])
    assert same.p == 1.0


@pytest.fixture(scope="module")
def full_study():
    conditions = preset_conditions(0.75)
    started = time.perf_counter()
    records = run_study(conditions, seeds=range(1, 18))
    wall = time.perf_counter() - started
    return records, wall


def _metric_by_condition(records, metric):
    out = {}
    for r in records:
        out.setdefault(r.scenario, {})[r.seed] = metric(r)
    return {cond: [vals[s] for s in sorted(vals)]
            for cond, vals in out.items()}


def test_study_trends_are_directionally_significant(full_study):
    records, wall = full_study
    assert len(records) == 85
    errs = _metric_by_condition(records, lambda r: float(r.weighted_error))
    times = _metric_by_condition(records, lambda r: r.completion_time)

    # lower gain, cleaner work
    a = paired_t_test(errs["c01"], errs["c03"])
    assert math.fsum(errs["c01"]) < math.fsum(errs["c03"]) and a.p < 0.05

    # lower gain, slower work
    b = paired_t_test(times["c01"], times["c02"])
    assert math.fsum(times["c01"]) > math.fsum(times["c02"]) and b.p < 0.05

    # velocity scaling keeps the low-gain cleanliness
    c = paired_t_test(errs["velocity"], errs["c03"])
    assert math.fsum(errs["velocity"]) < math.fsum(errs["c03"]) and c.p < 0.05

    assert wall < 300.0, f"full study took {wall:.1f}s"


def test_repeated_study_is_bit_identical(full_study):
    records, _ = full_study
    again = run_study(preset_conditions(0.75), seeds=range(1, 18))
    assert again == records
    assert summarize(again) == summarize(records)


def test_recorded_session_replays_identically(tmp_path):
    scenario = preset("c03")
    log = tmp_path / "loopback.jsonl"
    engine = LiveSession(scenario, log_path=log)
    pilot = make_operator(scenario, seed=3)
    observed = engine.session.observed
    done = False
    while not done:
        left, right = pilot.step(observed)
        engine.apply_input(
            left={"position": list(left.position),
                  "orientation": list(left.orientation),
                  "jaw": int(left.jaw)},
            right={"position": list(right.position),
                   "orientation": list(right.orientation),
                   "jaw": int(right.jaw)})
        _, done = engine.advance_to(engine.session.tick + 1)
        observed = engine.session.observed
    live = engine.finish()
    assert live.events, "this seed is expected to produce penalty events"

    result = replay_session(log)
    assert not result.truncated
    assert result.record.events == live.events
    assert result.record.weighted_error == live.weighted_error
