"""Batch trial runner, record serialization, and study aggregation.

A trial closes the loop between one synthetic operator and one session and
reduces to a flat record: how long the task took and which penalty events
fired. A study crosses scaling conditions with a shared seed list; the seed
plays the role of the participant, so using the same seed across conditions
keeps the pairing meaningful and the paired t-tests honest. Aggregation
reproduces the usual two-table shape: per-condition mean and sample std for
completion time and weighted error, with paired p-values against the two
constant baselines.

Trials share no state, so a study parallelizes over processes when asked;
the record list and the summary table are bit-identical either way.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .core import ConfigError
from .operators import make_operator
from .pipeline import TeleopSession
from .scenario import PRESET_CONDITIONS, Scenario
from .stats import mean_sample_std, paired_t_test
from .world import ErrorEvent, ErrorKind, weighted_error

DEFAULT_TIMEOUT_S = 600.0
BASELINES = ("c03", "c02")

CSV_HEADER = ("scenario", "seed", "time_s", "weighted_error", "n_events")


@dataclass(frozen=True)
class TrialRecord:
    scenario: str
    seed: int
    completion_time: float      # simulated seconds; the horizon if timed out
    timed_out: bool
    events: tuple
    weighted_error: int
    log_ref: str | None = None  # session log path when one was captured


def run_trial(scenario: Scenario, seed: int,
              timeout_s: float = DEFAULT_TIMEOUT_S,
              log_ref: str | None = None) -> TrialRecord:
    """One closed-loop trial; deterministic for a given (scenario, seed)."""
    session = TeleopSession(scenario)
    operator = make_operator(scenario, seed)
    observed = session.observed
    events: list[ErrorEvent] = []
    while True:
        left, right = operator.step(observed)
        observed, new_events = session.step(left, right)
        events.extend(new_events)
        if session.complete:
            timed_out = False
            break
        if session.sim_time >= timeout_s:
            timed_out = True
            break
    return TrialRecord(scenario=scenario.name, seed=seed,
                       completion_time=session.sim_time, timed_out=timed_out,
                       events=tuple(events),
                       weighted_error=weighted_error(events),
                       log_ref=log_ref)


def _run_one(task) -> TrialRecord:
    scenario, seed, timeout_s = task
    return run_trial(scenario, seed, timeout_s)


def run_study(conditions, seeds, timeout_s: float = DEFAULT_TIMEOUT_S,
              jobs: int = 1) -> list:
    """Cross conditions with seeds; same seed everywhere = paired design."""
    seeds = list(seeds)
    if len(seeds) < 2:
        raise ConfigError("paired statistics need at least two seeds")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds must be distinct; each one stands in for "
                          "one participant")
    names = [sc.name for sc in conditions]
    if len(set(names)) != len(names):
        raise ConfigError(f"condition names must be unique, got {names}")
    tasks = [(sc, seed, timeout_s) for sc in conditions for seed in seeds]
    if jobs <= 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, tasks))


@dataclass(frozen=True)
class ConditionRow:
    condition: str
    n: int
    timeouts: int
    time_mean: float | None
    time_std: float | None
    error_mean: float | None
    error_std: float | None
    p_time_vs_c03: float | None
    p_time_vs_c02: float | None
    p_error_vs_c03: float | None
    p_error_vs_c02: float | None


@dataclass(frozen=True)
class StudyTable:
    rows: tuple


def _by_condition(records) -> dict:
    grouped: dict[str, dict[int, TrialRecord]] = {}
    for rec in records:
        per_seed = grouped.setdefault(rec.scenario, {})
        if rec.seed in per_seed:
            raise ConfigError(f"duplicate record for ({rec.scenario}, "
                              f"seed {rec.seed})")
        per_seed[rec.seed] = rec
    return grouped


def _paired_p(grouped, cond: str, base: str, metric) -> float | None:
    if cond == base or base not in grouped or cond not in grouped:
        return None
    common = sorted(set(grouped[cond]) & set(grouped[base]))
    if len(common) < 2:
        return None
    xs = [metric(grouped[cond][s]) for s in common]
    ys = [metric(grouped[base][s]) for s in common]
    return paired_t_test(xs, ys).p


def summarize(records) -> StudyTable:
    """Reduce records to the per-condition table; order never matters.

    Rows cover the named study conditions first, gaps left explicit when a
    condition has no records, then any other scenarios that appear.
    """
    grouped = _by_condition(records)
    extras = sorted(set(grouped) - set(PRESET_CONDITIONS))
    rows = []
    for cond in (*PRESET_CONDITIONS, *extras):
        per_seed = grouped.get(cond)
        if not per_seed:
            rows.append(ConditionRow(cond, 0, 0, None, None, None, None,
                                     None, None, None, None))
            continue
        recs = [per_seed[s] for s in sorted(per_seed)]
        time_mean, time_std = mean_sample_std(
            [r.completion_time for r in recs])
        err_mean, err_std = mean_sample_std(
            [float(r.weighted_error) for r in recs])
        p_t3, p_t2 = (_paired_p(grouped, cond, b, lambda r: r.completion_time)
                      for b in BASELINES)
        p_e3, p_e2 = (_paired_p(grouped, cond, b,
                                lambda r: float(r.weighted_error))
                      for b in BASELINES)
        rows.append(ConditionRow(
            condition=cond, n=len(recs),
            timeouts=sum(r.timed_out for r in recs),
            time_mean=time_mean, time_std=time_std,
            error_mean=err_mean, error_std=err_std,
            p_time_vs_c03=p_t3, p_time_vs_c02=p_t2,
            p_error_vs_c03=p_e3, p_error_vs_c02=p_e2))
    return StudyTable(rows=tuple(rows))


def _fmt(value, width=9, prec=3):
    if value is None:
        return "-".rjust(width)
    return f"{value:{width}.{prec}f}"


def format_table(table: StudyTable) -> str:
    """Two text blocks in the familiar study-table layout."""
    out = []
    for title, mean_of, std_of, p3_of, p2_of in (
        ("Completion time (s)",
         lambda r: r.time_mean, lambda r: r.time_std,
         lambda r: r.p_time_vs_c03, lambda r: r.p_time_vs_c02),
        ("Weighted error",
         lambda r: r.error_mean, lambda r: r.error_std,
         lambda r: r.p_error_vs_c03, lambda r: r.p_error_vs_c02),
    ):
        out.append(title)
        out.append(f"{'condition':<12} {'mean':>9} {'std':>9} "
                   f"{'p vs c03':>9} {'p vs c02':>9} {'n':>4} {'t/o':>4}")
        for r in table.rows:
            out.append(f"{r.condition:<12} {_fmt(mean_of(r))} {_fmt(std_of(r))} "
                       f"{_fmt(p3_of(r), prec=4)} {_fmt(p2_of(r), prec=4)} "
                       f"{r.n:>4} {r.timeouts:>4}")
        out.append("")
    return "\n".join(out)


def export_csv(records, path) -> None:
    """One trial per row, stable column order, header always present."""
    lines = [",".join(CSV_HEADER)]
    for r in records:
        lines.append(f"{r.scenario},{r.seed},{r.completion_time!r},"
                     f"{r.weighted_error},{len(r.events)}")
    Path(path).write_text("\n".join(lines) + "\n")


def _record_to_dict(r: TrialRecord) -> dict:
    return {
        "scenario": r.scenario,
        "seed": r.seed,
        "completion_time_s": r.completion_time,
        "timed_out": r.timed_out,
        "weighted_error": r.weighted_error,
        "log_ref": r.log_ref,
        "events": [{"tick": e.tick, "kind": e.kind.name, "source": e.source}
                   for e in r.events],
    }


def record_from_dict(data: dict) -> TrialRecord:
    try:
        events = tuple(ErrorEvent(int(e["tick"]), ErrorKind[e["kind"]],
                                  str(e["source"]))
                       for e in data["events"])
        rec = TrialRecord(scenario=str(data["scenario"]),
                          seed=int(data["seed"]),
                          completion_time=float(data["completion_time_s"]),
                          timed_out=bool(data["timed_out"]),
                          events=events,
                          weighted_error=int(data["weighted_error"]),
                          log_ref=data.get("log_ref"))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"malformed trial record: {exc}") from None
    if rec.weighted_error != weighted_error(rec.events):
        raise ConfigError(
            f"record ({rec.scenario}, seed {rec.seed}): stored weighted "
            f"error {rec.weighted_error} does not match its events")
    if rec.completion_time <= 0 and not rec.timed_out:
        raise ConfigError(
            f"record ({rec.scenario}, seed {rec.seed}): nonpositive "
            f"completion time without a timeout flag")
    return rec


def export_json(records, path) -> None:
    """Full records including the event lists; import round-trips exactly."""
    payload = [_record_to_dict(r) for r in records]
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


def load_records(path) -> list:
    try:
        payload = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read records {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(payload, list):
        raise ConfigError(f"{path}: expected a list of trial records")
    return [record_from_dict(d) for d in payload]
