"""Scenario configuration: clock, scaling strategy, board layout, operator.

A scenario file is a YAML mapping. Lengths in the board, geometry, and homes
blocks honor the file's ``units`` declaration (``mm`` or ``m``); everything
else is always SI (scaling gains per meter, speeds in meters per second,
times in seconds). Files written by save_scenario use meters so that a
load(save(s)) round trip is bit-exact.

Example::

    name: custom
    units: mm
    clock: {rate_hz: 1000, round_trip_s: 0.75}
    scaling: {kind: positional, scale_m: 0.2, k: 100, minscale: 0.5, maxscale: 1.0}
    board:
      pegs: [[30, 40], [30, 60], [70, 40], [70, 60]]
      rings:
        - {name: front, start: front_left, dest: front_right}
        - {name: back, start: back_left, dest: back_right}
    homes: {left: [20, 50, 25], right: [80, 50, 25]}
    operator: {kind: pursuit}
    max_sim_s: 600

Peg labels are positional: on a four-peg board, ``front``/``back`` split on
the y midline and ``left``/``right`` on the x midline; ``peg0``..``peg3``
(declaration order) always work as well.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .core import ClockConfig, ConfigError, Vec3, make_clock
from .scaling import (
    ConstantScaling,
    PositionalScaling,
    ScalingConfig,
    VelocityScaling,
)
from .world import RingSpec, TaskGeometry, WorldConfig

ENV_SCENARIO_PATH = "TELESCALE_SCENARIO_PATH"

DEFAULT_PEGS: tuple = (
    (0.030, 0.040, 0.010),
    (0.030, 0.060, 0.010),
    (0.070, 0.040, 0.010),
    (0.070, 0.060, 0.010),
)
DEFAULT_RINGS: tuple = (RingSpec("front", 0, 2), RingSpec("back", 1, 3))
DEFAULT_LEFT_HOME: Vec3 = (0.020, 0.050, 0.025)
DEFAULT_RIGHT_HOME: Vec3 = (0.080, 0.050, 0.025)

# conditions of the five-way comparison, in report order
PRESET_CONDITIONS = ("c03", "c02", "c01", "positional", "velocity")

_SCALING_KINDS = {
    "constant": (ConstantScaling, ("scale",)),
    "positional": (PositionalScaling, ("scale_m", "k", "minscale", "maxscale",
                                       "shifted_projection", "raw_peg_frame")),
    "velocity": (VelocityScaling, ("v1", "v2", "ceiling")),
}


@dataclass(frozen=True)
class Scenario:
    name: str = "default"
    fs_hz: float = 1000.0
    round_trip_s: float = 0.75
    scaling: ScalingConfig = ConstantScaling()
    peg_centers: tuple = DEFAULT_PEGS
    rings: tuple = DEFAULT_RINGS
    geometry: TaskGeometry = field(default_factory=TaskGeometry)
    left_home: Vec3 = DEFAULT_LEFT_HOME
    right_home: Vec3 = DEFAULT_RIGHT_HOME
    operator: dict = field(default_factory=lambda: {"kind": "pursuit"})
    max_sim_s: float = 600.0

    def __post_init__(self):
        if len(self.peg_centers) != 4:
            raise ConfigError(f"board needs exactly 4 pegs, got {len(self.peg_centers)}")
        if len(set(self.peg_centers)) != 4:
            raise ConfigError("peg centers must be pairwise distinct")
        names = [r.name for r in self.rings]
        if len(set(names)) != len(names):
            raise ConfigError("ring names must be unique")
        for r in self.rings:
            if r.start_peg == r.dest_peg:
                raise ConfigError(f"ring {r.name!r} starts on its destination peg")
        if not self.max_sim_s > 0:
            raise ConfigError("max_sim_s must be positive")
        if "kind" not in self.operator:
            raise ConfigError("operator config needs a 'kind'")
        self.clock()  # validates rate and delay

    def clock(self) -> ClockConfig:
        return make_clock(self.fs_hz, self.round_trip_s)

    def world_config(self) -> WorldConfig:
        return WorldConfig(
            peg_centers=self.peg_centers,
            rings=self.rings,
            geometry=self.geometry,
            ticks_per_second=int(round(self.fs_hz)),
            left_home=self.left_home,
            right_home=self.right_home,
        )


def peg_labels(peg_centers) -> dict:
    """Name pegs by board position; falls back to declaration order."""
    labels = {f"peg{i}": i for i in range(len(peg_centers))}
    if len(peg_centers) == 4:
        mx = sum(p[0] for p in peg_centers) / 4.0
        my = sum(p[1] for p in peg_centers) / 4.0
        positional = {}
        for i, p in enumerate(peg_centers):
            side = "left" if p[0] < mx else "right"
            depth = "front" if p[1] < my else "back"
            positional[f"{depth}_{side}"] = i
        if len(positional) == 4:
            labels.update(positional)
    return labels


def _vec(raw, unit, where) -> Vec3:
    if not (isinstance(raw, (list, tuple)) and len(raw) == 3
            and all(isinstance(v, (int, float)) for v in raw)):
        raise ConfigError(f"{where}: expected [x, y, z], got {raw!r}")
    return (raw[0] * unit, raw[1] * unit, raw[2] * unit)


def _require_mapping(raw, where) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(raw).__name__}")
    return raw


def _check_keys(raw: dict, allowed, where):
    unknown = set(raw) - set(allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def scaling_from_dict(raw) -> ScalingConfig:
    raw = dict(_require_mapping(raw, "scaling"))
    kind = raw.pop("kind", None)
    if kind not in _SCALING_KINDS:
        raise ConfigError(f"scaling kind must be one of {sorted(_SCALING_KINDS)}, got {kind!r}")
    cls, fields = _SCALING_KINDS[kind]
    _check_keys(raw, fields, f"scaling ({kind})")
    return cls(**raw)


def scaling_to_dict(cfg: ScalingConfig) -> dict:
    for kind, (cls, fields) in _SCALING_KINDS.items():
        if isinstance(cfg, cls):
            out = {"kind": kind}
            defaults = cls()
            for f in fields:
                v = getattr(cfg, f)
                if v != getattr(defaults, f):
                    out[f] = v
            return out
    raise ConfigError(f"unknown scaling config {cfg!r}")


_GEOMETRY_LENGTHS = ("peg_radius", "peg_height", "ring_inner_radius", "grasp_radius",
                     "stretch_threshold", "peg_move_threshold", "peg_topple_threshold",
                     "ground_tolerance", "ring_rest_height", "place_height_tolerance",
                     "unthread_margin")

_TOP_KEYS = ("name", "units", "clock", "scaling", "board", "homes", "geometry",
             "operator", "max_sim_s")


def scenario_from_dict(data: dict, name_hint: str = "scenario") -> Scenario:
    data = _require_mapping(data, name_hint)
    _check_keys(data, _TOP_KEYS, name_hint)
    units = data.get("units", "m")
    if units not in ("m", "mm"):
        raise ConfigError(f"units must be 'm' or 'mm', got {units!r}")
    unit = 0.001 if units == "mm" else 1.0

    kw = {"name": str(data.get("name", name_hint))}

    clock = _require_mapping(data.get("clock", {}), "clock")
    _check_keys(clock, ("rate_hz", "round_trip_s"), "clock")
    if "rate_hz" in clock:
        kw["fs_hz"] = float(clock["rate_hz"])
    if "round_trip_s" in clock:
        kw["round_trip_s"] = float(clock["round_trip_s"])

    if "scaling" in data:
        kw["scaling"] = scaling_from_dict(data["scaling"])

    geometry = TaskGeometry()
    if "geometry" in data:
        g = dict(_require_mapping(data["geometry"], "geometry"))
        _check_keys(g, _GEOMETRY_LENGTHS + ("workspace_min", "workspace_max"), "geometry")
        for key in _GEOMETRY_LENGTHS:
            if key in g:
                g[key] = float(g[key]) * unit
        for key in ("workspace_min", "workspace_max"):
            if key in g:
                g[key] = _vec(g[key], unit, f"geometry.{key}")
        geometry = TaskGeometry(**g)
    kw["geometry"] = geometry

    if "board" in data:
        board = _require_mapping(data["board"], "board")
        _check_keys(board, ("pegs", "rings"), "board")
        if "pegs" in board:
            pegs = []
            for i, raw in enumerate(board["pegs"]):
                if not (isinstance(raw, (list, tuple)) and len(raw) in (2, 3)):
                    raise ConfigError(f"board.pegs[{i}]: expected [x, y] or [x, y, z]")
                x, y = float(raw[0]) * unit, float(raw[1]) * unit
                z = float(raw[2]) * unit if len(raw) == 3 else geometry.peg_height
                pegs.append((x, y, z))
            kw["peg_centers"] = tuple(pegs)
        if "rings" in board:
            labels = peg_labels(kw.get("peg_centers", DEFAULT_PEGS))

            def peg_ref(v, where):
                if isinstance(v, int):
                    return v
                if isinstance(v, str) and v in labels:
                    return labels[v]
                raise ConfigError(f"{where}: unknown peg {v!r}")

            rings = []
            for i, raw in enumerate(board["rings"]):
                r = _require_mapping(raw, f"board.rings[{i}]")
                _check_keys(r, ("name", "start", "dest"), f"board.rings[{i}]")
                try:
                    rings.append(RingSpec(
                        str(r["name"]),
                        peg_ref(r["start"], f"board.rings[{i}].start"),
                        peg_ref(r["dest"], f"board.rings[{i}].dest"),
                    ))
                except KeyError as missing:
                    raise ConfigError(f"board.rings[{i}]: missing {missing}") from None
            kw["rings"] = tuple(rings)

    if "homes" in data:
        homes = _require_mapping(data["homes"], "homes")
        _check_keys(homes, ("left", "right"), "homes")
        if "left" in homes:
            kw["left_home"] = _vec(homes["left"], unit, "homes.left")
        if "right" in homes:
            kw["right_home"] = _vec(homes["right"], unit, "homes.right")

    if "operator" in data:
        op = dict(_require_mapping(data["operator"], "operator"))
        if "kind" not in op:
            raise ConfigError("operator: missing 'kind'")
        kw["operator"] = op

    if "max_sim_s" in data:
        kw["max_sim_s"] = float(data["max_sim_s"])

    try:
        return Scenario(**kw)
    except TypeError as exc:
        raise ConfigError(f"{name_hint}: {exc}") from None


def scenario_to_dict(sc: Scenario) -> dict:
    """Plain-data form of a scenario, meters throughout."""
    geo = {}
    default_geo = TaskGeometry()
    for key in _GEOMETRY_LENGTHS:
        v = getattr(sc.geometry, key)
        if v != getattr(default_geo, key):
            geo[key] = v
    for key in ("workspace_min", "workspace_max"):
        v = getattr(sc.geometry, key)
        if v != getattr(default_geo, key):
            geo[key] = list(v)
    out = {
        "name": sc.name,
        "units": "m",
        "clock": {"rate_hz": sc.fs_hz, "round_trip_s": sc.round_trip_s},
        "scaling": scaling_to_dict(sc.scaling),
        "board": {
            "pegs": [list(p) for p in sc.peg_centers],
            "rings": [{"name": r.name, "start": r.start_peg, "dest": r.dest_peg}
                      for r in sc.rings],
        },
        "homes": {"left": list(sc.left_home), "right": list(sc.right_home)},
        "operator": dict(sc.operator),
        "max_sim_s": sc.max_sim_s,
    }
    if geo:
        out["geometry"] = geo
    return out


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if data is None:
        data = {}
    return scenario_from_dict(data, name_hint=path.stem)


def save_scenario(sc: Scenario, path) -> None:
    path = Path(path)
    path.write_text(yaml.safe_dump(scenario_to_dict(sc), sort_keys=False))


def preset(name: str, round_trip_s: float = 0.75) -> Scenario:
    """Named study conditions; delay is a parameter, 750 ms round trip default."""
    scalings = {
        "c03": ConstantScaling(0.3),
        "c02": ConstantScaling(0.2),
        "c01": ConstantScaling(0.1),
        "positional": PositionalScaling(),
        "velocity": VelocityScaling(),
    }
    if name in scalings:
        return Scenario(name=name, round_trip_s=round_trip_s, scaling=scalings[name])
    if name == "zero_delay_perfect":
        return Scenario(name=name, round_trip_s=0.0, scaling=ConstantScaling(1.0),
                        operator={"kind": "pursuit", "noise_std": 0.0})
    raise ConfigError(
        f"unknown preset {name!r}; known: {', '.join([*scalings, 'zero_delay_perfect'])}")


def preset_conditions(round_trip_s: float = 0.75) -> list:
    return [preset(n, round_trip_s) for n in PRESET_CONDITIONS]


def scenario_search_dirs() -> list:
    raw = os.environ.get(ENV_SCENARIO_PATH, "")
    return [Path(p) for p in raw.split(os.pathsep) if p]


def find_scenario(ref: str, round_trip_s: float | None = None) -> Scenario:
    """Resolve a preset name, an explicit file path, or a name on the
    scenario search path; round_trip_s overrides the file's delay when given."""
    sc = None
    p = Path(ref)
    if p.suffix in (".yaml", ".yml") or p.exists():
        sc = load_scenario(p)
    else:
        try:
            sc = preset(ref, 0.75 if round_trip_s is None else round_trip_s)
            if ref == "zero_delay_perfect" and round_trip_s is None:
                return sc
        except ConfigError:
            for d in scenario_search_dirs():
                for suffix in (".yaml", ".yml"):
                    cand = d / (ref + suffix)
                    if cand.exists():
                        sc = load_scenario(cand)
                        break
                if sc is not None:
                    break
        if sc is None:
            raise ConfigError(f"no scenario named {ref!r} (not a preset, file, or on "
                              f"${ENV_SCENARIO_PATH})")
    if round_trip_s is not None and sc.round_trip_s != round_trip_s:
        sc = replace(sc, round_trip_s=round_trip_s)
    return sc
