"""Run configuration: an INI file of sections with key=value pairs.

Every key has a default matching the reference experiment, so an empty (or
absent) file runs the full stock setup. Unknown sections or keys, malformed
values and out-of-range settings are reported together with their location.
The effective, fully merged configuration can be echoed back out; feeding
the echo into a new run reproduces the original outputs.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields, replace

from .geometry import vec3
from .scene import (BLOCKER_DIMS, DEFAULT_FOV_DEG, DEFAULT_LAMBERTIAN_ORDER,
                    DEFAULT_PD_AREA, DEFAULT_ROOM_DIMS, DEFAULT_THETA_MEAN_DEG,
                    DEFAULT_THETA_STD_DEG, DEFAULT_UE_HEIGHT,
                    DEFAULT_WALL_REFLECTIVITY, BlockerModel, Luminaire,
                    OrientationModel, Room, Scene, build_metasurface_arrays,
                    build_mirror_arrays)
from .simulator import Scenario, SnrGrid


class ConfigError(Exception):
    """Invalid run configuration; carries one message per offending field."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for a simulation run."""

    room_length: float = DEFAULT_ROOM_DIMS[0]
    room_width: float = DEFAULT_ROOM_DIMS[1]
    room_height: float = DEFAULT_ROOM_DIMS[2]
    ap_x: float | None = None  # None: centered on the ceiling
    ap_y: float | None = None
    ap_z: float | None = None  # None: at ceiling height
    lambertian_order: float = DEFAULT_LAMBERTIAN_ORDER
    optical_power: float = 1.0
    ue_height: float = DEFAULT_UE_HEIGHT
    pd_area: float = DEFAULT_PD_AREA
    fov_deg: float = DEFAULT_FOV_DEG
    theta_mean_deg: float = DEFAULT_THETA_MEAN_DEG
    theta_std_deg: float = DEFAULT_THETA_STD_DEG
    densities: tuple[float, ...] = (0.0, 1.0)
    blocker_length: float = BLOCKER_DIMS[0]
    blocker_width: float = BLOCKER_DIMS[1]
    blocker_height: float = BLOCKER_DIMS[2]
    irs_type: str = "mirror"
    n_per_side: int = 50
    mirror_reflectivity: float = 0.95
    msa_efficiency: float = 0.8
    wall_reflectivity: float = DEFAULT_WALL_REFLECTIVITY
    patch_size: float = 0.25
    nlos_order: int = 2
    trials: int = 10_000
    seed: int = 1
    snr_start_db: float = 0.0
    snr_stop_db: float = 40.0
    snr_step_db: float = 1.0
    scenarios: tuple[str, ...] = ("los_only", "los_nlos", "los_nlos_irs")
    normalization: str = "per_scenario"
    out_dir: str = "out"

    def ap_position(self):
        x = self.room_length / 2.0 if self.ap_x is None else self.ap_x
        y = self.room_width / 2.0 if self.ap_y is None else self.ap_y
        z = self.room_height if self.ap_z is None else self.ap_z
        return x, y, z

    def grid(self) -> SnrGrid:
        return SnrGrid(self.snr_start_db, self.snr_stop_db, self.snr_step_db)

    def scenario_list(self) -> list[Scenario]:
        return [Scenario.from_name(s) for s in self.scenarios]


# (section, key) -> (attribute, parser); parser tags determine validation
_FLOAT, _INT, _STR, _FLOATS, _STRS = "float", "int", "str", "float_list", "str_list"

_SCHEMA: dict[tuple[str, str], tuple[str, str]] = {
    ("room", "length"): ("room_length", _FLOAT),
    ("room", "width"): ("room_width", _FLOAT),
    ("room", "height"): ("room_height", _FLOAT),
    ("ap", "x"): ("ap_x", _FLOAT),
    ("ap", "y"): ("ap_y", _FLOAT),
    ("ap", "z"): ("ap_z", _FLOAT),
    ("ap", "lambertian_order"): ("lambertian_order", _FLOAT),
    ("ap", "optical_power"): ("optical_power", _FLOAT),
    ("ue", "height"): ("ue_height", _FLOAT),
    ("ue", "area"): ("pd_area", _FLOAT),
    ("ue", "fov_deg"): ("fov_deg", _FLOAT),
    ("orientation", "theta_mean_deg"): ("theta_mean_deg", _FLOAT),
    ("orientation", "theta_std_deg"): ("theta_std_deg", _FLOAT),
    ("blockers", "densities"): ("densities", _FLOATS),
    ("blockers", "length"): ("blocker_length", _FLOAT),
    ("blockers", "width"): ("blocker_width", _FLOAT),
    ("blockers", "height"): ("blocker_height", _FLOAT),
    ("irs", "type"): ("irs_type", _STR),
    ("irs", "n_per_side"): ("n_per_side", _INT),
    ("irs", "mirror_reflectivity"): ("mirror_reflectivity", _FLOAT),
    ("irs", "metasurface_efficiency"): ("msa_efficiency", _FLOAT),
    ("walls", "reflectivity"): ("wall_reflectivity", _FLOAT),
    ("walls", "patch_size"): ("patch_size", _FLOAT),
    ("walls", "reflection_order"): ("nlos_order", _INT),
    ("sim", "trials"): ("trials", _INT),
    ("sim", "seed"): ("seed", _INT),
    ("sim", "snr_start_db"): ("snr_start_db", _FLOAT),
    ("sim", "snr_stop_db"): ("snr_stop_db", _FLOAT),
    ("sim", "snr_step_db"): ("snr_step_db", _FLOAT),
    ("sim", "scenarios"): ("scenarios", _STRS),
    ("sim", "normalization"): ("normalization", _STR),
    ("output", "dir"): ("out_dir", _STR),
}


def _parse_value(raw: str, kind: str):
    if kind == _FLOAT:
        return float(raw)
    if kind == _INT:
        return int(raw)
    if kind == _FLOATS:
        return tuple(float(v) for v in raw.split(",") if v.strip() != "")
    if kind == _STRS:
        return tuple(v.strip() for v in raw.split(",") if v.strip() != "")
    return raw.strip()


def load_config(path: str | None = None, **overrides) -> RunConfig:
    """Read an INI file (optional), apply keyword overrides, validate."""
    errors: list[str] = []
    values: dict = {}
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            with open(path, "r", encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError([f"cannot read config file {path!r}: {exc}"]) from exc
        except configparser.Error as exc:
            raise ConfigError([f"config parse error: {exc}"]) from exc
        for section in parser.sections():
            for key, raw in parser.items(section):
                spec = _SCHEMA.get((section, key))
                if spec is None:
                    errors.append(f"[{section}] {key}: unknown setting")
                    continue
                attr, kind = spec
                try:
                    values[attr] = _parse_value(raw, kind)
                except ValueError:
                    errors.append(f"[{section}] {key}: cannot parse {raw!r} as {kind}")
    for attr, val in overrides.items():
        if val is not None:
            values[attr] = val
    if errors:
        raise ConfigError(errors)
    cfg = replace(RunConfig(), **values)
    _validate(cfg, errors)
    if errors:
        raise ConfigError(errors)
    return cfg


def _validate(cfg: RunConfig, errors: list[str]) -> None:
    def check(ok: bool, where: str, msg: str) -> None:
        if not ok:
            errors.append(f"{where}: {msg}")

    check(cfg.room_length > 0 and cfg.room_width > 0 and cfg.room_height > 0,
          "[room]", "dimensions must be positive")
    check(cfg.lambertian_order > 0, "[ap] lambertian_order", "must be positive")
    check(cfg.optical_power > 0, "[ap] optical_power", "must be positive")
    if cfg.room_height > 0:
        check(0 < cfg.ue_height < cfg.room_height, "[ue] height",
              f"must lie strictly between 0 and the room height {cfg.room_height}")
    check(cfg.pd_area > 0, "[ue] area", "must be positive")
    check(0 < cfg.fov_deg <= 90, "[ue] fov_deg", "must lie in (0, 90]")
    check(0 <= cfg.theta_mean_deg <= 90, "[orientation] theta_mean_deg",
          "must lie in [0, 90]")
    check(cfg.theta_std_deg > 0, "[orientation] theta_std_deg", "must be positive")
    check(len(cfg.densities) > 0, "[blockers] densities", "needs at least one value")
    check(all(d >= 0 for d in cfg.densities), "[blockers] densities",
          "must be non-negative")
    check(cfg.blocker_length > 0 and cfg.blocker_width > 0 and cfg.blocker_height > 0,
          "[blockers]", "dimensions must be positive")
    check(cfg.irs_type in ("mirror", "metasurface", "none"), "[irs] type",
          f"unknown type {cfg.irs_type!r}")
    check(cfg.n_per_side >= 1, "[irs] n_per_side", "must be >= 1")
    check(0 <= cfg.mirror_reflectivity <= 1, "[irs] mirror_reflectivity",
          "must lie in [0, 1]")
    check(0 <= cfg.msa_efficiency <= 1, "[irs] metasurface_efficiency",
          "must lie in [0, 1]")
    check(0 <= cfg.wall_reflectivity <= 1, "[walls] reflectivity", "must lie in [0, 1]")
    check(cfg.patch_size > 0, "[walls] patch_size", "must be positive")
    check(cfg.nlos_order in (1, 2), "[walls] reflection_order", "must be 1 or 2")
    check(cfg.trials >= 1, "[sim] trials", "must be >= 1")
    check(cfg.seed >= 0, "[sim] seed", "must be non-negative")
    check(cfg.snr_step_db > 0, "[sim] snr_step_db", "must be positive")
    check(cfg.snr_stop_db >= cfg.snr_start_db, "[sim] snr_stop_db",
          "must not lie below snr_start_db")
    check(len(cfg.scenarios) > 0, "[sim] scenarios", "needs at least one entry")
    for name in cfg.scenarios:
        check(name in [s.value for s in Scenario], "[sim] scenarios",
              f"unknown scenario {name!r}")
    check(cfg.normalization in ("per_scenario", "baseline"), "[sim] normalization",
          f"unknown normalization {cfg.normalization!r}")
    if cfg.irs_type != "none" and cfg.n_per_side >= 1 and \
            min(cfg.room_length, cfg.room_width, cfg.room_height) > 0:
        try:
            from .irs import MIRROR_HEIGHT, MIRROR_WIDTH
            from .scene import _check_array_fit
            _check_array_fit(Room(cfg.room_length, cfg.room_width, cfg.room_height),
                             cfg.n_per_side, MIRROR_WIDTH, MIRROR_HEIGHT)
        except ValueError as exc:
            errors.append(f"[irs] n_per_side: {exc}")


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def effective_sections(cfg: RunConfig) -> dict[str, dict[str, str]]:
    """Canonical section/key/value view of the merged configuration.

    Computed defaults (the source position) are materialized so the echo is
    self-contained: writing it back to an INI file reproduces this run.
    """
    by_attr = {attr: (section, key) for (section, key), (attr, _) in _SCHEMA.items()}
    resolved = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    ax, ay, az = cfg.ap_position()
    resolved["ap_x"], resolved["ap_y"], resolved["ap_z"] = ax, ay, az
    out: dict[str, dict[str, str]] = {}
    for attr, value in resolved.items():
        if attr not in by_attr:
            continue
        section, key = by_attr[attr]
        out.setdefault(section, {})[key] = _fmt(value)
    return out


def build_scene(cfg: RunConfig, blocker_density: float) -> Scene:
    """Construct the immutable scene for one blocker density."""
    room = Room(cfg.room_length, cfg.room_width, cfg.room_height)
    ap = Luminaire(vec3(*cfg.ap_position()), vec3(0, 0, -1),
                   cfg.lambertian_order, cfg.optical_power)
    mirror_arrays = ()
    msa_arrays = ()
    if cfg.irs_type == "mirror":
        mirror_arrays = build_mirror_arrays(room, cfg.n_per_side, cfg.mirror_reflectivity)
    elif cfg.irs_type == "metasurface":
        msa_arrays = build_metasurface_arrays(room, cfg.n_per_side, cfg.msa_efficiency)
    return Scene(
        room=room,
        aps=(ap,),
        mirror_arrays=mirror_arrays,
        metasurface_arrays=msa_arrays,
        blocker_model=BlockerModel(blocker_density,
                                   (cfg.blocker_length, cfg.blocker_width,
                                    cfg.blocker_height)),
        orientation_model=OrientationModel(cfg.theta_mean_deg, cfg.theta_std_deg),
        ue_height=cfg.ue_height,
        wall_reflectivity=cfg.wall_reflectivity,
        pd_area=cfg.pd_area,
        pd_fov=math.radians(cfg.fov_deg),
    )
