"""Experiment configuration: JSON files with an ``include`` mechanism."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any

from ..controller import ControllerConfig
from ..errors import ConfigError
from ..observer import ObserverConfig
from ..plant import PlantParams, PlantState, nominal_b_hat
from ..signals import DisturbanceProfile, NoiseConfig, ReferenceConfig, Segment
from ..simloop import SimConfig

EXPERIMENT_IDS = ("e1", "e2a", "e2b", "e2c", "e3", "custom")
SWEEP_AXES = ("p", "lambda", "omega_o1", "alpha", "k", "lpf_tau")
DEFAULT_SEEDS = (0, 1, 2, 3, 4)
TOP_LEVEL_KEYS = {"include", "id", "plant", "reference", "disturbance", "noise", "observer",
                  "controller", "b_hat", "sim", "sweep", "seeds", "ripple_window", "bode",
                  "output_dir", "write_timeseries"}


class _Object(dict):
    """JSON object that remembers keys it saw more than once."""

    duplicates: tuple[str, ...] = ()


def _pairs_hook(pairs):
    obj = _Object()
    dup = []
    for key, value in pairs:
        if key in obj:
            dup.append(key)
        obj[key] = value
    obj.duplicates = tuple(dup)
    return obj


@dataclass(frozen=True)
class ObserverSettings:
    """Observer tuning before ``b_hat`` is known; anchored at the top or bottom level."""

    levels: int = 3
    alpha: float = 3.0
    omega_top: float | None = 3600.0
    omega_o1: float | None = None

    def build(self, b_hat: float) -> ObserverConfig:
        if self.omega_o1 is not None:
            return ObserverConfig.from_bottom(self.omega_o1, self.alpha, self.levels, b_hat)
        return ObserverConfig(self.levels, self.omega_top, self.alpha, b_hat)


@dataclass(frozen=True)
class ExperimentSpec:
    id: str = "custom"
    plant: PlantParams = field(default_factory=PlantParams)
    reference: ReferenceConfig = field(default_factory=ReferenceConfig)
    disturbance: DisturbanceProfile = field(default_factory=DisturbanceProfile.default)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    observer: ObserverSettings = field(default_factory=ObserverSettings)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    sweep: tuple[tuple[str, tuple], ...] = ()
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    ripple_window: tuple[float, float] = (0.2, 0.5)
    bode_lpf_taus: tuple[float, ...] = ()
    bode_grid: tuple[float, float, int] = (1.0, 1.0e6, 400)
    svg: bool = False
    output_dir: str = "out"
    write_timeseries: bool = True

    @property
    def b_hat(self) -> float:
        return self.controller.b_hat

    def observer_config(self) -> ObserverConfig:
        return self.observer.build(self.b_hat)

    def runs(self) -> list["RunSpec"]:
        """Cross product of the sweep axes and seeds, in declaration order."""
        names = [name for name, _ in self.sweep]
        value_lists = [values for _, values in self.sweep]
        out = []
        for combo in itertools.product(*value_lists):
            point = dict(zip(names, combo))
            for seed in self.seeds:
                out.append(RunSpec.from_point(self, point, seed))
        return out


@dataclass(frozen=True)
class RunSpec:
    """Fully resolved settings of one simulation."""

    run_id: str
    config_id: str
    point: tuple[tuple[str, Any], ...]
    seed: int
    plant: PlantParams
    reference: ReferenceConfig
    disturbance: DisturbanceProfile
    noise: NoiseConfig
    observer: ObserverConfig
    controller: ControllerConfig
    sim: SimConfig
    ripple_window: tuple[float, float]

    @classmethod
    def from_point(cls, spec: ExperimentSpec, point: dict, seed: int) -> "RunSpec":
        obs = spec.observer
        ctrl = spec.controller
        sim = spec.sim
        if "p" in point:
            obs = replace(obs, levels=point["p"])
        if "alpha" in point:
            obs = replace(obs, alpha=point["alpha"])
        if "lambda" in point:
            obs = replace(obs, omega_top=point["lambda"], omega_o1=None)
        if "omega_o1" in point:
            obs = replace(obs, omega_o1=point["omega_o1"], omega_top=None)
        if "k" in point:
            ctrl = replace(ctrl, k=point["k"])
        if "lpf_tau" in point:
            sim = replace(sim, lpf_tau=point["lpf_tau"])
        sim = replace(sim, seed=seed)
        config_id = "_".join(f"{name}={_fmt(v)}" for name, v in point.items()) or "base"
        return cls(run_id=f"{config_id}_seed={seed}", config_id=config_id,
                   point=tuple(point.items()), seed=seed, plant=spec.plant,
                   reference=spec.reference, disturbance=spec.disturbance,
                   noise=replace(spec.noise, seed=seed), observer=obs.build(spec.b_hat),
                   controller=ctrl, sim=sim, ripple_window=spec.ripple_window)


def _fmt(v) -> str:
    return "none" if v is None else format(v, "g")


# --------------------------------------------------------------------------
# loading
# --------------------------------------------------------------------------

def _read_json(path: Path) -> _Object:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not text.strip():
        return _Object()
    try:
        data = json.loads(text, object_pairs_hook=_pairs_hook)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def _merge(base: dict, override: dict) -> _Object:
    out = _Object(base)
    out.duplicates = tuple(getattr(override, "duplicates", ()))
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "sweep":
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def read_with_includes(path: Path, _stack: tuple[Path, ...] = ()) -> _Object:
    """Read ``path``, merging included files underneath its own keys."""
    path = Path(path).resolve()
    if path in _stack:
        raise ConfigError(f"include cycle through {path}")
    data = _read_json(path)
    includes = data.pop("include", [])
    if isinstance(includes, str):
        includes = [includes]
    if not isinstance(includes, list) or not all(isinstance(s, str) for s in includes):
        raise ConfigError(f"{path}: include must be a path or list of paths")
    merged = _Object()
    for inc in includes:
        merged = _merge(merged, read_with_includes(path.parent / inc, _stack + (path,)))
    return _merge(merged, data)


def load_spec(path) -> ExperimentSpec:
    """Parse and validate an experiment config file; missing fields take nominal values."""
    return spec_from_dict(read_with_includes(Path(path)))


def preset_path(experiment_id: str) -> Path:
    if experiment_id not in EXPERIMENT_IDS[:-1]:
        raise ConfigError(f"unknown experiment {experiment_id!r}; expected one of {EXPERIMENT_IDS[:-1]}")
    return Path(str(resources.files(__package__) / "presets" / f"{experiment_id}.json"))


def load_preset(experiment_id: str) -> ExperimentSpec:
    return load_spec(preset_path(experiment_id))


def _check_number(value, path: str, integer: bool = False, allow_none: bool = False):
    if value is None and allow_none:
        return None
    ok = isinstance(value, int) if integer else isinstance(value, (int, float))
    if isinstance(value, bool) or not ok:
        kind = "an integer" if integer else "a number"
        raise ConfigError(f"{path}: expected {kind}, got {value!r}")
    if not integer and not math.isfinite(value):
        raise ConfigError(f"{path}: must be finite")
    return value if integer else float(value)


def _section(data, path: str, allowed: dict[str, str]) -> dict:
    """Type-check a flat section; ``allowed`` maps key -> 'float'|'int'|'bool'|'str'|'float?'|'any'."""
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    if getattr(data, "duplicates", ()):
        raise ConfigError(f"{path}: duplicate key {data.duplicates[0]!r}")
    out = {}
    for key, value in data.items():
        kp = f"{path}.{key}"
        if key not in allowed:
            raise ConfigError(f"{kp}: unknown field")
        kind = allowed[key]
        if kind in ("float", "float?"):
            out[key] = _check_number(value, kp, allow_none=kind.endswith("?"))
        elif kind == "int":
            out[key] = _check_number(value, kp, integer=True)
        elif kind == "bool":
            if not isinstance(value, bool):
                raise ConfigError(f"{kp}: expected true/false")
            out[key] = value
        elif kind == "str":
            if not isinstance(value, str):
                raise ConfigError(f"{kp}: expected a string")
            out[key] = value
        else:
            out[key] = value
    return out


def _build(cls, kwargs: dict, path: str):
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _float_list(value, path: str, allow_none: bool = False) -> tuple:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a non-empty list")
    return tuple(_check_number(v, f"{path}[{i}]", allow_none=allow_none) for i, v in enumerate(value))


def _disturbance(data, path: str) -> DisturbanceProfile:
    if data is None:
        return DisturbanceProfile.default()
    raw = _section(data, path, {"segments": "any", "r_d": "float", "r_ddot": "float",
                                "min_dwell": "float", "preset": "str"})
    preset = raw.pop("preset", None)
    if preset is not None:
        if preset not in ("default", "none"):
            raise ConfigError(f"{path}.preset: expected 'default' or 'none'")
        if "segments" in raw:
            raise ConfigError(f"{path}: give either preset or segments")
        segs = DisturbanceProfile.default().segments if preset == "default" else ()
    else:
        items = raw.pop("segments", [])
        if not isinstance(items, list):
            raise ConfigError(f"{path}.segments: expected a list")
        segs = []
        for i, item in enumerate(items):
            sp = f"{path}.segments[{i}]"
            s = _section(item, sp, {"t_start": "float", "t_end": "float", "kind": "str", "params": "any"})
            params = _section(s.pop("params", {}), f"{sp}.params",
                              {k: "float" for k in ("value", "at", "after", "before", "amplitude",
                                                    "freq_hz", "phase", "offset", "slope")})
            for req in ("t_start", "t_end", "kind"):
                if req not in s:
                    raise ConfigError(f"{sp}.{req}: required")
            segs.append(_build(Segment, {**s, "params": params}, sp))
    return _build(DisturbanceProfile, {"segments": tuple(segs), **raw}, path)


def spec_from_dict(data: dict) -> ExperimentSpec:
    """Validate a merged config mapping into an :class:`ExperimentSpec`."""
    if getattr(data, "duplicates", ()):
        raise ConfigError(f"duplicate top-level key {data.duplicates[0]!r}")
    unknown = sorted(set(data) - TOP_LEVEL_KEYS)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown field")

    exp_id = data.get("id", "custom")
    if exp_id not in EXPERIMENT_IDS:
        raise ConfigError(f"id: expected one of {EXPERIMENT_IDS}, got {exp_id!r}")

    plant = _build(PlantParams, _section(data.get("plant"), "plant",
                                         {f.name: "float" for f in fields(PlantParams)}), "plant")

    ref_raw = _section(data.get("reference"), "reference",
                       {"bias": "float", "square_amplitude": "float", "period": "float",
                        "filter_num": "float", "filter_den": "any", "amplitude_is_peak_to_peak": "bool"})
    if "filter_den" in ref_raw:
        den = _float_list(ref_raw["filter_den"], "reference.filter_den")
        if len(den) != 3:
            raise ConfigError("reference.filter_den: expected 3 coefficients")
        ref_raw["filter_den"] = den
    reference = _build(ReferenceConfig, ref_raw, "reference")

    disturbance = _disturbance(data.get("disturbance"), "disturbance")
    noise = _build(NoiseConfig, _section(data.get("noise"), "noise",
                                         {"amplitude": "float", "distribution": "str", "seed": "int"}),
                   "noise")

    b_hat = _check_number(data.get("b_hat"), "b_hat", allow_none=True)
    if b_hat is None:
        b_hat = nominal_b_hat(plant)

    obs_raw = _section(data.get("observer"), "observer",
                       {"levels": "int", "alpha": "float", "omega_top": "float", "omega_o1": "float"})
    if "omega_top" in obs_raw and "omega_o1" in obs_raw:
        raise ConfigError("observer: give either omega_top or omega_o1, not both")
    if "omega_o1" in obs_raw:
        obs_raw["omega_top"] = None
    observer = ObserverSettings(**obs_raw)
    _build(observer.build, {"b_hat": b_hat}, "observer")

    ctrl_raw = _section(data.get("controller"), "controller",
                        {"k": "float", "duty_min": "float", "duty_max": "float"})
    controller = _build(ControllerConfig, {**ctrl_raw, "b_hat": b_hat}, "controller")

    sim_raw = _section(data.get("sim"), "sim",
                       {"ts": "float", "substeps": "int", "duration": "float", "r_vo": "float",
                        "r_il": "float", "lpf_tau": "float?", "divergence_threshold": "float",
                        "observer_init": "str", "initial_state": "any"})
    sim_raw.pop("seed", None)
    if sim_raw.get("initial_state") is not None:
        st = _section(sim_raw["initial_state"], "sim.initial_state", {"v_o": "float", "i_l": "float"})
        if set(st) != {"v_o", "i_l"}:
            raise ConfigError("sim.initial_state: needs v_o and i_l")
        sim_raw["initial_state"] = PlantState(**st)
    sim = _build(SimConfig, sim_raw, "sim")

    sweep = _sweep(data.get("sweep"))
    seeds_raw = data.get("seeds", list(DEFAULT_SEEDS))
    if not isinstance(seeds_raw, list) or not seeds_raw:
        raise ConfigError("seeds: expected a non-empty list of integers")
    seeds = tuple(_check_number(s, f"seeds[{i}]", integer=True) for i, s in enumerate(seeds_raw))
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds: duplicate seed")

    window = _float_list(data.get("ripple_window", [0.2, 0.5]), "ripple_window")
    if len(window) != 2 or not 0.0 <= window[0] < window[1] <= sim.duration:
        raise ConfigError("ripple_window: expected [t0, t1] with 0 <= t0 < t1 <= sim.duration")

    bode = _section(data.get("bode"), "bode", {"lpf_taus": "any", "omega_min": "float",
                                               "omega_max": "float", "n_points": "int", "svg": "bool"})
    taus = tuple(_float_list(bode["lpf_taus"], "bode.lpf_taus")) if bode.get("lpf_taus") else ()
    if any(t <= 0.0 for t in taus):
        raise ConfigError("bode.lpf_taus: time constants must be > 0")
    grid = (bode.get("omega_min", 1.0), bode.get("omega_max", 1.0e6), bode.get("n_points", 400))
    if not 0.0 < grid[0] < grid[1] or grid[2] < 2:
        raise ConfigError("bode: need 0 < omega_min < omega_max and n_points >= 2")

    output_dir = data.get("output_dir", "out")
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir: expected a string")
    write_ts = data.get("write_timeseries", True)
    if not isinstance(write_ts, bool):
        raise ConfigError("write_timeseries: expected true/false")

    spec = ExperimentSpec(id=exp_id, plant=plant, reference=reference, disturbance=disturbance,
                          noise=noise, observer=observer, controller=controller, sim=sim,
                          sweep=sweep, seeds=seeds, ripple_window=window, bode_lpf_taus=taus,
                          bode_grid=grid, svg=bode.get("svg", False), output_dir=output_dir,
                          write_timeseries=write_ts)
    validate_runs(spec)
    return spec


def _sweep(data) -> tuple[tuple[str, tuple], ...]:
    if data is None:
        return ()
    if not isinstance(data, dict):
        raise ConfigError("sweep: expected an object mapping axis name to values")
    if getattr(data, "duplicates", ()):
        raise ConfigError(f"sweep: duplicate sweep axis {data.duplicates[0]!r}")
    if "lambda" in data and "omega_o1" in data:
        raise ConfigError("sweep: lambda and omega_o1 are the same axis; give one")
    axes = []
    for name, values in data.items():
        path = f"sweep.{name}"
        if name not in SWEEP_AXES:
            raise ConfigError(f"{path}: unknown sweep axis; expected one of {SWEEP_AXES}")
        if name == "p":
            if not isinstance(values, list) or not values:
                raise ConfigError(f"{path}: expected a non-empty list")
            vals = tuple(_check_number(v, f"{path}[{i}]", integer=True) for i, v in enumerate(values))
        else:
            vals = _float_list(values, path, allow_none=(name == "lpf_tau"))
        if len(set(vals)) != len(vals):
            raise ConfigError(f"{path}: duplicate value")
        axes.append((name, vals))
    return tuple(axes)


def validate_runs(spec: ExperimentSpec) -> None:
    """Build every run's configs so bad sweep points fail before anything runs."""
    try:
        runs = spec.runs()
    except ConfigError as exc:
        raise ConfigError(f"sweep: {exc}") from exc
    for run in runs[:: len(spec.seeds)]:
        try:
            run.observer.check_step(run.sim.ts)
        except ConfigError as exc:
            raise ConfigError(f"sweep point {run.config_id}: {exc}") from exc


def with_overrides(spec: ExperimentSpec, *, seeds=None, output_dir=None, lpf_taus=None) -> ExperimentSpec:
    changes = {}
    if seeds is not None:
        changes["seeds"] = tuple(seeds)
    if output_dir is not None:
        changes["output_dir"] = str(output_dir)
    if lpf_taus is not None:
        if any(t <= 0.0 for t in lpf_taus):
            raise ConfigError("lpf taus must be > 0")
        changes["bode_lpf_taus"] = tuple(lpf_taus)
    return replace(spec, **changes)
