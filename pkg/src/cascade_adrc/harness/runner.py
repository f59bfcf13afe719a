"""Run experiments and write their output files."""

from __future__ import annotations

import csv
import datetime as _dt
import json
import logging
import math
import os
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from importlib import metadata
from pathlib import Path

import numpy as np

from .. import analysis
from ..errors import ObserverDivergence
from ..metrics import (CRITERIA_KEYS, evaluate, integral_abs, ripple_amplitude, saturation_fraction,
                       total_variation)
from ..simloop import RECORD_FIELDS, SimResult, run
from . import svg
from .config import ExperimentSpec, RunSpec

log = logging.getLogger(__name__)

TRACE_DECIMATION = 10
TRACE_FIELDS = ("t", "v_r", "v_o", "e", "y_meas", "duty", "z3_hat", "f_star_truth")
SUMMARY_METRICS = CRITERIA_KEYS[:-1]


@dataclass(frozen=True)
class RunOutcome:
    run_id: str
    config_id: str
    point: tuple
    seed: int
    criteria: dict
    status: str


@dataclass(frozen=True)
class ExperimentResult:
    runs: list[RunOutcome]
    summary: list[dict]
    output_dir: Path

    @property
    def diverged(self) -> bool:
        return any(r.status == "diverged" for r in self.runs)


def simulate(run_spec: RunSpec) -> tuple[SimResult, bool]:
    """One closed-loop run; on divergence returns the partial records."""
    try:
        res = run(run_spec.plant, run_spec.reference, run_spec.disturbance, run_spec.noise,
                  run_spec.observer, run_spec.controller, run_spec.sim)
        return res, False
    except ObserverDivergence as exc:
        log.error("run %s diverged: %s", run_spec.run_id, exc)
        return SimResult(list(exc.partial)), True


def criteria_for(result: SimResult, run_spec: RunSpec, diverged: bool) -> dict:
    """Criteria JSON payload; entries that cannot be evaluated are ``None``."""
    ctrl = run_spec.controller
    if not diverged:
        return evaluate(result, run_spec.ripple_window, ctrl.duty_min, ctrl.duty_max).to_dict()
    out = dict.fromkeys(CRITERIA_KEYS)
    out["diverged"] = True
    if len(result) < 2:
        return out
    t = result.column("t")
    duty = result.column("duty")
    out["iae"] = integral_abs(t, result.column("e"))
    out["effort"] = integral_abs(t, duty)
    out["jitter"] = total_variation(t, duty)
    out["saturation_fraction"] = saturation_fraction(result.column("duty_unsat"), ctrl.duty_min, ctrl.duty_max)
    try:
        out["ripple_amplitude"] = ripple_amplitude(t, result.column("y_meas"), run_spec.ripple_window)
    except ValueError:
        pass
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in out.items()}


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_timeseries(path: Path, result: SimResult) -> None:
    _write_csv(path, RECORD_FIELDS, result.records)


def execute_run(run_spec: RunSpec, out_dir: Path, write_series: bool = True,
                write_trace: bool = False) -> RunOutcome:
    """Simulate, then write ``runs/<id>/timeseries.csv`` and ``criteria.json``."""
    result, diverged = simulate(run_spec)
    crit = criteria_for(result, run_spec, diverged)
    run_dir = out_dir / "runs" / run_spec.run_id
    if write_series:
        write_timeseries(run_dir / "timeseries.csv", result)
    _write_json(run_dir / "criteria.json", crit)
    if write_trace and len(result):
        idx = [RECORD_FIELDS.index(f) for f in TRACE_FIELDS]
        rows = ([r[i] for i in idx] for r in result.records[::TRACE_DECIMATION])
        _write_csv(out_dir / "plots" / f"traces_{run_spec.config_id}.csv", TRACE_FIELDS, rows)
    return RunOutcome(run_spec.run_id, run_spec.config_id, run_spec.point, run_spec.seed, crit,
                      "diverged" if diverged else "ok")


def _execute_packed(args) -> RunOutcome:
    return execute_run(*args)


def summarize(outcomes: list[RunOutcome], axis_names: list[str]) -> list[dict]:
    """Seed-averaged criteria per sweep point, in sweep order."""
    groups: dict[str, list[RunOutcome]] = {}
    for o in outcomes:
        groups.setdefault(o.config_id, []).append(o)
    rows = []
    for config_id, members in groups.items():
        row = {"config_id": config_id, **dict(members[0].point), "n_seeds": len(members),
               "n_diverged": sum(m.status == "diverged" for m in members)}
        for key in SUMMARY_METRICS:
            vals = [m.criteria[key] for m in members if m.criteria[key] is not None]
            row[key] = float(np.mean(vals)) if len(vals) == len(members) else None
        rows.append(row)
    return rows


def run_experiment(spec: ExperimentSpec, out_dir=None, jobs: int = 1) -> ExperimentResult:
    """Execute every sweep point for every seed and write all outputs.

    Layout under ``out_dir``: ``runs/<run_id>/{timeseries.csv,criteria.json}``,
    ``aggregate.csv`` (one row per run), ``summary.csv`` (seed means per
    sweep point), ``plots/`` (decimated first-seed traces), ``bode/`` and
    ``metadata.json``, the only file carrying timestamps.
    """
    out = Path(out_dir if out_dir is not None else spec.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()

    runs = spec.runs()
    first_seed = spec.seeds[0]
    tasks = [(r, out, spec.write_timeseries, r.seed == first_seed) for r in runs]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_execute_packed, tasks))
    else:
        outcomes = [_execute_packed(t) for t in tasks]
    # deterministic reduce: keep sweep-declaration order, never completion order
    order = {r.run_id: i for i, r in enumerate(runs)}
    outcomes.sort(key=lambda o: order[o.run_id])

    axis_names = [name for name, _ in spec.sweep]
    header = ["run_id", *axis_names, "seed", "status", *CRITERIA_KEYS]
    _write_csv(out / "aggregate.csv", header,
               ([o.run_id, *[_cell(v) for _, v in o.point], o.seed, o.status,
                 *[_cell(o.criteria[k]) for k in CRITERIA_KEYS]] for o in outcomes))
    summary = summarize(outcomes, axis_names)
    s_header = ["config_id", *axis_names, "n_seeds", "n_diverged", *SUMMARY_METRICS]
    _write_csv(out / "summary.csv", s_header, ([_cell(row[k]) for k in s_header] for row in summary))
    emit_bode(spec, out / "bode")

    _write_json(out / "metadata.json", {
        "experiment": spec.id,
        "started_utc": started,
        "finished_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "n_runs": len(outcomes),
        "jobs": jobs,
        "package_version": _version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
    })
    return ExperimentResult(outcomes, summary, out)


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return v


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


# --------------------------------------------------------------------------
# Bode data
# --------------------------------------------------------------------------

def write_bode_csv(path: Path, resp: analysis.FrequencyResponse) -> None:
    _write_csv(path, ("omega_rad_s", "magnitude_db", "phase_deg"),
               zip(resp.omegas.tolist(), resp.magnitudes.tolist(), resp.phases.tolist()))


def _levels(spec: ExperimentSpec) -> tuple[int, ...]:
    for name, values in spec.sweep:
        if name == "p":
            return tuple(sorted(values))
    return (1, 2, 3)


def emit_bode(spec: ExperimentSpec, out_dir, lpf_taus=None) -> list[Path]:
    """Write ``G_uy`` and ``G_zn`` magnitude curves for every observer depth.

    Files: ``g_uy_p<p>.csv``, ``g_zn_p<p>.csv`` and, per filter time
    constant, ``g_zn_p<p>_tau<tau>.csv``; ``markers.json`` holds the
    frequencies of the controller bandwidth and of the sampling rate.
    """
    out = Path(out_dir)
    taus = spec.bode_lpf_taus if lpf_taus is None else tuple(lpf_taus)
    omegas = analysis.log_grid(*spec.bode_grid)
    written = []
    uy_curves, zn_curves = {}, {}
    for p in _levels(spec):
        obs = replace(spec.observer, levels=p).build(spec.b_hat)
        g_uy = analysis.control_from_measurement_response(obs, spec.controller, omegas)
        path = out / f"g_uy_p{p}.csv"
        write_bode_csv(path, g_uy)
        written.append(path)
        uy_curves[f"p={p}"] = g_uy
        g_zn = analysis.noise_to_disturbance_error_response(obs, omegas)
        path = out / f"g_zn_p{p}.csv"
        write_bode_csv(path, g_zn)
        written.append(path)
        zn_curves[f"p={p}"] = g_zn
        for tau in taus:
            g = analysis.noise_to_disturbance_error_response(obs, omegas, lpf_tau=tau)
            path = out / f"g_zn_p{p}_tau{tau:g}.csv"
            write_bode_csv(path, g)
            written.append(path)
            zn_curves[f"p={p} tau={tau:g}"] = g
    markers = {"k": spec.controller.k, "omega_s": 2.0 * math.pi / spec.sim.ts, "lpf_taus": list(taus),
               "levels": list(_levels(spec))}
    path = out / "markers.json"
    _write_json(path, markers)
    written.append(path)
    if spec.svg:
        marks = [markers["k"], markers["omega_s"]]
        for name, curves in (("g_uy", uy_curves), ("g_zn", zn_curves)):
            path = out / f"{name}.svg"
            path.write_text(svg.bode_chart(curves, marks, title=name))
            written.append(path)
    return written
