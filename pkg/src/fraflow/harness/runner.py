"""Execute an :class:`ExperimentSpec` and write its output files.

Every run directory gets ``trajectory.csv``, ``functionals.csv``,
``summary.txt`` and ``record.json``; a sweep adds ``sweep.csv`` and one
sub-directory per grid point.  CSV bodies are deterministic; the only
timestamp lives in the ``summary.txt`` header.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .. import diagnostics as diag
from ..dynamics import (
    FlowConfig,
    ScalarFdeConfig,
    picard_volterra_solve,
    simulate,
    simulate_scalar_fde,
)
from ..errors import ContractionError, DivergenceError, PreconditionError, ToleranceNotMetError
from ..frackernel import UniformGrid, mittag_leffler_array
from ..objectives import build_objective
from .config import ExperimentSpec

FLOAT_FMT = "%.17g"
SWEEP_COLUMNS = (
    "alpha", "theta", "final_suboptimality", "fitted_exponent", "r_squared",
    "oscillation_count", "diverged", "model", "mode", "q",
)


class RunFailure(RuntimeError):
    """A run stopped early; partial outputs were written.  ``record`` is set."""

    def __init__(self, message, record):
        super().__init__(message)
        self.record = record


@dataclass
class RunRecord:
    spec_hash: str
    name: str
    kind: str
    out_dir: str
    files: list = field(default_factory=list)
    rate_reports: list = field(default_factory=list)
    envelope_reports: list = field(default_factory=list)
    wall_ms: float = 0.0
    diverged: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def write(self, path):
        path = Path(path)
        with open(path, "w") as fh:
            json.dump(_jsonable(asdict(self)), fh, indent=2, sort_keys=True)
        return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


# -- building blocks -----------------------------------------------------------


def make_objective(spec_obj, q=None):
    params = {k: v for k, v in spec_obj.items() if k != "name"}
    if q is not None and spec_obj["name"] == "power_well":
        params["q"] = q
    return build_objective(spec_obj["name"], **params)


def make_flow_config(flow, alpha=None, theta=None, mode=None, t_end=None):
    alpha = flow["alpha"] if alpha is None else alpha
    theta = flow["theta"] if theta is None else theta
    mode = flow["mode"] if mode is None else mode
    grid = UniformGrid.from_horizon(flow["t0"], flow["t_end"] if t_end is None else t_end, flow["dt"])
    return FlowConfig(alpha, theta, mode, grid, flow["x0"], flow["v0"], flow["scheme"])


def flow_functionals(traj, obj):
    """Columns of ``functionals.csv``; NaN where a functional is undefined."""
    n = len(traj)
    nan = np.full(n, np.nan)
    energy = diag.energy_series(traj, obj).values if obj.f_star is not None else nan
    subopt = diag.suboptimality_series(traj, obj).values if obj.f_star is not None else nan
    lyap = diag.lyapunov_series(traj, obj.minimizer).values if obj.minimizer is not None else nan
    return {"energy": energy, "lyapunov_v": lyap, "suboptimality": subopt}


def write_csv(path, header, columns):
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, data, fmt=FLOAT_FMT, delimiter=",", header=",".join(header), comments="")
    return str(path)


def write_trajectory(path, traj):
    d = traj.states.shape[1]
    header = ["t"] + [f"x_{i}" for i in range(d)] + [f"v_{i}" for i in range(d)] + ["frac_term_norm"]
    cols = [traj.times] + list(traj.states.T) + list(traj.velocities.T)
    cols.append(np.linalg.norm(traj.frac_term, axis=1))
    return write_csv(path, header, cols)


def write_functionals(path, times, funcs):
    keys = ("energy", "lyapunov_v", "suboptimality")
    return write_csv(path, ("t",) + keys, [times] + [funcs[k] for k in keys])


def fit_rates(series, outputs):
    """All requested fits on ``series``; failures are reported, not raised."""
    choice = outputs["fit"]
    if choice == "none":
        return [], None
    window = tuple(outputs["window"]) if outputs["window"] else None
    reports, notes = [], []
    kinds = {"power": ["power"], "exponential": ["exponential"], "best": ["power", "exponential"]}
    for kind in kinds[choice]:
        fn = diag.fit_power_rate if kind == "power" else diag.fit_exponential_rate
        try:
            reports.append(fn(series, window, outputs["envelope"]))
        except PreconditionError as exc:
            notes.append(f"{kind} fit skipped: {exc}")
    best = max(reports, key=lambda r: r.r_squared) if reports else None
    return reports, best if best is not None else "; ".join(notes)


def max_increase(values):
    d = np.diff(values)
    return float(d.max()) if d.size else 0.0


def _fmt(x):
    if x is None:
        return "none"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.10g}"
    return str(x)


def _summary_header(spec, out_dir):
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return [
        f"# fraflow summary for {spec.name}",
        f"# generated {stamp}",
        f"experiment: {spec.name}",
        f"kind: {spec.kind}",
        f"spec_hash: {spec.spec_hash}",
    ]


def _report_lines(label, reports, best):
    lines = []
    for r in reports:
        what = "exponent" if r.model == "power_law" else "rate"
        lines.append(
            f"fit[{label}] {r.model}: {what}={_fmt(r.exponent_or_rate)} "
            f"r_squared={_fmt(r.r_squared)} window=[{_fmt(r.window[0])}, {_fmt(r.window[1])}]"
        )
    if isinstance(best, str):
        lines.append(f"fit[{label}] note: {best}")
    elif best is not None:
        lines.append(f"fit[{label}] best: {best.model}")
    return lines


def _prepare_dir(out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


# -- single flow run -----------------------------------------------------------


def analyse_flow(traj, obj, cfg, outputs):
    """Reports and summary lines for a flow trajectory."""
    lines, rates, envelopes = [], [], []
    details = {}
    funcs = flow_functionals(traj, obj)
    t = traj.times
    if obj.f_star is not None:
        sub = diag.FunctionalSeries(t, funcs["suboptimality"], "suboptimality")
        details["final_suboptimality"] = float(sub.values[-1])
        lines.append(f"final_suboptimality: {_fmt(sub.values[-1])}")
        reports, best = fit_rates(sub, outputs)
        rates.extend(reports)
        lines += _report_lines("suboptimality", reports, best)
        if best is not None and not isinstance(best, str):
            details["best_fit"] = asdict(best)
        if len(sub) >= 3:
            details["oscillation_count"] = diag.oscillation_count(sub)
            lines.append(f"oscillation_count[suboptimality]: {details['oscillation_count']}")
        e = funcs["energy"]
        inc = max_increase(e)
        tol = 1e-8 * e[0] + 10.0 * cfg.grid.dt**2
        details["energy_max_increase"] = inc
        lines.append(f"energy_max_increase: {_fmt(inc)} (tolerance {_fmt(tol)})")
        if obj.loja_phi is not None:
            cand = diag.loja_candidate_exponents(obj.loja_phi, cfg.theta)
            details["loja_candidates"] = cand
            lines.append(
                f"lojasiewicz_candidates (phi={_fmt(obj.loja_phi)}, theta={_fmt(cfg.theta)}): "
                + " ".join(f"{k}={_fmt(v)}" for k, v in cand.items())
            )
            best_power = next((r for r in reports if r.model == "power_law"), None)
            if best_power is not None:
                devs = {
                    k: (best_power.exponent_or_rate - v) / abs(v) if v and math.isfinite(v) else math.nan
                    for k, v in cand.items()
                }
                details["loja_relative_deviation"] = devs
                lines.append(
                    "lojasiewicz_relative_deviation: "
                    + " ".join(f"{k}={_fmt(v)}" for k, v in devs.items())
                )
    if obj.minimizer is not None:
        dist = float(np.linalg.norm(traj.states[-1] - obj.minimizer))
        details["final_distance"] = dist
        lines.append(f"final_distance_to_minimizer: {_fmt(dist)}")
        V = diag.FunctionalSeries(t, funcs["lyapunov_v"], "lyapunov_v")
        lo, hi = tuple(outputs["window"]) if outputs["window"] else diag.default_window(t)
        tail = V.values[(t >= lo) & (t <= hi)]
        details["lyapunov_tail_max_increase"] = max_increase(tail)
        lines.append(f"lyapunov_tail_max_increase: {_fmt(details['lyapunov_tail_max_increase'])}")
        if outputs["ml_eta"] is not None:
            try:
                env = diag.ml_envelope_check(V, outputs["ml_eta"], cfg.theta, cfg.grid.t0)
                envelopes.append(env)
                details["ml_envelope"] = asdict(env)
                lines.append(
                    f"ml_envelope (eta={_fmt(outputs['ml_eta'])}, theta={_fmt(cfg.theta)}): "
                    f"max_violation_ratio={_fmt(env.max_violation_ratio)} "
                    f"first_violation_time={_fmt(env.first_violation_time)}"
                )
            except PreconditionError as exc:
                lines.append(f"ml_envelope: skipped ({exc})")
        if not traj.diverged:
            e1 = np.zeros(obj.dim)
            e1[0] = 1.0
            anchors = diag.anchor_limit_check(
                traj, [obj.minimizer, obj.minimizer + e1], outputs["tail_fraction"]
            )
            details["anchor_tail_oscillation"] = [a["tail_oscillation"] for a in anchors]
            lines.append(
                "anchor_tail_oscillation: "
                + ", ".join(_fmt(a["tail_oscillation"]) for a in anchors)
            )
    return funcs, rates, envelopes, details, lines


def run_flow(spec: ExperimentSpec, out_dir) -> RunRecord:
    out = _prepare_dir(out_dir)
    start = time.perf_counter()
    obj = make_objective(spec.objective)
    cfg = make_flow_config(spec.flow)
    record = RunRecord(spec.spec_hash, spec.name, spec.kind, str(out))
    failure = None
    try:
        traj = simulate(cfg, obj)
    except DivergenceError as exc:
        traj, failure = exc.trajectory, exc
    record.diverged.append(failure is not None)
    funcs, rates, envelopes, details, lines = analyse_flow(traj, obj, cfg, spec.outputs)
    record.files.append(write_trajectory(out / "trajectory.csv", traj))
    record.files.append(write_functionals(out / "functionals.csv", traj.times, funcs))
    record.rate_reports = [asdict(r) for r in rates]
    record.envelope_reports = [asdict(e) for e in envelopes]
    record.details = details
    head = _summary_header(spec, out) + [
        f"objective: {obj.name} (dim {obj.dim}, {obj.convexity_class})",
        f"mode: {cfg.mode} scheme={cfg.scheme} alpha={_fmt(cfg.alpha)} theta={_fmt(cfg.theta)}",
        f"grid: t0={_fmt(cfg.grid.t0)} dt={_fmt(cfg.grid.dt)} t_end={_fmt(cfg.grid.t_end)}",
        f"diverged: {failure is not None}",
    ]
    if failure is not None:
        head.append(f"divergence: {failure}")
    record.wall_ms = 1e3 * (time.perf_counter() - start)
    record.files.append(_write_summary(out, head + lines, record))
    record.files.append(str(record.write(out / "record.json")))
    if failure is not None:
        raise RunFailure(str(failure), record)
    return record


def _write_summary(out, lines, record):
    lines = lines + [f"wall_clock_ms: {record.wall_ms:.1f}"]
    path = out / "summary.txt"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


# -- scalar comparison equation ----------------------------------------------


def run_scalar_fde(spec: ExperimentSpec, out_dir) -> RunRecord:
    out = _prepare_dir(out_dir)
    start = time.perf_counter()
    p = spec.fde
    grid = UniformGrid.from_horizon(p["t0"], p["t_end"], p["dt"])
    cfg = ScalarFdeConfig(p["gamma"], p["theta"], p["v0"], grid)
    V = simulate_scalar_fde(cfg)
    t = grid.times()
    exact = p["v0"] * mittag_leffler_array(p["theta"], 1.0, -p["gamma"] * (t - p["t0"]) ** p["theta"])
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(V - exact) / np.abs(exact)
    record = RunRecord(spec.spec_hash, spec.name, spec.kind, str(out))
    record.diverged.append(False)
    nan = np.full(t.size, np.nan)
    record.files.append(
        write_csv(out / "trajectory.csv", ("t", "x_0", "v_0", "frac_term_norm"),
                  [t, V, nan, p["gamma"] * np.abs(V)])
    )
    record.files.append(
        write_functionals(out / "functionals.csv", t,
                          {"energy": nan, "lyapunov_v": np.abs(V), "suboptimality": nan})
    )
    lines = [
        f"equation: caputo D^theta V = -gamma V, gamma={_fmt(p['gamma'])} theta={_fmt(p['theta'])} "
        f"V0={_fmt(p['v0'])}",
        f"grid: t0={_fmt(grid.t0)} dt={_fmt(grid.dt)} t_end={_fmt(grid.t_end)}",
        f"final_V: {_fmt(V[-1])}",
        f"closed_form_final_V: {_fmt(exact[-1])}",
        f"final_relative_error: {_fmt(rel[-1])}",
        f"max_relative_error: {_fmt(np.nanmax(rel[1:]))}",
    ]
    details = {"final_V": float(V[-1]), "closed_form_final_V": float(exact[-1]),
               "max_relative_error": float(np.nanmax(rel[1:]))}
    if p["gamma"] > 0 and p["v0"] > 0:
        series = diag.FunctionalSeries(t, np.abs(V), "lyapunov_v")
        env = diag.ml_envelope_check(series, p["gamma"], p["theta"], p["t0"])
        record.envelope_reports.append(asdict(env))
        lines.append(
            f"ml_envelope (eta={_fmt(p['gamma'])}, theta={_fmt(p['theta'])}): "
            f"max_violation_ratio={_fmt(env.max_violation_ratio)} "
            f"first_violation_time={_fmt(env.first_violation_time)}"
        )
        reports, best = fit_rates(series, spec.outputs)
        record.rate_reports = [asdict(r) for r in reports]
        lines += _report_lines("V", reports, best)
    record.details = details
    record.wall_ms = 1e3 * (time.perf_counter() - start)
    record.files.append(_write_summary(out, _summary_header(spec, out) + lines, record))
    record.files.append(str(record.write(out / "record.json")))
    return record


# -- Picard cross-check -------------------------------------------------------


def run_picard(spec: ExperimentSpec, out_dir) -> RunRecord:
    out = _prepare_dir(out_dir)
    start = time.perf_counter()
    obj = make_objective(spec.objective)
    t_end = spec.picard.get("t_end") or spec.flow["t_end"]
    cfg = make_flow_config(spec.flow, mode="value_memory", t_end=t_end)
    record = RunRecord(spec.spec_hash, spec.name, spec.kind, str(out))
    head = _summary_header(spec, out) + [
        f"objective: {obj.name} (dim {obj.dim})",
        f"mode: value_memory alpha={_fmt(cfg.alpha)} theta={_fmt(cfg.theta)}",
        f"grid: t0={_fmt(cfg.grid.t0)} dt={_fmt(cfg.grid.dt)} t_end={_fmt(cfg.grid.t_end)}",
    ]
    stepped = simulate(cfg, obj)
    record.files.append(write_trajectory(out / "stepper_trajectory.csv", stepped))
    try:
        traj = picard_volterra_solve(
            cfg, obj, cfg.grid.n_steps, spec.picard["max_iters"], spec.picard["tol"]
        )
    except (ContractionError, ToleranceNotMetError) as exc:
        record.diverged.append(True)
        record.details = {"picard_failure": str(exc), "iterate_differences": exc.differences}
        record.wall_ms = 1e3 * (time.perf_counter() - start)
        lines = head + [f"picard_failure: {exc}",
                        "iterate_differences: " + ", ".join(_fmt(d) for d in exc.differences)]
        record.files.append(_write_summary(out, lines, record))
        record.files.append(str(record.write(out / "record.json")))
        raise RunFailure(str(exc), record) from exc
    record.diverged.append(False)
    diffs = traj.iterate_differences
    sup = float(np.max(np.abs(traj.states - stepped.states)))
    monotone = all(b < a for a, b in zip(diffs[1:], diffs[2:]))
    funcs = flow_functionals(traj, obj)
    record.files.append(write_trajectory(out / "trajectory.csv", traj))
    record.files.append(write_functionals(out / "functionals.csv", traj.times, funcs))
    record.details = {
        "sup_difference_vs_stepper": sup,
        "iterations": len(diffs),
        "iterate_differences": diffs,
        "decreasing_after_iteration_2": monotone,
        "residual": traj.residual,
    }
    if obj.f_star is not None:
        e = funcs["energy"]
        record.details["energy_max_increase"] = max_increase(e)
    lines = head + [
        f"sup_difference_vs_stepper: {_fmt(sup)}",
        f"picard_iterations: {len(diffs)}",
        f"picard_residual: {_fmt(traj.residual)}",
        f"decreasing_after_iteration_2: {monotone}",
        "iterate_differences: " + ", ".join(_fmt(d) for d in diffs),
    ]
    if "energy_max_increase" in record.details:
        lines.append(f"energy_max_increase: {_fmt(record.details['energy_max_increase'])}")
    record.wall_ms = 1e3 * (time.perf_counter() - start)
    record.files.append(_write_summary(out, lines, record))
    record.files.append(str(record.write(out / "record.json")))
    return record


# -- sweeps -------------------------------------------------------------------


def _point_label(q, alpha, theta):
    label = f"a{alpha:g}_t{theta:g}"
    return f"q{q:g}_{label}" if q is not None else label


def _sweep_point(job):
    """Run one grid point; returns plain data so it can cross process boundaries."""
    objective, flow, outputs, q, alpha, theta, theta_one_classical = job
    obj = make_objective(objective, q)
    mode = flow["mode"]
    if theta == 1.0 and theta_one_classical:
        mode = "classical"
    cfg = make_flow_config(flow, alpha=alpha, theta=theta, mode=mode)
    diverged = False
    try:
        traj = simulate(cfg, obj)
    except DivergenceError as exc:
        traj, diverged = exc.trajectory, True
    funcs, rates, envelopes, details, lines = analyse_flow(traj, obj, cfg, outputs)
    best = details.get("best_fit")
    row = {
        "alpha": alpha,
        "theta": theta,
        "final_suboptimality": details.get("final_suboptimality", math.nan),
        "fitted_exponent": best["exponent_or_rate"] if best else math.nan,
        "r_squared": best["r_squared"] if best else math.nan,
        "oscillation_count": details.get("oscillation_count", -1),
        "diverged": int(diverged),
        "model": best["model"] if best else "none",
        "mode": mode,
        "q": q if q is not None else "",
    }
    return {
        "row": row, "traj": traj, "funcs": funcs, "lines": lines, "details": details,
        "rates": [asdict(r) for r in rates], "envelopes": [asdict(e) for e in envelopes],
    }


def run_sweep(spec: ExperimentSpec, out_dir) -> RunRecord:
    out = _prepare_dir(out_dir)
    start = time.perf_counter()
    record = RunRecord(spec.spec_hash, spec.name, spec.kind, str(out))
    jobs = [
        (spec.objective, spec.flow, spec.outputs, q, a, t, spec.sweeps["theta_one_classical"])
        for q, a, t in spec.sweep_points()
    ]
    workers = max(1, int(spec.sweeps.get("workers", 1)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    # single collector: all files are written here, in grid order
    rows, per_run = [], {}
    lines = _summary_header(spec, out) + [f"runs: {len(results)}"]
    for job, res in zip(jobs, results):
        q, a, t = job[3], job[4], job[5]
        sub = out / "runs" / _point_label(q, a, t)
        sub.mkdir(parents=True, exist_ok=True)
        record.files.append(write_trajectory(sub / "trajectory.csv", res["traj"]))
        record.files.append(write_functionals(sub / "functionals.csv", res["traj"].times, res["funcs"]))
        record.rate_reports.extend(res["rates"])
        record.envelope_reports.extend(res["envelopes"])
        record.diverged.append(bool(res["row"]["diverged"]))
        rows.append(res["row"])
        per_run[_point_label(q, a, t)] = dict(res["details"], rates=res["rates"], envelopes=res["envelopes"])
        lines.append(f"[{_point_label(q, a, t)}] mode={res['row']['mode']}")
        lines += ["  " + s for s in res["lines"]]
    path = out / "sweep.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([_csv_cell(r[c]) for c in SWEEP_COLUMNS])
    record.files.append(str(path))
    record.details = {"rows": rows, "runs": per_run}
    record.wall_ms = 1e3 * (time.perf_counter() - start)
    record.files.append(_write_summary(out, lines, record))
    record.files.append(str(record.write(out / "record.json")))
    return record


def _csv_cell(v):
    if isinstance(v, float):
        return FLOAT_FMT % v
    return v


# -- dispatch -------------------------------------------------------------------


def resolve_out_dir(spec: ExperimentSpec, override=None):
    env = os.environ.get("FRAFLOW_OUT")
    return Path(override or env or spec.out_dir)


def execute(spec: ExperimentSpec, out_dir=None, sweep=None) -> RunRecord:
    """Run ``spec``.  ``sweep=None`` sweeps exactly when the spec has sweep lists."""
    out = resolve_out_dir(spec, out_dir)
    do_sweep = spec.has_sweep if sweep is None else sweep
    if spec.kind == "scalar_fde":
        return run_scalar_fde(spec, out)
    if spec.kind == "picard":
        return run_picard(spec, out)
    if do_sweep:
        return run_sweep(spec, out)
    return run_flow(spec, out)
