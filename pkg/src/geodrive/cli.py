"""Config-driven experiment runner.

Three commands:

    geodrive run <config.json>        execute one experiment config
    geodrive validate <config.json>   schema/consistency report, no execution
    geodrive preset <name> [--out DIR] [--jobs N]

Configs are JSON documents with top-level keys kind / manifold / model /
drive / numerics / output.  Every successful run writes its artifacts
(CSV) plus a manifest JSON echoing the config, the library version, wall
time, the file list and summary metrics.  Exit codes: 0 success, 2 config
error, 3 runtime error.

CSV cells use the shortest round-trip decimal form of each double, so
identical configs produce byte-identical files.
"""

import argparse
import json
import math
import os
import sys
import time
from multiprocessing import get_context

import jsonschema
import numpy as np

from . import GeodriveError, ValidationError, __version__
from .trajectories import GeodesicSpec, trajectory, default_digits
from .models import BUILTIN_MODELS, bolza_qubit
from .evolution import EvolutionConfig, evolve, fidelity, g_correction, track_band
from .response import GOLDEN, run_hdqs, run_klein, run_rp2
from .topology import chern_bolza, dipolar_chern, quadrupole_chern
from .ergodicity import disk_area_exact, ergodicity_report

_PAIR = {"type": "array", "items": {"type": "number"},
         "minItems": 2, "maxItems": 2}

SCHEMA = {
    "type": "object",
    "required": ["kind", "manifold", "output"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["trajectory", "evolve", "response", "invariant",
                          "ergodicity"]},
        "manifold": {"enum": ["bolza", "torus", "klein", "rp2"]},
        "model": {
            "type": "object",
            "required": ["name"],
            "additionalProperties": False,
            "properties": {
                "name": {"enum": sorted(BUILTIN_MODELS)},
                "epsilon": {"type": "number"},
                "m": {"type": "number"},
                "rho": {"type": "number", "exclusiveMinimum": 0,
                        "exclusiveMaximum": 1},
            },
        },
        "drive": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "lambda": {"type": "number"},
                "omega": _PAIR,
                "z0": _PAIR,
                "direction": {"type": "number"},
                "theta0": _PAIR,
                "T": {"type": "number"},
                "dt": {"type": "number"},
                "counterdiabatic": {"type": "boolean"},
            },
        },
        "numerics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "digits": {"type": "integer"},
                "grid": {"type": "array", "minItems": 1, "maxItems": 2,
                         "items": {"type": "integer", "minimum": 2}},
                "band": {"type": "integer", "minimum": 0},
                "radius": {"type": "number"},
                "r": {"type": "number"},
                "bins": {"type": "integer", "minimum": 1},
                "gap_threshold": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "output": {
            "type": "object",
            "required": ["prefix"],
            "additionalProperties": False,
            "properties": {"prefix": {"type": "string"}},
        },
    },
}

_MODEL_MANIFOLD = {"bolza_qubit": "bolza", "klein_qubit": "klein",
                   "rp2_qubit": "rp2"}


def _path(parts):
    return ".".join(str(p) for p in parts) or "(root)"


def validate_config(cfg):
    """All diagnostics for a config dict as (field-path, message) pairs."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = [(_path(e.absolute_path), e.message)
              for e in sorted(validator.iter_errors(cfg),
                              key=lambda e: list(map(str, e.absolute_path)))]
    if errors:
        # structural problems make the consistency checks unreliable
        return errors

    kind, manifold = cfg["kind"], cfg["manifold"]
    drive = cfg.get("drive", {})
    numerics = cfg.get("numerics", {})
    model = cfg.get("model")

    lam = drive.get("lambda")
    if lam is not None and lam <= 0:
        errors.append(("drive.lambda", "must be positive"))
    if "dt" in drive and drive["dt"] <= 0:
        errors.append(("drive.dt", "must be positive"))
    if "T" in drive and drive["T"] < 0:
        errors.append(("drive.T", "must be nonnegative"))
    if "digits" in numerics and numerics["digits"] < 30:
        errors.append(("numerics.digits", "must be at least 30"))
    if "r" in numerics and not 0 <= numerics["r"] < 1:
        errors.append(("numerics.r", "must lie in [0, 1)"))

    if model is not None:
        name = model["name"]
        if _MODEL_MANIFOLD[name] != manifold:
            errors.append(("model.name",
                           f"{name} lives on {_MODEL_MANIFOLD[name]}, "
                           f"config says {manifold}"))
        if name == "bolza_qubit":
            if "epsilon" not in model:
                errors.append(("model.epsilon", "required by bolza_qubit"))
            elif abs(abs(model["epsilon"]) - 1) <= 1e-12:
                errors.append(("model.epsilon",
                               "gap closes at |epsilon| = 1"))
        elif "m" not in model:
            errors.append(("model.m", f"required by {name}"))

    if kind in ("evolve", "response", "invariant") and model is None:
        errors.append(("model", f"required when kind = {kind}"))
    if kind in ("trajectory", "evolve", "ergodicity") and "T" not in drive:
        errors.append(("drive.T", f"required when kind = {kind}"))
    if kind in ("response", "invariant") and manifold == "torus":
        errors.append(("manifold",
                       f"no {kind} pipeline is defined on the torus"))
    if kind == "ergodicity":
        if manifold != "bolza":
            errors.append(("manifold", "ergodicity diagnostics need a "
                                       "Bolza trajectory"))
        if lam is not None and lam != 1.0:
            errors.append(("drive.lambda",
                           "the area estimator requires a unit-speed run"))
    return errors


# --------------------------------------------------------------------------
# artifact writers


def _write_csv(path, cols):
    """Write columns as CSV; cols is a list of (name, array, 'f'|'i')."""
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    arrays = [(np.asarray(a), k) for _, a, k in cols]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(name for name, _, _ in cols) + "\n")
        for i in range(len(arrays[0][0])):
            cells = (repr(float(a[i])) if k == "f" else str(int(a[i]))
                     for a, k in arrays)
            fh.write(",".join(cells) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def _write_manifest(path, payload):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True,
                  default=_json_default)
        fh.write("\n")
    return path


# --------------------------------------------------------------------------
# executors (one per config kind), each returning (files, summary)


def _geodesic_spec(cfg, half_dt=False):
    drive = cfg.get("drive", {})
    numerics = cfg.get("numerics", {})
    dt = float(drive.get("dt", 0.01))
    kw = dict(manifold=cfg["manifold"], T=float(drive["T"]),
              dt=dt / 2 if half_dt else dt)
    if cfg["manifold"] == "bolza":
        z0 = drive.get("z0", (0.0, 0.0))
        kw.update(z0=complex(z0[0], z0[1]),
                  direction=float(drive.get("direction", 0.0)),
                  speed=float(drive.get("lambda", 1.0)),
                  digits=numerics.get("digits"))
    else:
        kw.update(theta0=tuple(drive.get("theta0", (0.0, 0.0))),
                  omega=tuple(drive.get("omega", (1.0, 1.0))))
    return GeodesicSpec(**kw)


def _build_model(cfg):
    params = {k: v for k, v in cfg["model"].items() if k != "name"}
    return BUILTIN_MODELS[cfg["model"]["name"]](**params)


def _run_trajectory(cfg, prefix):
    traj = trajectory(_geodesic_spec(cfg))
    path = prefix + "trajectory.csv"
    if cfg["manifold"] == "bolza":
        _write_csv(path, [("t", traj.t, "f"),
                          ("re_z", traj.z.real, "f"),
                          ("im_z", traj.z.imag, "f"),
                          ("re_p", traj.p.real, "f"),
                          ("im_p", traj.p.imag, "f"),
                          ("word_len", traj.word_len, "i")])
        energy = (1 - np.abs(traj.z) ** 2) ** 2 * np.abs(traj.p) ** 2 / 8
        summary = {"samples": len(traj.t), "digits": traj.digits,
                   "final_word_length": int(traj.word_len[-1]),
                   "max_energy_drift":
                       float(np.abs(energy - traj.spec.speed ** 2 / 2).max())}
    else:
        vel = traj.velocities()
        _write_csv(path, [("t", traj.t, "f"),
                          ("theta_x", traj.theta[:, 0], "f"),
                          ("theta_y", traj.theta[:, 1], "f"),
                          ("vx", vel[:, 0], "f"),
                          ("vy", vel[:, 1], "f"),
                          ("nx", traj.crossings[:, 0], "i"),
                          ("ny", traj.crossings[:, 1], "i")])
        summary = {"samples": len(traj.t),
                   "final_crossings": [int(n) for n in traj.crossings[-1]]}
    return [path], summary


def _run_evolve(cfg, prefix):
    model = _build_model(cfg)
    band = cfg.get("numerics", {}).get("band", 1)
    dt = float(cfg.get("drive", {}).get("dt", 0.01))
    gap = cfg.get("numerics", {}).get("gap_threshold", 1e-3)
    traj = trajectory(_geodesic_spec(cfg, half_dt=True))
    bound = traj.subsample(2)
    track = track_band(model, bound, band, gap_threshold=gap)
    result = evolve(track.states[0], model, traj, EvolutionConfig(dt=dt),
                    gap_threshold=gap)
    fid = fidelity(result.states, track.states[: len(result.states)])
    path = _write_csv(prefix + "evolve.csv",
                      [("t", result.t, "f"),
                       ("norm", result.norms, "f"),
                       ("fidelity", fid, "f")])
    summary = {"band": band, "steps": len(result.t) - 1,
               "min_fidelity": float(fid.min()),
               "final_fidelity": float(fid[-1]),
               "max_norm_deviation": float(np.abs(result.norms - 1).max()),
               "min_gap": track.min_gap}
    return [path], summary


def _run_response(cfg, prefix):
    model = _build_model(cfg)
    drive = cfg.get("drive", {})
    numerics = cfg.get("numerics", {})
    kw = dict(dt=float(drive.get("dt", 0.01)),
              band=numerics.get("band", 1))
    if "gap_threshold" in numerics:
        kw["gap_threshold"] = numerics["gap_threshold"]
    if "T" in drive:
        kw["T"] = float(drive["T"])
    if cfg["manifold"] == "bolza":
        z0 = drive.get("z0", (0.0, 0.0))
        run = run_hdqs(model,
                       lam=float(drive.get("lambda", 0.05)),
                       z0=complex(z0[0], z0[1]),
                       direction=float(drive.get("direction", math.pi / 9)),
                       counterdiabatic=drive.get("counterdiabatic", False),
                       digits=numerics.get("digits"), **kw)
    else:
        if "omega" in drive:
            kw["omega"] = tuple(drive["omega"])
        if "theta0" in drive:
            kw["theta0"] = tuple(drive["theta0"])
        runner = run_klein if cfg["manifold"] == "klein" else run_rp2
        run = runner(model, **kw)
    curve = run.curve
    path = _write_csv(prefix + "response.csv",
                      [("T", curve.T, "f"),
                       ("expectation", run.series.values[-len(curve.T):], "f"),
                       ("running_average", curve.values, "f")])
    summary = {"band": run.band, "samples": len(run.series.t),
               "final_running_average": curve.final_value,
               "normalization": curve.normalization,
               "norm_deviation": run.norm_deviation}
    return [path], summary


def _run_invariant(cfg, prefix):
    model = _build_model(cfg)
    numerics = cfg.get("numerics", {})
    band = numerics.get("band", 1)
    grid = numerics.get("grid")
    gap = numerics.get("gap_threshold", 1e-3)
    if cfg["manifold"] == "bolza":
        result, field = chern_bolza(model, band=band,
                                    resolution=grid[0] if grid else 200,
                                    radius=numerics.get("radius", 0.62),
                                    gap_threshold=gap, with_field=True)
    else:
        compute = dipolar_chern if cfg["manifold"] == "klein" \
            else quadrupole_chern
        default = (400, 200) if cfg["manifold"] == "klein" else (200, 200)
        if grid is None:
            resolution = default
        elif len(grid) == 2:
            resolution = tuple(grid)
        else:
            resolution = (grid[0], grid[0])
        result, field = compute(model, band=band, resolution=resolution,
                                gap_threshold=gap, with_field=True)
    n1, n2 = len(field.x1), len(field.x2)
    path = _write_csv(prefix + "curvature.csv",
                      [("x1", np.repeat(field.x1, n2), "f"),
                       ("x2", np.tile(field.x2, n1), "f"),
                       ("omega", field.omega.ravel(), "f")])
    summary = {"band": band, "value": result.value,
               "quantization_unit": result.quantization_unit,
               "nearest_quantum": result.nearest_quantum,
               "residue": result.residue,
               "grid_shape": list(result.grid_shape)}
    return [path], summary


def _run_ergodicity(cfg, prefix):
    numerics = cfg.get("numerics", {})
    traj = trajectory(_geodesic_spec(cfg))
    report = ergodicity_report(traj, r=numerics.get("r", 0.6),
                               bins=numerics.get("bins", 36))
    hist = report.histogram
    files = [
        _write_csv(prefix + "area.csv",
                   [("T", report.T, "f"), ("S_est", report.estimates, "f")]),
        _write_csv(prefix + "angles.csv",
                   [("bin_center", hist.centers, "f"),
                    ("count", hist.counts, "i"),
                    ("density", hist.density, "f")]),
    ]
    summary = {"r": report.r, "exact_area": report.exact_area,
               "final_estimate": report.final_estimate,
               "final_relative_error": report.final_relative_error,
               "chi_square": hist.chi_square,
               "p_value": float(hist.p_value),
               "max_density_deviation":
                   float(np.abs(hist.density - 1 / (2 * math.pi)).max())}
    return files, summary


_EXECUTORS = {
    "trajectory": _run_trajectory,
    "evolve": _run_evolve,
    "response": _run_response,
    "invariant": _run_invariant,
    "ergodicity": _run_ergodicity,
}


def execute(cfg, prefix=None):
    """Run a validated config, returning (files, summary)."""
    prefix = cfg["output"]["prefix"] if prefix is None else prefix
    return _EXECUTORS[cfg["kind"]](cfg, prefix)


# --------------------------------------------------------------------------
# presets: the figure parameter sets, run through the same executors


def _run_gt(params, prefix):
    """Geometric-correction magnitude |G(t)| for a pair of matched runs.

    The two runs cover the same arc (lambda T fixed), so their |G| curves
    are directly comparable; the summary reports each maximum, the
    late/early growth ratio per run, and the cross-run maximum ratio.
    """
    model = bolza_qubit(params["epsilon"])
    files, runs = [], []
    for lam, T in params["pairs"]:
        spec = GeodesicSpec(manifold="bolza", T=T, dt=params.get("dt", 0.01),
                            z0=0j, direction=math.pi / 9, speed=lam)
        series = g_correction(model, trajectory(spec), m=params["m"],
                              n=params["n"], lam=lam)
        files.append(_write_csv(f"{prefix}gt_lam{lam:g}.csv",
                                [("t", series.t, "f"),
                                 ("G", series.magnitude, "f")]))
        early = series.magnitude[series.t <= T / 2]
        late = series.magnitude[series.t >= T / 2]
        runs.append({"lambda": lam, "T": T,
                     "max_G": float(series.magnitude.max()),
                     "late_over_early": float(late.max() / early.max())})
    summary = {"runs": runs,
               "max_G_ratio": runs[0]["max_G"] / runs[1]["max_G"]}
    return files, summary


def _job(label, cfg=None, custom=None, params=None, value_key=None,
         target=None, tolerance=None, compare_abs=False, sweep=None):
    return {"label": label, "config": cfg, "custom": custom,
            "params": params or {}, "value_key": value_key,
            "target": target, "tolerance": tolerance,
            "compare_abs": compare_abs, "sweep": sweep or {}}


def _response_cfg(manifold, model, drive):
    return {"kind": "response", "manifold": manifold, "model": model,
            "drive": drive, "output": {"prefix": ""}}


def _preset_fig4_chern():
    jobs = []
    for eps in (-2.0, -1.5, -0.5, 0.0, 0.5, 1.5, 2.0):
        cfg = {"kind": "invariant", "manifold": "bolza",
               "model": {"name": "bolza_qubit", "epsilon": eps},
               "numerics": {"grid": [200], "band": 1},
               "output": {"prefix": ""}}
        jobs.append(_job(f"eps{eps:g}", cfg=cfg, value_key="value",
                         target=1.0 if abs(eps) < 1 else 0.0,
                         tolerance=1e-3, sweep={"epsilon": eps}))
    return jobs


def _preset_fig4_response():
    jobs = []
    for lam in (0.1, 0.05, 0.025):
        for eps in (0.5, 1.5):
            cfg = _response_cfg(
                "bolza", {"name": "bolza_qubit", "epsilon": eps},
                {"lambda": lam, "T": 2000.0, "dt": 0.01,
                 "direction": math.pi / 9, "z0": [0.0, 0.0]})
            jobs.append(_job(f"lam{lam:g}_eps{eps:g}", cfg=cfg,
                             value_key="final_running_average",
                             target=1.0 if eps < 1 else 0.0, tolerance=0.15,
                             sweep={"lambda": lam, "epsilon": eps}))
    return jobs


def _klein_target(m):
    if abs(m) < 1:
        return math.pi
    return math.pi / 2 if abs(m) < 3 else 0.0


def _preset_fig5_dipolar():
    jobs = []
    for m in (0.25, 0.5, 0.75, 1.5, 2.0, 2.5, 3.5, 4.0, 5.0):
        cfg = {"kind": "invariant", "manifold": "klein",
               "model": {"name": "klein_qubit", "m": m},
               "numerics": {"grid": [400, 200], "band": 1},
               "output": {"prefix": ""}}
        jobs.append(_job(f"m{m:g}", cfg=cfg, value_key="value",
                         target=_klein_target(m), tolerance=1e-2 * math.pi,
                         compare_abs=True, sweep={"m": m}))
    return jobs


def _preset_fig5_response():
    jobs = []
    for m in (0.5, 2.0, 4.0):
        cfg = _response_cfg(
            "klein", {"name": "klein_qubit", "m": m},
            {"omega": [0.02, GOLDEN * 0.02], "T": 20000.0, "dt": 0.01,
             "theta0": [-math.pi, -math.pi]})
        jobs.append(_job(f"m{m:g}", cfg=cfg,
                         value_key="final_running_average",
                         target=_klein_target(m),
                         tolerance=0.15 * math.pi / 2,
                         compare_abs=True, sweep={"m": m}))
    return jobs


def _preset_si_rp2():
    jobs = []
    for m in (1.0, 4.0):
        target = math.pi ** 2 / 2 if m == 1.0 else 0.0
        inv = {"kind": "invariant", "manifold": "rp2",
               "model": {"name": "rp2_qubit", "m": m},
               "numerics": {"grid": [200, 200], "band": 1},
               "output": {"prefix": ""}}
        jobs.append(_job(f"q_m{m:g}", cfg=inv, value_key="value",
                         target=target, tolerance=0.02 * math.pi ** 2 / 2,
                         compare_abs=True, sweep={"m": m}))
        resp = _response_cfg(
            "rp2", {"name": "rp2_qubit", "m": m},
            {"omega": [0.02, GOLDEN * 0.02], "T": 20000.0, "dt": 0.01,
             "theta0": [0.0, 0.0]})
        jobs.append(_job(f"mu_m{m:g}", cfg=resp,
                         value_key="final_running_average", target=target,
                         tolerance=0.15 * math.pi ** 2 / 2,
                         compare_abs=True, sweep={"m": m}))
    return jobs


def _preset_si_ergodicity():
    cfg = {"kind": "ergodicity", "manifold": "bolza",
           "drive": {"lambda": 1.0, "direction": math.pi / 9,
                     "z0": [0.0, 0.0], "T": 2000.0, "dt": 0.01},
           "numerics": {"r": 0.6, "bins": 36},
           "output": {"prefix": ""}}
    return [_job("area", cfg=cfg, value_key="final_estimate",
                 target=disk_area_exact(0.6),
                 tolerance=0.05 * disk_area_exact(0.6))]


def _preset_si_gt():
    params = {"epsilon": 0.5, "m": 0, "n": 1, "dt": 0.01,
              "pairs": [[0.05, 200.0], [0.025, 400.0]]}
    # matched arcs: max|G| should scale roughly linearly with lambda
    return [_job("gt", custom="gt", params=params, value_key="max_G_ratio",
                 target=2.0, tolerance=0.5)]


PRESETS = {
    "fig4-chern": _preset_fig4_chern,
    "fig4-response": _preset_fig4_response,
    "fig5-dipolar": _preset_fig5_dipolar,
    "fig5-response": _preset_fig5_response,
    "si-rp2": _preset_si_rp2,
    "si-ergodicity": _preset_si_ergodicity,
    "si-gt": _preset_si_gt,
}


def _preset_worker(job):
    prefix = job["prefix"]
    if job["custom"] == "gt":
        files, summary = _run_gt(job["params"], prefix)
    else:
        files, summary = execute(job["config"], prefix)
    return files, summary


def _compare(job, summary):
    row = dict(job["sweep"])
    row["label"] = job["label"]
    value = summary.get(job["value_key"]) if job["value_key"] else None
    row["value"] = value
    row["target"] = job["target"]
    if value is not None and job["target"] is not None:
        measured = abs(value) if job["compare_abs"] else value
        row["abs_error"] = abs(measured - job["target"])
        if job["tolerance"] is not None:
            row["within_tolerance"] = bool(row["abs_error"]
                                           <= job["tolerance"])
    return row


def _write_sweep_csv(path, rows):
    keys = []
    for row in rows:
        keys.extend(k for k in row if k not in keys)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(keys) + "\n")
        for row in rows:
            cells = []
            for k in keys:
                v = row.get(k)
                if v is None:
                    cells.append("")
                elif isinstance(v, bool):
                    cells.append(str(v).lower())
                elif isinstance(v, float):
                    cells.append(repr(v))
                else:
                    cells.append(str(v))
            fh.write(",".join(cells) + "\n")
    return path


def run_preset(name, out=None, jobs=1):
    """Execute a named preset; returns (manifest_path, manifest_dict)."""
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; choose from "
                              + ", ".join(sorted(PRESETS)))
    out = out or os.path.join("geodrive-out", name)
    os.makedirs(out, exist_ok=True)
    t0 = time.perf_counter()
    job_list = PRESETS[name]()
    for job in job_list:
        job["prefix"] = os.path.join(out, job["label"]) + "_"
    if jobs > 1 and len(job_list) > 1:
        with get_context("fork").Pool(min(jobs, len(job_list))) as pool:
            results = pool.map(_preset_worker, job_list)
    else:
        results = [_preset_worker(job) for job in job_list]
    comparisons, runs, files = [], [], []
    for job, (job_files, summary) in zip(job_list, results):
        files.extend(job_files)
        runs.append({"label": job["label"], "params": job["sweep"],
                     "files": job_files, "summary": summary})
        comparisons.append(_compare(job, summary))
    files.append(_write_sweep_csv(os.path.join(out, "summary.csv"),
                                  comparisons))
    manifest = {
        "preset": name,
        "version": __version__,
        "wall_time_s": time.perf_counter() - t0,
        "files": files,
        "runs": runs,
        "summary": {"comparisons": comparisons},
    }
    path = _write_manifest(os.path.join(out, "manifest.json"), manifest)
    return path, manifest


# --------------------------------------------------------------------------
# commands


def _load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _report_config_errors(errors):
    for path, message in errors:
        print(f"config error: {path}: {message}", file=sys.stderr)


def cmd_run(args):
    try:
        cfg = _load_config(args.config)
    except (OSError, json.JSONDecodeError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    errors = validate_config(cfg)
    if errors:
        _report_config_errors(errors)
        return 2
    t0 = time.perf_counter()
    try:
        files, summary = execute(cfg)
    except GeodriveError as err:
        print(f"runtime error: {err}", file=sys.stderr)
        return 3
    prefix = cfg["output"]["prefix"]
    manifest_path = _write_manifest(prefix + "manifest.json", {
        "config": cfg,
        "version": __version__,
        "wall_time_s": time.perf_counter() - t0,
        "files": files,
        "summary": summary,
    })
    print(f"wrote {len(files)} file(s) and {manifest_path}")
    for key, value in summary.items():
        print(f"  {key}: {value}")
    return 0


def cmd_validate(args):
    try:
        cfg = _load_config(args.config)
    except (OSError, json.JSONDecodeError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    errors = validate_config(cfg)
    if errors:
        _report_config_errors(errors)
        return 2
    kind, manifold = cfg["kind"], cfg["manifold"]
    drive = cfg.get("drive", {})
    numerics = cfg.get("numerics", {})
    print(f"config OK: kind={kind} manifold={manifold}")
    T = drive.get("T", 2000.0 if kind == "response" else None)
    dt = drive.get("dt", 0.01)
    if T is not None:
        steps = int(round(T / dt))
        samples = 2 * steps + 1 if kind in ("evolve", "response") \
            else steps + 1
        print(f"  steps: {steps} (dt = {dt:g}), trajectory samples: "
              f"{samples}")
        if manifold == "bolza" and kind != "invariant":
            lam = drive.get("lambda",
                            0.05 if kind == "response" else 1.0)
            digits = numerics.get("digits") or default_digits(lam * T)
            print(f"  precision digits: {digits} (arc length "
                  f"{lam * T:g})")
    if "grid" in numerics:
        print(f"  grid: {numerics['grid']}")
    return 0


def cmd_preset(args):
    if args.name not in PRESETS:
        print(f"config error: unknown preset {args.name!r}; choose from "
              + ", ".join(sorted(PRESETS)), file=sys.stderr)
        return 2
    try:
        path, manifest = run_preset(args.name, out=args.out, jobs=args.jobs)
    except GeodriveError as err:
        print(f"runtime error: {err}", file=sys.stderr)
        return 3
    print(f"preset {args.name}: {len(manifest['files'])} file(s), "
          f"manifest {path}")
    for row in manifest["summary"]["comparisons"]:
        flag = row.get("within_tolerance")
        status = "" if flag is None else ("  ok" if flag else "  OFF TARGET")
        target = row.get("target")
        target_str = "" if target is None else f" target {target:.6g}"
        print(f"  {row['label']}: value {row['value']:.6g}{target_str}"
              f"{status}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="geodrive",
        description="Geodesic-driven quantum system experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a JSON experiment config")
    p_run.add_argument("config", help="path to the config file")
    p_val = sub.add_parser("validate",
                           help="check a config without executing it")
    p_val.add_argument("config", help="path to the config file")
    p_pre = sub.add_parser("preset", help="run a stored figure preset")
    p_pre.add_argument("name", help="preset name, e.g. fig4-chern")
    p_pre.add_argument("--out", default=None, help="output directory")
    p_pre.add_argument("--jobs", type=int, default=1,
                       help="worker processes for independent sweep points")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "validate":
        return cmd_validate(args)
    return cmd_preset(args)


if __name__ == "__main__":
    sys.exit(main())
