"""Scenario runner: JSON config in, plot-ready CSV / JSON reports out.

Commands::

    kanai-cavity stability  --config cfg.json [--out DIR] [--jobs N]
    kanai-cavity schedule   --config cfg.json [--out DIR]
    kanai-cavity ray        --config cfg.json [--out DIR]
    kanai-cavity lissajous  --config cfg.json [--out DIR]
    kanai-cavity collapse   --config cfg.json [--out DIR] [--jobs N]
    kanai-cavity crosscheck --config cfg.json [--out DIR]

Exit codes: 0 success, 2 validation error (bad config, bad domain), 3
numerical failure (singular kernel, aliasing, caustic, ...).

The config is a single JSON document with a ``schema_version`` field; see
the README for the full schema.  Outputs are deterministic: floats are
written with 17 significant digits in lowercase scientific notation and
every file is written to a temp file and atomically renamed, so a failed
run leaves no partial data files.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ._formats import atomic_write_text, csv_text, json_text
from .core import FrictionProfile
from .errors import (KanaiCavityError, NumericalError, ValidationError)
from .kanai import crosscheck_engines
from .paraxial import ResonatorGeometry, round_trip_elements, round_trip_matrix
from .raysim import (RayState, fit_damped_oscillation, fit_envelope_rate,
                     iterate_ray, lissajous, pattern_radius)
from .schedule import MirrorSchedule
from .wavesim import (DEFAULT_GRID_N, DEFAULT_WAVELENGTH,
                      DEFAULT_WINDOW_FACTOR, eigenmode_beam, GaussianBeam,
                      run_collapse)

SCHEMA_VERSION = 1
ENGINES = ("fresnel", "split_step", "gaussian_q")


def _fail(message):
    raise ValidationError(message)


def _load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        _fail("cannot read config %s: %s" % (path, exc))
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        _fail("config %s is not valid JSON: %s" % (path, exc))
    if not isinstance(cfg, dict):
        _fail("config root must be a JSON object")
    if cfg.get("schema_version") != SCHEMA_VERSION:
        _fail("config must declare \"schema_version\": %d" % SCHEMA_VERSION)
    return cfg


def _section(cfg, name, required=False):
    sec = cfg.get(name)
    if sec is None:
        if required:
            _fail("config section %r is required for this command" % name)
        return {}
    if not isinstance(sec, dict):
        _fail("config section %r must be an object" % name)
    return sec


def _number(sec, name, key, default=None, minimum=None, integer=False):
    value = sec.get(key, default)
    if value is None:
        _fail("%s.%s is required" % (name, key))
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail("%s.%s must be a number" % (name, key))
    if integer:
        if float(value) != int(value):
            _fail("%s.%s must be an integer" % (name, key))
        value = int(value)
    else:
        value = float(value)
    if minimum is not None and value < minimum:
        _fail("%s.%s must be >= %g" % (name, key, minimum))
    return value


def _pair(sec, name, key, default):
    value = sec.get(key, list(default))
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float))
                   for v in value)):
        _fail("%s.%s must be a pair of numbers" % (name, key))
    lo, hi = float(value[0]), float(value[1])
    if hi < lo:
        _fail("%s.%s is an empty range" % (name, key))
    return lo, hi


def _build_geometry(cfg):
    geo = _section(cfg, "geometry", required=True)
    l1 = _number(geo, "geometry", "l1_over_f", minimum=0.0)
    l2 = _number(geo, "geometry", "l2_over_f", minimum=0.0)
    wavelength = _number(geo, "geometry", "lambda_over_f",
                         default=DEFAULT_WAVELENGTH)
    if wavelength <= 0.0:
        _fail("geometry.lambda_over_f must be > 0")
    return ResonatorGeometry(l1, l2, 1.0), wavelength


def _build_friction(cfg, config_dir):
    fr = _section(cfg, "friction", required=True)
    kind = fr.get("kind")
    if kind == "constant":
        gamma = _number(fr, "friction", "gamma", minimum=0.0)
        return FrictionProfile.constant(gamma)
    if kind == "tabulated":
        path = fr.get("path")
        if not isinstance(path, str) or not path:
            _fail("friction.path is required for tabulated friction")
        if not os.path.isabs(path):
            path = os.path.join(config_dir, path)
        if not os.path.exists(path):
            _fail("friction table %s does not exist" % path)
        return FrictionProfile.from_csv(path)
    _fail("friction.kind must be \"constant\" or \"tabulated\"")


def _run_section(cfg):
    run = _section(cfg, "run")
    n_max = _number(run, "run", "n_max", default=3000, minimum=0, integer=True)
    dn = _number(run, "run", "dn", default=1.0)
    if dn <= 0.0:
        _fail("run.dn must be > 0")
    grid_n = _number(run, "run", "grid_n", default=DEFAULT_GRID_N,
                     minimum=2, integer=True)
    window = _number(run, "run", "window_factor",
                     default=DEFAULT_WINDOW_FACTOR)
    if window <= 0.0:
        _fail("run.window_factor must be > 0")
    engine = run.get("engine", "gaussian_q")
    if not isinstance(engine, (str, list)):
        _fail("run.engine must be an engine name or a list of names")
    engines = [engine] if isinstance(engine, str) else list(engine)
    for name in engines:
        if name not in ENGINES:
            _fail("run.engine must be among %r" % (ENGINES,))
    if len(set(engines)) != len(engines) or not engines:
        _fail("run.engine must list distinct engines")
    return {"n_max": n_max, "dn": dn, "grid_n": grid_n,
            "window_factor": window, "engines": engines}


def _formats(cfg):
    out = _section(cfg, "outputs")
    formats = out.get("formats", ["csv", "json"])
    if (not isinstance(formats, list) or not formats
            or any(f not in ("csv", "json") for f in formats)):
        _fail("outputs.formats must be a non-empty subset of [csv, json]")
    return set(formats)


def _write(out_dir, filename, text):
    atomic_write_text(os.path.join(out_dir, filename), text)


def _sample_times(n_max, dn):
    count = int(math.floor(n_max / dn + 1e-9)) + 1
    return np.arange(count) * dn


def cmd_stability(cfg, out_dir, jobs):
    """Stability raster over (L1/f, L2/f) plus the schedule path overlay."""
    st = _section(cfg, "stability")
    resolution = _number(st, "stability", "resolution", default=400,
                         minimum=1, integer=True)
    l1_lo, l1_hi = _pair(st, "stability", "l1_range", (0.0, 4.0))
    l2_lo, l2_hi = _pair(st, "stability", "l2_range", (0.0, 4.0))
    if resolution > 1 and (l1_hi <= l1_lo or l2_hi <= l2_lo):
        _fail("stability ranges are empty for resolution > 1")
    geom, _ = _build_geometry(cfg)
    config_dir = cfg["_config_dir"]
    friction = _build_friction(cfg, config_dir)
    run = _run_section(cfg)

    l1_values = np.linspace(l1_lo, l1_hi, resolution)
    l2_values = np.linspace(l2_lo, l2_hi, resolution)
    s2_row = l2_values[np.newaxis, :]

    def block(chunk):
        a, _, _ = round_trip_elements(l1_values[chunk][:, np.newaxis], s2_row)
        return a

    if jobs > 1 and resolution >= jobs:
        chunks = np.array_split(np.arange(resolution), jobs)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            blocks = list(pool.map(block, chunks))
        a_values = np.vstack(blocks)
    else:
        a_values = block(np.arange(resolution))
    stable = np.abs(a_values) <= 1.0
    theta = np.where(stable, np.arccos(np.clip(a_values, -1.0, 1.0)),
                     np.nan)

    sched = MirrorSchedule(geom, friction)
    n_values = _sample_times(run["n_max"], run["dn"])
    path_l1, path_l2 = sched.positions_at(n_values)

    files = {}
    raster_rows = []
    for i in range(resolution):
        for j in range(resolution):
            raster_rows.append((l1_values[i], l2_values[j],
                                bool(stable[i, j]), theta[i, j]))
    files["stability_raster.csv"] = csv_text(
        ["l1_over_f", "l2_over_f", "stable", "theta"], raster_rows)
    files["schedule_path.csv"] = csv_text(
        ["n", "l1_over_f", "l2_over_f"],
        zip(n_values, path_l1, path_l2))
    return files


def cmd_schedule(cfg, out_dir, jobs):
    """Mirror positions and matrix elements along the damping schedule."""
    geom, _ = _build_geometry(cfg)
    friction = _build_friction(cfg, cfg["_config_dir"])
    run = _run_section(cfg)
    sched = MirrorSchedule(geom, friction)
    n_values = _sample_times(run["n_max"], run["dn"])
    g_values = friction.evaluate(n_values)[0]
    l1, l2 = sched.positions_at(n_values)
    a, b, c = sched.elements_at(n_values)
    rows = zip(g_values, l1, l2, a, b, c)
    return {"schedule.csv": csv_text(
        ["gamma_n", "l1_over_f", "l2_over_f", "a", "b_over_f", "c_times_f"],
        rows)}


def cmd_ray(cfg, out_dir, jobs):
    """Single-ray trace and fitted decay/period."""
    geom, _ = _build_geometry(cfg)
    friction = _build_friction(cfg, cfg["_config_dir"])
    run = _run_section(cfg)
    ray = _section(cfg, "ray")
    x0 = _number(ray, "ray", "x0", default=1.0)
    xp0 = _number(ray, "ray", "xp0", default=0.0)
    if run["n_max"] < 1:
        _fail("run.n_max must be >= 1 for the ray command")
    sched = MirrorSchedule(geom, friction)
    trace = iterate_ray(sched, RayState(x0, xp0), run["n_max"])
    fit = fit_damped_oscillation(trace.n, trace.x)
    files = {
        "ray_trace.csv": csv_text(["n", "x", "xp"], trace.rows()),
        "ray_fit.json": json_text(
            {"decay_rate": fit["decay_rate"], "period": fit["period"]}),
    }
    return files


def cmd_lissajous(cfg, out_dir, jobs):
    """Two-axis ray trace, contracting pattern radius, fitted envelope."""
    geom, _ = _build_geometry(cfg)
    friction = _build_friction(cfg, cfg["_config_dir"])
    run = _run_section(cfg)
    li = _section(cfg, "lissajous")
    init = (_number(li, "lissajous", "x0", default=1.0),
            _number(li, "lissajous", "xp0", default=0.0),
            _number(li, "lissajous", "y0", default=0.7),
            _number(li, "lissajous", "yp0", default=0.5))
    if run["n_max"] < 1:
        _fail("run.n_max must be >= 1 for the lissajous command")
    sched = MirrorSchedule(geom, friction)
    trace = lissajous(sched, init, run["n_max"])
    radius = pattern_radius(trace)
    slope = fit_envelope_rate(trace.n, radius)
    period = fit_damped_oscillation(trace.n, trace.x)["period"]
    files = {
        "lissajous_trace.csv": csv_text(
            ["n", "x", "xp", "y", "yp"], trace.rows()),
        "lissajous_fit.json": json_text(
            {"decay_rate": -slope, "period": period}),
    }
    return files


def cmd_collapse(cfg, out_dir, jobs):
    """Spot-size collapse traces, one CSV per engine, normalized to w0."""
    geom, wavelength = _build_geometry(cfg)
    friction = _build_friction(cfg, cfg["_config_dir"])
    run = _run_section(cfg)
    co = _section(cfg, "collapse")
    center_over_w1 = _number(co, "collapse", "center_over_w1", default=0.0)
    sched = MirrorSchedule(geom, friction)
    beam0 = eigenmode_beam(round_trip_matrix(geom))
    w1_0 = beam0.spot_size(wavelength)
    beam = GaussianBeam(beam0.q, center=center_over_w1 * w1_0)
    w0 = math.sqrt(wavelength / math.pi)

    def one(engine):
        return run_collapse(sched, beam, run["n_max"], engine,
                            wavelength=wavelength, grid_n=run["grid_n"],
                            window_factor=run["window_factor"])

    engines = run["engines"]
    if jobs > 1 and len(engines) > 1:
        with ThreadPoolExecutor(max_workers=min(jobs, len(engines))) as pool:
            traces = list(pool.map(one, engines))
    else:
        traces = [one(engine) for engine in engines]

    files = {}
    for engine, trace in zip(engines, traces):
        rows = zip(trace.n, trace.w1 / w0, trace.w2 / w0,
                   trace.w1 * trace.w2 / (w0 * w0))
        files["collapse_%s.csv" % engine] = csv_text(
            ["n", "w1_over_w0", "w2_over_w0", "product"], rows)
        if trace.truncated:
            print("warning: %s %s" % (engine, trace.diagnostic),
                  file=sys.stderr)
    if len(engines) > 1:
        common = min(trace.n.size for trace in traces)
        if common:
            w1_stack = np.vstack([trace.w1[:common] for trace in traces])
            w2_stack = np.vstack([trace.w2[:common] for trace in traces])
            spread1 = w1_stack.max(axis=0) - w1_stack.min(axis=0)
            spread2 = w2_stack.max(axis=0) - w2_stack.min(axis=0)
            rel1 = float(np.max(spread1 / w1_stack.mean(axis=0)))
            rel2 = float(np.max(spread2 / w2_stack.mean(axis=0)))
        else:
            rel1 = rel2 = float("nan")
        report = {
            "schema_version": SCHEMA_VERSION,
            "engines": list(engines),
            "common_trips": int(common),
            "max_w1_rel_spread": rel1,
            "max_w2_rel_spread": rel2,
            "diagnostics": {engine: trace.diagnostic
                            for engine, trace in zip(engines, traces)
                            if trace.truncated},
        }
        files["collapse_comparison.json"] = json_text(report)
    return files


def cmd_crosscheck(cfg, out_dir, jobs):
    """Analytic propagator vs diffraction engine report."""
    geom, wavelength = _build_geometry(cfg)
    friction = _build_friction(cfg, cfg["_config_dir"])
    run = _run_section(cfg)
    cc = _section(cfg, "crosscheck")
    center_over_w1 = _number(cc, "crosscheck", "center_over_w1", default=1.0)
    tilt = _number(cc, "crosscheck", "tilt", default=0.0)
    width_scale = _number(cc, "crosscheck", "width_scale", default=1.0)
    if width_scale <= 0.0:
        _fail("crosscheck.width_scale must be > 0")
    sched = MirrorSchedule(geom, friction)
    w1_0 = eigenmode_beam(round_trip_matrix(geom)).spot_size(wavelength)
    records = crosscheck_engines(
        geom, wavelength, sched, run["n_max"],
        center=center_over_w1 * w1_0, tilt=tilt, width_scale=width_scale,
        grid_n=run["grid_n"], window_factor=run["window_factor"])
    report = {
        "schema_version": SCHEMA_VERSION,
        "records": records,
        "max_l2_distance": max(r["l2_distance"] for r in records),
    }
    return {"crosscheck_report.json": json_text(report)}


_COMMANDS = {
    "stability": cmd_stability,
    "schedule": cmd_schedule,
    "ray": cmd_ray,
    "lissajous": cmd_lissajous,
    "collapse": cmd_collapse,
    "crosscheck": cmd_crosscheck,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="kanai-cavity",
        description="Damped-oscillator optics scenarios: stability maps, "
                    "mirror schedules, ray traces, and wave collapse runs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True,
                         help="path to the JSON scenario config")
        cmd.add_argument("--out", default=None,
                         help="output directory (default: outputs.directory "
                              "from the config, else the working directory)")
        cmd.add_argument("--jobs", type=int, default=1,
                         help="worker threads for independent cells")
    args = parser.parse_args(argv)

    try:
        if args.jobs < 1:
            _fail("--jobs must be >= 1")
        cfg = _load_config(args.config)
        cfg["_config_dir"] = os.path.dirname(os.path.abspath(args.config))
        formats = _formats(cfg)
        out_dir = args.out or _section(cfg, "outputs").get("directory") or "."
        if not isinstance(out_dir, str):
            _fail("outputs.directory must be a string")
        files = _COMMANDS[args.command](cfg, out_dir, args.jobs)
        os.makedirs(out_dir, exist_ok=True)
        for filename, text in sorted(files.items()):
            if filename.endswith(".csv") and "csv" not in formats:
                continue
            if filename.endswith(".json") and "json" not in formats:
                continue
            _write(out_dir, filename, text)
    except ValidationError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except NumericalError as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 3
    except KanaiCavityError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
