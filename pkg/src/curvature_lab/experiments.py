"""Experiment runner: one named experiment per checker cluster, flat
key-value configs, deterministic JSON/CSV outputs."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import comparison as cmp
from . import geodesics as geo
from . import jacobi as jb
from . import manifolds as mf
from .manifolds import GeometryError


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _int_list(text):
    return [int(tok) for tok in str(text).split(",") if tok.strip()]


def _float_list(text):
    return [float(tok) for tok in str(text).split(",") if tok.strip()]


_COERCE = {
    int: int,
    float: float,
    str: str,
    "int_list": _int_list,
    "float_list": _float_list,
}

_DEF_QUADRIC = "quadric:c=1.0,1.0,0.4444444444444444,0.5625,0.6400000000000001"

EXPERIMENTS = {
    "rauch-sphere": {
        "params": {"K": float, "t_max": float, "step": float},
        "defaults": {"K": 1.0, "t_max": 3.0, "step": 1e-3},
        "manifold": None,
        "randomized": False,
    },
    "weak-rauch": {
        "params": {"t_max": float, "step": float, "seed": int, "dirs": int},
        "defaults": {"t_max": 1.5, "step": 1e-3, "seed": 0, "dirs": 3},
        "manifold": _DEF_QUADRIC,
        "randomized": True,
    },
    "ellipsoid-focal-scan": {
        "params": {"dims": "int_list", "step": float, "length": float,
                   "tol": float},
        "defaults": {"dims": [8, 16], "step": 1e-3, "length": 2.5,
                     "tol": 1e-6},
        "manifold": None,
        "randomized": False,
    },
    "epifocal-trend": {
        "params": {"dims": "int_list", "step": float},
        "defaults": {"dims": [8, 16, 32, 64], "step": 1e-3},
        "manifold": None,
        "randomized": False,
    },
    "focal-index-lemma": {
        "params": {"trials": int, "seed": int, "b": float, "step": float,
                   "boundary": str},
        "defaults": {"trials": 100, "seed": 0, "b": 1.5707963267948966,
                     "step": 1e-3, "boundary": "conjugate"},
        "manifold": "sphere:dim=2,K=1.0",
        "randomized": True,
    },
    "wronskian-drift": {
        "params": {"length": float, "step": float, "seed": int, "pairs": int},
        "defaults": {"length": 3.141592653589793, "step": 1e-3, "seed": 0,
                     "pairs": 4},
        "manifold": "sphere:dim=2,K=1.0",
        "randomized": True,
    },
    "flow-estimates": {
        "params": {"length": float, "step": float, "seed": int,
                   "boundary": str},
        "defaults": {"length": 1.5, "step": 1e-3, "seed": 0,
                     "boundary": "conjugate"},
        "manifold": _DEF_QUADRIC,
        "randomized": True,
    },
    "toponogov-sweep": {
        "params": {"H": float, "hinges": int, "seed": int, "l_max": float,
                   "step": float},
        "defaults": {"H": 1.0, "hinges": 200, "seed": 7, "l_max": 1.2,
                     "step": 2e-3},
        "manifold": "sphere:dim=2,K=1.0",
        "randomized": True,
    },
    "triangle-sweep": {
        "params": {"H": float, "count": int, "seed": int, "size": float,
                   "step": float},
        "defaults": {"H": 1.0, "count": 60, "seed": 7, "size": 1.2,
                     "step": 2e-3},
        "manifold": "sphere:dim=2,K=1.0",
        "randomized": True,
    },
    "meridian-length": {
        "params": {"radii": "float_list", "n": int, "seed": int,
                   "step": float, "L": float},
        "defaults": {"radii": [0.3, 0.8, 1.2], "n": 201, "seed": 0,
                     "step": 2e-3, "L": 0.0},
        "manifold": "sphere:dim=2,K=1.0",
        "randomized": True,
    },
    "maximal-diameter-probe": {
        "params": {"delta": float, "dim": int, "fields": int, "seed": int,
                   "n_t": int},
        "defaults": {"delta": 1.0, "dim": 3, "fields": 16, "seed": 0,
                     "n_t": 1001},
        "manifold": None,
        "randomized": True,
    },
    "pinch-constants": {
        "params": {},
        "defaults": {},
        "manifold": None,
        "randomized": False,
    },
    "distance-ratio": {
        "params": {"j_min": int, "j_max": int, "seed": int},
        "defaults": {"j_min": 2, "j_max": 8, "seed": 0},
        "manifold": "sphere:dim=2,K=1.0",
        "randomized": True,
    },
    "rotation-isometry": {
        "params": {"n": int, "samples": int, "seed": int},
        "defaults": {"n": 64, "samples": 20000, "seed": 0},
        "manifold": None,
        "randomized": True,
    },
    "lift-curve-demo": {
        "params": {"radius": float, "n": int, "seed": int, "h_bound": float},
        "defaults": {"radius": 0.5, "n": 128, "seed": 0, "h_bound": 1.0},
        "manifold": "sphere:dim=2,K=1.0",
        "randomized": True,
    },
}


@dataclass
class ExperimentConfig:
    experiment: str
    manifold: str | None
    params: dict

    def text(self) -> str:
        lines = [f"experiment = {self.experiment}"]
        if self.manifold is not None:
            lines.append(f"manifold = {self.manifold}")
        for key in sorted(self.params):
            val = self.params[key]
            if isinstance(val, list):
                body = ",".join(str(v) for v in val)
            elif isinstance(val, float):
                body = repr(val)
            else:
                body = str(val)
            lines.append(f"{key} = {body}")
        return "\n".join(lines) + "\n"

    def __eq__(self, other):
        return (isinstance(other, ExperimentConfig)
                and self.experiment == other.experiment
                and self.manifold == other.manifold
                and self.params == other.params)


def default_config(experiment: str) -> ExperimentConfig:
    if experiment not in EXPERIMENTS:
        raise GeometryError(f"unknown experiment {experiment!r}")
    entry = EXPERIMENTS[experiment]
    return ExperimentConfig(experiment=experiment, manifold=entry["manifold"],
                            params=dict(entry["defaults"]))


def _coerce_param(experiment: str, key: str, value):
    schema = EXPERIMENTS[experiment]["params"]
    if key not in schema:
        raise GeometryError(
            f"unknown config key {key!r} for experiment {experiment!r}")
    return _COERCE[schema[key]](value)


def parse_config(text: str, experiment: str = None) -> ExperimentConfig:
    """Parse the flat key = value format; unknown keys are rejected."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise GeometryError(f"bad config line {lineno}: {line!r}")
        raw[key.strip()] = value.strip()
    name = raw.pop("experiment", experiment)
    if name is None:
        raise GeometryError("config does not name an experiment")
    if experiment is not None and name != experiment:
        raise GeometryError(
            f"config is for experiment {name!r}, not {experiment!r}")
    cfg = default_config(name)
    manifold = raw.pop("manifold", None)
    if manifold is not None:
        if cfg.manifold is None:
            raise GeometryError(
                f"experiment {name!r} does not take a manifold")
        mf.parse_manifold(manifold)  # validate
        cfg.manifold = manifold
    for key, value in raw.items():
        cfg.params[key] = _coerce_param(name, key, value)
    validate_config(cfg)
    return cfg


def apply_overrides(cfg: ExperimentConfig, pairs) -> ExperimentConfig:
    for item in pairs:
        key, sep, value = item.partition("=")
        if not sep:
            raise GeometryError(f"bad --set override {item!r}")
        key = key.strip()
        if key == "manifold":
            if EXPERIMENTS[cfg.experiment]["manifold"] is None:
                raise GeometryError(
                    f"experiment {cfg.experiment!r} does not take a manifold")
            mf.parse_manifold(value.strip())
            cfg.manifold = value.strip()
        else:
            cfg.params[key] = _coerce_param(cfg.experiment, key, value.strip())
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig):
    entry = EXPERIMENTS[cfg.experiment]
    for key in cfg.params:
        if key not in entry["params"]:
            raise GeometryError(
                f"unknown config key {key!r} for experiment {cfg.experiment!r}")
    if entry["randomized"] and "seed" not in cfg.params:
        raise GeometryError(
            f"experiment {cfg.experiment!r} is randomized: a seed is mandatory")
    if entry["manifold"] is not None and cfg.manifold is None:
        raise GeometryError(f"experiment {cfg.experiment!r} needs a manifold")


# ---------------------------------------------------------------------------
# deterministic output helpers
# ---------------------------------------------------------------------------

def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def emit_plotdata(path: Path, series: dict):
    """Long-format plot data: one `series,x,y` file."""
    rows = []
    for name in sorted(series):
        for x, y in series[name]:
            rows.append((name, float(x), float(y)))
    write_csv(path, ["series", "x", "y"], rows)


def write_json(path: Path, payload: dict):
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class RunReport:
    experiment: str
    config: ExperimentConfig
    results: list
    artifacts: list
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r["pass"] for r in self.results if not r.get("conditional"))

    def to_json_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "config": {
                "experiment": self.config.experiment,
                "manifold": self.config.manifold,
                "params": self.config.params,
            },
            "results": self.results,
            "artifacts": sorted(self.artifacts),
            "pass": self.passed,
        }


def _result(name, ok, conditional=False, **details):
    out = {"name": name, "pass": bool(ok), "conditional": bool(conditional)}
    out.update(details)
    return out


def default_start(spec):
    """Canonical start point and unit direction on a built-in manifold."""
    m = spec.ambient_dim
    if spec.is_flat:
        x = np.zeros(m)
        v = np.zeros(m)
        v[0] = 1.0
        return x, v
    if spec.kind in ("sphere", "model") and spec.constant_curvature() > 0:
        x = np.zeros(m)
        x[-1] = 1.0 / math.sqrt(spec.constant_curvature())
        v = np.zeros(m)
        v[0] = 1.0
        return x, v
    if spec.lorentzian:
        x = np.zeros(m)
        x[0] = 1.0 / math.sqrt(-spec.constant_curvature())
        v = np.zeros(m)
        v[1] = 1.0
        return x, v
    # quadric: start on the second axis, run along the first
    x = np.zeros(m)
    x[1] = 1.0 / math.sqrt(spec.coefficients[1])
    v = np.zeros(m)
    v[0] = 1.0
    v = spec.project_tangent(x, v)
    return x, v / spec.norm(v)


# ---------------------------------------------------------------------------
# experiment bodies
# ---------------------------------------------------------------------------

def _run_rauch_sphere(cfg, out):
    k = cfg.params["K"]
    t_max = cfg.params["t_max"]
    step = cfg.params["step"]
    sph = mf.Sphere(2, k)
    x, v = default_start(sph)
    rep = cmp.weak_rauch_check(sph, x, v, t_max, step)
    results = [_result("weak-rauch-equality", rep.passed,
                       slack_min=rep.slack_min)]
    length = math.pi / math.sqrt(k)
    eu = mf.Euclidean(3)
    pm = geo.integrate_geodesic(eu, np.zeros(3), np.array([1.0, 0, 0]),
                                length, step)
    pn = geo.integrate_geodesic(sph, x, v, length, step)
    r1 = cmp.rauch_compare(pm, pn)
    results.append(_result("rauch-flat-vs-sphere", r1.passed,
                           slack_min=r1.slack_min))
    quarter = mf.Sphere(2, k / 4.0)
    xq, vq = default_start(quarter)
    pq = geo.integrate_geodesic(quarter, xq, vq, length, step)
    r2 = cmp.rauch_compare(pq, pn)
    results.append(_result("rauch-quarter-vs-full", r2.passed,
                           slack_min=r2.slack_min))
    half_len = 0.5 * math.pi / math.sqrt(k)
    pm2 = geo.integrate_geodesic(eu, np.zeros(3), np.array([1.0, 0, 0]),
                                 half_len, step)
    pn2 = geo.integrate_geodesic(sph, x, v, half_len, step)
    b1 = cmp.berger_compare(pm2, pn2)
    results.append(_result("berger-flat-vs-sphere", b1.passed,
                           slack_min=b1.slack_min))
    pq2 = geo.integrate_geodesic(quarter, xq, vq, half_len, step)
    b2 = cmp.berger_compare(pq2, pn2)
    results.append(_result("berger-quarter-vs-full", b2.passed,
                           slack_min=b2.slack_min))
    flow = jb.integrate_flow(pn, jb.JacobiBoundary.conjugate(1))
    series = {
        "lower": [], "measured": [], "upper": [],
    }
    fk = cmp.ComparisonFunction(k, "zero")
    for i in range(1, len(flow.s)):
        s = flow.s[i]
        series["lower"].append((s, fk.value(s) / s))
        series["upper"].append((s, fk.value(s) / s))
        series["measured"].append((s, float(np.linalg.norm(flow.T[i][:, 0])) / s))
    emit_plotdata(out / "weak_rauch_series.csv", series)
    return results, ["weak_rauch_series.csv"]


def _run_weak_rauch(cfg, out):
    spec = mf.parse_manifold(cfg.manifold)
    x, v = default_start(spec)
    rep = cmp.weak_rauch_check(spec, x, v, cfg.params["t_max"],
                               cfg.params["step"],
                               n_random_dirs=cfg.params["dirs"],
                               seed=cfg.params["seed"])
    path = geo.integrate_geodesic(spec, x, v, cfg.params["t_max"],
                                  cfg.params["step"])
    lo, hi = mf.curvature_range(spec, path, 64)
    flow = jb.integrate_flow(path, jb.JacobiBoundary.conjugate(path.dim - 1))
    f_lo = cmp.ComparisonFunction(lo, "zero")
    f_hi = cmp.ComparisonFunction(hi, "zero")
    series = {"lower": [], "measured": [], "upper": []}
    for i in range(1, len(flow.s)):
        s = flow.s[i]
        series["lower"].append((s, f_hi.value(s) / s))
        series["upper"].append((s, f_lo.value(s) / s))
        series["measured"].append((s, float(np.linalg.norm(flow.T[i][:, 0])) / s))
    emit_plotdata(out / "weak_rauch_series.csv", series)
    return ([_result("weak-rauch-sandwich", rep.passed,
                     slack_min=rep.slack_min, lower=lo, upper=hi)],
            ["weak_rauch_series.csv"])


def _run_ellipsoid_focal_scan(cfg, out):
    results = []
    artifacts = []
    event_rows = []
    for n in cfg.params["dims"]:
        gap = math.pi / (2.0 * n * (n - 1))
        step = min(cfg.params["step"], gap / 8.0)
        spec = mf.clustered_focal_quadric(n)
        x, v = default_start(spec)
        path = geo.integrate_geodesic(spec, x, v, cfg.params["length"], step)
        flow = jb.integrate_flow(
            path, jb.JacobiBoundary.geodesic_submanifold(spec.dim - 1))
        rep = jb.detect_singularities(flow, tol=cfg.params["tol"])
        expected = sorted(k * math.pi / (2.0 * (k - 1)) for k in range(3, n + 1))
        got = [e.s for e in rep.events if e.s <= cfg.params["length"]]
        ok = len(got) == len(expected)
        max_err = max((abs(a - b) for a, b in zip(sorted(got), expected)),
                      default=math.inf) if ok else math.inf
        results.append(_result(f"focal-parameters-n{n}", ok and max_err <= 1e-4,
                               detected=len(got), expected=len(expected),
                               max_error=max_err))
        for kk, (g, e) in enumerate(zip(sorted(got), expected), start=3):
            event_rows.append((n, kk, g, e))
        name = f"sigma_min_trace_n{n}.csv"
        with open(out / name, "w", newline="\n") as fh:
            rep.trace_csv(fh)
        artifacts.append(name)
        jname = f"focal_report_n{n}.json"
        write_json(out / jname, rep.to_json_dict(
            geodesic={"spec": spec.text(), "length": cfg.params["length"],
                      "step": step},
            boundary=flow.boundary.describe()))
        artifacts.append(jname)
    write_csv(out / "focal_parameters.csv",
              ["n", "k", "s_detected", "s_axis_formula"], event_rows)
    artifacts.append("focal_parameters.csv")
    return results, artifacts


def _run_epifocal_trend(cfg, out):
    rows = jb.epifocal_trend(cfg.params["dims"], step=cfg.params["step"])
    results = []
    sigmas = [r["sigma_min"] for r in rows]
    for r in rows:
        expected = math.sin(math.pi / (2.0 * r["n"]))
        results.append(_result(
            f"sigma-min-n{r['n']}",
            abs(r["sigma_min"] - expected) <= 1e-9,
            sigma_min=r["sigma_min"], expected=expected, b_n=r["b_n"]))
    results.append(_result("sigma-min-strictly-decreasing",
                           all(a > b for a, b in zip(sigmas, sigmas[1:]))))
    last = rows[-1]
    target = 2.0 / math.pi
    results.append(_result(
        "preimage-coefficient-limit",
        abs(last["b_n"] - target) <= 1e-4 or last["n"] < 64,
        b_n=last["b_n"], limit=target, gap=abs(last["b_n"] - target)))
    series = {"sigma_min": [(r["n"], r["sigma_min"]) for r in rows],
              "b_n": [(r["n"], r["b_n"]) for r in rows]}
    emit_plotdata(out / "epifocal_trend.csv", series)
    return results, ["epifocal_trend.csv"]


def _boundary_from_name(name, dim):
    if name == "conjugate":
        return jb.JacobiBoundary.conjugate(dim)
    if name in ("submanifold", "geodesic-submanifold", "focal"):
        return jb.JacobiBoundary.geodesic_submanifold(dim)
    raise GeometryError(f"unknown boundary kind {name!r}")


def _run_focal_index_lemma(cfg, out):
    spec = mf.parse_manifold(cfg.manifold)
    x, v = default_start(spec)
    path = geo.integrate_geodesic(spec, x, v, cfg.params["b"],
                                  cfg.params["step"])
    boundary = _boundary_from_name(cfg.params["boundary"], path.dim - 1)
    rep = jb.focal_index_lemma_check(path, boundary, cfg.params["trials"],
                                     seed=cfg.params["seed"])
    ok = rep["min_slack"] >= -1e-9 and abs(rep["equality_slack"]) <= 1e-8
    write_csv(out / "index_slacks.csv", ["trial", "min_slack"],
              [(rep["argmin_trial"], rep["min_slack"])])
    return ([_result("focal-index-lemma", ok, **rep)], ["index_slacks.csv"])


def _run_wronskian_drift(cfg, out):
    spec = mf.parse_manifold(cfg.manifold)
    x, v = default_start(spec)
    path = geo.integrate_geodesic(spec, x, v, cfg.params["length"],
                                  cfg.params["step"])
    flow = jb.integrate_flow(path, jb.JacobiBoundary.conjugate(path.dim - 1))
    rng = np.random.default_rng(cfg.params["seed"])
    d = flow.dim
    worst = 0.0
    worst_trace = None
    for _ in range(cfg.params["pairs"]):
        d1 = (rng.standard_normal(d), rng.standard_normal(d))
        d2 = (rng.standard_normal(d), rng.standard_normal(d))
        vals = np.array([jb.wronskian(flow, d1, d2, t) for t in flow.s])
        drift = np.abs(vals - vals[0])
        if float(np.max(drift)) >= worst:
            worst = float(np.max(drift))
            worst_trace = drift
    write_csv(out / "wronskian_drift.csv", ["s", "drift"],
              list(zip(flow.s.tolist(), worst_trace.tolist())))
    return ([_result("wronskian-drift", worst <= 1e-8, max_drift=worst)],
            ["wronskian_drift.csv"])


def _run_flow_estimates(cfg, out):
    spec = mf.parse_manifold(cfg.manifold)
    x, v = default_start(spec)
    path = geo.integrate_geodesic(spec, x, v, cfg.params["length"],
                                  cfg.params["step"])
    boundary = _boundary_from_name(cfg.params["boundary"], path.dim - 1)
    flow = jb.integrate_flow(path, boundary)
    lo, hi = mf.curvature_range(spec, path, 64)
    items = jb.flow_estimate_suite(flow, f_upper=hi, f_lower=lo,
                                   seed=cfg.params["seed"])
    results = [
        _result(f"estimate-{it['name']}", it["min_slack"] >= -1e-6,
                min_slack=it["min_slack"], at_s=it["at_s"])
        for it in items
    ]
    write_csv(out / "flow_estimates.csv", ["item", "min_slack", "at_s"],
              [(it["name"], it["min_slack"],
                it["at_s"] if it["at_s"] is not None else math.nan)
               for it in items])
    return results, ["flow_estimates.csv"]


def _random_hinge(spec, rng, l_max, step):
    x = mf.random_point(spec, rng)
    d1 = mf.random_unit_tangent(spec, x, rng).components
    w = mf.random_unit_tangent(spec, x, rng, against=(d1,)).components
    alpha = rng.uniform(0.2, math.pi - 0.2)
    d2 = math.cos(alpha) * d1 + math.sin(alpha) * w
    l1 = rng.uniform(0.1, l_max)
    l2 = rng.uniform(0.1, l_max)
    return cmp.Hinge(spec=spec, vertex=x, dir_away=d1, dir_out=d2,
                     l1=l1, l2=l2, step=step)


def _run_toponogov_sweep(cfg, out):
    spec = mf.parse_manifold(cfg.manifold)
    h_bound = cfg.params["H"]
    rng = np.random.default_rng(cfg.params["seed"])
    slacks = []
    flags = 0
    for _ in range(cfg.params["hinges"]):
        hinge = _random_hinge(spec, rng, cfg.params["l_max"],
                              cfg.params["step"])
        rep = cmp.toponogov_hinge_check(spec, hinge, h_bound)
        slacks.append(rep.slack_min)
        if rep.conditional_flags:
            flags += 1
    slacks = np.array(slacks)
    kappa = spec.constant_curvature()
    saturating = kappa is not None and abs(kappa - h_bound) < 1e-12
    if saturating:
        ok = float(np.max(np.abs(slacks))) <= 1e-6
    else:
        ok = float(np.min(slacks)) >= -1e-6
    write_csv(out / "hinge_slacks.csv", ["hinge", "slack"],
              list(enumerate(slacks.tolist())))
    return ([_result("toponogov-hinges", ok,
                     min_slack=float(np.min(slacks)),
                     max_abs_slack=float(np.max(np.abs(slacks))),
                     saturating=saturating, conditional_hinges=flags)],
            ["hinge_slacks.csv"])


def _random_triangle(spec, rng, size, step):
    kappa = spec.constant_curvature()
    for _ in range(256):
        if kappa is not None:
            pts = [mf.random_point(spec, rng) for _ in range(3)]
        else:
            x = mf.random_point(spec, rng)
            d1 = mf.random_unit_tangent(spec, x, rng).components
            w = mf.random_unit_tangent(spec, x, rng, against=(d1,)).components
            alpha = rng.uniform(0.4, math.pi - 0.4)
            d2 = math.cos(alpha) * d1 + math.sin(alpha) * w
            pts = [x,
                   geo.exp_map(spec, x, rng.uniform(0.2, size) * d1, step=step),
                   geo.exp_map(spec, x, rng.uniform(0.2, size) * d2, step=step)]
        try:
            tri = cmp.triangle_from_points(spec, *pts, step=step)
        except GeometryError:
            continue
        if min(tri.lengths) < 0.1 or max(tri.lengths) > size + 1e-9:
            continue
        return tri
    raise GeometryError("failed to sample a triangle")


def _run_triangle_sweep(cfg, out):
    spec = mf.parse_manifold(cfg.manifold)
    h_bound = cfg.params["H"]
    rng = np.random.default_rng(cfg.params["seed"])
    slack_rows = []
    perim_ok = True
    min_slack = math.inf
    for i in range(cfg.params["count"]):
        tri = _random_triangle(spec, rng, cfg.params["size"],
                               cfg.params["step"])
        rep = cmp.triangle_comparison_check(spec, tri, h_bound)
        min_slack = min(min_slack, rep.slack_min)
        if rep.params["perimeter_slack"] is not None:
            perim_ok = perim_ok and rep.params["perimeter_slack"] >= -1e-9
        slack_rows.append((i, rep.slack_min, rep.params["perimeter"]))
    write_csv(out / "triangle_slacks.csv", ["triangle", "angle_slack",
                                            "perimeter"], slack_rows)
    return ([_result("triangle-angles", min_slack >= -1e-6,
                     min_slack=float(min_slack)),
             _result("perimeter-bound", perim_ok)],
            ["triangle_slacks.csv"])


def _run_meridian_length(cfg, out):
    spec = mf.parse_manifold(cfg.manifold)
    x, _ = default_start(spec)
    kappa = spec.constant_curvature()
    l_bound = cfg.params["L"] or (kappa if kappa is not None else None)
    if l_bound is None or l_bound <= 0:
        raise GeometryError("meridian bound needs a positive lower "
                            "curvature bound L")
    results = []
    rows = []
    for radius in cfg.params["radii"]:
        t, curve = cmp.meridian_curve(spec, x, radius, n=cfg.params["n"],
                                      seed=cfg.params["seed"])
        measured = cmp.exp_image_curve_length(spec, x, curve, t,
                                              step=cfg.params["step"])
        bound = math.pi / math.sqrt(l_bound) * math.sin(radius * math.sqrt(l_bound))
        slack = bound - measured
        if kappa is not None and abs(kappa - l_bound) < 1e-12:
            ok = abs(slack) <= 1e-6
        else:
            ok = slack >= -1e-9
        results.append(_result(f"meridian-r{radius}", ok, measured=measured,
                               bound=bound, slack=slack))
        rows.append((radius, measured, bound, slack))
    write_csv(out / "meridian_lengths.csv",
              ["radius", "measured", "bound", "slack"], rows)
    return results, ["meridian_lengths.csv"]


def _run_maximal_diameter(cfg, out):
    rep = cmp.maximal_diameter_probe(curvature=cfg.params["delta"],
                                     dim=cfg.params["dim"],
                                     n_fields=cfg.params["fields"],
                                     seed=cfg.params["seed"],
                                     n_t=cfg.params["n_t"])
    write_json(out / "probe.json", rep.to_json_dict())
    return ([_result("maximal-diameter-probe", rep.passed, **rep.params)],
            ["probe.json"])


def _run_pinch_constants(cfg, out):
    pc = cmp.pinch_constants()
    ok = (pc.h_toponogov == 4.0 / 9.0
          and pc.rauch_residual <= 1e-12
          and 0.70 < pc.h_rauch < 0.78)
    write_json(out / "pinch_constants.json", pc.to_json_dict())
    return ([_result("pinch-constants", ok, **pc.to_json_dict())],
            ["pinch_constants.json"])


def _run_distance_ratio(cfg, out):
    spec = mf.parse_manifold(cfg.manifold)
    x, _ = default_start(spec)
    rng = np.random.default_rng(cfg.params["seed"])
    xdir = mf.random_unit_tangent(spec, x, rng).components
    ydir = mf.random_unit_tangent(spec, x, rng, against=(xdir,)).components
    rows = []
    results = []
    prev = -math.inf
    monotone = True
    for j in range(cfg.params["j_min"], cfg.params["j_max"] + 1):
        s = 2.0 ** (-j)
        ratio = geo.distance_ratio(spec, x, xdir, ydir, s)
        bound = 4.0 ** (-j + 1)
        ok = abs(ratio - 1.0) <= bound
        monotone = monotone and ratio >= prev - 1e-12
        prev = ratio
        rows.append((j, s, ratio, bound))
        results.append(_result(f"ratio-j{j}", ok, ratio=ratio, bound=bound))
    results.append(_result("ratio-monotone-from-below",
                           monotone and prev <= 1.0 + 1e-12))
    write_csv(out / "distance_ratio.csv", ["j", "s", "ratio", "bound"], rows)
    return results, ["distance_ratio.csv"]


def _run_rotation_isometry(cfg, out):
    scan = geo.rotation_isometry_displacement(cfg.params["n"],
                                              sample_count=cfg.params["samples"],
                                              seed=cfg.params["seed"])
    n = cfg.params["n"]
    ok_min = abs(scan.min_displacement - 2.0 / n) <= 1e-9
    ok_pres = scan.max_distance_residual <= 1e-9
    ok_move = scan.min_sample_move > 0.0
    write_csv(out / "displacements.csv", ["i", "displacement"],
              scan.displacements)
    return ([_result("min-displacement", ok_min,
                     min_displacement=scan.min_displacement, expected=2.0 / n),
             _result("distance-preservation", ok_pres,
                     max_residual=scan.max_distance_residual),
             _result("no-fixed-point", ok_move,
                     min_sample_move=scan.min_sample_move)],
            ["displacements.csv"])


def _run_lift_curve_demo(cfg, out):
    spec = mf.parse_manifold(cfg.manifold)
    x, _ = default_start(spec)
    rng = np.random.default_rng(cfg.params["seed"])
    v = mf.random_unit_tangent(spec, x, rng).components
    w = mf.random_unit_tangent(spec, x, rng, against=(v,)).components
    r = cfg.params["radius"]
    t = np.linspace(0.0, 2.0 * math.pi, cfg.params["n"])
    curve = [geo.exp_map(spec, x, r * (math.cos(a) * v + math.sin(a) * w)).coords
             for a in t]
    start = curve[0]
    lift = geo.lift_curve(spec, start, curve, cfg.params["h_bound"], t=t)
    worst = 0.0
    for i in range(len(t)):
        back = geo.exp_map(spec, start, lift.xi[i]).coords
        worst = max(worst, float(np.linalg.norm(back - curve[i])))
    with open(out / "lifted_curve.csv", "w", newline="\n") as fh:
        geo.lifted_to_csv(lift, fh)
    return ([_result("lift-reexponentiates", worst <= 1e-7,
                     max_error=worst, continuity_bound=lift.continuity_bound,
                     radius_margin=lift.radius_margin)],
            ["lifted_curve.csv"])


_RUNNERS = {
    "rauch-sphere": _run_rauch_sphere,
    "weak-rauch": _run_weak_rauch,
    "ellipsoid-focal-scan": _run_ellipsoid_focal_scan,
    "epifocal-trend": _run_epifocal_trend,
    "focal-index-lemma": _run_focal_index_lemma,
    "wronskian-drift": _run_wronskian_drift,
    "flow-estimates": _run_flow_estimates,
    "toponogov-sweep": _run_toponogov_sweep,
    "triangle-sweep": _run_triangle_sweep,
    "meridian-length": _run_meridian_length,
    "maximal-diameter-probe": _run_maximal_diameter,
    "pinch-constants": _run_pinch_constants,
    "distance-ratio": _run_distance_ratio,
    "rotation-isometry": _run_rotation_isometry,
    "lift-curve-demo": _run_lift_curve_demo,
}


def run(cfg: ExperimentConfig, out_dir) -> RunReport:
    """Dispatch a validated config, write report.json plus artifacts."""
    import time

    validate_config(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    results, artifacts = _RUNNERS[cfg.experiment](cfg, out)
    wall = time.time() - t0
    report = RunReport(experiment=cfg.experiment, config=cfg,
                       results=results, artifacts=artifacts, wall_time=wall)
    write_json(out / "report.json", report.to_json_dict())
    report.artifacts = sorted(set(artifacts + ["report.json"]))
    return report
