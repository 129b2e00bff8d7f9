"""Model-space trigonometry and the comparison checker suite.

Closed-form laws of cosines for the constant-curvature model surface,
field-norm domination checks (conjugate and focal data), conjugate and
focal distance windows, image-curve length bounds, hinge and triangle
comparisons against the model, pinching constants and the maximal
diameter probe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .manifolds import (
    GeometryError,
    ManifoldSpec,
    Point,
    Sphere,
    _components,
    _coords,
    curvature_range,
    random_unit_tangent,
    sectional_curvature,
)
from .geodesics import (
    GeodesicPath,
    distance,
    distance_result,
    exp_map,
    integrate_geodesic,
    log_map,
)
from .jacobi import (
    JacobiBoundary,
    _fd4,
    _simpson,
    detect_singularities,
    index_form,
    integrate_flow,
)

try:  # optional jit-compiled scalar flow for surface quadrics
    from ._fast import quadric_radial_flow
except Exception:  # pragma: no cover - numba not installed
    quadric_radial_flow = None


# ---------------------------------------------------------------------------
# comparison functions f'' + K f = 0
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonFunction:
    """Solution of f'' + K f = 0 with normalized initial data.

    mode "zero": f(0) = 0, f'(0) = 1 (sin / identity / sinh profile);
    mode "one":  f(0) = 1, f'(0) = 0 (cos / constant / cosh profile).
    """

    curvature: float
    mode: str = "zero"

    def __post_init__(self):
        if self.mode not in ("zero", "one"):
            raise GeometryError("mode must be 'zero' or 'one'")

    def value(self, s: float) -> float:
        k = self.curvature
        if k > 0:
            rk = math.sqrt(k)
            return math.sin(rk * s) / rk if self.mode == "zero" else math.cos(rk * s)
        if k < 0:
            rk = math.sqrt(-k)
            return math.sinh(rk * s) / rk if self.mode == "zero" else math.cosh(rk * s)
        return s if self.mode == "zero" else 1.0

    def derivative(self, s: float) -> float:
        k = self.curvature
        if k > 0:
            rk = math.sqrt(k)
            return math.cos(rk * s) if self.mode == "zero" else -rk * math.sin(rk * s)
        if k < 0:
            rk = math.sqrt(-k)
            return math.cosh(rk * s) if self.mode == "zero" else rk * math.sinh(rk * s)
        return 1.0 if self.mode == "zero" else 0.0

    def first_zero(self) -> float:
        k = self.curvature
        if k <= 0:
            return math.inf
        rk = math.sqrt(k)
        return math.pi / rk if self.mode == "zero" else math.pi / (2.0 * rk)


def comparison_value(f: ComparisonFunction, s: float) -> float:
    return f.value(s)


# ---------------------------------------------------------------------------
# model-surface trigonometry
# ---------------------------------------------------------------------------

def model_hinge_distance(H: float, l1: float, l2: float, alpha: float) -> float:
    """Distance closing a hinge with side lengths l1, l2 and angle alpha in
    the constant-curvature model surface (law of cosines)."""
    if l1 <= 0 or l2 <= 0:
        raise GeometryError("hinge sides must be positive")
    if not (0.0 < alpha <= math.pi + 1e-12):
        raise GeometryError("hinge angle must lie in (0, pi]")
    if H > 0:
        cap = math.pi / math.sqrt(H)
        if l1 > cap + 1e-12 or l2 > cap + 1e-12:
            raise GeometryError("sides exceed the model antipodal distance")
        rk = math.sqrt(H)
        arg = (math.cos(rk * l1) * math.cos(rk * l2)
               + math.sin(rk * l1) * math.sin(rk * l2) * math.cos(alpha))
        return math.acos(min(1.0, max(-1.0, arg))) / rk
    if H < 0:
        rk = math.sqrt(-H)
        arg = (math.cosh(rk * l1) * math.cosh(rk * l2)
               - math.sinh(rk * l1) * math.sinh(rk * l2) * math.cos(alpha))
        return math.acosh(max(1.0, arg)) / rk
    return math.sqrt(max(l1 * l1 + l2 * l2 - 2.0 * l1 * l2 * math.cos(alpha), 0.0))


@dataclass
class ModelTriangle:
    angles: tuple
    unique: bool


def model_triangle_angles(H: float, l1: float, l2: float, l3: float) -> ModelTriangle:
    """Vertex angles of the model triangle with the given side lengths;
    angles[i] sits at the vertex opposite side i."""
    ls = (float(l1), float(l2), float(l3))
    if any(l <= 0 for l in ls):
        raise GeometryError("triangle sides must be positive")
    for i in range(3):
        if ls[i] > ls[(i + 1) % 3] + ls[(i + 2) % 3] + 1e-12:
            raise GeometryError("triangle inequality violated")
    if H > 0:
        cap = math.pi / math.sqrt(H)
        if any(l > cap + 1e-12 for l in ls):
            raise GeometryError("sides exceed the model antipodal distance")
        if sum(ls) > 2.0 * cap + 1e-12:
            raise GeometryError("perimeter exceeds the model bound")
    unique = not (H > 0 and any(abs(l - math.pi / math.sqrt(H)) <= 1e-9 for l in ls))
    angles = []
    for i in range(3):
        li, lj, lk = ls[i], ls[(i + 1) % 3], ls[(i + 2) % 3]
        if H > 0:
            rk = math.sqrt(H)
            denom = math.sin(rk * lj) * math.sin(rk * lk)
            if denom < 1e-15:
                if not unique:
                    # antipodal side: the flanking angles are indeterminate
                    angles.append(math.nan)
                    continue
                raise GeometryError("degenerate model triangle")
            arg = (math.cos(rk * li) - math.cos(rk * lj) * math.cos(rk * lk)) / denom
        elif H < 0:
            rk = math.sqrt(-H)
            denom = math.sinh(rk * lj) * math.sinh(rk * lk)
            if denom < 1e-15:
                raise GeometryError("degenerate model triangle")
            arg = (math.cosh(rk * lj) * math.cosh(rk * lk) - math.cosh(rk * li)) / denom
        else:
            arg = (lj * lj + lk * lk - li * li) / (2.0 * lj * lk)
        if arg > 1.0 + 1e-9 or arg < -1.0 - 1e-9:
            raise GeometryError("inadmissible side lengths")
        angles.append(math.acos(min(1.0, max(-1.0, arg))))
    return ModelTriangle(angles=tuple(angles), unique=unique)


# ---------------------------------------------------------------------------
# structured results
# ---------------------------------------------------------------------------

@dataclass
class ComparisonReport:
    check: str
    spec: str
    params: dict
    slack_min: float | None
    slack_argmin: float | None
    conditional_flags: list
    passed: bool

    def to_json_dict(self) -> dict:
        return {
            "check": self.check,
            "spec": self.spec,
            "params": self.params,
            "slack_min": self.slack_min,
            "slack_argmin": self.slack_argmin,
            "conditional_flags": list(self.conditional_flags),
            "pass": self.passed,
        }


@dataclass(eq=False)
class Hinge:
    """Two geodesic sides leaving a common vertex.

    ``dir_away`` points back along the first side (so its far endpoint is
    exp(vertex, l1 * dir_away)); ``dir_out`` is the initial velocity of the
    second side; the hinge angle is measured between them.
    """

    spec: ManifoldSpec
    vertex: Point
    dir_away: np.ndarray
    dir_out: np.ndarray
    l1: float
    l2: float
    step: float = 2e-3

    def __post_init__(self):
        spec = self.spec
        x = spec.check_point(self.vertex.coords if isinstance(self.vertex, Point)
                             else self.vertex)
        self.vertex = Point(x)
        self.dir_away = spec.check_tangent(x, _components(self.dir_away))
        self.dir_out = spec.check_tangent(x, _components(self.dir_out))
        for d in (self.dir_away, self.dir_out):
            if abs(spec.norm(d) - 1.0) > 1e-9:
                raise GeometryError("hinge directions must be unit vectors")
        if self.l1 <= 0 or self.l2 <= 0:
            raise GeometryError("hinge sides must be positive")
        if not (0.0 < self.alpha <= math.pi + 1e-12):
            raise GeometryError("hinge angle must lie in (0, pi]")

    @property
    def alpha(self) -> float:
        c = self.spec.inner(self.dir_away, self.dir_out)
        return math.acos(min(1.0, max(-1.0, c)))

    def far1(self) -> Point:
        return exp_map(self.spec, self.vertex, self.l1 * self.dir_away, step=self.step)

    def far2(self) -> Point:
        return exp_map(self.spec, self.vertex, self.l2 * self.dir_out, step=self.step)


@dataclass(eq=False)
class GeodesicTriangle:
    """Triangle with vertices p_i; lengths[i] and angles[i] are the side
    and interior angle opposite / at vertex i; minimal[i] flags whether the
    side opposite vertex i is a certified minimizer."""

    spec: ManifoldSpec
    vertices: tuple
    lengths: tuple
    angles: tuple
    minimal: tuple

    @property
    def perimeter(self) -> float:
        return float(sum(self.lengths))


def triangle_from_points(spec: ManifoldSpec, p1, p2, p3,
                         step: float = 2e-3) -> GeodesicTriangle:
    pts = [spec.check_point(_coords(p)) for p in (p1, p2, p3)]
    directions = {}
    lengths = {}
    minimal = {}
    for j in range(3):
        for k in range(3):
            if j == k:
                continue
            w = log_map(spec, pts[j], pts[k], step=step)
            d = spec.norm(w.components)
            directions[(j, k)] = w.components / d
            lengths[(j, k)] = d
    side_len = []
    side_min = []
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        d = 0.5 * (lengths[(j, k)] + lengths[(k, j)])
        side_len.append(d)
        kappa = spec.constant_curvature()
        if kappa is not None:
            certified = (kappa <= 0) or d <= math.pi / math.sqrt(kappa) + 1e-9
        else:
            # both shooting directions agreeing certifies within tolerance
            certified = abs(lengths[(j, k)] - lengths[(k, j)]) <= 1e-6
        side_min.append(bool(certified))
    angles = []
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        c = spec.inner(directions[(i, j)], directions[(i, k)])
        angles.append(math.acos(min(1.0, max(-1.0, c))))
    return GeodesicTriangle(spec=spec, vertices=tuple(Point(p) for p in pts),
                            lengths=tuple(side_len), angles=tuple(angles),
                            minimal=tuple(side_min))


# ---------------------------------------------------------------------------
# field-norm comparisons
# ---------------------------------------------------------------------------

def _norm_domination(path_low, path_high, data_low, data_high, boundary_kind,
                     check_name, tol=1e-7):
    """Shared core: fields on the lower-curvature side must dominate."""
    if abs(path_low.length - path_high.length) > 1e-9:
        raise GeometryError("geodesics must have the same length")
    if len(path_low.s) != len(path_high.s):
        raise GeometryError("geodesics must be sampled on matching grids")
    lo_rng = curvature_range(path_low.spec, path_low, 64)
    hi_rng = curvature_range(path_high.spec, path_high, 64)
    if hi_rng[0] < lo_rng[1] - 1e-9:
        raise GeometryError(
            "curvature hypothesis violated: the second geodesic must carry "
            "at least the curvature of the first")
    d_lo = path_low.dim - 1
    d_hi = path_high.dim - 1
    if boundary_kind == "conjugate":
        b_lo = JacobiBoundary.conjugate(d_lo)
        b_hi = JacobiBoundary.conjugate(d_hi)
    else:
        b_lo = JacobiBoundary.geodesic_submanifold(d_lo)
        b_hi = JacobiBoundary.geodesic_submanifold(d_hi)
    f_lo = integrate_flow(path_low, b_lo)
    f_hi = integrate_flow(path_high, b_hi)
    w_lo = np.zeros(d_lo)
    w_lo[0] = 1.0
    w_lo = w_lo if data_low is None else np.asarray(data_low, dtype=float)
    w_hi = np.zeros(d_hi)
    w_hi[0] = 1.0
    w_hi = w_hi if data_high is None else np.asarray(data_high, dtype=float)
    if abs(np.linalg.norm(w_lo) - np.linalg.norm(w_hi)) > 1e-12:
        raise GeometryError("boundary data must have matching norms")
    events = detect_singularities(f_hi).events
    window_end = events[0].s if boundary_kind == "conjugate" and events \
        else f_hi.length
    if boundary_kind == "focal" and events and events[0].s < f_hi.length - 1e-9:
        raise GeometryError(
            f"higher-curvature flow is singular at s={events[0].s:.9g} "
            "inside the comparison window")
    mask = f_lo.s <= window_end + 1e-12
    n_lo = np.linalg.norm(np.einsum("nij,j->ni", f_lo.T[mask], w_lo), axis=1)
    n_hi = np.linalg.norm(np.einsum("nij,j->ni", f_hi.T[mask], w_hi), axis=1)
    slack = n_lo - n_hi
    i = int(np.argmin(slack))
    return ComparisonReport(
        check=check_name,
        spec=f"{path_low.spec.text()} vs {path_high.spec.text()}",
        params={
            "length": path_low.length,
            "curvature_low": list(lo_rng),
            "curvature_high": list(hi_rng),
            "window_end": float(window_end),
            "max_slack": float(np.max(slack)),
        },
        slack_min=float(slack[i]),
        slack_argmin=float(f_lo.s[mask][i]),
        conditional_flags=[],
        passed=bool(slack[i] >= -tol),
    )


def rauch_compare(path_m, path_n, w_m=None, w_n=None) -> ComparisonReport:
    """Conjugate-type domination: with matched vanishing initial values and
    matched derivative norms, the lower-curvature field stays at least as
    long up to the first conjugate parameter of the other side."""
    return _norm_domination(path_m, path_n, w_m, w_n, "conjugate", "rauch")


def berger_compare(path_m, path_n, v_m=None, v_n=None) -> ComparisonReport:
    """Focal-type domination: matched initial values, vanishing initial
    derivatives; the higher-curvature flow must stay nonsingular inside."""
    return _norm_domination(path_m, path_n, v_m, v_n, "focal", "berger")


def weak_rauch_check(spec: ManifoldSpec, p, v, t_max: float, step: float = 1e-3,
                     lower: float = None, upper: float = None,
                     n_random_dirs: int = 3, seed: int = 0) -> ComparisonReport:
    """Sandwich of the radial differential norms between the comparison
    profiles for the upper and lower curvature bounds.  Both orderings are
    evaluated; the report records which one holds."""
    path = integrate_geodesic(spec, p, v, t_max, step)
    lo, hi = curvature_range(spec, path, 64)
    lo = lo if lower is None else lower
    hi = hi if upper is None else upper
    if hi > 0 and t_max >= math.pi / math.sqrt(hi):
        raise GeometryError("t_max must stay below the upper-bound conjugate radius")
    flow = integrate_flow(path, JacobiBoundary.conjugate(path.dim - 1))
    f_hi = ComparisonFunction(hi, "zero")
    f_lo = ComparisonFunction(lo, "zero")
    d = flow.dim
    rng = np.random.default_rng(seed)
    dirs = [np.eye(d)[i] for i in range(d)]
    for _ in range(n_random_dirs):
        g = rng.standard_normal(d)
        dirs.append(g / np.linalg.norm(g))
    dirs = np.stack(dirs)
    s_all = flow.s[1:]
    ratios = np.linalg.norm(
        np.einsum("nij,kj->nki", flow.T[1:], dirs), axis=2) / s_all[:, None]
    low_curve = np.array([f_hi.value(s) / s for s in s_all])
    up_curve = np.array([f_lo.value(s) / s for s in s_all])
    slack_low = ratios - low_curve[:, None]
    slack_up = up_curve[:, None] - ratios
    smin = min(float(np.min(slack_low)), float(np.min(slack_up)))
    flat = np.minimum(slack_low, slack_up)
    i, j = np.unravel_index(int(np.argmin(flat)), flat.shape)
    # swapped reading: lower-bound profile below, upper-bound profile above
    alt = min(float(np.min(ratios - up_curve[:, None])),
              float(np.min(low_curve[:, None] - ratios)))
    return ComparisonReport(
        check="weak-rauch",
        spec=spec.text(),
        params={
            "t_max": t_max,
            "lower": lo,
            "upper": hi,
            "n_directions": int(dirs.shape[0]),
            "ordering": "upper-bound-profile-below",
            "swapped_ordering_slack": alt,
        },
        slack_min=smin,
        slack_argmin=float(s_all[i]),
        conditional_flags=[],
        passed=bool(smin >= -1e-6),
    )


# ---------------------------------------------------------------------------
# image-curve lengths
# ---------------------------------------------------------------------------

def _curve_speeds(spec, points, dt):
    vel = _fd4(points, dt)
    return np.array([spec.norm(spec.project_tangent(points[i], vel[i]))
                     for i in range(len(points))])


def curve_length_comparison(path_m: GeodesicPath, path_n: GeodesicPath,
                            profile, v_m=None, v_n=None):
    """Lengths of the tube curves exp(f(t) V(t)) over two matched base
    geodesics; the lower-curvature tube cannot be shorter."""
    if abs(path_m.length - path_n.length) > 1e-9:
        raise GeometryError("base geodesics must have the same length")
    flags = []
    lo_rng = curvature_range(path_m.spec, path_m, 32)
    hi_rng = curvature_range(path_n.spec, path_n, 32)
    if hi_rng[0] < lo_rng[1] - 1e-9:
        raise GeometryError("curvature hypothesis violated")
    # full path grid: speed stencils and Simpson need uniform spacing
    idx = np.arange(len(path_m.s))
    ts = path_m.s
    f_vals = np.array([float(profile(t)) for t in ts])
    if np.any(f_vals < 0):
        raise GeometryError("profile must be nonnegative")
    kappa_n = path_n.spec.constant_curvature()
    if kappa_n is not None and kappa_n > 0:
        if np.max(f_vals) >= math.pi / (2.0 * math.sqrt(kappa_n)):
            raise GeometryError("profile reaches the focal radius of the "
                                "higher-curvature side")
    elif kappa_n is None:
        flags.append("focal-free-uncertified")

    def tube(path, vcoef):
        d = path.dim - 1
        coef = np.zeros(d)
        coef[0] = 1.0
        coef = coef if vcoef is None else np.asarray(vcoef, dtype=float)
        pts = []
        for i, t in zip(idx, ts):
            w = coef @ path.frame[i][1:]
            fv = float(profile(t))
            if fv == 0.0:
                pts.append(path.x[i])
            else:
                pts.append(exp_map(path.spec, path.x[i], fv * w).coords)
        pts = np.stack(pts)
        dt = ts[1] - ts[0]
        speeds = _curve_speeds(path.spec, pts, dt)
        return _simpson(speeds, dt)

    l_m = tube(path_m, v_m)
    l_n = tube(path_n, v_n)
    slack = l_m - l_n
    report = ComparisonReport(
        check="curve-length",
        spec=f"{path_m.spec.text()} vs {path_n.spec.text()}",
        params={"length_low": float(l_m), "length_high": float(l_n)},
        slack_min=float(slack),
        slack_argmin=None,
        conditional_flags=flags,
        passed=bool(slack >= -1e-7),
    )
    return float(l_m), float(l_n), report


def exp_image_curve_length(spec: ManifoldSpec, p, curve, t=None,
                           step: float = 2e-3) -> float:
    """Length of the image under exp_p of a sampled curve in the tangent
    space, via the radial split of the differential: the radial component
    is isometric, the orthogonal part is scaled by the flow."""
    p = spec.check_point(_coords(p))
    pts = np.stack([spec.check_tangent(p, _components(c)) for c in curve])
    if t is None:
        t = np.linspace(0.0, 1.0, len(pts))
    t = np.asarray(t, dtype=float)
    dt = t[1] - t[0]
    vel = _fd4(pts, dt)
    kappa = spec.constant_curvature()
    speeds = np.empty(len(pts))
    for i in range(len(pts)):
        r = spec.norm(pts[i])
        if r < 1e-12:
            speeds[i] = spec.norm(vel[i])
            continue
        u = pts[i] / r
        radial = spec.inner(vel[i], u)
        w = vel[i] - radial * u
        wn = spec.norm(w)
        if wn < 1e-15:
            speeds[i] = abs(radial)
            continue
        if kappa is not None:
            fac = ComparisonFunction(kappa, "zero").value(r) / r
            speeds[i] = math.hypot(radial, fac * wn)
        elif quadric_radial_flow is not None and spec.kind == "quadric" \
                and spec.ambient_dim == 3:
            _, _, tval, _ = quadric_radial_flow(spec._c, p, u, r,
                                                min(step, r / 32.0))
            speeds[i] = math.hypot(radial, abs(tval) * wn / r)
        else:
            path = integrate_geodesic(spec, p, u, r, min(step, r / 32.0))
            flow = integrate_flow(path, JacobiBoundary.conjugate(path.dim - 1))
            coeffs = np.array([spec.inner(row, w) for row in path.frame[0][1:]])
            jn = np.linalg.norm(flow.T[-1] @ coeffs)
            speeds[i] = math.hypot(radial, jn / r)
    return _simpson(speeds, dt)


def meridian_curve(spec: ManifoldSpec, p, radius: float, n: int = 201,
                   seed: int = 0):
    """Half great circle of the given radius in T_pM joining antipodal
    tangent vectors, as (t, samples)."""
    rng = np.random.default_rng(seed)
    p = spec.check_point(_coords(p))
    v = random_unit_tangent(spec, p, rng).components
    w = random_unit_tangent(spec, p, rng, against=(v,)).components
    t = np.linspace(0.0, math.pi, n)
    pts = radius * (np.cos(t)[:, None] * v + np.sin(t)[:, None] * w)
    return t, pts


# ---------------------------------------------------------------------------
# conjugate / focal distance windows
# ---------------------------------------------------------------------------

def conjugate_distance_bounds_check(spec: ManifoldSpec, path: GeodesicPath,
                                    H: float, L: float) -> ComparisonReport:
    """First conjugate and focal parameters must land inside the windows
    set by the curvature bounds: [pi/sqrt(H), pi/sqrt(L)] and the halved
    window for the focal flow."""
    if not (0 < L <= H):
        raise GeometryError("need curvature bounds 0 < L <= H")
    lo, hi = curvature_range(spec, path, 64)
    if lo < L - 1e-9 or hi > H + 1e-9:
        raise GeometryError("curvature along the geodesic leaves [L, H]")
    d = path.dim - 1
    conj = detect_singularities(integrate_flow(path, JacobiBoundary.conjugate(d)))
    foc = detect_singularities(
        integrate_flow(path, JacobiBoundary.geodesic_submanifold(d)))
    flags = []
    slacks = {}
    vals = {}
    for name, rep, window in (
        ("conjugate", conj, (math.pi / math.sqrt(H), math.pi / math.sqrt(L))),
        ("focal", foc, (0.5 * math.pi / math.sqrt(H), 0.5 * math.pi / math.sqrt(L))),
    ):
        if not rep.events:
            flags.append(f"no-{name}-event-in-range")
            continue
        s = rep.events[0].s
        vals[name] = s
        slacks[name] = min(s - window[0], window[1] - s)
    smin = min(slacks.values()) if slacks else None
    return ComparisonReport(
        check="conjugate-distance-bounds",
        spec=spec.text(),
        params={"H": H, "L": L, "first": vals,
                "windows": {
                    "conjugate": [math.pi / math.sqrt(H), math.pi / math.sqrt(L)],
                    "focal": [0.5 * math.pi / math.sqrt(H),
                              0.5 * math.pi / math.sqrt(L)]}},
        slack_min=smin,
        slack_argmin=None,
        conditional_flags=flags,
        passed=bool(slacks and min(slacks.values()) >= -1e-6 and not flags),
    )


# ---------------------------------------------------------------------------
# hinge and triangle comparisons
# ---------------------------------------------------------------------------

def toponogov_hinge_check(spec: ManifoldSpec, hinge: Hinge, H: float,
                          cert_tol: float = 1e-6) -> ComparisonReport:
    """The distance closing a hinge is at most the model value for the
    lower curvature bound.  The first side must be a certified minimizer,
    otherwise the verdict carries a conditional flag.  The degenerate
    same-vertex reading is reported alongside."""
    if H > 0 and hinge.l2 > math.pi / math.sqrt(H) + 1e-12:
        raise GeometryError("second side exceeds the model antipodal distance")
    flags = []
    far1 = hinge.far1()
    far2 = hinge.far2()
    res1 = distance_result(spec, far1, hinge.vertex, step=hinge.step)
    if not res1.converged:
        flags.append("side1-distance-unconverged")
    if abs(res1.length - hinge.l1) > cert_tol:
        flags.append("side1-not-certified-minimal")
    res = distance_result(spec, far1, far2, step=hinge.step)
    if not res.converged:
        flags.append("closing-distance-unconverged")
    measured = res.length
    model = model_hinge_distance(H, hinge.l1, hinge.l2, hinge.alpha)
    slack = model - measured
    return ComparisonReport(
        check="toponogov-hinge",
        spec=spec.text(),
        params={
            "H": H, "l1": hinge.l1, "l2": hinge.l2, "alpha": hinge.alpha,
            "measured": float(measured), "model": float(model),
            "same_vertex_reading": {
                "measured": float(res1.length), "model": hinge.l1,
                "slack": float(hinge.l1 - res1.length)},
        },
        slack_min=float(slack),
        slack_argmin=None,
        conditional_flags=flags,
        passed=bool(slack >= -1e-6),
    )


def triangle_comparison_check(spec: ManifoldSpec, tri: GeodesicTriangle,
                              H: float) -> ComparisonReport:
    """Model angles cannot exceed the measured angles at the two vertices
    flanking side 2; for H > 0 the perimeter respects the model bound."""
    flags = []
    if H > 0 and tri.lengths[1] > math.pi / math.sqrt(H) + 1e-12:
        raise GeometryError("side 2 exceeds the model antipodal distance")
    for i in (0, 2):
        if not tri.minimal[i]:
            flags.append(f"side{i + 1}-not-certified-minimal")
    model = model_triangle_angles(H, *tri.lengths)
    compare_at = (0, 2)  # vertices flanking side 2
    slacks = [tri.angles[i] - model.angles[i] for i in compare_at]
    smin = min(slacks)
    perimeter_ok = True
    perimeter_slack = None
    if H > 0:
        perimeter_slack = 2.0 * math.pi / math.sqrt(H) - tri.perimeter
        perimeter_ok = perimeter_slack >= -1e-9
    return ComparisonReport(
        check="toponogov-triangle",
        spec=spec.text(),
        params={
            "H": H,
            "lengths": list(tri.lengths),
            "angles": list(tri.angles),
            "model_angles": list(model.angles),
            "model_unique": model.unique,
            "perimeter": tri.perimeter,
            "perimeter_slack": perimeter_slack,
            "all_angle_slacks": [tri.angles[i] - model.angles[i] for i in range(3)],
        },
        slack_min=float(smin),
        slack_argmin=float(compare_at[int(np.argmin(slacks))]),
        conditional_flags=flags,
        passed=bool(smin >= -1e-6 and perimeter_ok),
    )


def hinge_smallness(spec: ManifoldSpec, hinge: Hinge, H: float, Delta: float,
                    eps: float = None) -> dict:
    """Quantitative smallness preconditions for the local hinge lemma,
    evaluated as named predicates."""
    if H > 0 and eps is None:
        eps = 0.05 * math.pi / math.sqrt(H)
    d_close = distance(spec, hinge.far1(), hinge.far2())
    perimeter = hinge.l1 + hinge.l2 + d_close
    if H > 0:
        perimeter_cap = 2.0 * math.pi / math.sqrt(H) - 4.0 * eps
        perimeter_ok = perimeter <= perimeter_cap
        l2_cap = min(
            eps,
            math.sin(math.sqrt(H) * eps) / math.sqrt(H)
            * math.sin(math.pi * math.sqrt(H) / (2.0 * math.sqrt(Delta))),
            math.pi / (2.0 * math.sqrt(Delta)),
        ) if Delta > 0 else eps
    else:
        perimeter_cap = math.inf
        perimeter_ok = True
        l2_cap = math.pi / (2.0 * math.sqrt(Delta)) if Delta > 0 else math.inf
    return {
        "perimeter": perimeter,
        "perimeter_cap": perimeter_cap,
        "perimeter_ok": bool(perimeter_ok),
        "l2_cap": l2_cap,
        "l2_ok": bool(hinge.l2 <= l2_cap),
        "eps": eps,
    }


def hinge_subdivision_report(spec: ManifoldSpec, hinge: Hinge, H: float,
                             Delta: float, n_sub: int, eps: float = None):
    """Diagnostic subdivision of the second side: each sub-hinge against
    the smallness predicates.  Defines the valid-input envelope; it is not
    a proof engine."""
    if n_sub < 1:
        raise GeometryError("need at least one subdivision")
    far1 = hinge.far1()
    rows = []
    for k in range(n_sub):
        a = hinge.l2 * k / n_sub
        b = hinge.l2 * (k + 1) / n_sub
        pk = exp_map(spec, hinge.vertex, a * hinge.dir_out, step=hinge.step) \
            if a > 0 else hinge.vertex
        try:
            w = log_map(spec, pk, far1, step=hinge.step)
            sub = Hinge(spec=spec, vertex=pk,
                        dir_away=w.components / spec.norm(w.components),
                        dir_out=parallel_direction(spec, hinge, a),
                        l1=spec.norm(w.components), l2=b - a, step=hinge.step)
            rows.append({"k": k, **hinge_smallness(spec, sub, H, Delta, eps)})
        except GeometryError as exc:
            rows.append({"k": k, "error": str(exc)})
    return rows


def parallel_direction(spec: ManifoldSpec, hinge: Hinge, along: float):
    """Velocity of the second hinge side at arclength ``along``."""
    if along == 0.0:
        return hinge.dir_out
    from .geodesics import _exp_endpoint_state
    return _exp_endpoint_state(spec, hinge.vertex.coords,
                               along * hinge.dir_out, hinge.step)[1]


# ---------------------------------------------------------------------------
# pinching constants and the maximal diameter probe
# ---------------------------------------------------------------------------

@dataclass
class PinchConstants:
    h_toponogov: float
    h_rauch: float
    rauch_residual: float
    h_alternative: float | None
    alternative_residual: float | None

    def to_json_dict(self):
        return {
            "h_toponogov": self.h_toponogov,
            "h_rauch": self.h_rauch,
            "rauch_residual": self.rauch_residual,
            "h_alternative": self.h_alternative,
            "alternative_residual": self.alternative_residual,
        }


def _bisect(fun, a, b, tol=1e-14):
    fa, fb = fun(a), fun(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise GeometryError("root not bracketed")
    while b - a > tol:
        m = 0.5 * (a + b)
        fm = fun(m)
        if fm == 0.0:
            return m
        if fa * fm < 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def pinch_constants() -> PinchConstants:
    """Pinching thresholds of the two sphere-type routes: the triangle
    route needs 4/9 exactly; the radial route needs the root of
    sin(pi sqrt(h)) = sqrt(h)/2 near 3/4.  The alternative literal reading
    sin(sqrt(pi h)) = sqrt(h)/2 has no root in (0, 1]; its nearest root is
    reported for the record."""
    def g(h):
        return math.sin(math.pi * math.sqrt(h)) - math.sqrt(h) / 2.0

    h_rauch = _bisect(g, 0.5, 0.999999)

    def g_alt(h):
        return math.sin(math.sqrt(math.pi * h)) - math.sqrt(h) / 2.0

    h_alt = None
    alt_res = None
    try:
        h_alt = _bisect(g_alt, 1.0, 3.0)
        alt_res = abs(g_alt(h_alt))
    except GeometryError:
        pass
    return PinchConstants(
        h_toponogov=4.0 / 9.0,
        h_rauch=h_rauch,
        rauch_residual=abs(g(h_rauch)),
        h_alternative=h_alt,
        alternative_residual=alt_res,
    )


def maximal_diameter_probe(curvature: float = 1.0, dim: int = 3,
                           n_fields: int = 16, seed: int = 0,
                           n_t: int = 1001, s_values=(0.25, 0.5, 0.75, 1.0),
                           step: float = 1e-3) -> ComparisonReport:
    """Rigidity witnesses on the round sphere with two antipodal points.

    The sine-profile field generates the variation through the rotated
    minimal geodesics; every curve of that variation has the model length,
    the swept surface has the model curvature, and the sine-profile index
    form vanishes.  The naive reparameterization exp(s sin-profile) of the
    same sweep saturates the length identity only through second order;
    its finite-amplitude excess is recorded as a diagnostic.
    """
    delta = float(curvature)
    spec = Sphere(dim, delta)
    rk = math.sqrt(delta)
    length = math.pi / rk
    rng = np.random.default_rng(seed)
    m = spec.ambient_dim
    p = np.zeros(m)
    p[-1] = 1.0 / rk
    v = random_unit_tangent(spec, p, rng).components
    t_grid = np.linspace(0.0, length, n_t)
    dt = t_grid[1] - t_grid[0]
    theta_max = 1.0
    worst_len = 0.0
    worst_field = 0.0
    exp_profile_dev = 0.0
    gamma = np.stack([_sphere_exp(spec, p, v, t) for t in t_grid])
    for _ in range(max(1, n_fields)):
        w = random_unit_tangent(spec, p, rng, against=(v,)).components
        for s in s_values:
            theta = s * theta_max
            u = math.cos(theta) * v + math.sin(theta) * w
            pts = np.stack([_sphere_exp(spec, p, u, t) for t in t_grid])
            speeds = _curve_speeds(spec, pts, dt)
            worst_len = max(worst_len, abs(_simpson(speeds, dt) - length))
        # variation field of the family at theta = 0 is the sine profile
        h = 1e-6
        up = math.cos(h) * v + math.sin(h) * w
        um = math.cos(h) * v - math.sin(h) * w
        for t in (0.25 * length, 0.5 * length, 0.8 * length):
            fd = (_sphere_exp(spec, p, up, t) - _sphere_exp(spec, p, um, t)) / (2 * h)
            expect = math.sin(rk * t) / rk * w
            worst_field = max(worst_field,
                              float(np.linalg.norm(fd - expect)))
        # finite-amplitude excess of the exp(sin-profile) parameterization
        pts = np.stack([
            _sphere_exp_vec(spec, gamma[i],
                            w * math.sin(rk * t_grid[i]) / rk)
            for i in range(n_t)])
        speeds = _curve_speeds(spec, pts, dt)
        exp_profile_dev = max(exp_profile_dev,
                              abs(_simpson(speeds, dt) - length))
    # curvature of the swept surface
    worst_curv = 0.0
    w = random_unit_tangent(spec, p, rng, against=(v,)).components
    for theta, t in ((0.3, 0.31 * length), (0.7, 0.62 * length)):
        u = math.cos(theta) * v + math.sin(theta) * w
        base = _sphere_exp(spec, p, u, t)
        h = 1e-5
        du_theta = (_sphere_exp(spec, p, math.cos(theta + h) * v
                                + math.sin(theta + h) * w, t)
                    - _sphere_exp(spec, p, math.cos(theta - h) * v
                                  + math.sin(theta - h) * w, t)) / (2 * h)
        du_t = (_sphere_exp(spec, p, u, t + h)
                - _sphere_exp(spec, p, u, t - h)) / (2 * h)
        du_theta = spec.project_tangent(base, du_theta)
        du_t = spec.project_tangent(base, du_t)
        k = sectional_curvature(spec, base, du_theta, du_t)
        worst_curv = max(worst_curv, abs(k - delta))
    # index form of the sine profile
    path = integrate_geodesic(spec, p, v, length, step)
    wcoef = np.array([spec.inner(row, w) for row in path.frame[0][1:]])
    i_val = index_form(path, lambda t: math.sin(rk * t) * wcoef,
                       JacobiBoundary.conjugate(path.dim - 1))
    worst = max(worst_len, worst_curv, abs(i_val))
    return ComparisonReport(
        check="maximal-diameter-probe",
        spec=spec.text(),
        params={
            "delta": delta,
            "model_length": length,
            "max_length_deviation": float(worst_len),
            "max_curvature_deviation": float(worst_curv),
            "sine_index_form": float(i_val),
            "variation_field_residual": float(worst_field),
            "exp_profile_length_excess": float(exp_profile_dev),
        },
        slack_min=-float(worst),
        slack_argmin=None,
        conditional_flags=[],
        passed=bool(worst_len <= 1e-6 and worst_curv <= 1e-7
                    and abs(i_val) <= 1e-7),
    )


def _sphere_exp(spec, x, v, t):
    if t == 0.0:
        return np.array(x)
    return _sphere_exp_vec(spec, x, t * v)


def _sphere_exp_vec(spec, x, w):
    r = spec.norm(w)
    if r < 1e-15:
        return np.array(x)
    rk = math.sqrt(spec.curvature)
    return math.cos(r * rk) * x + math.sin(r * rk) / rk * (w / r)
