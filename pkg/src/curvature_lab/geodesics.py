"""Geodesic integration, exponential map, transport, distance and lifts.

Geodesics on the embedded kinds solve x'' = -eps <S x', x'> nu with a
classical fixed-step fourth-order scheme; after every step the point is
retracted onto the surface, the velocity re-projected onto the tangent
space and the carried frame re-orthonormalized.  Constant-curvature kinds
additionally expose closed forms (exp, log, distance) used whenever exact
values are available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .manifolds import (
    GeometryError,
    ManifoldSpec,
    Point,
    TangentVector,
    _components,
    _coords,
    tangent_basis,
)

try:  # optional jit-compiled quadric loops; generic integrator otherwise
    from ._fast import quadric_exp_endpoint, quadric_radial_flow
except Exception:  # pragma: no cover - numba not installed
    quadric_exp_endpoint = None
    quadric_radial_flow = None

UNIT_SPEED_TOL = 1e-8


@dataclass(eq=False)
class GeodesicPath:
    """Sampled unit-speed geodesic with velocity and parallel frame.

    ``frame[i]`` holds ``dim`` orthonormal tangent vectors at sample i,
    rows related to the rows at sample 0 by parallel transport, with
    ``frame[i][0]`` the unit velocity.
    """

    spec: ManifoldSpec
    s: np.ndarray          # (n+1,)
    x: np.ndarray          # (n+1, m)
    v: np.ndarray          # (n+1, m)
    frame: np.ndarray      # (n+1, dim, m); empty (n+1, 0, m) when not carried
    step: float

    @property
    def length(self) -> float:
        return float(self.s[-1])

    @property
    def dim(self) -> int:
        return self.spec.dim

    def point_at(self, i: int) -> Point:
        return Point(self.x[i])

    def velocity_at(self, i: int) -> TangentVector:
        return TangentVector(Point(self.x[i]), self.v[i])

    def endpoint(self) -> Point:
        return Point(self.x[-1])

    def to_csv(self, stream):
        m = self.x.shape[1]
        cols = ["s"] + [f"x_{j+1}" for j in range(m)] + [f"v_{j+1}" for j in range(m)]
        stream.write(",".join(cols) + "\n")
        for i in range(len(self.s)):
            row = [repr(float(self.s[i]))]
            row += [repr(float(c)) for c in self.x[i]]
            row += [repr(float(c)) for c in self.v[i]]
            stream.write(",".join(row) + "\n")


def _acceleration(spec, x, v):
    if spec.is_flat:
        return np.zeros_like(v)
    nu = spec.unit_normal_at(x)
    sv = spec.shape_apply(x, v)
    return -spec.normal_sign * spec.inner(sv, v) * nu


def _transport_rhs(spec, x, v, rows):
    # parallel transport: u' = -eps <S v, u> nu
    if spec.is_flat or rows.size == 0:
        return np.zeros_like(rows)
    nu = spec.unit_normal_at(x)
    sv = spec.shape_apply(x, v)
    if spec.lorentzian:
        coef = rows @ (spec.metric_signs() * sv)
    else:
        coef = rows @ sv
    return -spec.normal_sign * np.outer(coef, nu)


def _rk4_step(spec, x, v, rows, h):
    def rhs(xx, vv, uu):
        return vv, _acceleration(spec, xx, vv), _transport_rhs(spec, xx, vv, uu)

    k1x, k1v, k1u = rhs(x, v, rows)
    k2x, k2v, k2u = rhs(x + 0.5 * h * k1x, v + 0.5 * h * k1v, rows + 0.5 * h * k1u)
    k3x, k3v, k3u = rhs(x + 0.5 * h * k2x, v + 0.5 * h * k2v, rows + 0.5 * h * k2u)
    k4x, k4v, k4u = rhs(x + h * k3x, v + h * k3v, rows + h * k3u)
    xn = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
    vn = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
    un = rows + (h / 6.0) * (k1u + 2 * k2u + 2 * k3u + k4u)
    return xn, vn, un


def _retract(spec, x, v, rows):
    x = spec.project_point(x)
    v = spec.project_tangent(x, v)
    if rows.size:
        rows = _reorthonormalize(spec, x, v, rows)
    return x, v, rows


def _reorthonormalize(spec, x, v, rows):
    rows = np.array(rows, dtype=float)
    if not spec.is_flat:
        if spec.lorentzian:
            rows = np.stack([spec.project_tangent(x, r) for r in rows])
        else:
            nu = spec.unit_normal_at(x)
            rows = rows - np.outer(rows @ nu, nu)
    nv = spec.norm(v)
    if nv > 0:
        rows[0] = v / nv
    if spec.lorentzian:
        out = [rows[0]]
        for r in rows[1:]:
            w = r
            for b in out:
                w = w - spec.inner(w, b) * b
            out.append(w / spec.norm(w))
        return np.stack(out)
    q, r = np.linalg.qr(rows.T)
    q = q * np.sign(np.diag(r))
    return q.T


def _initial_frame(spec, x, v):
    return tangent_basis(spec, x, first=v)


def integrate_geodesic(spec: ManifoldSpec, x0, v0, length: float, step: float,
                       with_frame: bool = True) -> GeodesicPath:
    """Integrate the unit-speed geodesic from (x0, v0) for ``length``.

    The interval count is rounded up to an even number so the sample grid
    supports Simpson quadrature and half-grid flow integration; the stored
    ``step`` is the adjusted value.  Non-unit initial velocities are
    rejected, never normalized silently.
    """
    if length <= 0:
        raise GeometryError("length must be positive")
    if step <= 0:
        raise GeometryError("step must be positive")
    x = spec.check_point(_coords(x0))
    v = spec.check_tangent(x, _components(v0))
    if abs(spec.norm(v) - 1.0) > UNIT_SPEED_TOL:
        raise GeometryError("initial velocity must have unit speed")
    n = 2 * max(1, math.ceil(length / (2.0 * step)))
    h = length / n
    m = spec.ambient_dim
    d = spec.dim
    rows0 = _initial_frame(spec, x, v) if with_frame else np.zeros((0, m))
    xs = np.empty((n + 1, m))
    vs = np.empty((n + 1, m))
    frames = np.empty((n + 1, rows0.shape[0], m))
    xs[0], vs[0], frames[0] = x, v, rows0
    for i in range(n):
        x, v, rows0 = _rk4_step(spec, x, v, rows0, h)
        x, v, rows0 = _retract(spec, x, v, rows0)
        xs[i + 1], vs[i + 1], frames[i + 1] = x, v, rows0
    s = np.linspace(0.0, length, n + 1)
    if not with_frame:
        frames = np.zeros((n + 1, 0, m))
    return GeodesicPath(spec=spec, s=s, x=xs, v=vs, frame=frames, step=h)


def state_at(path: GeodesicPath, s: float):
    """(x, v, frame) at an arbitrary parameter, via one substep from the
    nearest stored sample on the left."""
    if s < path.s[0] - 1e-9 or s > path.s[-1] + 1e-9:
        raise GeometryError("parameter out of range")
    s = min(max(s, path.s[0]), path.s[-1])
    j = int(np.searchsorted(path.s, s, side="right")) - 1
    j = min(max(j, 0), len(path.s) - 1)
    ds = s - path.s[j]
    if abs(ds) < 1e-13:
        return path.x[j], path.v[j], path.frame[j]
    x, v, rows = _rk4_step(path.spec, path.x[j], path.v[j], path.frame[j], ds)
    return _retract(path.spec, x, v, rows)


# ---------------------------------------------------------------------------
# exponential map and friends
# ---------------------------------------------------------------------------

def exp_map(spec: ManifoldSpec, x, v, step: float = 1e-3) -> Point:
    """exp_x(v); closed form on constant-curvature kinds, integration on
    quadrics (the step argument only matters there)."""
    x = spec.check_point(_coords(x))
    v = spec.check_tangent(x, _components(v))
    r = spec.norm(v)
    if r == 0.0:
        return Point(x.copy())
    kappa = spec.constant_curvature()
    if kappa is not None:
        return Point(_exp_closed(spec, kappa, x, v, r))
    return Point(_exp_raw(spec, x, v, step))


def _exp_closed(spec, kappa, x, v, r):
    u = v / r
    if kappa == 0.0:
        return x + v
    if kappa > 0:
        rk = math.sqrt(kappa)
        return math.cos(r * rk) * x + math.sin(r * rk) / rk * u
    rk = math.sqrt(-kappa)
    return math.cosh(r * rk) * x + math.sinh(r * rk) / rk * u


def log_map(spec: ManifoldSpec, p, q, step: float = 5e-3) -> TangentVector:
    """Inverse of exp_p on constant-curvature kinds; shooting on quadrics."""
    p = spec.check_point(_coords(p))
    q = spec.check_point(_coords(q))
    kappa = spec.constant_curvature()
    if kappa is None:
        res = distance_result(spec, p, q, step=step)
        if not res.converged:
            raise GeometryError("no certified minimizer for log map")
        return TangentVector(Point(p), res.direction * res.length)
    if kappa == 0.0:
        return TangentVector(Point(p), q - p)
    d = _distance_closed(spec, kappa, p, q)
    if d < 1e-15:
        return TangentVector(Point(p), np.zeros_like(p))
    w = spec.project_tangent(p, q)
    nrm = spec.norm(w)
    if nrm < 1e-14:
        raise GeometryError("log map undefined at the cut point")
    return TangentVector(Point(p), w * (d / nrm))


def _distance_closed(spec, kappa, p, q):
    if kappa == 0.0:
        return float(np.linalg.norm(q - p))
    ip = spec.inner(p, q) * kappa
    if kappa > 0:
        return math.acos(min(1.0, max(-1.0, ip))) / math.sqrt(kappa)
    return math.acosh(max(1.0, ip)) / math.sqrt(-kappa)


def parallel_transport(path: GeodesicPath, u, to_s: float) -> TangentVector:
    """Transport a tangent vector from the start of the path to parameter
    to_s, using the stored parallel frame coefficients."""
    spec = path.spec
    if to_s < path.s[0] - 1e-9 or to_s > path.s[-1] + 1e-9:
        raise GeometryError("transport target out of range")
    u = spec.check_tangent(path.x[0], _components(u))
    coeffs = np.array([spec.inner(row, u) for row in path.frame[0]])
    x, _, rows = state_at(path, to_s)
    return TangentVector(Point(x), coeffs @ rows)


# ---------------------------------------------------------------------------
# distance
# ---------------------------------------------------------------------------

@dataclass
class DistanceResult:
    """Best geodesic found between two points.

    ``converged`` means at least one shot closed on the target; on quadric
    kinds the value is then the best length found and is an upper bound on
    the true distance, with no global minimality certificate.
    """

    length: float
    converged: bool
    residual: float
    n_converged: int
    direction: np.ndarray | None = None


def distance(spec: ManifoldSpec, p, q) -> float:
    return distance_result(spec, p, q).length


def distance_result(spec: ManifoldSpec, p, q, starts: int = 32,
                    step: float = 5e-3) -> DistanceResult:
    p = spec.check_point(_coords(p))
    q = spec.check_point(_coords(q))
    kappa = spec.constant_curvature()
    if kappa is not None:
        d = _distance_closed(spec, kappa, p, q)
        direction = None
        if d > 1e-15:
            try:
                direction = log_map(spec, p, q).components / d
            except GeometryError:
                direction = None
        return DistanceResult(d, True, 0.0, 1, direction)
    return _shoot_distance(spec, p, q, starts, step)


def _shoot_distance(spec, p, q, starts, step):
    chord = q - p
    scale = max(np.linalg.norm(chord), 1e-9)
    basis = tangent_basis(spec, p)
    w0 = spec.project_tangent(p, chord)
    candidates = []
    if np.linalg.norm(w0) > 1e-12:
        w0 = w0 / np.linalg.norm(w0)
        candidates.append(w0 * scale)
        candidates.append(w0 * scale * 1.3)
    # deterministic fan of extra directions in the tangent space
    k = 0
    while len(candidates) < starts and k < 4 * starts:
        ang = 2.399963229728653 * (k + 1)  # golden-angle sweep
        vec = math.cos(ang) * basis[0]
        for j in range(1, len(basis)):
            vec = vec + math.sin(ang / j) * basis[j]
        vec = spec.project_tangent(p, vec)
        nrm = np.linalg.norm(vec)
        k += 1
        if nrm < 1e-9:
            continue
        candidates.append(vec / nrm * scale * (1.0 + 0.25 * (k % 3)))
    best = None
    n_conv = 0
    best_res = math.inf
    for w_init in candidates:
        sol = _newton_exp_solve(spec, p, q, w_init, basis, step)
        if sol is None:
            continue
        w, res = sol
        n_conv += 1
        ln = float(spec.norm(w))
        best_res = min(best_res, res)
        if best is None or ln < best[0]:
            best = (ln, w)
        if best[0] <= scale * 1.6:
            break  # short geodesic close to the chord: accept
    if best is None:
        raise GeometryError("no certified minimizer: shooting did not converge")
    ln, w = best
    return DistanceResult(ln, True, best_res, n_conv,
                          w / ln if ln > 0 else None)


def _exp_raw(spec, x, w, step):
    return _exp_endpoint_state(spec, x, w, step)[0]


def _exp_endpoint_state(spec, x, w, step):
    """(point, velocity) after flowing for |w| along the direction of w."""
    r = spec.norm(w)
    if r < 1e-14:
        return x.copy(), np.array(w, dtype=float)
    kappa = spec.constant_curvature()
    if kappa is not None:
        path = None
        end = _exp_closed(spec, kappa, x, w, r)
        vel = spec.project_tangent(end, _transport_radial(spec, kappa, x, w, r))
        return end, vel
    if quadric_exp_endpoint is not None and spec.kind == "quadric":
        xe, ve = quadric_exp_endpoint(spec._c, np.asarray(x, dtype=float),
                                      np.asarray(w / r, dtype=float), r, step)
        return xe, ve
    path = integrate_geodesic(spec, x, w / r, r, step, with_frame=False)
    return path.x[-1], path.v[-1]


def _transport_radial(spec, kappa, x, w, r):
    # velocity of the unit-speed geodesic at parameter r, closed form
    u = w / r
    if kappa == 0.0:
        return u
    if kappa > 0:
        rk = math.sqrt(kappa)
        return -rk * math.sin(r * rk) * x + math.cos(r * rk) * u
    rk = math.sqrt(-kappa)
    return rk * math.sinh(r * rk) * x + math.cosh(r * rk) * u


def _newton_exp_solve(spec, p, q, w_init, basis, step, tol=1e-10, max_iter=30):
    """Damped Gauss-Newton on exp_p(w) = q with finite-difference Jacobian."""
    w = np.array(w_init, dtype=float)
    scale = max(np.linalg.norm(q - p), 1.0)
    res = _exp_raw(spec, p, w, step) - q
    rn = np.linalg.norm(res)
    for _ in range(max_iter):
        if rn <= tol * scale:
            return w, rn
        eps = 1e-6 * max(np.linalg.norm(w), 1.0)
        cols = []
        for b in basis:
            pert = _exp_raw(spec, p, w + eps * b, step) - q
            cols.append((pert - res) / eps)
        jac = np.stack(cols, axis=1)
        try:
            delta, *_ = np.linalg.lstsq(jac, -res, rcond=None)
        except np.linalg.LinAlgError:
            return None
        stepv = basis.T @ delta
        lam = 1.0
        for _ in range(6):
            w_try = spec.project_tangent(p, w + lam * stepv)
            res_try = _exp_raw(spec, p, w_try, step) - q
            if np.linalg.norm(res_try) < rn:
                w, res, rn = w_try, res_try, np.linalg.norm(res_try)
                break
            lam *= 0.5
        else:
            return None
    if rn <= tol * scale:
        return w, rn
    return None


# ---------------------------------------------------------------------------
# curve lifting through the exponential map
# ---------------------------------------------------------------------------

@dataclass
class LiftedCurve:
    """Lift of a curve through exp_p: exp_p(xi(t)) reproduces the input."""

    base: Point
    t: np.ndarray
    xi: np.ndarray
    continuity_bound: float
    radius_margin: float


def lift_curve(spec: ManifoldSpec, p, curve, h_bound: float,
               t=None, step: float = 2e-3, max_halvings: int = 3) -> LiftedCurve:
    """Continuation lift of a sampled curve through exp_p.

    The curve must start at p; if h_bound > 0 its chordal length must stay
    under pi/sqrt(h_bound).  Each sample is lifted by damped Newton seeded
    with a linear prediction from the previous lifts; on failure the
    parameter step is halved (chordal midpoint, retracted) up to
    ``max_halvings`` times before giving up.
    """
    p = spec.check_point(_coords(p))
    pts = np.array([spec.check_point(_coords(c)) for c in curve])
    if len(pts) < 2:
        raise GeometryError("need at least two curve samples")
    if np.linalg.norm(pts[0] - p) > 1e-8:
        raise GeometryError("curve must start at the base point")
    if t is None:
        t = np.linspace(0.0, 1.0, len(pts))
    t = np.asarray(t, dtype=float)
    if spec.constant_curvature() is not None:
        seglen = [distance(spec, pts[j], pts[j + 1]) for j in range(len(pts) - 1)]
    else:
        seglen = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    total = float(np.sum(seglen))
    budget = math.inf if h_bound <= 0 else math.pi / math.sqrt(h_bound)
    if total >= budget:
        raise GeometryError(
            f"length budget exceeded: L={total:.6g} >= {budget:.6g}")
    basis = tangent_basis(spec, p)
    xi = np.zeros_like(p)
    xi_prev = None
    lifts = [xi.copy()]
    for j in range(1, len(pts)):
        target = pts[j]
        t0, t1 = t[j - 1], t[j]
        pred = xi + (xi - xi_prev) if xi_prev is not None else xi
        sol = _lift_segment(spec, p, basis, xi, pred, pts[j - 1], target,
                            step, max_halvings)
        if sol is None:
            raise GeometryError(f"lift continuation failed at t={t1:.6g}")
        xi_prev, xi = xi, sol
        lifts.append(xi.copy())
    xi_arr = np.stack(lifts)
    dxi = np.linalg.norm(np.diff(xi_arr, axis=0), axis=1)
    dt = np.diff(t)
    cont = float(np.max(dxi / np.maximum(dt, 1e-15)))
    margin = budget - float(np.max(np.linalg.norm(xi_arr, axis=1)))
    return LiftedCurve(Point(p), t, xi_arr, cont, margin)


def _lift_segment(spec, p, basis, xi_from, pred, c_from, c_to, step, halvings):
    sol = _newton_exp_solve(spec, p, c_to, pred, basis, step, tol=1e-9)
    if sol is not None:
        return spec.project_tangent(p, sol[0])
    if halvings <= 0:
        return None
    mid = spec.project_point(0.5 * (c_from + c_to))
    sol_mid = _lift_segment(spec, p, basis, xi_from,
                            0.5 * (xi_from + pred), c_from, mid, step,
                            halvings - 1)
    if sol_mid is None:
        return None
    pred2 = 2.0 * sol_mid - xi_from
    return _lift_segment(spec, p, basis, sol_mid, pred2, mid, c_to, step,
                         halvings - 1)


# ---------------------------------------------------------------------------
# small-scale limit and the block-rotation isometry scan
# ---------------------------------------------------------------------------

def distance_ratio(spec: ManifoldSpec, p, X, Y, s: float) -> float:
    """d(exp_p(sX), exp_p(sY)) / ||sX - sY||."""
    p = spec.check_point(_coords(p))
    X = spec.check_tangent(p, _components(X))
    Y = spec.check_tangent(p, _components(Y))
    if s <= 0:
        raise GeometryError("s must be positive")
    denom = s * spec.norm(X - Y)
    if denom == 0.0:
        raise GeometryError("X and Y must differ")
    a = exp_map(spec, p, s * X)
    b = exp_map(spec, p, s * Y)
    return distance(spec, a, b) / denom


@dataclass
class RotationIsometryScan:
    """Displacement profile of the block rotation of the unit sphere that
    turns the (2i-1, 2i) plane by angle 1/i."""

    displacements: list            # (i, great-circle displacement at e_{2i-1})
    min_displacement: float
    max_distance_residual: float   # |d(fx,fy) - d(x,y)| over sampled pairs
    min_sample_move: float         # min ||f(x) - x|| over samples
    truncation: int


def _block_rotation_apply(n, x):
    i = np.arange(1, n // 2 + 1)
    ang = 1.0 / i
    c, s = np.cos(ang), np.sin(ang)
    xb = x.reshape(-1, n // 2, 2)
    out = np.empty_like(xb)
    out[..., 0] = c * xb[..., 0] + s * xb[..., 1]
    out[..., 1] = -s * xb[..., 0] + c * xb[..., 1]
    return out.reshape(x.shape)


def rotation_isometry_displacement(n: int, sample_count: int = 0,
                                   seed: int = 0) -> RotationIsometryScan:
    """Displacements of the fixed-point-free block rotation on S^(n-1).

    Basis points e_{2i-1} move by exactly 1/i of great-circle distance, so
    the infimum over the retained blocks is 2/n; sampled pairs verify that
    the map preserves distances.
    """
    if n < 4 or n % 2:
        raise GeometryError("truncation must be an even integer >= 4")
    disp = []
    for i in range(1, n // 2 + 1):
        e = np.zeros(n)
        e[2 * i - 2] = 1.0
        fe = _block_rotation_apply(n, e)
        d = math.acos(min(1.0, max(-1.0, float(np.dot(e, fe)))))
        disp.append((i, d))
    max_resid = 0.0
    min_move = math.inf
    if sample_count > 0:
        rng = np.random.default_rng(seed)
        xs = rng.standard_normal((sample_count, n))
        xs /= np.linalg.norm(xs, axis=1, keepdims=True)
        fx = _block_rotation_apply(n, xs)
        min_move = float(np.min(np.linalg.norm(fx - xs, axis=1)))
        half = sample_count // 2
        a, b = xs[:half], xs[half:2 * half]
        fa, fb = fx[:half], fx[half:2 * half]
        d_ab = np.arccos(np.clip(np.sum(a * b, axis=1), -1.0, 1.0))
        d_f = np.arccos(np.clip(np.sum(fa * fb, axis=1), -1.0, 1.0))
        if half:
            max_resid = float(np.max(np.abs(d_ab - d_f)))
    return RotationIsometryScan(
        displacements=disp,
        min_displacement=min(d for _, d in disp),
        max_distance_residual=max_resid,
        min_sample_move=min_move,
        truncation=n,
    )


# ---------------------------------------------------------------------------
# differentials of exp (finite-difference cross checks)
# ---------------------------------------------------------------------------

def exp_differential_fd(spec: ManifoldSpec, x, v, t: float, w,
                        eps: float = 1e-5, step: float = 1e-3) -> np.ndarray:
    """Central finite difference of exp_x(t v + eps w) as an ambient vector,
    approximating d(exp_x)_{t v}(w)."""
    x = spec.check_point(_coords(x))
    v = spec.check_tangent(x, _components(v))
    w = spec.check_tangent(x, _components(w))
    a = _exp_raw(spec, x, t * v + eps * w, step)
    b = _exp_raw(spec, x, t * v - eps * w, step)
    return (a - b) / (2.0 * eps)


def lifted_to_csv(lift: LiftedCurve, stream):
    m = lift.xi.shape[1]
    cols = ["t"] + [f"xi_{j+1}" for j in range(m)]
    stream.write(",".join(cols) + "\n")
    for i in range(len(lift.t)):
        row = [repr(float(lift.t[i]))] + [repr(float(c)) for c in lift.xi[i]]
        stream.write(",".join(row) + "\n")
