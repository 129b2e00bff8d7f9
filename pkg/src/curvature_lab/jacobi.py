"""Matrix Jacobi flow along a geodesic: integration in the parallel frame,
conjugate/focal detection, adjoint assembly, index forms and the flow
estimate suite.

The flow solves T'' + R(s) T = 0 where R(s) is the curvature quadratic
form pulled back to the frame at the start, with initial data encoding a
boundary pair (subspace H_o, symmetric operator A on it):

    T(0) = P_{H_o},   T'(0) = -A P_{H_o} + (I - P_{H_o}).

H_o = {0} packages the fields vanishing at the start (conjugate-point
analysis); H_o = everything with A = 0 packages the fields with vanishing
initial covariant derivative (focal analysis of the orthogonal geodesic
submanifold).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .manifolds import GeometryError, Point, TangentVector
from .geodesics import GeodesicPath, integrate_geodesic, state_at

DETECT_TOL = 1e-6


# ---------------------------------------------------------------------------
# curvature in the parallel frame
# ---------------------------------------------------------------------------

def _frame_R_single(spec, x, v, rows):
    kappa = spec.constant_curvature()
    d = rows.shape[0]
    if kappa is not None:
        c = np.array([spec.inner(r, v) for r in rows])
        return kappa * (np.eye(d) - np.outer(c, c))
    sv = spec.shape_apply(x, v)
    su = spec.shape_apply_many(x, rows)
    a = spec.inner(sv, v)
    gram = su @ rows.T
    b = su @ v
    m = a * gram - np.outer(b, b)
    return 0.5 * (m + m.T)


def _frame_curvature_all(path: GeodesicPath, block: str) -> np.ndarray:
    """R(s) matrices at every path node, cached on the path."""
    cache = getattr(path, "_frame_curvature", None)
    if cache is None:
        cache = {}
        path._frame_curvature = cache
    if block in cache:
        return cache[block]
    rows_all = path.frame if block == "full" else path.frame[:, 1:, :]
    spec = path.spec
    n1, d, m = rows_all.shape
    kappa = spec.constant_curvature()
    if kappa is not None:
        base = np.zeros((d, d))
        if block == "full":
            base[1:, 1:] = kappa * np.eye(d - 1)
        else:
            base = kappa * np.eye(d)
        out = np.broadcast_to(base, (n1, d, d))
    else:
        c = spec._c
        out = np.empty((n1, d, d))
        # chunked to keep broadcasting temporaries small on modest hosts
        chunk = max(16, int(2_000_000 / max(d * m, 1)))
        for lo in range(0, n1, chunk):
            hi = min(lo + chunk, n1)
            rows = rows_all[lo:hi]
            x, v = path.x[lo:hi], path.v[lo:hi]
            g = x * c
            r = np.linalg.norm(g, axis=1)
            nu = g / r[:, None]
            w = rows * c
            coef = np.einsum("ndm,nm->nd", w, nu)
            su = (w - coef[:, :, None] * nu[:, None, :]) / r[:, None, None]
            wv = v * c
            coefv = np.einsum("nm,nm->n", wv, nu)
            sv = (wv - coefv[:, None] * nu) / r[:, None]
            a = np.einsum("nm,nm->n", sv, v)
            gram = np.einsum("ndm,nem->nde", su, rows)
            b = np.einsum("ndm,nm->nd", su, v)
            m_chunk = a[:, None, None] * gram - b[:, :, None] * b[:, None, :]
            out[lo:hi] = 0.5 * (m_chunk + np.swapaxes(m_chunk, 1, 2))
    cache[block] = out
    return out


def curvature_frame_operator(path: GeodesicPath, s: float) -> np.ndarray:
    """Curvature quadratic form at parameter s in the full parallel frame;
    zero on the velocity row/column, symmetric."""
    x, v, rows = state_at(path, s)
    return _frame_R_single(path.spec, x, v, rows)


# ---------------------------------------------------------------------------
# boundary data and the flow state
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class JacobiBoundary:
    """Subspace H_o (orthonormal columns in frame coordinates) and the
    symmetric operator acting on it."""

    subspace: np.ndarray   # (d, k), k possibly 0 or d
    weingarten: np.ndarray  # (k, k) symmetric

    def __post_init__(self):
        self.subspace = np.atleast_2d(np.asarray(self.subspace, dtype=float))
        self.weingarten = np.asarray(self.weingarten, dtype=float)
        d, k = self.subspace.shape
        if self.weingarten.shape != (k, k):
            raise GeometryError("weingarten operator must be k x k")
        if k:
            gram = self.subspace.T @ self.subspace
            if np.max(np.abs(gram - np.eye(k))) > 1e-10:
                raise GeometryError("boundary subspace basis must be orthonormal")
        if k and np.max(np.abs(self.weingarten - self.weingarten.T)) > 1e-12:
            raise GeometryError("weingarten operator must be symmetric")

    @classmethod
    def conjugate(cls, dim: int) -> "JacobiBoundary":
        """H_o = {0}: fields vanishing at the start."""
        return cls(np.zeros((dim, 0)), np.zeros((0, 0)))

    @classmethod
    def geodesic_submanifold(cls, dim: int) -> "JacobiBoundary":
        """H_o everything, A = 0: fields with zero initial derivative."""
        return cls(np.eye(dim), np.zeros((dim, dim)))

    @property
    def dim(self) -> int:
        return self.subspace.shape[0]

    @property
    def rank(self) -> int:
        return self.subspace.shape[1]

    def projector(self) -> np.ndarray:
        if self.rank == 0:
            return np.zeros((self.dim, self.dim))
        return self.subspace @ self.subspace.T

    def weingarten_full(self) -> np.ndarray:
        if self.rank == 0:
            return np.zeros((self.dim, self.dim))
        return self.subspace @ self.weingarten @ self.subspace.T

    def initial_data(self):
        p = self.projector()
        return p.copy(), -self.weingarten_full() + np.eye(self.dim) - p

    def describe(self) -> dict:
        return {"dim": self.dim, "rank": self.rank,
                "kind": "conjugate" if self.rank == 0 else
                ("geodesic-submanifold" if self.rank == self.dim and
                 not np.any(self.weingarten) else "general")}


def _integrate_matrix_flow(r_nodes, h, t0, tp0):
    """RK4 for T'' + R(s) T = 0 on a uniform grid with nodes at every
    half-step of the flow; r_nodes[2j] are the flow nodes."""
    n_half = len(r_nodes) - 1
    if n_half % 2:
        raise GeometryError("matrix flow needs an even node count")
    steps = n_half // 2
    d = t0.shape[0]
    ts = np.empty((steps + 1, d, d))
    tps = np.empty((steps + 1, d, d))
    ts[0], tps[0] = t0, tp0
    t, tp = t0.copy(), tp0.copy()
    h2 = 2.0 * h
    for j in range(steps):
        r0 = r_nodes[2 * j]
        rm = r_nodes[2 * j + 1]
        r1 = r_nodes[2 * j + 2]
        k1t, k1p = tp, -(r0 @ t)
        t2 = t + 0.5 * h2 * k1t
        k2t, k2p = tp + 0.5 * h2 * k1p, -(rm @ t2)
        t3 = t + 0.5 * h2 * k2t
        k3t, k3p = tp + 0.5 * h2 * k2p, -(rm @ t3)
        t4 = t + h2 * k3t
        k4t, k4p = tp + h2 * k3p, -(r1 @ t4)
        t = t + (h2 / 6.0) * (k1t + 2 * k2t + 2 * k3t + k4t)
        tp = tp + (h2 / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p)
        ts[j + 1], tps[j + 1] = t, tp
    return ts, tps


@dataclass(eq=False)
class JacobiFlowState:
    """Sampled (T, T') pair in the parallel frame, plus boundary data."""

    path: GeodesicPath
    boundary: JacobiBoundary
    block: str
    node_idx: np.ndarray
    s: np.ndarray
    T: np.ndarray
    Tp: np.ndarray

    @property
    def dim(self) -> int:
        return self.T.shape[1]

    @property
    def length(self) -> float:
        return float(self.s[-1])

    def _r_at_nodes(self):
        return _frame_curvature_all(self.path, self.block)[self.node_idx]

    def eval(self, t: float):
        """Cubic Hermite interpolation of (T, T') between flow samples."""
        if t < self.s[0] - 1e-9 or t > self.s[-1] + 1e-9:
            raise GeometryError("flow parameter out of range")
        t = min(max(t, self.s[0]), self.s[-1])
        j = int(np.searchsorted(self.s, t, side="right")) - 1
        j = min(max(j, 0), len(self.s) - 2)
        dt = self.s[j + 1] - self.s[j]
        u = (t - self.s[j]) / dt
        rall = _frame_curvature_all(self.path, self.block)
        rj = rall[self.node_idx[j]]
        rj1 = rall[self.node_idx[j + 1]]
        tj, tj1 = self.T[j], self.T[j + 1]
        pj, pj1 = self.Tp[j], self.Tp[j + 1]
        ppj, ppj1 = -(rj @ tj), -(rj1 @ tj1)
        h00 = 2 * u**3 - 3 * u**2 + 1
        h10 = u**3 - 2 * u**2 + u
        h01 = -2 * u**3 + 3 * u**2
        h11 = u**3 - u**2
        tv = h00 * tj + h10 * dt * pj + h01 * tj1 + h11 * dt * pj1
        tpv = h00 * pj + h10 * dt * ppj + h01 * pj1 + h11 * dt * ppj1
        return tv, tpv

    def phi_asymmetry(self) -> float:
        """Max deviation from symmetry of <T u, T' v> over the samples."""
        prod = np.einsum("nij,nik->njk", self.T, self.Tp)
        return float(np.max(np.abs(prod - np.swapaxes(prod, 1, 2))))

    def frame_rows(self, i_or_rows):
        rows = i_or_rows
        return rows if self.block == "full" else rows[1:]


def integrate_flow(path: GeodesicPath, boundary: JacobiBoundary,
                   step: float = None, block: str = "normal") -> JacobiFlowState:
    """Integrate the flow along a path; advances on pairs of path intervals
    so curvature is evaluated exactly at nodes and midpoints."""
    if block not in ("normal", "full"):
        raise GeometryError("block must be 'normal' or 'full'")
    if step is not None and step <= 0:
        raise GeometryError("step must be positive")
    d = path.dim if block == "full" else path.dim - 1
    if boundary.dim != d:
        raise GeometryError(
            f"boundary dimension {boundary.dim} != flow dimension {d}")
    rall = _frame_curvature_all(path, block)
    t0, tp0 = boundary.initial_data()
    ts, tps = _integrate_matrix_flow(rall, path.step, t0, tp0)
    node_idx = np.arange(0, len(path.s), 2)
    return JacobiFlowState(path=path, boundary=boundary, block=block,
                           node_idx=node_idx, s=path.s[node_idx],
                           T=ts, Tp=tps)


def _fundamental_flows(state: JacobiFlowState):
    """Fundamental solution pair (C, S) with C(0)=I, C'(0)=0 and S(0)=0,
    S'(0)=I, cached on the state; any initial data is a combination."""
    fund = getattr(state, "_fund", None)
    if fund is None:
        rall = _frame_curvature_all(state.path, state.block)
        d = state.dim
        eye, zero = np.eye(d), np.zeros((d, d))
        c, cp = _integrate_matrix_flow(rall, state.path.step, eye, zero)
        s, sp = _integrate_matrix_flow(rall, state.path.step, zero, eye)
        r_nodes = rall[state.node_idx]
        fund = {"C": c, "Cp": cp, "S": s, "Sp": sp,
                "Cpp": -np.einsum("nij,njk->nik", r_nodes, c),
                "Spp": -np.einsum("nij,njk->nik", r_nodes, s)}
        state._fund = fund
    return fund


def _hermite_matrix(s_grid, vals, derivs, second, t):
    j = int(np.searchsorted(s_grid, t, side="right")) - 1
    j = min(max(j, 0), len(s_grid) - 2)
    dt = s_grid[j + 1] - s_grid[j]
    u = (t - s_grid[j]) / dt
    h00 = 2 * u**3 - 3 * u**2 + 1
    h10 = u**3 - 2 * u**2 + u
    h01 = -2 * u**3 + 3 * u**2
    h11 = u**3 - u**2
    v = h00 * vals[j] + h10 * dt * derivs[j] + h01 * vals[j + 1] + h11 * dt * derivs[j + 1]
    dv = h00 * derivs[j] + h10 * dt * second[j] + h01 * derivs[j + 1] + h11 * dt * second[j + 1]
    return v, dv


# ---------------------------------------------------------------------------
# fields, wronskian
# ---------------------------------------------------------------------------

def jacobi_field(state: JacobiFlowState, v, w, t: float) -> TangentVector:
    """Ambient Jacobi field value at parameter t for boundary data
    (v in H_o, w in the orthogonal complement), both in frame coordinates."""
    d = state.dim
    v = np.zeros(d) if v is None else np.asarray(v, dtype=float)
    w = np.zeros(d) if w is None else np.asarray(w, dtype=float)
    p = state.boundary.projector()
    if np.linalg.norm(v - p @ v) > 1e-8 * max(1.0, np.linalg.norm(v)):
        raise GeometryError("v must lie in the boundary subspace")
    if np.linalg.norm(p @ w) > 1e-8 * max(1.0, np.linalg.norm(w)):
        raise GeometryError("w must lie in the orthogonal complement")
    tv, _ = state.eval(t)
    coeffs = tv @ (v + w)
    x, _, rows = state_at(state.path, t)
    block_rows = rows if state.block == "full" else rows[1:]
    return TangentVector(Point(x), coeffs @ block_rows)


def jacobi_coefficients(state: JacobiFlowState, v, w, t: float):
    """(coefficients, derivative coefficients) of the field at t."""
    d = state.dim
    v = np.zeros(d) if v is None else np.asarray(v, dtype=float)
    w = np.zeros(d) if w is None else np.asarray(w, dtype=float)
    tv, tpv = state.eval(t)
    u = v + w
    return tv @ u, tpv @ u


def wronskian(state: JacobiFlowState, data1, data2, t: float) -> float:
    """<J', Y> - <Y', J> at parameter t for two fields given by plain
    initial data (value, derivative) in frame coordinates; constant along
    the geodesic, which makes its drift the integrator diagnostic."""
    fund = _fundamental_flows(state)

    def field(data):
        v, w = (np.asarray(a, dtype=float) for a in data)
        cmat, cpmat = _hermite_matrix(state.s, fund["C"], fund["Cp"], fund["Cpp"], t)
        smat, spmat = _hermite_matrix(state.s, fund["S"], fund["Sp"], fund["Spp"], t)
        return cmat @ v + smat @ w, cpmat @ v + spmat @ w

    j, jp = field(data1)
    y, yp = field(data2)
    return float(np.dot(jp, y) - np.dot(yp, j))


# ---------------------------------------------------------------------------
# singularity detection
# ---------------------------------------------------------------------------

@dataclass
class FocalEvent:
    s: float
    sigma_min: float
    multiplicity: int


@dataclass
class FocalReport:
    classification: str
    events: list
    s_trace: np.ndarray
    sigma_trace: np.ndarray
    det_sign_trace: np.ndarray
    tol: float

    def to_json_dict(self, geodesic=None, boundary=None, checks=()):
        return {
            "geodesic": geodesic or {},
            "boundary": boundary or {},
            "events": [
                {"s": e.s, "sigma_min": e.sigma_min, "multiplicity": e.multiplicity}
                for e in self.events
            ],
            "checks": list(checks),
        }

    def trace_csv(self, stream):
        stream.write("s,sigma_min,det_sign\n")
        for s, sg, ds in zip(self.s_trace, self.sigma_trace, self.det_sign_trace):
            stream.write(f"{float(s)!r},{float(sg)!r},{float(ds)!r}\n")


def _golden_min(fun, a, b, xtol=1e-9):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while (b - a) > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    x = 0.5 * (a + b)
    return x, fun(x)


def detect_singularities(state: JacobiFlowState, s_range=None,
                         tol: float = DETECT_TOL) -> FocalReport:
    """Parameters where the flow operator loses rank: local minima of the
    smallest singular value refined to 1e-9 in s, corroborated by
    determinant sign changes; reported only when the refined minimum dips
    below the detection tolerance.

    At finite dimension injectivity and surjectivity fail together, so a
    single sigma-min event stands for both failure modes; surjectivity
    failure without kernel only shows up as the dimension-sweep trend of
    ``epifocal_trend``."""
    if tol <= 0:
        raise GeometryError("tolerance must be positive")
    lo, hi = s_range if s_range is not None else (0.0, state.length)
    svals = np.linalg.svd(state.T, compute_uv=False)
    sigma = svals[:, -1]
    signs, _ = np.linalg.slogdet(state.T)
    candidates = set()
    for i in range(1, len(sigma) - 1):
        if sigma[i] <= sigma[i - 1] and sigma[i] <= sigma[i + 1]:
            candidates.add(i)
    for i in range(len(sigma) - 1):
        if signs[i] * signs[i + 1] < 0:
            candidates.add(max(i, 1))

    def smin(t):
        tv, _ = state.eval(t)
        return float(np.linalg.svd(tv, compute_uv=False)[-1])

    events = []
    for i in sorted(candidates):
        a = state.s[max(i - 1, 0)]
        b = state.s[min(i + 1, len(sigma) - 1)]
        s_star, val = _golden_min(smin, a, b)
        if val >= tol or not (lo < s_star <= hi + 1e-12):
            continue
        if any(abs(s_star - e.s) < 1e-8 for e in events):
            continue
        tv, _ = state.eval(s_star)
        sv = np.linalg.svd(tv, compute_uv=False)
        mult = int(np.sum(sv < 10.0 * tol))
        events.append(FocalEvent(s=float(s_star), sigma_min=val, multiplicity=mult))
    events.sort(key=lambda e: e.s)
    cls = "conjugate" if state.boundary.rank == 0 else "focal"
    return FocalReport(classification=cls, events=events, s_trace=state.s.copy(),
                       sigma_trace=sigma, det_sign_trace=signs, tol=tol)


# ---------------------------------------------------------------------------
# reversal and adjoint
# ---------------------------------------------------------------------------

def _reversed_path(path: GeodesicPath, upto: float, overshoot: float = 0.0):
    x, v, _ = state_at(path, upto)
    spec = path.spec
    length = upto + overshoot
    return integrate_geodesic(spec, spec.project_point(x),
                              spec.project_tangent(spec.project_point(x), -v),
                              length, path.step)


def _adjoint_from_reversed(state_rev: JacobiFlowState, boundary: JacobiBoundary,
                           t: float):
    """T*(t) assembled from the reversed flow with data (0, id)."""
    tt, ttp = state_rev.eval(t)
    p = boundary.projector()
    a_full = boundary.weingarten_full()
    eye = np.eye(boundary.dim)
    return p @ ttp - a_full @ tt + (eye - p) @ tt


def reversal_symmetry_check(state: JacobiFlowState, s_star: float,
                            tol: float = 1e-6) -> bool:
    """A rank-loss parameter seen from the far side: the adjoint operator
    assembled from the reversed-segment flow must lose rank at the same
    parameter, within tol."""
    overshoot = min(40 * state.path.step, 0.2 * s_star)
    rev = _reversed_path(state.path, s_star, overshoot)
    sine = integrate_flow(rev, JacobiBoundary.conjugate(state.dim),
                          block=state.block)

    def smin(t):
        return float(np.linalg.svd(
            _adjoint_from_reversed(sine, state.boundary, t),
            compute_uv=False)[-1])

    lo = max(sine.s[1], s_star - overshoot)
    hi = sine.length
    t_hat, val = _golden_min(smin, lo, hi)
    return bool(abs(t_hat - s_star) <= tol and val < 10.0 * DETECT_TOL)


def kernel_correspondence_residual(state: JacobiFlowState, s_star: float) -> float:
    """At a rank-loss parameter, the near-null direction w of T(s*) must be
    reproduced by the reversed flow: -S~(s*) T'(s*) w = T(0) w."""
    tv, tpv = state.eval(s_star)
    u_, sv, vt = np.linalg.svd(tv)
    w = vt[-1]
    rev = _reversed_path(state.path, s_star)
    sine = integrate_flow(rev, JacobiBoundary.conjugate(state.dim),
                          block=state.block)
    st, _ = sine.eval(s_star)
    lhs = -(st @ (tpv @ w))
    rhs = state.T[0] @ w
    return float(np.linalg.norm(lhs - rhs))


def adjoint_check(state: JacobiFlowState, trials: int = 100, seed: int = 0) -> float:
    """Max residual |<T(b)x, u> - <x, T*(b)u>| over random pairs, with the
    adjoint assembled from the reversed flow."""
    b = state.length
    rev = _reversed_path(state.path, b)
    sine = integrate_flow(rev, JacobiBoundary.conjugate(state.dim),
                          block=state.block)
    t_star = _adjoint_from_reversed(sine, state.boundary, b)
    t_b = state.T[-1]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(state.dim)
        u = rng.standard_normal(state.dim)
        x /= np.linalg.norm(x)
        u /= np.linalg.norm(u)
        worst = max(worst, abs(float(x @ t_b.T @ u) - float(x @ t_star @ u)))
    return worst


# ---------------------------------------------------------------------------
# trends on the clustered-focal ellipsoid family
# ---------------------------------------------------------------------------

def epifocal_trend(dims, s_eval: float = math.pi / 2.0, step: float = 1e-3):
    """For each truncation size N: the smallest singular value of the focal
    flow at s_eval along the unit-circle geodesic, and the last preimage
    coefficient of the target sum_k e_k / k under the flow operator."""
    from .manifolds import clustered_focal_quadric

    rows = []
    for n in dims:
        spec = clustered_focal_quadric(int(n))
        m = spec.ambient_dim
        x0 = np.zeros(m)
        x0[1] = 1.0
        v0 = np.zeros(m)
        v0[0] = 1.0
        path = integrate_geodesic(spec, x0, v0, s_eval, step)
        flow = integrate_flow(path, JacobiBoundary.geodesic_submanifold(m - 2))
        t_end = flow.T[-1]
        sig = float(np.linalg.svd(t_end, compute_uv=False)[-1])
        target = np.array([1.0 / k for k in range(3, int(n) + 1)])
        coeffs = np.linalg.solve(t_end, target)
        rows.append({"n": int(n), "sigma_min": sig, "b_n": float(coeffs[-1])})
    return rows


# ---------------------------------------------------------------------------
# index forms
# ---------------------------------------------------------------------------

def _fd4(arr, h):
    """Fourth-order first derivative of sampled columns on a uniform grid."""
    n = len(arr)
    out = np.empty_like(arr)
    if n < 5:
        out[:] = np.gradient(arr, h, axis=0)
        return out
    out[2:-2] = (-arr[4:] + 8 * arr[3:-1] - 8 * arr[1:-3] + arr[:-4]) / (12 * h)
    out[0] = (-25 * arr[0] + 48 * arr[1] - 36 * arr[2] + 16 * arr[3] - 3 * arr[4]) / (12 * h)
    out[1] = (-3 * arr[0] - 10 * arr[1] + 18 * arr[2] - 6 * arr[3] + arr[4]) / (12 * h)
    out[-1] = (25 * arr[-1] - 48 * arr[-2] + 36 * arr[-3] - 16 * arr[-4] + 3 * arr[-5]) / (12 * h)
    out[-2] = (3 * arr[-1] + 10 * arr[-2] - 18 * arr[-3] + 6 * arr[-4] - arr[-5]) / (12 * h)
    return out


def _simpson(y, h):
    n = len(y) - 1
    if n < 1:
        return 0.0
    if n == 1:
        return 0.5 * h * (y[0] + y[1])
    total = 0.0
    if n % 2:
        # 3/8 rule on the last three intervals, composite Simpson before
        total += 3.0 * h / 8.0 * (y[n - 3] + 3 * y[n - 2] + 3 * y[n - 1] + y[n])
        y = y[: n - 2]
        n -= 3
        if n == 0:
            return float(total)
    total += h / 3.0 * (y[0] + y[-1] + 4 * np.sum(y[1:-1:2]) + 2 * np.sum(y[2:-2:2]))
    return float(total)


def _index_form_on_grid(s_grid, coeffs, derivs, r_nodes, boundary):
    h = s_grid[1] - s_grid[0]
    kinetic = np.einsum("nd,nd->n", derivs, derivs)
    potential = np.einsum("nd,nde,ne->n", coeffs, r_nodes, coeffs)
    total = _simpson(kinetic - potential, h)
    x0 = coeffs[0]
    p = boundary.projector()
    if np.linalg.norm(x0 - p @ x0) > 1e-8 * max(1.0, np.linalg.norm(x0)):
        raise GeometryError("field must start inside the boundary subspace")
    total -= float(x0 @ boundary.weingarten_full() @ x0)
    return total


def index_form(path: GeodesicPath, coeffs, boundary: JacobiBoundary,
               b: float = None, derivs=None, block: str = "normal") -> float:
    """Quadratic index form of a field given by frame coefficients.

    ``coeffs`` is a callable of arclength or an array aligned with the
    path grid (up to b).  Its derivative is taken with fourth-order
    centered stencils unless supplied.
    """
    d = path.dim if block == "full" else path.dim - 1
    h = path.step
    if b is None:
        i_b = len(path.s) - 1
    else:
        i_b = int(round(b / h))
        if not (0 < i_b < len(path.s)) or abs(path.s[i_b] - b) > 1e-9:
            raise GeometryError("endpoint time must land on the sample grid")
    s_grid = path.s[: i_b + 1]
    if callable(coeffs):
        arr = np.stack([np.asarray(coeffs(t), dtype=float) for t in s_grid])
    else:
        arr = np.asarray(coeffs, dtype=float)
        if arr.shape != (len(s_grid), d):
            raise GeometryError(
                f"coefficient array must be ({len(s_grid)}, {d})")
    if derivs is None:
        darr = _fd4(arr, h)
    elif callable(derivs):
        darr = np.stack([np.asarray(derivs(t), dtype=float) for t in s_grid])
    else:
        darr = np.asarray(derivs, dtype=float)
    r_nodes = _frame_curvature_all(path, block)[: i_b + 1]
    return _index_form_on_grid(s_grid, arr, darr, r_nodes, boundary)


def focal_index_lemma_check(path: GeodesicPath, boundary: JacobiBoundary,
                            trials: int, b: float = None, seed: int = 0,
                            segments: int = 6, block: str = "normal") -> dict:
    """Random piecewise-linear fields matched to a flow field at the
    endpoint must carry at least the field's index; the matched field
    itself saturates it."""
    flow = integrate_flow(path, boundary, block=block)
    if b is None:
        b = flow.length
    i_b = int(round(b / (flow.s[1] - flow.s[0])))
    if not (0 < i_b < len(flow.s)) or abs(flow.s[i_b] - b) > 1e-9:
        raise GeometryError("endpoint time must land on the flow grid")
    report = detect_singularities(flow, s_range=(0.0, b - 1e-9))
    if report.events:
        raise GeometryError(
            f"flow is singular at s={report.events[0].s:.9g}; "
            "the index inequality needs an invertible window")
    s_grid = flow.s[: i_b + 1]
    h = s_grid[1] - s_grid[0]
    r_nodes = _frame_curvature_all(path, block)[flow.node_idx[: i_b + 1]]
    d = flow.dim
    rng = np.random.default_rng(seed)
    p = boundary.projector()

    def index_of(arr, darr):
        return _index_form_on_grid(s_grid, arr, darr, r_nodes, boundary)

    min_slack = math.inf
    argmin = -1
    equality_slack = None
    for trial in range(trials):
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        j_arr = np.einsum("nij,j->ni", flow.T[: i_b + 1], u)
        jp_arr = np.einsum("nij,j->ni", flow.Tp[: i_b + 1], u)
        i_j = index_of(j_arr, jp_arr)
        # piecewise linear field with kinks on even grid nodes
        n_seg = max(2, segments)
        kinks = np.unique((np.linspace(0, i_b, n_seg + 1) // 2 * 2).astype(int))
        if kinks[-1] != i_b:
            kinks = np.append(kinks, i_b)
        scale = max(np.max(np.linalg.norm(j_arr, axis=1)), 0.1)
        values = {0: p @ rng.standard_normal(d) * scale, int(kinks[-1]): j_arr[-1]}
        for k in kinks[1:-1]:
            values[int(k)] = rng.standard_normal(d) * scale
        i_x = 0.0
        for a, bb in zip(kinks[:-1], kinks[1:]):
            xa, xb = values[int(a)], values[int(bb)]
            span = s_grid[bb] - s_grid[a]
            slope = (xb - xa) / span
            seg_s = s_grid[a: bb + 1]
            seg_x = xa[None, :] + (seg_s - s_grid[a])[:, None] * slope[None, :]
            seg_dx = np.broadcast_to(slope, seg_x.shape)
            kin = np.einsum("nd,nd->n", seg_dx, seg_dx)
            pot = np.einsum("nd,nde,ne->n", seg_x, r_nodes[a: bb + 1], seg_x)
            i_x += _simpson(kin - pot, h)
        x0 = values[0]
        i_x -= float(x0 @ boundary.weingarten_full() @ x0)
        slack = i_x - i_j
        if slack < min_slack:
            min_slack, argmin = slack, trial
        if equality_slack is None:
            # matched flow field through the generic derivative route
            equality_slack = index_of(j_arr, _fd4(j_arr, h)) - i_j
    return {
        "trials": trials,
        "b": float(b),
        "min_slack": float(min_slack),
        "argmin_trial": argmin,
        "equality_slack": float(equality_slack if equality_slack is not None else 0.0),
    }


# ---------------------------------------------------------------------------
# growth/decay estimates against constant-curvature solutions
# ---------------------------------------------------------------------------

def flow_estimate_suite(state: JacobiFlowState, f_upper=None, f_lower=None,
                        seed: int = 0):
    """Evaluate the classical flow estimates against the comparison
    solutions for constant curvature bounds.

    ``f_upper`` / ``f_lower`` are comparison functions (or plain floats,
    the curvature bounds) built from the upper and lower sectional
    curvature along the geodesic.  Items involving T' use the stored
    derivative; the logarithmic-derivative ("Riccati") item is evaluated
    through the flow's own second-derivative identity, which reduces it to
    the pointwise curvature-bound residual.
    """
    from .comparison import ComparisonFunction

    if state.boundary.rank == 0:
        mode = "zero"
    elif (state.boundary.rank == state.dim
          and not np.any(state.boundary.weingarten)):
        mode = "one"
    else:
        raise GeometryError("estimate suite needs a canonical boundary")
    if not hasattr(f_upper, "value"):
        f_upper = ComparisonFunction(float(f_upper), mode)
    if not hasattr(f_lower, "value"):
        f_lower = ComparisonFunction(float(f_lower), mode)
    delta_up = f_upper.curvature
    delta_lo = f_lower.curvature

    report = detect_singularities(state)
    first = report.events[0].s if report.events else math.inf
    s_all = state.s[1:]
    inv_mask = s_all < first - 1e-9
    if delta_up > 0:
        cap = math.pi / math.sqrt(delta_up)
        if mode == "one":
            cap /= 2.0
        up_mask = s_all < cap - 1e-12
    else:
        up_mask = np.ones_like(s_all, dtype=bool)

    rng = np.random.default_rng(seed)
    d = state.dim
    us = [np.eye(d)[i] for i in range(d)]
    for _ in range(4):
        g = rng.standard_normal(d)
        us.append(g / np.linalg.norm(g))
    us = np.stack(us)

    t_all = state.T[1:]
    tp_all = state.Tp[1:]
    tu = np.einsum("nij,kj->nki", t_all, us)
    tpu = np.einsum("nij,kj->nki", tp_all, us)
    ntu = np.linalg.norm(tu, axis=2)
    tptu = np.einsum("nki,nki->nk", tpu, tu)
    tutu = np.einsum("nki,nki->nk", tu, tu)
    fu = np.array([f_upper.value(s) for s in s_all])
    fup = np.array([f_upper.derivative(s) for s in s_all])
    fl = np.array([f_lower.value(s) for s in s_all])
    flp = np.array([f_lower.derivative(s) for s in s_all])
    opnorm = np.linalg.norm(t_all, ord=2, axis=(1, 2))

    items = []

    def add(name, slacks, s_where):
        if len(slacks) == 0:
            items.append({"name": name, "min_slack": math.inf, "at_s": None})
            return
        i = int(np.argmin(slacks))
        items.append({"name": name, "min_slack": float(slacks[i]),
                      "at_s": float(s_where[i])})

    r_nodes = _frame_curvature_all(state.path, state.block)[state.node_idx[1:]]
    lam_min = np.linalg.eigvalsh(r_nodes)[:, 0]
    add("curvature-lower-bound", lam_min - delta_lo, s_all)

    m = up_mask
    add("norm-lower", (ntu[m] - fu[m][:, None]).ravel(),
        np.repeat(s_all[m], us.shape[0]))
    add("log-derivative-lower",
        (tptu[m] * fu[m][:, None] - tutu[m] * fup[m][:, None]).ravel(),
        np.repeat(s_all[m], us.shape[0]))
    mi = inv_mask
    add("log-derivative-upper",
        (tutu[mi] * flp[mi][:, None] - tptu[mi] * fl[mi][:, None]).ravel(),
        np.repeat(s_all[mi], us.shape[0]))
    idx = np.nonzero(mi)[0]
    if len(idx) > 60:
        idx = idx[np.linspace(0, len(idx) - 1, 60).astype(int)]
    pair_slack, pair_s = [], []
    for a in range(len(idx)):
        for bidx in range(a, len(idx)):
            i, j = idx[a], idx[bidx]
            pair_slack.append(opnorm[i] * fl[j] - opnorm[j] * fl[i])
            pair_s.append(s_all[j])
    add("norm-ratio-monotone", np.array(pair_slack), np.array(pair_s))
    add("norm-upper", fl[mi] - opnorm[mi], s_all[mi])
    return items
