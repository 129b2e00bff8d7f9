"""Built-in test manifolds.

Flat space plus curved surfaces realized as level sets {F(x) = 1} of a
positive quadratic form in a flat ambient space: the round sphere, the
hyperboloid sheet (Minkowski ambient form, hidden behind the shared
``inner`` hook) and positive-definite quadrics.  All curvature data comes
from the shape operator of the embedding, so sphere and quadric curvature
are exact rather than finite-differenced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MEMBERSHIP_TOL = 1e-10
TANGENCY_TOL = 1e-10


class GeometryError(ValueError):
    """A geometric precondition failed (off-manifold point, bad plane, ...)."""


@dataclass(frozen=True, eq=False)
class Point:
    """A manifold point; ambient coordinates for embedded kinds."""

    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Ambient components of a vector tangent to the surface at ``base``."""

    base: Point
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components", np.asarray(self.components, dtype=float))


def _coords(x) -> np.ndarray:
    if isinstance(x, Point):
        return x.coords
    return np.asarray(x, dtype=float)


def _components(u) -> np.ndarray:
    if isinstance(u, TangentVector):
        return u.components
    return np.asarray(u, dtype=float)


class ManifoldSpec:
    """Common operation surface for the built-in manifolds."""

    kind = "?"
    is_embedded = True
    is_flat = False
    lorentzian = False
    normal_sign = 1  # sign of <nu, nu> in the ambient form

    # ---- ambient metric -------------------------------------------------

    def metric_signs(self) -> np.ndarray:
        return np.ones(self.ambient_dim)

    def inner(self, u, v) -> float:
        u = _components(u)
        v = _components(v)
        if self.lorentzian:
            return float(np.dot(u * self.metric_signs(), v))
        return float(np.dot(u, v))

    def norm(self, u) -> float:
        return math.sqrt(max(self.inner(u, u), 0.0))

    # ---- embedding hooks (overridden per kind) --------------------------

    @property
    def ambient_dim(self) -> int:
        raise NotImplementedError

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def defining_value(self, x) -> float:
        """Value of the defining quadratic form; 1.0 on the surface."""
        raise NotImplementedError

    def unit_normal_at(self, x) -> np.ndarray:
        raise NotImplementedError

    def shape_apply(self, x, u) -> np.ndarray:
        """Directional derivative of the unit normal field along tangent u."""
        raise NotImplementedError

    def shape_apply_many(self, x, rows) -> np.ndarray:
        x = _coords(x)
        return np.stack([self.shape_apply(x, r) for r in np.atleast_2d(rows)])

    def project_point(self, x) -> np.ndarray:
        raise NotImplementedError

    def project_tangent(self, x, w) -> np.ndarray:
        if self.is_flat:
            return np.array(_components(w), dtype=float)
        nu = self.unit_normal_at(x)
        w = _components(w)
        return w - self.normal_sign * self.inner(w, nu) * nu

    def constant_curvature(self):
        """Sectional curvature if it is the same for every plane, else None."""
        return None

    # ---- validation and factories ---------------------------------------

    def membership_residual(self, x) -> float:
        if self.is_flat:
            return 0.0
        return abs(self.defining_value(x) - 1.0)

    def check_point(self, coords) -> np.ndarray:
        coords = _coords(coords)
        if coords.shape != (self.ambient_dim,):
            raise GeometryError(
                f"point needs {self.ambient_dim} coordinates, got {coords.shape}")
        if self.membership_residual(coords) > MEMBERSHIP_TOL:
            raise GeometryError(
                f"point off the manifold: defining residual "
                f"{self.membership_residual(coords):.3e} > {MEMBERSHIP_TOL:g}")
        return coords

    def check_tangent(self, x, comp) -> np.ndarray:
        x = _coords(x)
        comp = _components(comp)
        if comp.shape != (self.ambient_dim,):
            raise GeometryError(
                f"tangent vector needs {self.ambient_dim} components")
        if not self.is_flat:
            nu = self.unit_normal_at(x)
            if abs(self.inner(comp, nu)) > TANGENCY_TOL * max(1.0, self.norm(comp)):
                raise GeometryError("vector is not tangent to the surface")
        return comp

    def point(self, coords) -> Point:
        return Point(self.check_point(coords))

    def tangent(self, base, components) -> TangentVector:
        base = base if isinstance(base, Point) else self.point(base)
        return TangentVector(base, self.check_tangent(base.coords, components))

    # ---- textual form ----------------------------------------------------

    def text(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.text()!r})"

    def __eq__(self, other):
        return isinstance(other, ManifoldSpec) and self.text() == other.text()

    def __hash__(self):
        return hash(self.text())


class Euclidean(ManifoldSpec):
    kind = "euclidean"
    is_embedded = False
    is_flat = True

    def __init__(self, dim: int):
        if int(dim) < 2:
            raise GeometryError("dimension must be >= 2")
        self._dim = int(dim)

    @property
    def ambient_dim(self):
        return self._dim

    @property
    def dim(self):
        return self._dim

    def project_point(self, x):
        return np.array(_coords(x), dtype=float)

    def constant_curvature(self):
        return 0.0

    def text(self):
        return f"euclidean:dim={self._dim}"


class Sphere(ManifoldSpec):
    """Round sphere of curvature K > 0, radius 1/sqrt(K), in R^(dim+1)."""

    kind = "sphere"

    def __init__(self, dim: int, curvature: float):
        if int(dim) < 2:
            raise GeometryError("dimension must be >= 2")
        if curvature <= 0:
            raise GeometryError("sphere curvature must be positive")
        self._dim = int(dim)
        self.curvature = float(curvature)

    @property
    def ambient_dim(self):
        return self._dim + 1

    @property
    def dim(self):
        return self._dim

    @property
    def radius(self):
        return 1.0 / math.sqrt(self.curvature)

    def defining_value(self, x):
        x = _coords(x)
        return self.curvature * float(np.dot(x, x))

    def unit_normal_at(self, x):
        return math.sqrt(self.curvature) * _coords(x)

    def shape_apply(self, x, u):
        return math.sqrt(self.curvature) * _components(u)

    def shape_apply_many(self, x, rows):
        return math.sqrt(self.curvature) * np.atleast_2d(rows)

    def project_point(self, x):
        x = _coords(x)
        return x * (self.radius / np.linalg.norm(x))

    def constant_curvature(self):
        return self.curvature

    def text(self):
        return f"sphere:dim={self._dim},K={self.curvature!r}"


class Hyperbolic(ManifoldSpec):
    """Hyperboloid sheet {<x,x> = 1/K, x_0 > 0} in Minkowski R^(dim,1)."""

    kind = "hyperbolic"
    lorentzian = True
    normal_sign = -1

    def __init__(self, dim: int, curvature: float):
        if int(dim) < 2:
            raise GeometryError("dimension must be >= 2")
        if curvature >= 0:
            raise GeometryError("hyperbolic curvature must be negative")
        self._dim = int(dim)
        self.curvature = float(curvature)

    @property
    def ambient_dim(self):
        return self._dim + 1

    @property
    def dim(self):
        return self._dim

    def metric_signs(self):
        signs = np.ones(self.ambient_dim)
        signs[0] = -1.0
        return signs

    def defining_value(self, x):
        x = _coords(x)
        return self.curvature * float(np.dot(x * self.metric_signs(), x))

    def unit_normal_at(self, x):
        # timelike normal, <nu, nu> = -1
        return math.sqrt(-self.curvature) * _coords(x)

    def shape_apply(self, x, u):
        return math.sqrt(-self.curvature) * _components(u)

    def shape_apply_many(self, x, rows):
        return math.sqrt(-self.curvature) * np.atleast_2d(rows)

    def project_point(self, x):
        x = _coords(x)
        scale = self.curvature * float(np.dot(x * self.metric_signs(), x))
        if scale <= 0:
            raise GeometryError("cannot retract onto the hyperboloid sheet")
        return x / math.sqrt(scale)

    def check_point(self, coords):
        coords = super().check_point(coords)
        if coords[0] <= 0:
            raise GeometryError("point on the wrong hyperboloid sheet")
        return coords

    def constant_curvature(self):
        return self.curvature

    def text(self):
        return f"hyperbolic:dim={self._dim},K={self.curvature!r}"


class Quadric(ManifoldSpec):
    """Hypersurface {sum c_i x_i^2 = 1} with strictly positive coefficients.

    Truncations of the axis profile c = (1, 1, (1-1/3)^2, ..., (1-1/n)^2)
    reproduce the ellipsoid whose focal parameters along the unit-circle
    geodesic cluster at pi/2; see :func:`clustered_focal_quadric`.
    """

    kind = "quadric"

    def __init__(self, coefficients):
        coeffs = tuple(float(c) for c in coefficients)
        if len(coeffs) < 3:
            raise GeometryError("quadric needs at least 3 coefficients")
        if any(c <= 0 for c in coeffs):
            raise GeometryError("quadric coefficients must be strictly positive")
        self.coefficients = coeffs
        self._c = np.array(coeffs)

    @property
    def ambient_dim(self):
        return len(self.coefficients)

    @property
    def dim(self):
        return len(self.coefficients) - 1

    def defining_value(self, x):
        x = _coords(x)
        return float(np.dot(self._c * x, x))

    def unit_normal_at(self, x):
        g = self._c * _coords(x)
        return g / np.linalg.norm(g)

    def shape_apply(self, x, u):
        x = _coords(x)
        g = self._c * x
        r = np.linalg.norm(g)
        nu = g / r
        w = self._c * _components(u)
        return (w - nu * np.dot(nu, w)) / r

    def shape_apply_many(self, x, rows):
        x = _coords(x)
        g = self._c * x
        r = np.linalg.norm(g)
        nu = g / r
        w = np.atleast_2d(rows) * self._c
        return (w - np.outer(w @ nu, nu)) / r

    def project_point(self, x):
        x = _coords(x)
        return x / math.sqrt(self.defining_value(x))

    def text(self):
        body = ",".join(repr(c) for c in self.coefficients)
        return f"quadric:c={body}"


class ModelSurface(ManifoldSpec):
    """2-d model surface of constant curvature H, any sign.

    Realized by its canonical constant-curvature model (round sphere,
    flat plane or hyperboloid sheet); point coordinates are those of the
    realization.  Not exposed as an embedding: ``normal`` and
    ``shape_operator`` refuse it like they refuse flat space.
    """

    kind = "model"
    is_embedded = False

    def __init__(self, curvature: float):
        h = float(curvature)
        self.curvature = h
        if h > 0:
            self._delegate = Sphere(2, h)
        elif h < 0:
            self._delegate = Hyperbolic(2, h)
        else:
            self._delegate = Euclidean(2)

    @property
    def is_flat(self):
        return self.curvature == 0.0

    @property
    def lorentzian(self):
        return self._delegate.lorentzian

    @property
    def normal_sign(self):
        return self._delegate.normal_sign

    @property
    def ambient_dim(self):
        return self._delegate.ambient_dim

    @property
    def dim(self):
        return 2

    def metric_signs(self):
        return self._delegate.metric_signs()

    def defining_value(self, x):
        return self._delegate.defining_value(x)

    def membership_residual(self, x):
        return self._delegate.membership_residual(x)

    def unit_normal_at(self, x):
        return self._delegate.unit_normal_at(x)

    def shape_apply(self, x, u):
        return self._delegate.shape_apply(x, u)

    def shape_apply_many(self, x, rows):
        return self._delegate.shape_apply_many(x, rows)

    def project_point(self, x):
        return self._delegate.project_point(x)

    def check_point(self, coords):
        return self._delegate.check_point(coords)

    def constant_curvature(self):
        return self.curvature

    def text(self):
        return f"model:H={self.curvature!r}"


def clustered_focal_quadric(n: int) -> Quadric:
    """Truncated ellipsoid with coefficients (1, 1, (1-1/3)^2, ..., (1-1/n)^2)."""
    if n < 3:
        raise GeometryError("truncation needs n >= 3")
    return Quadric((1.0, 1.0) + tuple((1.0 - 1.0 / k) ** 2 for k in range(3, n + 1)))


# ---------------------------------------------------------------------------
# textual form
# ---------------------------------------------------------------------------

def parse_manifold(text: str) -> ManifoldSpec:
    """Parse the canonical textual form, e.g. ``sphere:dim=2,K=1.0``."""
    text = text.strip()
    if ":" not in text:
        raise GeometryError(f"bad manifold spec {text!r}")
    kind, _, body = text.partition(":")
    kind = kind.strip().lower()
    fields = {}
    if kind == "quadric":
        if not body.startswith("c="):
            raise GeometryError(f"bad quadric spec {text!r}")
        return Quadric(float(tok) for tok in body[2:].split(","))
    for item in body.split(","):
        key, _, val = item.partition("=")
        if not _:
            raise GeometryError(f"bad manifold spec {text!r}")
        fields[key.strip()] = val.strip()
    try:
        if kind == "euclidean":
            return Euclidean(int(fields.pop("dim")))
        if kind == "sphere":
            return Sphere(int(fields.pop("dim")), float(fields.pop("K")))
        if kind == "hyperbolic":
            return Hyperbolic(int(fields.pop("dim")), float(fields.pop("K")))
        if kind == "model":
            return ModelSurface(float(fields.pop("H")))
    except KeyError as exc:
        raise GeometryError(f"manifold spec {text!r} is missing {exc}") from None
    raise GeometryError(f"unknown manifold kind {kind!r}")


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def normal(spec: ManifoldSpec, x) -> np.ndarray:
    """Unit ambient normal at x; errors for kinds with no embedding."""
    if not spec.is_embedded:
        raise GeometryError(f"{spec.kind} manifold is not embedded")
    return spec.unit_normal_at(spec.check_point(x))


def tangent_project(spec: ManifoldSpec, x, w) -> TangentVector:
    """Project an ambient vector onto the tangent space at x."""
    x = spec.check_point(x)
    return TangentVector(Point(x), spec.project_tangent(x, w))


def shape_operator(spec: ManifoldSpec, x, u) -> TangentVector:
    """Apply the surface Weingarten map to a tangent vector."""
    if not spec.is_embedded:
        raise GeometryError(f"{spec.kind} manifold is not embedded")
    x = spec.check_point(x)
    u = spec.check_tangent(x, u)
    return TangentVector(Point(x), spec.shape_apply(x, u))


def curvature_operator(spec: ManifoldSpec, x, u, v, w) -> TangentVector:
    """R(u,v)w at x, Gauss equation for quadrics, closed form otherwise."""
    x = spec.check_point(x)
    u = spec.check_tangent(x, u)
    v = spec.check_tangent(x, v)
    w = spec.check_tangent(x, w)
    kappa = spec.constant_curvature()
    if kappa is not None:
        out = kappa * (spec.inner(v, w) * u - spec.inner(u, w) * v)
    else:
        su = spec.shape_apply(x, u)
        sv = spec.shape_apply(x, v)
        out = spec.inner(sv, w) * su - spec.inner(su, w) * sv
    return TangentVector(Point(x), out)


def sectional_curvature(spec: ManifoldSpec, x, u, v) -> float:
    """Sectional curvature of the plane spanned by (u, v) at x."""
    x = spec.check_point(x)
    u = spec.check_tangent(x, u)
    v = spec.check_tangent(x, v)
    guu = spec.inner(u, u)
    gvv = spec.inner(v, v)
    guv = spec.inner(u, v)
    gram = guu * gvv - guv * guv
    if gram <= 1e-14:
        raise GeometryError("degenerate plane")
    r = curvature_operator(spec, x, u, v, v).components
    return spec.inner(r, u) / gram


def curvature_range(spec: ManifoldSpec, geodesic, samples: int):
    """Empirical (min, max) sectional curvature over planes containing the
    velocity, sampled along a geodesic path."""
    if samples < 1:
        raise GeometryError("need at least one sample")
    kappa = spec.constant_curvature()
    if kappa is not None:
        return kappa, kappa
    n = len(geodesic.s)
    idx = np.unique(np.linspace(0, n - 1, min(samples, n)).astype(int))
    lo, hi = math.inf, -math.inf
    for i in idx:
        x = geodesic.x[i]
        v = geodesic.v[i]
        frame = geodesic.frame[i]
        for j in range(1, frame.shape[0]):
            k = sectional_curvature(spec, x, v, frame[j])
            lo, hi = min(lo, k), max(hi, k)
        for j in range(1, frame.shape[0] - 1):
            mix = (frame[j] + frame[j + 1]) / math.sqrt(2.0)
            k = sectional_curvature(spec, x, v, mix)
            lo, hi = min(lo, k), max(hi, k)
    return lo, hi


# ---------------------------------------------------------------------------
# frames and sampling helpers
# ---------------------------------------------------------------------------

def orthonormalize(spec: ManifoldSpec, x, vectors, against=()):
    """Gram-Schmidt in the kind's inner product, tangent at x."""
    x = _coords(x)
    basis = [np.array(_components(a), dtype=float) for a in against]
    out = []
    for w in vectors:
        w = spec.project_tangent(x, _components(w))
        for b in basis:
            w = w - spec.inner(w, b) * b
        nrm = spec.norm(w)
        if nrm < 1e-9:
            continue
        w = w / nrm
        basis.append(w)
        out.append(w)
    return out


def tangent_basis(spec: ManifoldSpec, x, first=None):
    """Orthonormal tangent basis at x; optionally seeded with a first vector."""
    x = _coords(x)
    seeds = []
    if first is not None:
        seeds.append(_components(first) / spec.norm(first))
    cands = list(np.eye(spec.ambient_dim))
    vecs = seeds + cands
    basis = orthonormalize(spec, x, vecs)
    if len(basis) != spec.dim:
        raise GeometryError("failed to build a tangent basis")
    return np.stack(basis)


def random_point(spec: ManifoldSpec, rng) -> Point:
    m = spec.ambient_dim
    if spec.is_flat:
        return Point(rng.standard_normal(m))
    if spec.lorentzian:
        y = rng.standard_normal(m - 1) * 0.5
        x0 = math.sqrt(float(np.dot(y, y)) + 1.0 / (-spec.curvature))
        return Point(np.concatenate(([x0], y)))
    g = rng.standard_normal(m)
    while np.linalg.norm(g) < 1e-6:
        g = rng.standard_normal(m)
    return Point(spec.project_point(g))


def random_unit_tangent(spec: ManifoldSpec, x, rng, against=()) -> TangentVector:
    """Unit tangent drawn by orthonormalizing a Gaussian ambient vector
    against the normal (and optionally further directions)."""
    x = _coords(x)
    for _ in range(64):
        g = rng.standard_normal(spec.ambient_dim)
        basis = orthonormalize(spec, x, [g], against=against)
        if basis:
            return TangentVector(Point(x), basis[0])
    raise GeometryError("failed to sample a tangent direction")
