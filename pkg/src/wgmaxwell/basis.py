"""Local polynomial spaces, quadrature and L2 projections.

Element polynomials use monomials centred at the element centroid and scaled
by the element diameter, ``((x - xc)/h)^a ((y - yc)/h)^b`` with ``a + b <= k``,
ordered by total degree. Edge polynomials use ``xi^j`` where ``xi`` in
``[-1, 1]`` runs along the edge from its first to its second endpoint.
Vector spaces stack two scalar blocks (x component first).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

MAX_QUAD_DEGREE = 20


class QuadratureError(ValueError):
    pass


class SpaceKind(str, enum.Enum):
    ELEMENT_SCALAR = "element-scalar"
    ELEMENT_VECTOR = "element-vector"
    EDGE_SCALAR = "edge-scalar"
    EDGE_VECTOR = "edge-vector"


def dim_pk(k: int) -> int:
    """dim P_k in two variables."""
    return (k + 1) * (k + 2) // 2 if k >= 0 else 0


@dataclass(frozen=True)
class PolySpace:
    kind: SpaceKind
    degree: int

    def __post_init__(self):
        object.__setattr__(self, "kind", SpaceKind(self.kind))
        if self.degree < 0:
            raise ValueError("polynomial degree must be >= 0")

    @property
    def on_edge(self) -> bool:
        return self.kind in (SpaceKind.EDGE_SCALAR, SpaceKind.EDGE_VECTOR)

    @property
    def components(self) -> int:
        return 2 if self.kind in (SpaceKind.ELEMENT_VECTOR, SpaceKind.EDGE_VECTOR) else 1

    @property
    def scalar_dimension(self) -> int:
        return self.degree + 1 if self.on_edge else dim_pk(self.degree)

    @property
    def dimension(self) -> int:
        return self.components * self.scalar_dimension


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray   # (npts, 2) physical coordinates
    weights: np.ndarray  # (npts,)
    degree: int
    params: np.ndarray | None = None  # edge rules: xi in [-1, 1]


@dataclass(frozen=True)
class LocalCoeffs:
    space: PolySpace
    values: np.ndarray


@lru_cache(maxsize=None)
def _gauss(npts: int):
    x, w = leggauss(npts)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _check_degree(degree: int):
    if degree < 0:
        raise QuadratureError("quadrature degree must be >= 0")
    if degree > MAX_QUAD_DEGREE:
        raise QuadratureError(
            f"quadrature degree {degree} exceeds the supported maximum {MAX_QUAD_DEGREE}")


def edge_quadrature(p0, p1, degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on the segment p0 -> p1, exact to ``degree``."""
    _check_degree(degree)
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    xi, w = _gauss(degree // 2 + 1)
    length = float(np.linalg.norm(p1 - p0))
    pts = 0.5 * (p0 + p1) + 0.5 * xi[:, None] * (p1 - p0)
    return QuadratureRule(pts, 0.5 * length * w, degree, params=np.array(xi))


@lru_cache(maxsize=None)
def _collapsed_triangle(degree: int):
    # Gauss rule on the square mapped onto the reference triangle; the
    # Jacobian of the collapse adds one degree in the first direction.
    m = (degree + 2) // 2 + 1 if degree % 2 else (degree + 2) // 2
    x, w = _gauss(max(m, 1))
    s, ws = 0.5 * (x + 1), 0.5 * w
    u, v = np.meshgrid(s, s, indexing="ij")
    wu, wv = np.meshgrid(ws, ws, indexing="ij")
    u, v = u.ravel(), v.ravel()
    # barycentric weights for corners 1 and 2; corner 0 gets the rest
    b1 = u * (1 - v)
    b2 = u * v
    wt = (wu * wv).ravel() * u * 2.0  # reference triangle area is 1/2
    return b1, b2, wt


def triangle_quadrature(xy, degree: int) -> QuadratureRule:
    _check_degree(degree)
    xy = np.asarray(xy, float)
    b1, b2, wt = _collapsed_triangle(degree)
    p0, p1, p2 = xy
    pts = p0 + np.outer(b1, p1 - p0) + np.outer(b2, p2 - p0)
    area2 = abs((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]))
    return QuadratureRule(pts, 0.5 * wt * area2, degree)


def element_quadrature(xy, degree: int) -> QuadratureRule:
    """Rule on a convex polygon; polygons beyond triangles are fanned from the vertex mean."""
    xy = np.asarray(xy, float)
    if len(xy) == 3:
        return triangle_quadrature(xy, degree)
    _check_degree(degree)
    c = xy.mean(axis=0)
    pts, wts = [], []
    for j in range(len(xy)):
        r = triangle_quadrature(np.array([c, xy[j], xy[(j + 1) % len(xy)]]), degree)
        pts.append(r.points)
        wts.append(r.weights)
    return QuadratureRule(np.concatenate(pts), np.concatenate(wts), degree)


def quad_rule(cell, degree: int) -> QuadratureRule:
    """Quadrature on an edge (2 vertices) or a convex polygon (3+ vertices)."""
    cell = np.asarray(cell, float)
    if len(cell) == 2:
        return edge_quadrature(cell[0], cell[1], degree)
    return element_quadrature(cell, degree)


def exponents(k: int) -> np.ndarray:
    return np.array([(d - j, j) for d in range(k + 1) for j in range(d + 1)], dtype=int)


def monomials(points, center, scale, k: int) -> np.ndarray:
    """Scaled monomial values, shape (npts, dim P_k)."""
    p = (np.asarray(points, float) - center) / scale
    e = exponents(k)
    return p[:, 0:1] ** e[:, 0] * p[:, 1:2] ** e[:, 1]


def monomial_gradients(points, center, scale, k: int) -> tuple[np.ndarray, np.ndarray]:
    """(d/dx, d/dy) of the scaled monomials, each shape (npts, dim P_k)."""
    p = (np.asarray(points, float) - center) / scale
    e = exponents(k)
    x, y = p[:, 0:1], p[:, 1:2]
    ax, ay = e[:, 0], e[:, 1]
    dx = np.where(ax > 0, ax * x ** np.maximum(ax - 1, 0), 0.0) * y ** ay / scale
    dy = np.where(ay > 0, ay * y ** np.maximum(ay - 1, 0), 0.0) * x ** ax / scale
    return dx, dy


def edge_monomials(xi, k: int) -> np.ndarray:
    return np.asarray(xi, float)[:, None] ** np.arange(k + 1)


def element_frame(xy) -> tuple[np.ndarray, float]:
    """Centroid and diameter used to centre and scale element monomials."""
    from .mesh import polygon_centroid, polygon_diameter

    xy = np.asarray(xy, float)
    return polygon_centroid(xy), polygon_diameter(xy)


def gram(cell, space: PolySpace, quad_degree: int | None = None) -> np.ndarray:
    cell = np.asarray(cell, float)
    k = space.degree
    rule = quad_rule(cell, quad_degree if quad_degree is not None else 2 * k)
    if space.on_edge:
        phi = edge_monomials(rule.params, k)
    else:
        center, scale = element_frame(cell)
        phi = monomials(rule.points, center, scale, k)
    g = (phi * rule.weights[:, None]).T @ phi
    if space.components == 2:
        g = np.kron(np.eye(2), g)
    return g


def _sample(f, points, components: int) -> np.ndarray:
    vals = np.asarray(f(points[:, 0], points[:, 1]), dtype=float)
    if components == 1:
        return np.broadcast_to(vals, (len(points),))
    vals = np.broadcast_to(vals, (2, len(points))) if vals.ndim == 2 else np.array(
        [np.broadcast_to(v, (len(points),)) for v in vals])
    return vals


def project_element(f, cell, space: PolySpace, quad_degree: int | None = None) -> LocalCoeffs:
    """L2 projection of ``f(x, y)`` onto an element space.

    ``f`` returns an array of shape (npts,) for scalar spaces or (2, npts) for
    vector spaces.
    """
    if space.on_edge:
        raise ValueError("project_element needs an element space")
    cell = np.asarray(cell, float)
    k = space.degree
    qd = quad_degree if quad_degree is not None else min(2 * k + 4, MAX_QUAD_DEGREE)
    rule = element_quadrature(cell, qd)
    center, scale = element_frame(cell)
    phi = monomials(rule.points, center, scale, k)
    pw = phi * rule.weights[:, None]
    g = pw.T @ phi
    vals = _sample(f, rule.points, space.components)
    rhs = pw.T @ vals.T if space.components == 2 else pw.T @ vals
    c = np.linalg.solve(g, rhs)
    if space.components == 2:
        c = c.T.ravel()
    return LocalCoeffs(space, c)


def project_edge(f, p0, p1, degree: int, quad_degree: int | None = None,
                 components: int = 1) -> LocalCoeffs:
    """L2 projection of ``f(x, y)`` onto P_degree on the segment p0 -> p1."""
    qd = quad_degree if quad_degree is not None else min(2 * degree + 4, MAX_QUAD_DEGREE)
    rule = edge_quadrature(p0, p1, qd)
    phi = edge_monomials(rule.params, degree)
    pw = phi * rule.weights[:, None]
    g = pw.T @ phi
    vals = _sample(f, rule.points, components)
    rhs = pw.T @ vals.T if components == 2 else pw.T @ vals
    c = np.linalg.solve(g, rhs)
    kind = SpaceKind.EDGE_SCALAR if components == 1 else SpaceKind.EDGE_VECTOR
    return LocalCoeffs(PolySpace(kind, degree), c.T.ravel() if components == 2 else c)


def evaluate_element(coeffs: np.ndarray, cell, k: int, points) -> np.ndarray:
    """Evaluate a scalar (len dim P_k) or stacked vector (len 2 dim P_k) polynomial."""
    center, scale = element_frame(cell)
    phi = monomials(points, center, scale, k)
    coeffs = np.asarray(coeffs, float)
    n = phi.shape[1]
    if coeffs.size == n:
        return phi @ coeffs
    return np.stack([phi @ coeffs[:n], phi @ coeffs[n:]])


def condition_number(g: np.ndarray) -> float:
    ev = np.linalg.eigvalsh(g)
    return float(ev[-1] / ev[0]) if ev[0] > 0 else math.inf
