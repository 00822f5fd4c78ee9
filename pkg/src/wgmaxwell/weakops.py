"""Element-local weak Galerkin operators.

Local vector dofs on an element with ``m`` edges and degree ``k``::

    [v0_x (nk) | v0_y (nk) | edge 0 tangential (k+1) | ... | edge m-1 (k+1)]

and scalar dofs::

    [q0 (dim P_{k-1}) | edge 0 (k+1) | ... | edge m-1 (k+1)]

where ``nk = dim P_k``. Edge data is expanded in ``xi^j`` along the global
edge direction and the tangential dof is ``v_b . t`` with ``t`` the global
unit tangent. Only the tangential trace of ``v_b`` is represented.

In 2D ``v x n = v1 n2 - v2 n1``. For the counterclockwise tangent
``t = (-n2, n1)`` this is ``-v . t``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import (
    dim_pk,
    edge_monomials,
    edge_quadrature,
    element_frame,
    element_quadrature,
    monomial_gradients,
    monomials,
)


@dataclass(frozen=True)
class EdgeGeom:
    start: np.ndarray    # first endpoint in the global edge direction
    end: np.ndarray
    normal: np.ndarray   # outward w.r.t. the element
    tangent: np.ndarray  # global direction
    length: float


@dataclass(frozen=True)
class LocalWGBlock:
    """All local matrices of one element.

    ``curl_map`` and ``grad_map`` give polynomial coefficients of the weak
    curl (in P_{k-1}) and weak gradient (in [P_k]^2). ``stab`` is the
    tangential-jump form *without* the gamma factor.
    """

    element: int
    k: int
    num_edges: int
    curl_map: np.ndarray
    grad_map: np.ndarray
    stab: np.ndarray
    p_stab: np.ndarray
    mass: np.ndarray        # (v0, w0) on the interior vector block
    gram_curl: np.ndarray   # Gram of P_{k-1}
    gram_vec: np.ndarray    # Gram of [P_k]^2
    curl_energy: np.ndarray  # (curl v0, curl w0) with the strong curl
    h: float

    @property
    def nk(self) -> int:
        return dim_pk(self.k)

    @property
    def n_u(self) -> int:
        return 2 * self.nk + self.num_edges * (self.k + 1)

    @property
    def n_p(self) -> int:
        return dim_pk(self.k - 1) + self.num_edges * (self.k + 1)

    def curl_form(self) -> np.ndarray:
        """(weak curl u, weak curl v)_T as a matrix on local vector dofs."""
        return self.curl_map.T @ self.gram_curl @ self.curl_map

    def divergence_coupling(self) -> np.ndarray:
        """(v0, weak grad q)_T with rows on scalar dofs and columns on vector dofs."""
        c = self.grad_map.T @ self.gram_vec
        out = np.zeros((self.n_p, self.n_u))
        out[:, : 2 * self.nk] = c
        return out


def element_edges(xy, signs=None, normals=None) -> list[EdgeGeom]:
    xy = np.asarray(xy, float)
    m = len(xy)
    signs = np.ones(m, dtype=int) if signs is None else np.asarray(signs)
    out = []
    for j in range(m):
        a, b = xy[j], xy[(j + 1) % m]
        d = b - a
        length = float(np.hypot(d[0], d[1]))
        n = np.array([d[1], -d[0]]) / length if normals is None else np.asarray(normals[j], float)
        if signs[j] < 0:
            a, b = b, a
        out.append(EdgeGeom(a, b, n, (b - a) / length, length))
    return out


def _quad_degree(k: int) -> int:
    return 2 * k + 4


def local_block(xy, k: int, signs=None, element: int = -1, quad_degree: int | None = None) -> LocalWGBlock:
    """Build every local matrix for the convex polygon ``xy`` (ccw vertices)."""
    if k < 1:
        raise ValueError("the scheme requires k >= 1")
    xy = np.asarray(xy, float)
    qd = quad_degree or _quad_degree(k)
    center, h = element_frame(xy)
    edges = element_edges(xy, signs)
    m = len(edges)
    nk, nq, ne = dim_pk(k), dim_pk(k - 1), k + 1
    n_u = 2 * nk + m * ne
    n_p = nq + m * ne

    rule = element_quadrature(xy, qd)
    w = rule.weights
    phi = monomials(rule.points, center, h, k)
    dphi_x, dphi_y = monomial_gradients(rule.points, center, h, k)
    q = phi[:, :nq]
    dq_x, dq_y = dphi_x[:, :nq], dphi_y[:, :nq]

    g_k = (phi * w[:, None]).T @ phi
    g_q = g_k[:nq, :nq]
    g_vec = np.kron(np.eye(2), g_k)

    # weak curl: (curl_w v, q) = (v0, curl q) - <v_b x n, q>, curl q = (dq/dy, -dq/dx)
    rc = np.zeros((nq, n_u))
    rc[:, :nk] = (dq_y * w[:, None]).T @ phi
    rc[:, nk:2 * nk] = -(dq_x * w[:, None]).T @ phi

    # weak gradient: (grad_w p, phi) = -(p0, div phi) + <p_b, phi . n>
    rg = np.zeros((2 * nk, n_p))
    rg[:nk, :nq] = -(dphi_x * w[:, None]).T @ q
    rg[nk:, :nq] = -(dphi_y * w[:, None]).T @ q

    stab = np.zeros((n_u, n_u))
    p_stab = np.zeros((n_p, n_p))
    for j, e in enumerate(edges):
        er = edge_quadrature(e.start, e.end, qd)
        ew = er.weights
        psi = edge_monomials(er.params, k)
        phi_e = monomials(er.points, center, h, k)
        q_e = phi_e[:, :nq]
        t, n = e.tangent, e.normal
        t_cross_n = t[0] * n[1] - t[1] * n[0]
        cols = slice(2 * nk + j * ne, 2 * nk + (j + 1) * ne)
        pcols = slice(nq + j * ne, nq + (j + 1) * ne)

        rc[:, cols] = -t_cross_n * (q_e * ew[:, None]).T @ psi
        rg[:nk, pcols] = n[0] * (phi_e * ew[:, None]).T @ psi
        rg[nk:, pcols] = n[1] * (phi_e * ew[:, None]).T @ psi

        # tangential jump v0 . t - v_b . t at edge quadrature points
        jump = np.zeros((len(ew), n_u))
        jump[:, :nk] = t[0] * phi_e
        jump[:, nk:2 * nk] = t[1] * phi_e
        jump[:, cols] = -psi
        stab += (jump * ew[:, None]).T @ jump

        pj = np.zeros((len(ew), n_p))
        pj[:, :nq] = q_e
        pj[:, pcols] = -psi
        p_stab += (pj * ew[:, None]).T @ pj

    curl_map = np.linalg.solve(g_q, rc)
    grad_map = np.linalg.solve(g_vec, rg)
    stab /= h
    p_stab *= h

    curl0 = np.zeros((len(w), n_u))
    curl0[:, :nk] = -dphi_y
    curl0[:, nk:2 * nk] = dphi_x
    curl_energy = (curl0 * w[:, None]).T @ curl0

    mass = np.zeros((n_u, n_u))
    mass[: 2 * nk, : 2 * nk] = g_vec

    def sym(a):
        return 0.5 * (a + a.T)

    return LocalWGBlock(
        element=element, k=k, num_edges=m,
        curl_map=curl_map, grad_map=grad_map,
        stab=sym(stab), p_stab=sym(p_stab), mass=sym(mass),
        gram_curl=g_q, gram_vec=g_vec, curl_energy=sym(curl_energy), h=h,
    )


def weak_curl_matrix(xy, k: int, signs=None) -> np.ndarray:
    return local_block(xy, k, signs).curl_map


def weak_grad_matrix(xy, k: int, signs=None) -> np.ndarray:
    return local_block(xy, k, signs).grad_map


def stab_matrix(xy, k: int, gamma: float, signs=None) -> np.ndarray:
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return gamma * local_block(xy, k, signs).stab


def p_stab_matrix(xy, k: int, signs=None) -> np.ndarray:
    return local_block(xy, k, signs).p_stab


def interpolate_vector(f, xy, k: int, signs=None) -> np.ndarray:
    """Local Q_h f = (Q_0 f, Q_b (f . t)) in the local vector dof layout."""
    from .basis import PolySpace, SpaceKind, project_edge, project_element

    xy = np.asarray(xy, float)
    v0 = project_element(f, xy, PolySpace(SpaceKind.ELEMENT_VECTOR, k)).values
    parts = [v0]
    for e in element_edges(xy, signs):
        t = e.tangent

        def ft(x, y, t=t):
            vx, vy = f(x, y)
            return t[0] * np.asarray(vx) + t[1] * np.asarray(vy)

        parts.append(project_edge(ft, e.start, e.end, k).values)
    return np.concatenate(parts)


def interpolate_scalar(g, xy, k: int, signs=None) -> np.ndarray:
    """Local Q_h g = (Q_0 g onto P_{k-1}, Q_b g onto P_k(e))."""
    from .basis import PolySpace, SpaceKind, project_edge, project_element

    xy = np.asarray(xy, float)
    parts = [project_element(g, xy, PolySpace(SpaceKind.ELEMENT_SCALAR, k - 1)).values]
    for e in element_edges(xy, signs):
        parts.append(project_edge(g, e.start, e.end, k).values)
    return np.concatenate(parts)
