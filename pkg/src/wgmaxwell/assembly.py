"""Global dof numbering and assembly of the sparse WG blocks.

Vector (u) dofs: all interior blocks element by element, then the
tangential dofs of interior edges. Scalar (p) dofs: the P_{k-1} interior
blocks, then the edge dofs of interior edges. Boundary edges carry neither
tangential nor scalar edge dofs (``v_b x n = 0`` and ``w_b = 0`` there).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis import dim_pk
from .mesh import Mesh, require_valid
from .weakops import LocalWGBlock, local_block


@dataclass(frozen=True)
class DofMap:
    k: int
    num_elements: int
    nk: int                  # dim P_k
    nq: int                  # dim P_{k-1}
    edge_dof: np.ndarray     # (num_edges,) first global edge slot, -1 on the boundary
    n_interior_edges: int
    u_elem: np.ndarray       # (M, 2 nk) global indices of v0
    p_elem: np.ndarray       # (M, nq)

    @property
    def per_edge(self) -> int:
        return self.k + 1

    @property
    def n_u0(self) -> int:
        return 2 * self.nk * self.num_elements

    @property
    def n_u(self) -> int:
        return self.n_u0 + self.per_edge * self.n_interior_edges

    @property
    def n_p0(self) -> int:
        return self.nq * self.num_elements

    @property
    def n_p(self) -> int:
        return self.n_p0 + self.per_edge * self.n_interior_edges

    def u_edge(self, e: int) -> np.ndarray:
        s = self.edge_dof[e]
        if s < 0:
            return np.full(self.per_edge, -1, dtype=np.int64)
        return self.n_u0 + s + np.arange(self.per_edge)

    def p_edge(self, e: int) -> np.ndarray:
        s = self.edge_dof[e]
        if s < 0:
            return np.full(self.per_edge, -1, dtype=np.int64)
        return self.n_p0 + s + np.arange(self.per_edge)

    def local_u(self, mesh: Mesh, t: int) -> np.ndarray:
        """Global u indices in local layout; -1 marks eliminated boundary dofs."""
        return np.concatenate([self.u_elem[t]] + [self.u_edge(e) for e in mesh.element_edges[t]])

    def local_p(self, mesh: Mesh, t: int) -> np.ndarray:
        return np.concatenate([self.p_elem[t]] + [self.p_edge(e) for e in mesh.element_edges[t]])


def build_dofmap(mesh: Mesh, k: int) -> DofMap:
    if k < 1:
        raise ValueError("the scheme requires k >= 1")
    nk, nq = dim_pk(k), dim_pk(k - 1)
    M = mesh.num_elements
    interior = mesh.edge_elements[:, 1] >= 0
    edge_dof = np.full(mesh.num_edges, -1, dtype=np.int64)
    edge_dof[interior] = (k + 1) * np.arange(int(interior.sum()))
    return DofMap(
        k=k, num_elements=M, nk=nk, nq=nq, edge_dof=edge_dof,
        n_interior_edges=int(interior.sum()),
        u_elem=np.arange(2 * nk * M, dtype=np.int64).reshape(M, 2 * nk),
        p_elem=np.arange(nq * M, dtype=np.int64).reshape(M, nq),
    )


def local_blocks(mesh: Mesh, k: int) -> list[LocalWGBlock]:
    """Local matrices for every element, reusing results for translated copies.

    Monomials are centred and scaled per element, so congruent translated
    elements with the same edge orientations share identical matrices.
    """
    key = ("blocks", k)
    if key in mesh._cache:
        return mesh._cache[key]
    shapes: dict = {}
    out = []
    for t, c in enumerate(mesh.elements):
        xy = mesh.vertices[c]
        rel = xy - mesh.element_centroids[t]
        scale = mesh.element_diameters[t]
        sig = (np.round(rel / scale, 12).tobytes(), round(float(scale), 14),
               mesh.element_edge_signs[t].tobytes())
        blk = shapes.get(sig)
        if blk is None:
            blk = shapes[sig] = local_block(xy, k, mesh.element_edge_signs[t])
        out.append(blk)
    mesh._cache[key] = out
    return out


@dataclass(frozen=True)
class WGSystem:
    mesh: Mesh
    dofs: DofMap
    k: int
    gamma: float
    eps_r: float
    mu_r: float
    A: sp.csr_matrix        # mu_r^-1 (curl_w, curl_w) + s
    B: sp.csr_matrix        # eps_r (u0, v0)
    C: sp.csr_matrix        # eps_r (u0, grad_w q), rows on p dofs
    S_p: sp.csr_matrix      # sum h_T <p0 - pb, q0 - qb>
    A_curl: sp.csr_matrix   # (curl_w, curl_w) without mu_r
    S_jump: sp.csr_matrix   # tangential jump form without gamma
    V_curl: sp.csr_matrix   # (curl v0, curl w0), strong curl

    @property
    def n_u(self) -> int:
        return self.dofs.n_u

    @property
    def n_p(self) -> int:
        return self.dofs.n_p

    def vnorm_matrix(self) -> sp.csr_matrix:
        return (self.V_curl / self.mu_r + self.S_jump).tocsr()


def _scatter(rows_list, cols_list, mats, shape) -> sp.csr_matrix:
    r, c, v = [], [], []
    for rows, cols, mat in zip(rows_list, cols_list, mats):
        rr = np.repeat(rows, len(cols))
        cc = np.tile(cols, len(rows))
        vv = mat.ravel()
        keep = (rr >= 0) & (cc >= 0)
        r.append(rr[keep])
        c.append(cc[keep])
        v.append(vv[keep])
    r = np.concatenate(r) if r else np.zeros(0, np.int64)
    c = np.concatenate(c) if c else np.zeros(0, np.int64)
    v = np.concatenate(v) if v else np.zeros(0)
    # coo -> csr sums duplicates in insertion order, which is fixed here
    m = sp.coo_matrix((v, (r, c)), shape=shape).tocsr()
    m.sum_duplicates()
    m.eliminate_zeros()
    m.sort_indices()
    return m


def assemble(mesh: Mesh, k: int, gamma: float, eps_r: float = 1.0, mu_r: float = 1.0) -> WGSystem:
    if gamma <= 0 or eps_r <= 0 or mu_r <= 0:
        raise ValueError("gamma, eps_r and mu_r must be positive")
    require_valid(mesh)
    dofs = build_dofmap(mesh, k)
    blocks = local_blocks(mesh, k)
    lu = [dofs.local_u(mesh, t) for t in range(mesh.num_elements)]
    lp = [dofs.local_p(mesh, t) for t in range(mesh.num_elements)]
    nu, npp = dofs.n_u, dofs.n_p

    curl = _scatter(lu, lu, [b.curl_form() for b in blocks], (nu, nu))
    jump = _scatter(lu, lu, [b.stab for b in blocks], (nu, nu))
    mass = _scatter(lu, lu, [b.mass for b in blocks], (nu, nu))
    coup = _scatter(lp, lu, [b.divergence_coupling() for b in blocks], (npp, nu))
    pst = _scatter(lp, lp, [b.p_stab for b in blocks], (npp, npp))
    vcurl = _scatter(lu, lu, [b.curl_energy for b in blocks], (nu, nu))

    A = (curl / mu_r + gamma * jump).tocsr()
    A.sort_indices()
    return WGSystem(
        mesh=mesh, dofs=dofs, k=k, gamma=gamma, eps_r=eps_r, mu_r=mu_r,
        A=A, B=(eps_r * mass).tocsr(), C=(eps_r * coup).tocsr(), S_p=pst,
        A_curl=curl, S_jump=jump, V_curl=vcurl,
    )


def constraint_residual(system: WGSystem, u) -> float:
    """||C u||_2; zero exactly on the discrete divergence-free subspace."""
    u = np.asarray(u, float)
    if u.shape != (system.n_u,):
        raise ValueError(f"expected a vector of length {system.n_u}, got shape {u.shape}")
    return float(np.linalg.norm(system.C @ u))


def interpolate(system_or_mesh, f, k: int | None = None) -> np.ndarray:
    """Global Q_h f for a vector field ``f(x, y) -> (fx, fy)``."""
    from .weakops import interpolate_vector

    if isinstance(system_or_mesh, WGSystem):
        mesh, k = system_or_mesh.mesh, system_or_mesh.k
    else:
        mesh = system_or_mesh
    dofs = build_dofmap(mesh, k)
    u = np.zeros(dofs.n_u)
    for t in range(mesh.num_elements):
        loc = interpolate_vector(f, mesh.element_vertices(t), k, mesh.element_edge_signs[t])
        idx = dofs.local_u(mesh, t)
        keep = idx >= 0
        u[idx[keep]] = loc[keep]
    return u


def interpolate_scalar_field(mesh: Mesh, g, k: int) -> np.ndarray:
    """Global Q_h g for a scalar field; boundary edge values are dropped."""
    from .weakops import interpolate_scalar

    dofs = build_dofmap(mesh, k)
    p = np.zeros(dofs.n_p)
    for t in range(mesh.num_elements):
        loc = interpolate_scalar(g, mesh.element_vertices(t), k, mesh.element_edge_signs[t])
        idx = dofs.local_p(mesh, t)
        keep = idx >= 0
        p[idx[keep]] = loc[keep]
    return p


def dump_coo(matrix, path=None) -> str:
    """Coordinate text dump, one ``row col value`` per line, sorted by (row, col)."""
    m = sp.coo_matrix(matrix)
    order = np.lexsort((m.col, m.row))
    text = "".join(f"{r} {c} {v!r}\n" for r, c, v in
                   zip(m.row[order].tolist(), m.col[order].tolist(), m.data[order].tolist()))
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
