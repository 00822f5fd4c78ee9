"""Mixed WG source problem, used to check the discretisation on manufactured data.

Find ``(u_h, p_h)`` with::

    a_w(u_h, v) + (eps_r v0, grad_w p_h) = (eps_r f, v0)
    (eps_r u0, grad_w q) + sum_T h_T <p0 - pb, q0 - qb> = 0
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import WGSystem, local_blocks
from .basis import element_frame, element_quadrature, monomials
from .eigensolver import SolverError


@dataclass
class SourceSolution:
    system: WGSystem
    u: np.ndarray
    p: np.ndarray
    solve_residual: float
    load: np.ndarray


def saddle_matrix(system: WGSystem) -> sp.csc_matrix:
    return sp.bmat([[system.A, system.C.T], [system.C, system.S_p]], format="csc")


def load_vector(system: WGSystem, f, quad_degree: int | None = None) -> np.ndarray:
    """F_i = (eps_r f, phi_i) on the v0 basis; zero on edge dofs."""
    mesh, k = system.mesh, system.k
    qd = quad_degree or 2 * k + 4
    F = np.zeros(system.n_u)
    for t in range(mesh.num_elements):
        xy = mesh.element_vertices(t)
        rule = element_quadrature(xy, qd)
        c, h = element_frame(xy)
        phi = monomials(rule.points, c, h, k)
        fx, fy = f(rule.points[:, 0], rule.points[:, 1])
        fx = np.broadcast_to(np.asarray(fx, float), rule.weights.shape)
        fy = np.broadcast_to(np.asarray(fy, float), rule.weights.shape)
        F[system.dofs.u_elem[t]] = np.concatenate([phi.T @ (rule.weights * fx),
                                                   phi.T @ (rule.weights * fy)])
    return system.eps_r * F


def solve_source(system: WGSystem, f) -> SourceSolution:
    F = load_vector(system, f)
    K = saddle_matrix(system)
    rhs = np.concatenate([F, np.zeros(system.n_p)])
    try:
        z = spla.splu(K).solve(rhs)
    except RuntimeError as exc:
        raise SolverError(f"saddle factorization failed: {exc}") from exc
    if not np.all(np.isfinite(z)):
        raise SolverError("saddle solve produced non-finite values")
    res = float(np.linalg.norm(K @ z - rhs))
    return SourceSolution(system, z[: system.n_u], z[system.n_u:], res, F)


def error_norms(solution: SourceSolution, exact_u, exact_curl_u, quad_degree: int | None = None) -> dict:
    """L2 error of u0 and the V-type error of the weak curl plus tangential jumps.

    ``v_error^2 = sum_T mu_r^-1 ||curl u - curl_w u_h||_T^2 + h_T^-1 ||(u0 - ub) x n||_dT^2``
    """
    system = solution.system
    mesh, k, dofs = system.mesh, system.k, system.dofs
    qd = quad_degree or 2 * k + 4
    blocks = local_blocks(mesh, k)
    nq = dofs.nq
    u = solution.u
    l2, curl_err = 0.0, 0.0
    for t in range(mesh.num_elements):
        xy = mesh.element_vertices(t)
        rule = element_quadrature(xy, qd)
        c, h = element_frame(xy)
        phi = monomials(rule.points, c, h, k)
        x, y = rule.points[:, 0], rule.points[:, 1]
        ux, uy = exact_u(x, y)
        loc = u[dofs.u_elem[t]]
        nk = dofs.nk
        l2 += rule.weights @ ((phi @ loc[:nk] - ux) ** 2 + (phi @ loc[nk:] - uy) ** 2)

        idx = dofs.local_u(mesh, t)
        full = np.where(idx >= 0, u[np.maximum(idx, 0)], 0.0)
        wc = blocks[t].curl_map @ full
        curl_h = phi[:, :nq] @ wc
        curl_err += rule.weights @ (np.asarray(exact_curl_u(x, y)) - curl_h) ** 2
    jumps = float(u @ (system.S_jump @ u))
    return {
        "l2_error": float(np.sqrt(l2)),
        "v_error": float(np.sqrt(curl_err / system.mu_r + jumps)),
    }


def multiplier_energy(solution: SourceSolution) -> float:
    """S_p-weighted size of the multiplier, sqrt(p^T S_p p)."""
    p = solution.p
    return float(np.sqrt(max(p @ (solution.system.S_p @ p), 0.0)))
