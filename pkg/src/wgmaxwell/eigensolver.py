"""Constrained generalized eigensolver for the WG Maxwell pencil.

Solves::

    A u + C^T p = lam B u
    C u - theta eps_r^2 S_p p = 0

where ``theta`` (``SolverConfig.p_stab_weight``) weights the multiplier
stabilizer; ``theta = 0`` enforces ``u`` in the discrete divergence-free
subspace exactly. The ``eps_r^2`` factor keeps the pencil homogeneous in
``eps_r`` (eigenvalues scale like ``1/eps_r``). ``B`` vanishes outside the interior (v0) block, so the
spectral transform is applied to the v0 unknowns only: with
``F = K - sigma N`` and ``P`` the v0 restriction, ``T = P F^{-1} P^T``
satisfies ``T B0 x = x / (lam - sigma)``. Infinite eigenvalues of the
singular pencil never enter the Krylov space.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import WGSystem

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


@dataclass
class SolverConfig:
    num_eigs: int = 5
    shift: float = 0.3
    tol_res: float = 1e-8
    tol_zero: float = 1e-8
    max_subspace: int | None = None
    seed: int = 0
    method: str = "auto"          # auto | dense | iterative
    dense_limit: int = 3000
    p_stab_weight: float = 1.0
    shift_retries: int = 3

    def __post_init__(self):
        if self.num_eigs < 1:
            raise ValueError("num_eigs must be >= 1")
        if self.method not in ("auto", "dense", "iterative"):
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def subspace(self) -> int:
        return self.max_subspace or max(40, 4 * self.num_eigs)


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray      # (n_u, m), columns B-normalised
    multipliers: np.ndarray       # (n_p, m)
    residual_norms: np.ndarray
    constraint_norms: np.ndarray
    rejected: list = field(default_factory=list)  # (lam, reason)
    method: str = ""
    shift: float = 0.0
    partial: bool = False

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def filter_flags(self) -> list[tuple[float, str]]:
        return [(float(v), "accepted") for v in self.eigenvalues] + list(self.rejected)


def pencil(system: WGSystem, p_stab_weight: float = 1.0):
    """Symmetric block matrices (K, N) of the constrained eigenproblem."""
    npp = system.n_p
    w = p_stab_weight * system.eps_r ** 2
    K = sp.bmat([[system.A, system.C.T],
                 [system.C, -w * system.S_p]], format="csc")
    N = sp.block_diag([system.B, sp.csr_matrix((npp, npp))], format="csc")
    return K, N


def residuals(system: WGSystem, lam: float, u, p, p_stab_weight: float = 1.0) -> tuple[float, float]:
    r1 = system.A @ u + system.C.T @ p - lam * (system.B @ u)
    r2 = system.C @ u - p_stab_weight * system.eps_r ** 2 * (system.S_p @ p)
    return float(np.linalg.norm(r1)), float(np.linalg.norm(r2))


def filter_pairs(system: WGSystem, lams, us, ps, config: SolverConfig) -> EigenResult:
    """Keep certified physical pairs; reject multiplier, zero and unconverged modes."""
    lams = np.asarray(lams, float)
    order = np.argsort(lams, kind="stable")
    keep_l, keep_u, keep_p, res, cons, rejected = [], [], [], [], [], []
    for i in order:
        lam, u, p = float(lams[i]), np.array(us[:, i], float), np.array(ps[:, i], float)
        bnorm = float(np.sqrt(max(u @ (system.B @ u), 0.0)))
        if not np.isfinite(lam):
            rejected.append((lam, "non-finite"))
            continue
        if bnorm < 1e-10 * max(1.0, np.linalg.norm(u)):
            rejected.append((lam, "multiplier mode"))
            continue
        u, p = u / bnorm, p / bnorm
        if lam <= config.tol_zero:
            rejected.append((lam, "zero or negative"))
            continue
        r, c = residuals(system, lam, u, p, config.p_stab_weight)
        if r > config.tol_res or c > config.tol_res:
            rejected.append((lam, f"residual {max(r, c):.2e}"))
            continue
        dup = False
        for lj, uj in zip(keep_l, keep_u):
            if abs(lj - lam) <= 1e-10 * max(1.0, abs(lam)):
                overlap = abs(uj @ (system.B @ u))
                if abs(overlap - 1.0) <= 1e-8:
                    dup = True
                    break
        if dup:
            rejected.append((lam, "duplicate"))
            continue
        keep_l.append(lam)
        keep_u.append(u)
        keep_p.append(p)
        res.append(r)
        cons.append(c)
    nu, npp = system.n_u, system.n_p
    return EigenResult(
        eigenvalues=np.array(keep_l),
        eigenvectors=np.column_stack(keep_u) if keep_u else np.zeros((nu, 0)),
        multipliers=np.column_stack(keep_p) if keep_p else np.zeros((npp, 0)),
        residual_norms=np.array(res),
        constraint_norms=np.array(cons),
        rejected=rejected,
    )


def _b_orthonormalize_clusters(system: WGSystem, lams, us, ps, rtol=1e-8):
    """Within each cluster of (numerically) equal eigenvalues make u B-orthonormal."""
    order = np.argsort(lams)
    lams, us, ps = lams[order], us[:, order], ps[:, order]
    i = 0
    while i < len(lams):
        j = i + 1
        while j < len(lams) and abs(lams[j] - lams[i]) <= rtol * max(1.0, abs(lams[i])):
            j += 1
        if j - i > 1:
            U = us[:, i:j]
            G = U.T @ (system.B @ U)
            w, V = np.linalg.eigh(0.5 * (G + G.T))
            good = w > 1e-14 * max(w.max(), 1e-300)
            T = V[:, good] / np.sqrt(w[good])
            # vectors that are B-null stay as they are (multiplier modes)
            k = T.shape[1]
            us[:, i:i + k] = U @ T
            ps[:, i:i + k] = ps[:, i:j] @ T
            if k < j - i:
                lams[i + k:j] = np.nan
        i = j
    return lams, us, ps


def solve_dense(system: WGSystem, config: SolverConfig | None = None) -> EigenResult:
    """Dense solve: Schur complement onto the v0 block, then a symmetric-definite eigh.

    Falls back to QZ on the full pencil when the eliminated block is singular
    (``p_stab_weight == 0``).
    """
    config = config or SolverConfig()
    if config.p_stab_weight == 0:
        return solve_dense_qz(system, config)
    K, _ = pencil(system, config.p_stab_weight)
    K = K.toarray()
    n0, nu = system.dofs.n_u0, system.n_u
    K00, K0w, Kww = K[:n0, :n0], K[:n0, n0:], K[n0:, n0:]
    try:
        X = sla.solve(Kww, K0w.T, assume_a="sym")
    except sla.LinAlgError:
        return solve_dense_qz(system, config)
    S = K00 - K0w @ X
    B0 = system.B[:n0, :n0].toarray()
    lams, V = sla.eigh(0.5 * (S + S.T), B0)
    W = -X @ V
    us = np.vstack([V, W[: nu - n0]])
    ps = W[nu - n0:]
    res = filter_pairs(system, lams, us, ps, config)
    res = _truncate(res, config.num_eigs)
    res.method = "dense"
    res.shift = config.shift
    return res


def solve_dense_qz(system: WGSystem, config: SolverConfig | None = None) -> EigenResult:
    """Full QZ eigendecomposition of the pencil; physical modes via the filter."""
    config = config or SolverConfig()
    K, N = pencil(system, config.p_stab_weight)
    w, V = sla.eig(K.toarray(), N.toarray())
    finite = np.isfinite(w) & (np.abs(w.imag) <= 1e-8 * np.maximum(1.0, np.abs(w.real)))
    lams = w.real[finite]
    Z = V[:, finite].real
    # eigenvector phases from QZ may be complex; take the dominant real direction
    Zc = V[:, finite]
    for c in range(Z.shape[1]):
        z = Zc[:, c]
        a = np.angle(z[np.argmax(np.abs(z))])
        Z[:, c] = (z * np.exp(-1j * a)).real
    nu = system.n_u
    lams, us, ps = _b_orthonormalize_clusters(system, lams, Z[:nu].copy(), Z[nu:].copy())
    res = filter_pairs(system, lams, us, ps, config)
    # the dense path returns the whole spectrum; report what was asked for
    res = _truncate(res, config.num_eigs)
    res.method = "dense-qz"
    res.shift = config.shift
    return res


def _truncate(res: EigenResult, m: int) -> EigenResult:
    if len(res) <= m:
        res.partial = len(res) < m
        return res
    return EigenResult(res.eigenvalues[:m], res.eigenvectors[:, :m], res.multipliers[:, :m],
                       res.residual_norms[:m], res.constraint_norms[:m], res.rejected)


def _factorize(K, N, shift: float, retries: int):
    sigma = shift
    for attempt in range(retries + 1):
        try:
            F = (K - sigma * N).tocsc()
            lu = spla.splu(F)
            # crude near-singularity probe: one solve must stay finite and accurate
            rhs = np.ones(F.shape[0])
            x = lu.solve(rhs)
            if np.all(np.isfinite(x)) and np.linalg.norm(F @ x - rhs) <= 1e-6 * np.linalg.norm(rhs):
                return lu, sigma
        except RuntimeError:
            pass
        if attempt < retries:
            warnings.warn(f"shift {sigma} is (nearly) an eigenvalue; retrying with {sigma + 0.01}",
                          RuntimeWarning, stacklevel=3)
            sigma += 0.01
    raise SolverError(f"factorization failed for shifts {shift}..{sigma}")


def solve_iterative(system: WGSystem, config: SolverConfig | None = None) -> EigenResult:
    """Shift-invert Lanczos (ARPACK) in the B0 inner product on the v0 block."""
    config = config or SolverConfig()
    K, N = pencil(system, config.p_stab_weight)
    lu, sigma = _factorize(K, N, config.shift, config.shift_retries)
    n0 = system.dofs.n_u0
    ntot = K.shape[0]
    B0 = system.B[:n0, :n0].tocsr()

    def t_apply(x):
        rhs = np.zeros(ntot)
        rhs[:n0] = x
        return lu.solve(rhs)[:n0]

    T = spla.LinearOperator((n0, n0), matvec=t_apply, dtype=float)
    want = min(config.num_eigs + 4, n0 - 1)
    ncv = min(max(config.subspace, 2 * want + 1), n0)
    rng = np.random.default_rng(config.seed)
    v0 = rng.standard_normal(n0)
    dummy = spla.LinearOperator((n0, n0), matvec=lambda x: x, dtype=float)
    vals, X = spla.eigsh(dummy, k=want, M=B0, sigma=sigma, OPinv=T, which="LM",
                         ncv=ncv, v0=v0, tol=0.0, maxiter=max(1000, 50 * ncv))

    lams, us, ps = [], [], []
    for lam, x in zip(vals, X.T):
        rhs = np.zeros(ntot)
        rhs[:n0] = B0 @ x
        z = (lam - sigma) * lu.solve(rhs)
        # one Rayleigh quotient refinement on the full pencil
        num = z @ (K @ z)
        den = z @ (N @ z)
        lams.append(num / den if den > 0 else lam)
        us.append(z[:system.n_u])
        ps.append(z[system.n_u:])
    lams = np.array(lams)
    res = filter_pairs(system, lams, np.column_stack(us), np.column_stack(ps), config)
    res = _truncate(res, config.num_eigs)
    res.method = "iterative"
    res.shift = sigma
    if res.partial:
        log.warning("only %d of %d requested eigenpairs accepted", len(res), config.num_eigs)
    return res


def solve(system: WGSystem, config: SolverConfig | None = None) -> EigenResult:
    config = config or SolverConfig()
    method = config.method
    if method == "auto":
        method = "dense" if system.n_u + system.n_p <= config.dense_limit else "iterative"
    if method == "dense":
        return solve_dense(system, config)
    return solve_iterative(system, config)


def vnorm(system: WGSystem, u) -> float:
    """Broken V-norm: strong curl of v0 plus h_T^-1 weighted tangential jumps (no gamma)."""
    u = np.asarray(u, float)
    if u.shape != (system.n_u,):
        raise ValueError(f"expected a vector of length {system.n_u}, got shape {u.shape}")
    return float(np.sqrt(max(u @ (system.vnorm_matrix() @ u), 0.0)))
