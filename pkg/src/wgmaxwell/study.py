"""Refinement studies: eigenvalue errors, observed orders and CSV export."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assembly import assemble
from .basis import evaluate_element
from .eigensolver import EigenResult, SolverConfig, solve
from .mesh import CellKind, Mesh, generate_uniform

STUDY_COLUMNS = ["n", "j", "lambda_h", "error", "order", "lower_bound_ok", "residual", "seconds"]
FIELD_COLUMNS = ["x", "y", "u1", "u2"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GammaSpec:
    """Stabilisation scaling: ``h**eps`` or ``-1/log(h)``."""

    kind: str = "pow"
    eps: float = 0.1

    def __post_init__(self):
        if self.kind not in ("pow", "invlog"):
            raise ConfigError(f"unknown gamma kind {self.kind!r}")
        if self.kind == "pow" and not 0.0 < self.eps < 1.0:
            raise ConfigError(f"gamma exponent must lie in (0, 1), got {self.eps}")

    @classmethod
    def parse(cls, text: str) -> "GammaSpec":
        text = text.strip().lower()
        if text == "invlog":
            return cls("invlog")
        if text.startswith("pow:"):
            try:
                return cls("pow", float(text[4:]))
            except ValueError:
                raise ConfigError(f"bad gamma exponent in {text!r}") from None
        raise ConfigError(f"gamma must be 'pow:EPS' or 'invlog', got {text!r}")

    def __call__(self, h: float) -> float:
        if not 0.0 < h < 1.0:
            raise ConfigError(f"gamma(h) needs 0 < h < 1, got h={h}")
        if self.kind == "pow":
            return h ** self.eps
        return -1.0 / math.log(h)

    def __str__(self):
        return "invlog" if self.kind == "invlog" else f"pow:{self.eps:g}"


@dataclass
class RunConfig:
    domain: tuple = (0.0, 0.0, math.pi, math.pi)
    n_list: tuple = (8, 16, 32, 64)
    cells: CellKind = CellKind.SQUARE
    k: int = 1
    gamma: GammaSpec = field(default_factory=GammaSpec)
    eps_r: float = 1.0
    mu_r: float = 1.0
    num_eigs: int = 5
    exact: tuple | None = None
    shift: float = 0.3
    seed: int = 0
    out: str | None = None
    timing: bool = True
    method: str = "auto"
    p_stab_weight: float = 1.0

    def __post_init__(self):
        self.cells = CellKind.parse(self.cells)
        if isinstance(self.gamma, str):
            self.gamma = GammaSpec.parse(self.gamma)
        if not self.n_list or any(int(n) < 2 for n in self.n_list):
            raise ConfigError("every n must be an integer >= 2 (gamma needs h = 1/n < 1)")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.eps_r <= 0 or self.mu_r <= 0:
            raise ConfigError("eps_r and mu_r must be positive")
        if self.num_eigs < 1:
            raise ConfigError("num_eigs must be >= 1")
        if self.exact is not None and len(self.exact) < self.num_eigs:
            raise ConfigError(f"need {self.num_eigs} exact eigenvalues, got {len(self.exact)}")
        x0, y0, x1, y1 = self.domain
        if not (x1 > x0 and y1 > y0):
            raise ConfigError(f"degenerate domain {self.domain}")

    def solver_config(self) -> SolverConfig:
        return SolverConfig(num_eigs=self.num_eigs, shift=self.shift, seed=self.seed,
                            method=self.method, p_stab_weight=self.p_stab_weight)


@dataclass
class StudyRecord:
    n: int
    label: float
    eigenvalues: np.ndarray
    errors: np.ndarray | None
    orders: list | None
    lower_bound_ok: list | None
    residuals: np.ndarray
    seconds: float
    result: EigenResult | None = None
    mesh: Mesh | None = None


def compute_order(errors) -> list:
    """Observed orders ``log2(e[i-1] / e[i])``; ``None`` where undefined.

    The first entry is always ``None``. Non-positive errors (which signal a
    violated lower bound upstream) leave the adjacent orders undefined.
    """
    errors = [float(e) for e in errors]
    out: list = [None]
    for prev, cur in zip(errors, errors[1:]):
        if prev > 0 and cur > 0 and math.isfinite(prev) and math.isfinite(cur):
            out.append(math.log2(prev / cur))
        else:
            out.append(None)
    return out


def solve_level(config: RunConfig, n: int):
    mesh = generate_uniform(int(n), config.domain, config.cells)
    gamma = config.gamma(mesh.h)
    system = assemble(mesh, config.k, gamma, config.eps_r, config.mu_r)
    return system, solve(system, config.solver_config())


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.12e}"


def study_rows(records: list[StudyRecord], timing: bool = True) -> list[list[str]]:
    rows = []
    for rec in records:
        for j in range(len(rec.eigenvalues)):
            rows.append([
                _fmt(rec.n), _fmt(j + 1), _fmt(rec.eigenvalues[j]),
                _fmt(rec.errors[j]) if rec.errors is not None else "",
                _fmt(rec.orders[j]) if rec.orders is not None else "",
                _fmt(rec.lower_bound_ok[j]) if rec.lower_bound_ok is not None else "",
                _fmt(rec.residuals[j]),
                f"{rec.seconds:.3f}" if timing else "",
            ])
    return rows


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue())


def run_study(config: RunConfig, progress=None) -> list[StudyRecord]:
    """Solve every level in order; the CSV (if requested) is rewritten after each level.

    A failing level propagates its exception after the partial CSV is on disk.
    """
    records: list[StudyRecord] = []
    exact = None if config.exact is None else np.asarray(config.exact[: config.num_eigs], float)
    for n in config.n_list:
        t0 = time.perf_counter()
        try:
            system, res = solve_level(config, n)
        finally:
            if config.out and records:
                write_csv(config.out, STUDY_COLUMNS, study_rows(records, config.timing))
        seconds = time.perf_counter() - t0
        lam = res.eigenvalues
        errors = lb = None
        if exact is not None:
            m = min(len(lam), len(exact))
            errors = np.full(len(lam), np.nan)
            errors[:m] = exact[:m] - lam[:m]
            lb = [bool(e > 0) for e in errors]
        rec = StudyRecord(int(n), system.mesh.h, lam, errors, None, lb,
                          res.residual_norms, seconds, res, system.mesh)
        records.append(rec)
        if progress:
            progress(rec)
    _fill_orders(records)
    if config.out:
        write_csv(config.out, STUDY_COLUMNS, study_rows(records, config.timing))
    return records


def _fill_orders(records: list[StudyRecord]):
    if not records or records[0].errors is None:
        return
    m = max(len(r.eigenvalues) for r in records)
    for r in records:
        r.orders = [None] * len(r.eigenvalues)
    for j in range(m):
        chain, idx = [], []
        for i, r in enumerate(records):
            if j < len(r.eigenvalues):
                chain.append(r.errors[j])
                idx.append(i)
        orders = compute_order(chain)
        for pos, (i, o) in enumerate(zip(idx, orders)):
            # an order needs the immediately coarser level
            if pos > 0 and idx[pos - 1] == i - 1:
                records[i].orders[j] = o


def summary(records: list[StudyRecord]) -> str:
    if not records:
        return "no levels solved"
    if records[0].errors is None:
        return f"solved {len(records)} level(s); no exact eigenvalues given"
    all_pos = all(all(r.lower_bound_ok) for r in records)
    last = records[-1]
    orders = ", ".join("-" if o is None else f"{o:.4f}" for o in (last.orders or []))
    return (f"lower bound (all errors > 0): {'yes' if all_pos else 'NO'}; "
            f"final-level orders (n={last.n}): {orders}")


def sample_grid(domain, m: int) -> np.ndarray:
    """Row-major m-by-m grid of cell midpoints (y outer, x inner)."""
    if m < 1:
        raise ConfigError("grid size must be >= 1")
    x0, y0, x1, y1 = domain
    xs = x0 + (np.arange(m) + 0.5) * (x1 - x0) / m
    ys = y0 + (np.arange(m) + 0.5) * (y1 - y0) / m
    X, Y = np.meshgrid(xs, ys)
    return np.column_stack([X.ravel(), Y.ravel()])


def locate(mesh: Mesh, points, tol: float = 1e-12) -> np.ndarray:
    """Index of the lowest-numbered element containing each point, -1 if none."""
    points = np.asarray(points, float)
    owner = np.full(len(points), -1, dtype=np.int64)
    for t, c in enumerate(mesh.elements):
        todo = np.flatnonzero(owner < 0)
        if todo.size == 0:
            break
        xy = mesh.vertices[c]
        lo, hi = xy.min(axis=0), xy.max(axis=0)
        scale = mesh.element_diameters[t]
        p = points[todo]
        box = np.all((p >= lo - tol * scale) & (p <= hi + tol * scale), axis=1)
        if not box.any():
            continue
        cand = todo[box]
        inside = np.ones(len(cand), dtype=bool)
        for j in range(len(xy)):
            a, b = xy[j], xy[(j + 1) % len(xy)]
            cross = (b[0] - a[0]) * (points[cand, 1] - a[1]) - (b[1] - a[1]) * (points[cand, 0] - a[0])
            inside &= cross >= -tol * scale * scale
        owner[cand[inside]] = t
    return owner


def evaluate_field(u, mesh: Mesh, k: int, points) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the interior polynomial v0 at points; returns (values (2, m), owner)."""
    from .assembly import build_dofmap

    dofs = build_dofmap(mesh, k)
    points = np.asarray(points, float)
    owner = locate(mesh, points)
    vals = np.full((2, len(points)), np.nan)
    for t in np.unique(owner[owner >= 0]):
        sel = owner == t
        vals[:, sel] = evaluate_element(u[dofs.u_elem[t]], mesh.element_vertices(t), k, points[sel])
    return vals, owner


def export_field(u, mesh: Mesh, k: int, m: int, domain=None, path=None):
    """Sample v0 on an m-by-m grid; returns (rows, skipped_count)."""
    domain = domain if domain is not None else mesh.bounding_box()
    pts = sample_grid(domain, m)
    vals, owner = evaluate_field(u, mesh, k, pts)
    keep = owner >= 0
    rows = [[_fmt(x), _fmt(y), _fmt(a), _fmt(b)]
            for (x, y), a, b in zip(pts[keep], vals[0, keep], vals[1, keep])]
    if path is not None:
        write_csv(path, FIELD_COLUMNS, rows)
    return rows, int((~keep).sum())
