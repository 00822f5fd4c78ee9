"""Planar polygonal meshes: generation, validation and a small text format.

Elements are convex counterclockwise polygons. Every edge carries a fixed
global direction (from its lower vertex index to its higher one); elements
that traverse an edge against that direction see it with sign -1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class MeshError(ValueError):
    """Invalid mesh input (bad arguments, parse errors, failed validation)."""


class CellKind(str, enum.Enum):
    SQUARE = "square"
    TRIANGLE = "tri"

    @classmethod
    def parse(cls, value: "str | CellKind") -> "CellKind":
        if isinstance(value, CellKind):
            return value
        aliases = {"square": cls.SQUARE, "tri": cls.TRIANGLE,
                   "triangle": cls.TRIANGLE, "right-triangle": cls.TRIANGLE}
        try:
            return aliases[value.lower()]
        except KeyError:
            raise MeshError(f"unknown cell kind {value!r}") from None


def _frozen(a) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def polygon_area(xy: np.ndarray) -> float:
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(xy: np.ndarray) -> np.ndarray:
    x, y = xy[:, 0], xy[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * cross.sum()
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * a)


def polygon_diameter(xy: np.ndarray) -> float:
    d = xy[:, None, :] - xy[None, :, :]
    return float(np.sqrt((d ** 2).sum(axis=-1)).max())


@dataclass(frozen=True)
class Mesh:
    """Immutable polygonal partition of a simply connected planar domain.

    ``edges[i] = (a, b)`` with ``a < b``; ``edge_elements[i] = (left, right)``
    where ``right == -1`` marks a boundary edge. ``element_edges[t][j]`` is the
    edge from local vertex ``j`` to ``j + 1`` and ``element_edge_signs[t][j]`` is
    +1 when that traversal agrees with the global edge direction.
    """

    vertices: np.ndarray
    elements: tuple
    edges: np.ndarray
    edge_elements: np.ndarray
    element_edges: tuple
    element_edge_signs: tuple
    edge_normals: tuple
    element_diameters: np.ndarray
    element_areas: np.ndarray
    element_centroids: np.ndarray
    mesh_size: float
    label_h: float | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def num_elements(self) -> int:
        return len(self.elements)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_elements[:, 1] < 0)

    @property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_elements[:, 1] >= 0)

    @property
    def h(self) -> float:
        """Refinement label when generated (1/n), else the geometric mesh size."""
        return self.label_h if self.label_h is not None else self.mesh_size

    def element_vertices(self, t: int) -> np.ndarray:
        return self.vertices[self.elements[t]]

    def edge_length(self, e: int) -> float:
        a, b = self.edges[e]
        return float(np.linalg.norm(self.vertices[b] - self.vertices[a]))

    def bounding_box(self) -> tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (np.array_equal(self.vertices, other.vertices)
                and len(self.elements) == len(other.elements)
                and all(np.array_equal(a, b) for a, b in zip(self.elements, other.elements)))

    __hash__ = None


def build_mesh(vertices, elements, label_h: float | None = None) -> Mesh:
    """Derive edges, incidences, normals and diameters from raw connectivity.

    No validation is performed here; see :func:`validate`.
    """
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise MeshError("vertices must be an (N, 2) array")
    cells = tuple(_frozen(np.asarray(c, dtype=np.int64)) for c in elements)
    nv = len(vertices)
    for t, c in enumerate(cells):
        if len(c) < 3:
            raise MeshError(f"element {t} has fewer than 3 vertices")
        if c.min() < 0 or c.max() >= nv:
            raise MeshError(f"element {t} references a vertex index out of range")

    edge_index: dict[tuple[int, int], int] = {}
    edges: list[tuple[int, int]] = []
    owners: list[list[int]] = []
    elem_edges, elem_signs, normals = [], [], []
    for t, c in enumerate(cells):
        xy = vertices[c]
        ids = np.empty(len(c), dtype=np.int64)
        sg = np.empty(len(c), dtype=np.int64)
        nrm = np.empty((len(c), 2))
        for j in range(len(c)):
            a, b = int(c[j]), int(c[(j + 1) % len(c)])
            key = (a, b) if a < b else (b, a)
            e = edge_index.get(key)
            if e is None:
                e = edge_index[key] = len(edges)
                edges.append(key)
                owners.append([])
            owners[e].append(t)
            ids[j] = e
            sg[j] = 1 if a < b else -1
            d = xy[(j + 1) % len(c)] - xy[j]
            length = math.hypot(d[0], d[1])
            # outward for a counterclockwise traversal
            nrm[j] = (d[1] / length, -d[0] / length) if length > 0 else (np.nan, np.nan)
        elem_edges.append(_frozen(ids))
        elem_signs.append(_frozen(sg))
        normals.append(_frozen(nrm))

    edge_elements = np.full((len(edges), 2), -1, dtype=np.int64)
    for e, own in enumerate(owners):
        edge_elements[e, : min(len(own), 2)] = own[:2]
        if len(own) > 2:
            # recorded for validate(); keeps the first two
            edge_elements[e, 1] = -2

    diam = np.array([polygon_diameter(vertices[c]) for c in cells])
    area = np.array([polygon_area(vertices[c]) for c in cells])
    cent = np.array([polygon_centroid(vertices[c]) if a != 0 else vertices[c].mean(axis=0)
                     for c, a in zip(cells, area)]).reshape(-1, 2)
    return Mesh(
        vertices=_frozen(vertices),
        elements=cells,
        edges=_frozen(np.array(edges, dtype=np.int64).reshape(-1, 2)),
        edge_elements=_frozen(edge_elements),
        element_edges=tuple(elem_edges),
        element_edge_signs=tuple(elem_signs),
        edge_normals=tuple(normals),
        element_diameters=_frozen(diam),
        element_areas=_frozen(area),
        element_centroids=_frozen(cent),
        mesh_size=float(diam.max()) if len(diam) else 0.0,
        label_h=label_h,
    )


def generate_uniform(n: int, domain=(0.0, 0.0, math.pi, math.pi),
                     kind: "CellKind | str" = CellKind.SQUARE) -> Mesh:
    """n-by-n grid of squares on an axis-aligned rectangle ``(x0, y0, x1, y1)``.

    With ``kind="tri"`` each cell is split along its lower-left to upper-right
    diagonal. The refinement label ``1/n`` is kept as ``mesh.label_h``.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise MeshError(f"n must be a positive integer, got {n!r}")
    x0, y0, x1, y1 = map(float, domain)
    if not (x1 > x0 and y1 > y0):
        raise MeshError(f"degenerate rectangle {domain!r}")
    kind = CellKind.parse(kind)
    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    cells = []
    for j in range(n):
        for i in range(n):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            if kind is CellKind.SQUARE:
                cells.append((a, b, c, d))
            else:
                cells.append((a, b, c))
                cells.append((a, c, d))
    return build_mesh(vertices, cells, label_h=1.0 / n)


@dataclass
class ValidationReport:
    checks: dict[str, list] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(not bad for bad in self.checks.values())

    def failures(self) -> dict[str, list]:
        return {name: bad for name, bad in self.checks.items() if bad}

    def __str__(self) -> str:
        lines = []
        for name, bad in self.checks.items():
            status = "ok" if not bad else f"FAIL {bad[:10]}{' ...' if len(bad) > 10 else ''}"
            lines.append(f"{name}: {status}")
        return "\n".join(lines)


def validate(mesh: Mesh, tol: float = 1e-12) -> ValidationReport:
    """Check the structural invariants; failures carry offending indices."""
    rep = ValidationReport()
    orientation, convexity, simple = [], [], []
    for t, c in enumerate(mesh.elements):
        xy = mesh.vertices[c]
        scale = max(mesh.element_diameters[t], 1e-300) ** 2
        if mesh.element_areas[t] <= tol * scale:
            orientation.append(t)
            continue
        d = np.roll(xy, -1, axis=0) - xy
        turn = d[:, 0] * np.roll(d[:, 1], -1) - d[:, 1] * np.roll(d[:, 0], -1)
        if np.any(turn < -tol * scale):
            convexity.append(t)
        if len(set(c.tolist())) != len(c) or np.any(np.hypot(d[:, 0], d[:, 1]) <= 0):
            simple.append(t)
    rep.checks["orientation"] = orientation
    rep.checks["convexity"] = convexity
    rep.checks["simple"] = simple

    counts = np.zeros(mesh.num_edges, dtype=int)
    for ids in mesh.element_edges:
        np.add.at(counts, ids, 1)
    rep.checks["incidence"] = [int(e) for e in np.flatnonzero((counts < 1) | (counts > 2))]

    used = np.zeros(mesh.num_vertices, dtype=bool)
    for c in mesh.elements:
        used[c] = True
    rep.checks["dangling_vertices"] = [int(v) for v in np.flatnonzero(~used)]

    euler = mesh.num_vertices - mesh.num_edges + mesh.num_elements
    rep.checks["euler"] = [] if euler == 1 else [euler]

    bad_normals = []
    for t, (nrm, c) in enumerate(zip(mesh.edge_normals, mesh.elements)):
        xy = mesh.vertices[c]
        mid = 0.5 * (xy + np.roll(xy, -1, axis=0))
        outward = np.einsum("ij,ij->i", nrm, mid - mesh.element_centroids[t])
        unit = np.abs(np.hypot(nrm[:, 0], nrm[:, 1]) - 1.0)
        if np.any(~np.isfinite(nrm)) or np.any(unit > 1e-12) or np.any(outward <= 0):
            bad_normals.append(t)
    rep.checks["normals"] = bad_normals
    return rep


def require_valid(mesh: Mesh) -> Mesh:
    rep = validate(mesh)
    if not rep.ok:
        raise MeshError(f"mesh validation failed: {rep.failures()}")
    return mesh


def dump_mesh(mesh: Mesh) -> str:
    lines = ["wgmesh 1", f"vertices {mesh.num_vertices}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines.append(f"elements {mesh.num_elements}")
    lines += [" ".join(map(str, [len(c), *c.tolist()])) for c in mesh.elements]
    return "\n".join(lines) + "\n"


def load_mesh(text: str) -> Mesh:
    """Parse the ``wgmesh 1`` text format and return a validated mesh."""
    lines = [(i + 1, ln.split("#", 1)[0].strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(no, ln) for no, ln in lines if ln]
    it = iter(lines)

    def take(what):
        try:
            return next(it)
        except StopIteration:
            raise MeshError(f"unexpected end of file while reading {what}") from None

    no, ln = take("header")
    if ln.split() != ["wgmesh", "1"]:
        raise MeshError(f"line {no}: expected header 'wgmesh 1'")

    def count(keyword):
        no, ln = take(keyword)
        parts = ln.split()
        if len(parts) != 2 or parts[0] != keyword:
            raise MeshError(f"line {no}: expected '{keyword} <count>'")
        try:
            n = int(parts[1])
        except ValueError:
            raise MeshError(f"line {no}: bad count {parts[1]!r}") from None
        if n < 0:
            raise MeshError(f"line {no}: negative count")
        return n

    nv = count("vertices")
    verts = []
    for _ in range(nv):
        no, ln = take("vertex")
        parts = ln.split()
        try:
            if len(parts) != 2:
                raise ValueError
            verts.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise MeshError(f"line {no}: expected 'x y'") from None
    ne = count("elements")
    cells = []
    for _ in range(ne):
        no, ln = take("element")
        try:
            vals = [int(p) for p in ln.split()]
        except ValueError:
            raise MeshError(f"line {no}: non-integer element entry") from None
        if not vals or vals[0] < 3 or len(vals) != vals[0] + 1:
            raise MeshError(f"line {no}: expected 'c v1 ... vc' with c >= 3")
        if min(vals[1:]) < 0 or max(vals[1:]) >= nv:
            raise MeshError(f"line {no}: vertex index out of range")
        cells.append(vals[1:])
    for no, _ in it:
        raise MeshError(f"line {no}: trailing content")
    return require_valid(build_mesh(np.array(verts).reshape(-1, 2), cells))
