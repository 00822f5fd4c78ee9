import dataclasses
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wgmaxwell.mesh import (
    CellKind,
    MeshError,
    build_mesh,
    dump_mesh,
    generate_uniform,
    load_mesh,
    validate,
)

PI_SQUARE = (0.0, 0.0, math.pi, math.pi)


def brute_edges(elements):
    edges = set()
    for c in elements:
        c = list(c)
        for a, b in zip(c, c[1:] + c[:1]):
            edges.add((min(a, b), max(a, b)))
    return edges


def test_single_square():
    m = generate_uniform(1, PI_SQUARE, "square")
    assert (m.num_elements, m.num_edges, m.num_vertices) == (1, 4, 4)
    assert m.element_diameters[0] == pytest.approx(math.pi * math.sqrt(2), rel=1e-15)
    assert m.label_h == 1.0


def test_two_by_two_triangles_counts():
    m = generate_uniform(2, PI_SQUARE, CellKind.TRIANGLE)
    edges = brute_edges(m.elements)
    verts = {v for c in m.elements for v in c.tolist()}
    assert (len(verts), len(edges), m.num_elements) == (9, 16, 8)
    assert (m.num_vertices, m.num_edges) == (9, 16)
    assert len(verts) - len(edges) + m.num_elements == 1


def test_diameters_n8():
    m = generate_uniform(8, PI_SQUARE, "square")
    for t in range(m.num_elements):
        xy = m.element_vertices(t)
        brute = max(np.linalg.norm(p - q) for p, q in itertools.combinations(xy, 2))
        assert m.element_diameters[t] == pytest.approx(brute, rel=1e-14)
        assert brute == pytest.approx(math.pi * math.sqrt(2) / 8, rel=1e-14)
    assert m.mesh_size == pytest.approx(math.pi * math.sqrt(2) / 8)


@pytest.mark.parametrize("n,domain", [(0, PI_SQUARE), (-1, PI_SQUARE), (2, (0, 0, 0, 1)),
                                      (2, (1, 0, 0, 1))])
def test_generate_rejects_bad_input(n, domain):
    with pytest.raises(MeshError):
        generate_uniform(n, domain)


def test_triangle_split_direction():
    m = generate_uniform(1, (0, 0, 1, 1), "tri")
    # lower-left (0) to upper-right (3) diagonal is shared by both triangles
    assert (0, 3) in {tuple(e) for e in m.edges[m.interior_edges]}


@pytest.mark.parametrize("kind", ["square", "tri"])
def test_validate_passes(kind):
    rep = validate(generate_uniform(4, PI_SQUARE, kind))
    assert rep.ok, str(rep)


def test_validate_clockwise_element():
    m = generate_uniform(2, (0, 0, 1, 1), "square")
    cells = [c.tolist() for c in m.elements]
    cells[3] = cells[3][::-1]
    rep = validate(build_mesh(m.vertices, cells))
    assert not rep.ok
    assert rep.checks["orientation"] == [3]


def test_validate_dangling_edge():
    m = generate_uniform(2, (0, 0, 1, 1), "square")
    edges = np.vstack([m.edges, [[0, 8]]])
    owners = np.vstack([m.edge_elements, [[-1, -1]]])
    bad = dataclasses.replace(m, edges=edges, edge_elements=owners)
    rep = validate(bad)
    assert rep.checks["incidence"] == [m.num_edges]


def test_validate_nonconvex():
    verts = [(0, 0), (2, 0), (1, 0.2), (2, 2), (0, 2)]
    rep = validate(build_mesh(verts, [[0, 1, 2, 3, 4]]))
    assert rep.checks["convexity"] == [0]


def test_round_trip():
    m = generate_uniform(2, (0, 0, 1, 1), "square")
    m2 = load_mesh(dump_mesh(m))
    assert m2 == m
    np.testing.assert_array_equal(m2.edges, m.edges)
    np.testing.assert_array_equal(m2.element_diameters, m.element_diameters)


def test_load_single_triangle():
    m = load_mesh("wgmesh 1\nvertices 3\n0 0\n1 0\n0 1\nelements 1\n3 0 1 2\n")
    assert m.num_elements == 1
    assert len(m.boundary_edges) == 3


def test_load_index_out_of_range():
    with pytest.raises(MeshError, match="line 7"):
        load_mesh("wgmesh 1\nvertices 3\n0 0\n1 0\n0 1\nelements 1\n3 0 1 5\n")


@pytest.mark.parametrize("text,line", [
    ("wgmesh 2\n", 1),
    ("wgmesh 1\nvertices 2\n0 0\n1 x\n", 4),
    ("wgmesh 1\nvertices 1\n0 0\nelements 1\n4 0 0 0\n", 5),
])
def test_load_parse_errors_report_line(text, line):
    with pytest.raises(MeshError, match=f"line {line}"):
        load_mesh(text)


def test_load_rejects_clockwise():
    with pytest.raises(MeshError, match="orientation"):
        load_mesh("wgmesh 1\nvertices 3\n0 0\n1 0\n0 1\nelements 1\n3 0 2 1\n")


def test_load_general_polygons():
    text = """wgmesh 1
vertices 6
0 0
1 0
2 0.3
2 1
1 1.2
0 1
elements 2
5 0 1 4 5 0
4 1 2 3 4
"""
    # first element lists vertex 0 twice
    with pytest.raises(MeshError):
        load_mesh(text)
    m = load_mesh(text.replace("5 0 1 4 5 0", "4 0 1 4 5"))
    assert m.num_elements == 2
    assert len(m.interior_edges) == 1


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 12), kind=st.sampled_from(["square", "tri"]),
       x0=st.floats(-3, 3), y0=st.floats(-3, 3), w=st.floats(0.1, 5), h=st.floats(0.1, 5))
def test_mesh_properties(n, kind, x0, y0, w, h):
    m = generate_uniform(n, (x0, y0, x0 + w, y0 + h), kind)
    assert validate(m).ok
    assert m.element_areas.sum() == pytest.approx(w * h, rel=1e-12)
    assert m.num_vertices - m.num_edges + m.num_elements == 1
    # interior edges: normals from the two sides are opposite
    for e in m.interior_edges:
        left, right = m.edge_elements[e]
        nl = m.edge_normals[left][list(m.element_edges[left]).index(e)]
        nr = m.edge_normals[right][list(m.element_edges[right]).index(e)]
        np.testing.assert_allclose(nl, -nr, atol=1e-14)


@pytest.mark.parametrize("kind", ["square", "tri"])
def test_refinement_quarters_area(kind):
    coarse = generate_uniform(3, PI_SQUARE, kind)
    fine = generate_uniform(6, PI_SQUARE, kind)
    np.testing.assert_allclose(fine.element_areas, coarse.element_areas[0] / 4, rtol=1e-12)
