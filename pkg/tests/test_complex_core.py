"""
Polyhedral complexes of triangles: construction, links, validation, unfolding.

Proves:
 Group 1 — Construction
   1.  Single triangle and two glued triangles have the expected counts
   2.  Unknown edge ids, impossible side lengths and disconnected input are rejected
   3.  Rectangles are split along one diagonal with right angles preserved
   4.  Interior angles of every face sum to π
   5.  Face points must lie in their triangle

 Group 2 — Link graphs and the link condition
   6.  Triangle link is one arc of weight π/3
   7.  Flat vertex has a single link cycle of weight 2π
   8.  T5 link is the Petersen graph with girth weight 5π/2
   9.  validate_cat0 accepts T5 and tree-shaped cones, flags the three-quarter cone
  10.  Random complexes have hubs whose link cycles exceed 2π, and pass validation
  11.  shortest_link_cycle agrees with exhaustive enumeration on random multigraphs

 Group 3 — Unfolding
  12.  Single face is placed by the identity
  13.  Glued right triangles land on opposite sides of the hypotenuse
  14.  A five-face fan turns by its angle sum
  15.  Unfolding preserves intra-face distances; bad adjacency raises NotAdjacent

 Group 4 — CAT(0) sampling
  16.  Euclidean triangle passes with equality
  17.  Triangle in the five-cone complex passes; three-quarter cone fails
"""

import math
from dataclasses import dataclass
from itertools import combinations

import networkx as nx
import numpy as np
import pytest

from cat0.errors import (
    Disconnected,
    MalformedInput,
    NotAdjacent,
    PointNotInComplex,
    TriangleInequality,
    UnknownVertex,
)
from cat0.services import fixtures
from cat0.services.complex_core import (
    ComplexBuilder,
    EdgePoint,
    FacePoint,
    build_complex,
    cat0_sample_check,
    link_graph,
    shortest_link_cycle,
    unfold,
    validate_cat0,
)
from cat0.services.single_vertex import build_single_vertex, geodesic
from cat0.services.treespace import build_t5


# ── Shared fixtures ───────────────────────────────────────────────────────────

def _triangle_description():
    return {
        "kind": "triangulated",
        "vertices": ["a", "b", "c"],
        "edges": [
            {"id": "ab", "ends": ["a", "b"], "length": 1.0},
            {"id": "bc", "ends": ["b", "c"], "length": 1.0},
            {"id": "ca", "ends": ["c", "a"], "length": 1.0},
        ],
        "faces": [{"id": "f0", "edges": ["ab", "bc", "ca"]}],
    }


def _two_right_triangles():
    """Unit right triangles on either side of the hypotenuse a-c"""
    b = ComplexBuilder()
    b.flat_face("f0", {"a": (0.0, 0.0), "c": (1.0, 1.0), "b": (1.0, 0.0)})
    b.flat_face("f1", {"a": (0.0, 0.0), "c": (1.0, 1.0), "d": (0.0, 1.0)})
    return b, build_complex(b.description())


def _fan(k: int = 5):
    """k faces around o, 60 degrees each, spokes of growing length"""
    b = ComplexBuilder()
    pos = {f"a{i}": ((1 + 0.1 * i) * math.cos(i * math.pi / 3), (1 + 0.1 * i) * math.sin(i * math.pi / 3))
           for i in range(k + 1)}
    for i in range(k):
        b.flat_face(f"f{i}", {"o": (0.0, 0.0), f"a{i}": pos[f"a{i}"], f"a{i + 1}": pos[f"a{i + 1}"]})
    return b, build_complex(b.description())


@dataclass
class _Segment:
    a: np.ndarray
    b: np.ndarray

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.b - self.a))

    def point_at(self, s: float) -> np.ndarray:
        return self.a + s * (self.b - self.a)


# ═══════════════════════════════════════════════════════════════════════════════
# Group 1 — Construction
# ═══════════════════════════════════════════════════════════════════════════════


def test_single_triangle_counts():
    c = build_complex(_triangle_description())
    assert (len(c.vertices), len(c.edges), len(c.faces)) == (3, 3, 1)
    assert c.edge_faces["ab"] == ["f0"]


def test_glued_triangles_counts():
    _, c = _two_right_triangles()
    assert (len(c.vertices), len(c.edges), len(c.faces)) == (4, 5, 2)
    hyp = next(e for e, fs in c.edge_faces.items() if len(fs) == 2)
    assert set(c.edges[hyp].ends) == {"a", "c"}


def test_unknown_edge_is_malformed():
    desc = _triangle_description()
    desc["faces"][0]["edges"] = ["ab", "bc", "zz"]
    with pytest.raises(MalformedInput):
        build_complex(desc)


def test_triangle_inequality():
    desc = _triangle_description()
    desc["edges"][2]["length"] = 3.0
    with pytest.raises(TriangleInequality):
        build_complex(desc)


def test_disconnected():
    desc = _triangle_description()
    desc["vertices"] += ["x", "y", "z"]
    desc["edges"] += [
        {"id": "xy", "ends": ["x", "y"], "length": 1.0},
        {"id": "yz", "ends": ["y", "z"], "length": 1.0},
        {"id": "zx", "ends": ["z", "x"], "length": 1.0},
    ]
    desc["faces"].append({"id": "f1", "edges": ["xy", "yz", "zx"]})
    with pytest.raises(Disconnected):
        build_complex(desc)


def test_schema_violation_is_malformed():
    desc = _triangle_description()
    desc["edges"][0]["length"] = -1.0
    with pytest.raises(MalformedInput):
        build_complex(desc)


def test_rectangle_is_split_along_diagonal():
    desc = {
        "kind": "rectangular",
        "vertices": ["p", "q", "r", "s"],
        "edges": [
            {"id": "pq", "ends": ["p", "q"]},
            {"id": "qr", "ends": ["q", "r"]},
            {"id": "rs", "ends": ["r", "s"]},
            {"id": "sp", "ends": ["s", "p"]},
        ],
        "rects": [{"id": "r0", "edges": ["pq", "qr", "rs", "sp"], "width": 2.0, "height": 1.0}],
    }
    c = build_complex(desc)
    assert c.is_rectangular
    assert set(c.faces) == {"r0/a", "r0/b"}
    assert c.edges["r0/d"].length == pytest.approx(math.sqrt(5))
    assert sorted(c.edge_faces["r0/d"]) == ["r0/a", "r0/b"]
    # p and r are the diagonal's ends; q and s keep their right angles
    assert c.angle("r0/a", "q") == pytest.approx(math.pi / 2)
    assert c.angle("r0/b", "s") == pytest.approx(math.pi / 2)
    total_p = sum(c.angle(f, "p") for f in c.vertex_faces["p"])
    assert total_p == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("seed", range(5))
def test_face_angles_sum_to_pi(seed):
    fx = fixtures.random_cat0(seed, faces=30)
    c = fx.complex
    for fid, f in c.faces.items():
        total = sum(c.angle(fid, v) for v in f.vertices)
        assert abs(total - math.pi) < 1e-12



def test_face_point_must_lie_in_its_triangle():
    c = build_complex(_triangle_description())
    ((fid, xy),) = c.locate(FacePoint("f0", 0.5, 0.2))
    assert fid == "f0" and np.allclose(xy, [0.5, 0.2])
    # Corners and edges count as inside
    assert c.locate(FacePoint("f0", 0.0, 0.0))
    assert c.locate(FacePoint("f0", 0.5, 0.0))
    for x, y in ((50.0, 50.0), (-0.1, 0.0), (0.5, -1e-3), (0.5, 0.9)):
        with pytest.raises(PointNotInComplex):
            c.locate(FacePoint("f0", x, y))
    with pytest.raises(PointNotInComplex):
        c.locate(EdgePoint("ab", 1.5))


# ═══════════════════════════════════════════════════════════════════════════════
# Group 2 — Link graphs and the link condition
# ═══════════════════════════════════════════════════════════════════════════════


def test_triangle_link_single_arc():
    c = build_complex(_triangle_description())
    link = link_graph(c, "a")
    assert link.graph.number_of_nodes() == 2
    assert list(link.arcs) == ["f0"]
    assert link.weight("f0") == pytest.approx(math.pi / 3)
    assert shortest_link_cycle(link) is None


def test_unknown_vertex():
    c = build_complex(_triangle_description())
    with pytest.raises(UnknownVertex):
        link_graph(c, "nowhere")


def test_flat_vertex_link_cycle():
    c = fixtures.plane4().complex
    cycle = shortest_link_cycle(c.link("s"))
    assert cycle.length == pytest.approx(2 * math.pi)
    assert sorted(cycle.arcs) == ["q0", "q1", "q2", "q3"]
    assert validate_cat0(c)["ok"]


def test_t5_link_is_petersen():
    c = build_t5()
    g = c.link.graph
    assert g.number_of_nodes() == 10
    assert g.number_of_edges() == 15
    assert all(d == 3 for _, d in g.degree())
    assert nx.is_isomorphic(nx.Graph(g), nx.petersen_graph())
    assert all(w == pytest.approx(math.pi / 2) for _, _, w in c.link.arcs.values())
    assert shortest_link_cycle(c.link).length == pytest.approx(5 * math.pi / 2)


def test_validate_t5_ok():
    report = validate_cat0(build_t5())
    assert report == {"ok": True, "violations": []}


def test_validate_three_quarter_violation():
    c = fixtures.three_quarter().complex
    report = validate_cat0(c)
    assert not report["ok"]
    (v,) = report["violations"]
    assert v["kind"] == "short_link_cycle"
    assert v["length"] == pytest.approx(3 * math.pi / 2)
    assert sorted(v["cycle"]) == ["q0", "q1", "q2"]


def test_validate_tree_shaped_cones_ok():
    c = build_single_vertex({
        "kind": "single_vertex",
        "rays": ["x", "y", "z", "w"],
        "cones": [
            {"id": "k0", "rays": ["x", "y"], "angle": 0.5},
            {"id": "k1", "rays": ["x", "z"], "angle": 1.0},
            {"id": "k2", "rays": ["x", "w"], "angle": 3.0},
        ],
    })
    assert shortest_link_cycle(c.link) is None
    assert validate_cat0(c)["ok"]


@pytest.mark.parametrize("seed", range(5))
def test_random_complexes_have_hubs(seed):
    for fx in (fixtures.random_cat0(seed, faces=30), fixtures.random_manifold(seed, 30)):
        c = fx.complex
        cycles = [shortest_link_cycle(c.link(v)) for v in c.vertices]
        cycles = [cy for cy in cycles if cy is not None]
        assert cycles
        assert all(cy.length > 2 * math.pi for cy in cycles)
        assert validate_cat0(c)["ok"]
    assert fixtures.random_manifold(seed, 30).complex.is_manifold()


def _exhaustive_girth(g: nx.MultiGraph) -> float:
    best = math.inf
    simple = {}
    for u, v, w in g.edges(data="weight"):
        simple.setdefault(frozenset((u, v)), []).append(w)
    for ws in simple.values():
        if len(ws) >= 2:
            a, b = sorted(ws)[:2]
            best = min(best, a + b)
    h = nx.Graph()
    h.add_edges_from(tuple(k) for k in simple)
    for cycle in nx.simple_cycles(h):
        if len(cycle) < 3:
            continue
        total = sum(min(simple[frozenset((a, b))]) for a, b in zip(cycle, cycle[1:] + cycle[:1]))
        best = min(best, total)
    return best


@pytest.mark.parametrize("seed", range(20))
def test_shortest_cycle_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 8))
    g = nx.MultiGraph()
    g.add_nodes_from(range(n))
    for k in range(int(rng.integers(n, 2 * n + 2))):
        u, v = rng.choice(n, size=2, replace=False)
        g.add_edge(int(u), int(v), key=f"a{k}", weight=float(rng.uniform(0.1, 3.0)))
    cycle = shortest_link_cycle(g)
    expected = _exhaustive_girth(g)
    if math.isinf(expected):
        assert cycle is None
    else:
        assert cycle.length == pytest.approx(expected, abs=1e-12)
        assert sum(g.edges[e]["weight"] for e in _cycle_edges(g, cycle)) == pytest.approx(cycle.length)


def _cycle_edges(g, cycle):
    keys = set(cycle.arcs)
    return [(u, v, k) for u, v, k in g.edges(keys=True) if k in keys]


# ═══════════════════════════════════════════════════════════════════════════════
# Group 3 — Unfolding
# ═══════════════════════════════════════════════════════════════════════════════


def test_single_face_identity():
    c = build_complex(_triangle_description())
    layout = unfold(c, ["f0"], [])
    a, b = layout.maps[0]
    assert np.allclose(a, np.eye(2)) and np.allclose(b, 0)


def test_glued_right_triangles_reflect():
    builder, c = _two_right_triangles()
    hyp = builder.edges[frozenset(("a", "c"))]["id"]
    layout = unfold(c, ["f0", "f1"], [hyp])
    for v in ("a", "c"):
        assert np.allclose(layout.vertex_image(c, 0, v), layout.vertex_image(c, 1, v), atol=1e-12)
    pa, pc = layout.vertex_image(c, 0, "a"), layout.vertex_image(c, 0, "c")
    pb, pd = layout.vertex_image(c, 0, "b"), layout.vertex_image(c, 1, "d")

    def side(x):
        d = pc - pa
        return d[0] * (x[1] - pa[1]) - d[1] * (x[0] - pa[0])

    assert side(pb) * side(pd) < 0
    # The unfolded pair is the unit square
    assert np.linalg.norm(pb - pd) == pytest.approx(math.sqrt(2))


def test_fan_turns_by_angle_sum():
    builder, c = _fan(5)
    spokes = [builder.edges[frozenset(("o", f"a{i}"))]["id"] for i in range(1, 5)]
    layout = unfold(c, [f"f{i}" for i in range(5)], spokes)
    total = sum(c.angle(f"f{i}", "o") for i in range(5))
    assert total == pytest.approx(5 * math.pi / 3)
    o = layout.vertex_image(c, 0, "o")
    first = layout.vertex_image(c, 0, "a0") - o
    last = layout.vertex_image(c, 4, "a5") - o
    turn = math.atan2(first[0] * last[1] - first[1] * last[0], first @ last) % (2 * math.pi)
    assert turn == pytest.approx(total)


def test_unfold_preserves_face_distances():
    builder, c = _fan(5)
    spokes = [builder.edges[frozenset(("o", f"a{i}"))]["id"] for i in range(1, 5)]
    layout = unfold(c, [f"f{i}" for i in range(5)], spokes)
    for i in range(5):
        f = c.faces[f"f{i}"]
        for u, v in combinations(f.vertices, 2):
            e = next(e for e in f.edges if set(c.edges[e].ends) == {u, v})
            d = np.linalg.norm(layout.vertex_image(c, i, u) - layout.vertex_image(c, i, v))
            assert d == pytest.approx(c.edges[e].length, rel=1e-12)


def test_unfold_not_adjacent():
    builder, c = _fan(5)
    far = builder.edges[frozenset(("o", "a3"))]["id"]
    with pytest.raises(NotAdjacent):
        unfold(c, ["f0", "f1"], [far])
    with pytest.raises(NotAdjacent):
        unfold(c, ["f0", "f1"], [])


# ═══════════════════════════════════════════════════════════════════════════════
# Group 4 — CAT(0) sampling
# ═══════════════════════════════════════════════════════════════════════════════


def test_sample_check_euclidean_triangle():
    a, b, c = np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([0.3, 0.8])
    assert cat0_sample_check(None, a, b, c, _Segment)


def test_sample_check_five_cone_complex():
    fx = fixtures.fig3()
    c = fx.complex
    oracle = lambda p, q: geodesic(c, p, q)
    assert cat0_sample_check(c, fx.points["p1"], fx.points["p3"], fx.queries["b"], oracle)


def test_sample_check_fails_on_three_quarter_cone():
    fx = fixtures.three_quarter()
    c = fx.complex
    oracle = lambda p, q: geodesic(c, p, q)
    a, b, d = fx.points["a"], fx.points["b"], fx.points["c"]
    assert not cat0_sample_check(c, a, b, d, oracle)


@pytest.mark.parametrize("seed", range(5))
def test_sample_check_random_cones(seed):
    fx = fixtures.random_single_vertex(seed, points=3)
    c = fx.complex
    oracle = lambda p, q: geodesic(c, p, q)
    a, b, d = (fx.points[f"p{i}"] for i in range(3))
    assert cat0_sample_check(c, a, b, d, oracle, samples=32)
