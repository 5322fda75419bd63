"""
Shortest path maps on triangulated complexes.

Proves:
 Group 1 — Flat complexes
   1.  Vertex and face queries equal Euclidean distances
   2.  Sources inside a face or on an edge
   3.  Queries agree with the brute-force corridor search, also around hubs above 2π
   4.  Ruffles on a flat vertex: everything, one edge, one direction

 Group 2 — Structure of the map
   5.  Entry checks pass: one entering side per edge, known face types, up to 30 faces
   6.  Boundary trees branch 2^n times on the doubling construction of 3n+2 faces
   7.  Manifold complexes give unbranched trees; rectangular ones never re-enter a face
   8.  Naive propagation stalls on the rotating disk
   9.  Region growth table
  10.  Every generated complex is CAT(0); comparison triangles hold along computed paths

 Group 3 — Errors
  11.  Region budget, unknown locations, points off their face, conflicting edge tags
"""

import math

import numpy as np
import pytest

from cat0.errors import BudgetExceeded, DomainError, UnknownLocation
from cat0.services import fixtures
from cat0.services.complex_core import EdgePoint, FacePoint, VertexPoint, cat0_sample_check, validate_cat0
from cat0.services.single_vertex import LinkPoint
from cat0.services.spm import (
    FACE_TYPES,
    branch_counts,
    brute_force_geodesic,
    build_spm,
    derive_last_step,
    naive_propagation,
    point_on_path,
    query_path,
    region_growth,
    ruffle,
    verify_entry_lemmas,
)


# ── Shared fixtures ───────────────────────────────────────────────────────────

def _lsm(fx, source=None, **kwargs):
    spm = build_spm(fx.complex, source or fx.source, **kwargs)
    return spm, derive_last_step(spm)


def _edge(c, a: str, b: str) -> str:
    return next(e.id for e in c.edges.values() if set(e.ends) == {a, b})


class _Walk:
    """A computed path as the comparison check expects it"""

    def __init__(self, cplx, path):
        self.cplx, self.path = cplx, path
        self.length = path.length

    def point_at(self, s: float):
        return point_on_path(self.cplx, self.path, s)


def _spm_oracle(c):
    def oracle(p, q):
        lsm = derive_last_step(build_spm(c, p))
        return _Walk(lsm.complex, query_path(lsm, q))
    return oracle


def _random(kind: str, seed: int, faces: int):
    return fixtures.random_cat0(seed, faces) if kind == "cat0" else fixtures.random_manifold(seed, faces)


# ═══════════════════════════════════════════════════════════════════════════════
# Group 1 — Flat complexes
# ═══════════════════════════════════════════════════════════════════════════════


def test_triangle_vertex_distances():
    _, lsm = _lsm(fixtures.triangle())
    assert lsm.distance("a") == 0.0
    assert query_path(lsm, "b").length == pytest.approx(1.0)
    assert query_path(lsm, "c").length == pytest.approx(1.0)


def test_plane4_queries():
    fx = fixtures.plane4()
    _, lsm = _lsm(fx)
    for i in range(4):
        assert query_path(lsm, f"c{i}").length == pytest.approx(math.sqrt(2))
    far = fx.queries["far"]
    s = fx.complex.faces["q2"].xy("s")
    path = query_path(lsm, far)
    assert path.length == pytest.approx(math.hypot(far.x - s[0], far.y - s[1]))
    assert path.length == pytest.approx(math.sqrt(0.68))
    assert path.vertices == []


def test_plane4_edge_query():
    fx = fixtures.plane4()
    _, lsm = _lsm(fx)
    e = _edge(fx.complex, "c0", "c1")
    # Midpoint of the right side of the square
    assert query_path(lsm, EdgePoint(e, 1.0)).length == pytest.approx(1.0)


def test_corridor_straight_line():
    fx = fixtures.corridor(3)
    _, lsm = _lsm(fx)
    path = query_path(lsm, "t3")
    assert path.length == pytest.approx(math.sqrt(10))
    assert path.vertices == []


def test_face_source():
    fx = fixtures.triangle()
    f = fx.complex.faces["f0"]
    centre = sum(f.xy(v) for v in ("a", "b", "c")) / 3
    _, lsm = _lsm(fx, FacePoint("f0", float(centre[0]), float(centre[1])))
    for v in ("a", "b", "c"):
        assert query_path(lsm, v).length == pytest.approx(1 / math.sqrt(3))


def test_edge_source():
    fx = fixtures.triangle()
    e = _edge(fx.complex, "a", "b")
    _, lsm = _lsm(fx, EdgePoint(e, 0.5))
    assert query_path(lsm, "c").length == pytest.approx(math.sqrt(3) / 2)
    assert query_path(lsm, "a").length == pytest.approx(0.5)


def _assert_matches_brute_force(fx):
    _, lsm = _lsm(fx)
    depth = len(fx.complex.faces)
    for v in sorted(fx.complex.vertices):
        ours = query_path(lsm, v).length
        ref = brute_force_geodesic(fx.complex, VertexPoint(fx.source), VertexPoint(v), max_faces=depth).length
        assert ours == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("name", ["plane4", "corridor:3", "random-manifold:0", "random-cat0:1",
                                  "random-rectangular:2"])
def test_matches_brute_force(name):
    _assert_matches_brute_force(fixtures.load_fixture(name))


@pytest.mark.parametrize("kind", ["cat0", "manifold"])
@pytest.mark.parametrize("seed", range(3))
def test_matches_brute_force_around_hubs(kind, seed):
    fx = _random(kind, seed, 20)
    assert any(n.startswith("h") for n in fx.complex.vertices)
    _assert_matches_brute_force(fx)


def test_point_on_path_follows_the_corridor():
    fx = fixtures.corridor(3)
    _, lsm = _lsm(fx)
    path = query_path(lsm, "t3")
    mid = point_on_path(lsm.complex, path, 0.5)
    # Halfway along the straight line from (0, 0) to (3, 1)
    ref = brute_force_geodesic(fx.complex, VertexPoint("b0"), mid, max_faces=6)
    assert ref.length == pytest.approx(math.sqrt(10) / 2)
    start = point_on_path(lsm.complex, path, 0.0)
    origin = brute_force_geodesic(fx.complex, VertexPoint("b0"), start, max_faces=6)
    assert origin.length == pytest.approx(0.0, abs=1e-12)


def test_path_model():
    _, lsm = _lsm(fixtures.corridor(2))
    out = query_path(lsm, "t2").to_model()
    assert out.length == pytest.approx(math.sqrt(5))


def test_ruffle_without_incoming_is_everything():
    c = fixtures.plane4().complex
    r = ruffle(c, "s", None)
    assert sorted(a.face for a in r.arcs) == ["q0", "q1", "q2", "q3"]
    assert len(r.edges) == 4


def test_ruffle_along_edge_is_opposite_edge():
    c = fixtures.plane4().complex
    r = ruffle(c, "s", LinkPoint(node=_edge(c, "s", "c0")))
    assert r.edges == [_edge(c, "s", "c2")]
    assert r.arcs == []


def test_ruffle_inside_face_is_one_direction():
    c = fixtures.plane4().complex
    r = ruffle(c, "s", LinkPoint(arc="q0", offset=math.pi / 4))
    (arc,) = r.arcs
    assert arc.face == "q2"
    assert arc.width == pytest.approx(0.0, abs=1e-9)
    assert arc.lo == pytest.approx(math.pi / 4)
    assert r.edges == []


# ═══════════════════════════════════════════════════════════════════════════════
# Group 2 — Structure of the map
# ═══════════════════════════════════════════════════════════════════════════════


@pytest.mark.parametrize("name", ["triangle", "plane4", "corridor:4", "random-manifold:3", "random-cat0:2"])
def test_entry_checks(name):
    fx = fixtures.load_fixture(name)
    spm = build_spm(fx.complex, fx.source)
    report = verify_entry_lemmas(spm)
    assert report["ok"], report
    lsm = derive_last_step(spm)
    assert {info.type for info in lsm.faces.values()} <= set(FACE_TYPES)


@pytest.mark.parametrize("kind", ["cat0", "manifold"])
@pytest.mark.parametrize("seed", range(5))
def test_entry_checks_up_to_30_faces(kind, seed):
    fx = _random(kind, seed, 30)
    report = verify_entry_lemmas(build_spm(fx.complex, fx.source))
    assert report["ok"], report


@pytest.mark.parametrize("n", range(9))
def test_exponential_branches(n):
    fx = fixtures.exponential(n)
    assert len(fx.complex.faces) == 3 * n + 2
    spm = build_spm(fx.complex, fx.source)
    assert spm.summary()["max_branches_per_tree"] == 2 ** n


@pytest.mark.parametrize("seed", range(5))
def test_manifold_trees_unbranched(seed):
    fx = fixtures.random_manifold(seed)
    counts = branch_counts(build_spm(fx.complex, fx.source))
    assert all(t["branches"] == 1 for t in counts["trees"].values())


@pytest.mark.parametrize("seed", range(5))
def test_rectangular_no_reentry(seed):
    fx = fixtures.random_rectangular(seed)
    counts = branch_counts(build_spm(fx.complex, fx.source))
    assert not any(t["repeats_in_branch"] for t in counts["trees"].values())


def test_incoming_cycle_stalls():
    fx = fixtures.incoming_cycle()
    _, lsm = _lsm(fx)
    naive = naive_propagation(lsm)
    assert naive.stalled
    faces = naive.cycle_faces
    assert faces
    assert all(f[0] in "ud" for f in faces)


def test_flat_square_does_not_stall():
    _, lsm = _lsm(fixtures.plane4())
    assert not naive_propagation(lsm).stalled


def test_region_growth_table():
    df = region_growth(sizes=(4, 8), seed=0)
    assert list(df["n"]) == [4, 8]
    assert set(df.columns) >= {"faces", "regions", "per_n2"}
    assert df.attrs["C"] > 0
    assert np.all(df["regions"] > 0)



@pytest.mark.parametrize("name", ["triangle", "plane4", "corridor:4", "incoming-cycle", "exponential:0",
                                  "exponential:1", "exponential:5", "exponential:8", "random-cat0:0",
                                  "random-manifold:1", "random-rectangular:2", "t5", "random-single-vertex:3"])
def test_generated_complexes_are_cat0(name):
    report = validate_cat0(fixtures.load_fixture(name).complex)
    assert report["ok"], report


@pytest.mark.parametrize("kind", ["cat0", "manifold"])
@pytest.mark.parametrize("seed", range(3))
def test_comparison_triangles_on_random_complexes(kind, seed):
    c = _random(kind, seed, 16).complex
    far = [v for v in c.vertices if v.startswith("v")][-1]
    assert cat0_sample_check(c, VertexPoint("v0"), VertexPoint("h0"), VertexPoint(far), _spm_oracle(c), samples=8)


# ═══════════════════════════════════════════════════════════════════════════════
# Group 3 — Errors
# ═══════════════════════════════════════════════════════════════════════════════


def test_region_cap():
    fx = fixtures.corridor(4)
    with pytest.raises(BudgetExceeded):
        build_spm(fx.complex, fx.source, region_cap=1)


def test_unknown_source():
    with pytest.raises(UnknownLocation):
        build_spm(fixtures.triangle().complex, "nowhere")


def test_unknown_query_face():
    _, lsm = _lsm(fixtures.triangle())
    with pytest.raises(UnknownLocation):
        query_path(lsm, FacePoint("nope", 0.0, 0.0))


def test_face_point_off_its_face():
    fx = fixtures.triangle()
    outside = FacePoint("f0", 50.0, 50.0)
    _, lsm = _lsm(fx)
    with pytest.raises(UnknownLocation):
        query_path(lsm, outside)
    with pytest.raises(UnknownLocation):
        build_spm(fx.complex, outside)
    with pytest.raises(UnknownLocation):
        brute_force_geodesic(fx.complex, VertexPoint("a"), outside)


def test_conflicting_edge_tags_are_refused():
    fx = fixtures.plane4()
    spm = build_spm(fx.complex, fx.source)
    e = next(e for e, tags in sorted(spm.edge_sources.items()) if tags)
    spm.edge_sources[e] = set(spm.edge_sources[e]) | {"vertex:zz"}
    with pytest.raises(DomainError):
        derive_last_step(spm)
    report = verify_entry_lemmas(spm)
    assert not report["ok"]
    assert e in report["edges"]


def test_brute_force_unknown_location():
    with pytest.raises(UnknownLocation):
        brute_force_geodesic(fixtures.triangle().complex, VertexPoint("a"), VertexPoint("zz"))
