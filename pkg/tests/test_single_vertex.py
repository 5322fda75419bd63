"""
Cone complexes on one vertex: link distances, geodesics, origin-in-hull, hull support.

Proves:
 Group 1 — Construction and directions
   1.  Cone angles outside (0, π] and short link cycles are rejected
   2.  Ray insertion splits cones and keeps total angle

 Group 2 — Link distance and geodesics
   3.  Five-cone complex: 160 degrees to axis 5, at least π to axis 4
   4.  Flat plane: adjacent unit rays are √2 apart with no crossings
   5.  Through-origin lengths add radii; a = b gives 0
   6.  Symmetry, triangle inequality and chord consistency on random complexes

 Group 3 — Origin in hull and G[P]
   7.  Five-quadrant points put O in the hull; one point does not
   8.  Five-cone points: O in hull with witness (p3, p4)
   9.  Book pages give a 3-leaf tree; a hexagon ring closes a cycle

 Group 4 — Hull edge support
  10.  Points on one ray support only that ray
  11.  Support equals the pairwise closure oracle on fixtures and random complexes
  12.  Support is monotone in the point set
"""

import math

import numpy as np
import pytest

from cat0.errors import MalformedInput, NotCat0, PairAtLeastPi, PointNotInComplex
from cat0.services import fixtures
from cat0.services.single_vertex import (
    AT_LEAST_PI,
    ORIGIN,
    PI,
    ConePoint,
    LinkPoint,
    build_gp,
    build_single_vertex,
    closure_oracle,
    geodesic,
    geodesic_point,
    hull_edge_support,
    link_distance,
    link_path,
    origin_in_hull,
)


# ── Shared fixtures ───────────────────────────────────────────────────────────

def _ring(k: int, angle: float, validate: bool = True):
    return build_single_vertex({
        "kind": "single_vertex",
        "rays": [f"h{i}" for i in range(k)],
        "cones": [{"id": f"k{i}", "rays": [f"h{i}", f"h{(i + 1) % k}"], "angle": angle} for i in range(k)],
    }, validate=validate)


def _at(c, cone: str, offset: float, radius: float = 1.0) -> ConePoint:
    return ConePoint(c.direction(LinkPoint(arc=cone, offset=offset)), radius)


def _on(ray: str, radius: float = 1.0) -> ConePoint:
    return ConePoint(LinkPoint(node=ray), radius)


FIG3 = fixtures.fig3()
FIG4 = fixtures.fig4()


# ═══════════════════════════════════════════════════════════════════════════════
# Group 1 — Construction and directions
# ═══════════════════════════════════════════════════════════════════════════════


def test_cone_angle_above_pi_rejected():
    with pytest.raises(MalformedInput):
        build_single_vertex({
            "kind": "single_vertex",
            "rays": ["x", "y"],
            "cones": [{"id": "k", "rays": ["x", "y"], "angle": 4.0}],
        })


def test_short_cycle_rejected():
    with pytest.raises(NotCat0):
        _ring(3, PI / 2)
    assert _ring(3, PI / 2, validate=False).link.total_weight() == pytest.approx(3 * PI / 2)


def test_unknown_cone_point():
    with pytest.raises(PointNotInComplex):
        FIG3.complex.direction(LinkPoint(arc="nope", offset=0.1))
    with pytest.raises(PointNotInComplex):
        FIG3.complex.direction(LinkPoint(arc="c12", offset=3.0))


def test_direction_snaps_to_rays():
    c = FIG3.complex
    assert c.direction(LinkPoint(arc="c12", offset=0.0)) == LinkPoint(node="A1")
    assert c.direction(LinkPoint(arc="c12", offset=PI / 2)) == LinkPoint(node="A2")


def test_with_rays_splits_cone():
    c = _ring(4, PI / 2)
    d = c.with_rays([("k0", 0.5), ("k2", 1.0)])
    assert len(d.cones) == 6
    assert "k0@0.5" in d.rays and "k2@1" in d.rays
    assert d.link.total_weight() == pytest.approx(2 * PI)
    assert d.original("k0#1") == ("k0", 0.5)


# ═══════════════════════════════════════════════════════════════════════════════
# Group 2 — Link distance and geodesics
# ═══════════════════════════════════════════════════════════════════════════════


def test_fig3_link_distances():
    c = FIG3.complex
    p1 = FIG3.points["p1"].direction
    d = link_distance(c, p1, LinkPoint(node="A5"))
    assert d == pytest.approx(math.radians(160), abs=1e-9)
    assert link_distance(c, p1, LinkPoint(node="A4")) is AT_LEAST_PI
    assert link_distance(c, p1, p1) == 0.0


def test_fig3_geodesic_through_origin():
    res = geodesic(FIG3.complex, FIG3.points["p1"], FIG3.queries["b"])
    assert res.through_origin
    assert res.length == 2.0
    assert res.crossings == []


def test_plane_adjacent_rays():
    c = _ring(4, PI / 2)
    res = geodesic(c, _on("h0"), _on("h1"))
    assert not res.through_origin
    assert res.length == pytest.approx(math.sqrt(2))
    assert res.crossings == []


def test_plane_crossing_midway():
    c = _ring(4, PI / 2)
    res = geodesic(c, _at(c, "k0", PI / 4), _at(c, "k1", PI / 4))
    assert res.length == pytest.approx(math.sqrt(2))
    ((ray, x),) = res.crossings
    assert ray == "h1"
    assert x == pytest.approx(math.sqrt(2) / 2)


def test_same_point_and_origin():
    c = FIG3.complex
    p = FIG3.points["p2"]
    assert geodesic(c, p, p).length == 0.0
    res = geodesic(c, ORIGIN, p)
    assert res.through_origin and res.length == pytest.approx(p.radius)


def test_geodesic_point_endpoints():
    c = FIG3.complex
    a, b = FIG3.points["p1"], FIG3.points["p4"]
    res = geodesic(c, a, b)
    assert not res.through_origin
    mid = geodesic_point(c, a, b, 0.5, res)
    assert geodesic(c, a, mid).length == pytest.approx(res.length / 2, abs=1e-9)
    assert geodesic(c, mid, b).length == pytest.approx(res.length / 2, abs=1e-9)


def _chord_ok(c, a, b, res):
    d = res.link_length
    pa = np.array([a.radius, 0.0])
    pb = b.radius * np.array([math.cos(d), math.sin(d)])
    crossed = link_path(c, a.direction, b.direction)
    assert [r for r, _ in crossed] == [r for r, _ in res.crossings]
    for (_, gamma), (_, x) in zip(crossed, res.crossings):
        assert x > 0
        q = x * np.array([math.cos(gamma), math.sin(gamma)])
        u, w = pb - pa, q - pa
        assert abs(u[0] * w[1] - u[1] * w[0]) < 1e-9 * max(1.0, np.linalg.norm(u))


@pytest.mark.parametrize("seed", range(10))
def test_random_geodesic_properties(seed):
    fx = fixtures.random_single_vertex(seed, points=4)
    c = fx.complex
    pts = list(fx.points.values())
    for a in pts:
        for b in pts:
            ab, ba = geodesic(c, a, b), geodesic(c, b, a)
            assert ab.length == pytest.approx(ba.length, abs=1e-12)
            far = a.direction != b.direction and link_distance(c, a.direction, b.direction) is AT_LEAST_PI
            assert ab.through_origin == far
            if ab.through_origin:
                assert ab.length == pytest.approx(a.radius + b.radius)
            elif ab.crossings:
                _chord_ok(c, a, b, ab)
            for m in pts:
                assert ab.length <= geodesic(c, a, m).length + geodesic(c, m, b).length + 1e-9


# ═══════════════════════════════════════════════════════════════════════════════
# Group 3 — Origin in hull and G[P]
# ═══════════════════════════════════════════════════════════════════════════════


def test_fig4_origin_in_hull():
    assert origin_in_hull(FIG4.complex, FIG4.points).in_hull


def test_single_point_origin_outside():
    test = origin_in_hull(FIG3.complex, {"p1": FIG3.points["p1"]})
    assert not test.in_hull


def test_fig3_origin_witness():
    test = origin_in_hull(FIG3.complex, FIG3.points)
    assert test.in_hull
    assert test.kind == "pair"
    assert test.witness == ("p3", "p4")


def test_origin_given():
    test = origin_in_hull(FIG3.complex, {"o": ORIGIN, "p1": FIG3.points["p1"]})
    assert test.in_hull and test.kind == "origin"


def test_gp_two_points_one_cone():
    c = FIG3.complex
    gp = build_gp(c, {"x": _at(c, "c12", 0.2), "y": _at(c, "c12", 0.9)})
    assert gp.graph.number_of_edges() == 1
    assert not gp.has_cycle
    ((cone, lo, hi),) = gp.fragments()
    assert cone == "c12"
    assert (lo, hi) == pytest.approx((0.2, 0.9))


def test_gp_book_is_tree():
    fx = fixtures.book3()
    gp = build_gp(fx.complex, fx.points)
    assert not gp.has_cycle
    assert gp.graph.number_of_edges() == 3
    assert gp.graph.degree("L") == 3


def test_gp_hexagon_cycle():
    c = _ring(6, PI / 3)
    pts = {f"x{i}": _at(c, f"k{2 * i}", PI / 6) for i in range(3)}
    gp = build_gp(c, pts)
    assert gp.has_cycle
    assert sum(hi - lo for _, lo, hi in gp.fragments()) == pytest.approx(2 * PI)
    test = origin_in_hull(c, pts)
    assert test.in_hull and test.kind == "cycle"


def test_gp_far_pair_raises():
    with pytest.raises(PairAtLeastPi):
        build_gp(FIG3.complex, FIG3.points)


# ═══════════════════════════════════════════════════════════════════════════════
# Group 4 — Hull edge support
# ═══════════════════════════════════════════════════════════════════════════════


def test_support_single_ray():
    assert hull_edge_support(FIG3.complex, [_on("A6", 1.0), _on("A6", 2.0)]) == {"A6"}


def test_fig3_support_contains_lemma_axes():
    b = hull_edge_support(FIG3.complex, FIG3.points)
    assert {"A3", "A4", "A5"} <= b
    assert b == closure_oracle(FIG3.complex, FIG3.points)


def test_fig4_support_matches_oracle():
    b = hull_edge_support(FIG4.complex, FIG4.points)
    assert b == closure_oracle(FIG4.complex, FIG4.points)
    assert {"V", "H"} <= b


@pytest.mark.parametrize("seed", range(15))
def test_random_support_matches_oracle(seed):
    fx = fixtures.random_single_vertex(seed)
    assert hull_edge_support(fx.complex, fx.points) == closure_oracle(fx.complex, fx.points)


@pytest.mark.parametrize("seed", range(10))
def test_support_monotone(seed):
    fx = fixtures.random_single_vertex(seed, points=6)
    labels = sorted(fx.points)
    small = {k: fx.points[k] for k in labels[:3]}
    assert hull_edge_support(fx.complex, small) <= hull_edge_support(fx.complex, fx.points)
