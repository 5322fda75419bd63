"""
Fixture complexes
Single-vertex examples with their point sets, flat and random multi-face complexes, and generator wrappers
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Union

import numpy as np

from cat0.errors import MalformedInput, NotCat0
from cat0.models import (
    ConeAnglePointIn,
    EdgePointIn,
    FacePointIn,
    FixtureOut,
    OriginIn,
    RayPointIn,
    SingleVertexComplexIn,
    VertexPointIn,
    parse_fixture,
    parse_point,
)
from cat0.services.complex_core import (
    ComplexBuilder,
    EdgePoint,
    FacePoint,
    PolyComplex2D,
    VertexPoint,
    build_complex,
    describe,
)
from cat0.services.single_vertex import (
    PI,
    ConePoint,
    SingleVertexComplex,
    build_single_vertex,
    cone_point,
    cube_point,
)

logger = logging.getLogger(__name__)

DEG = PI / 180


@dataclass
class Fixture:
    name: str
    description: dict
    complex: Union[PolyComplex2D, SingleVertexComplex]
    points: Dict[str, object] = field(default_factory=dict)
    queries: Dict[str, object] = field(default_factory=dict)
    source: Optional[str] = None

    @property
    def single_vertex(self) -> bool:
        return isinstance(self.complex, SingleVertexComplex)

    def to_model(self) -> FixtureOut:
        return FixtureOut(
            complex=self.description,
            points={k: point_model(p) for k, p in self.points.items()},
            queries={k: point_model(p) for k, p in self.queries.items()},
            source=self.source,
        )


def describe_single_vertex(c: SingleVertexComplex) -> dict:
    return {
        "kind": "single_vertex",
        "rays": list(c.rays),
        "cones": [{"id": k.id, "rays": list(k.rays), "angle": k.angle} for k in c.cones.values()],
    }


def point_model(p):
    if isinstance(p, ConePoint):
        if p.is_origin:
            return OriginIn(origin=True)
        if p.direction.node is not None:
            return RayPointIn(ray=p.direction.node, radius=p.radius)
        return ConeAnglePointIn(cone=p.direction.arc, angle_from_first=p.direction.offset, radius=p.radius)
    if isinstance(p, FacePoint):
        return FacePointIn(face=p.face, x=p.x, y=p.y)
    if isinstance(p, EdgePoint):
        return EdgePointIn(edge=p.edge, t=p.t)
    if isinstance(p, VertexPoint):
        return VertexPointIn(vertex=p.vertex)
    raise MalformedInput(f"Cannot serialize point {p!r}")


def point_from_model(c, model):
    """Point schema -> ConePoint on a single-vertex complex, Location otherwise"""
    if not hasattr(model, "model_dump"):
        model = parse_point(model)
    if isinstance(c, SingleVertexComplex):
        return cone_point(c, model)
    if isinstance(model, FacePointIn):
        return FacePoint(model.face, model.x, model.y)
    if isinstance(model, EdgePointIn):
        return EdgePoint(model.edge, model.t)
    if isinstance(model, VertexPointIn):
        return VertexPoint(model.vertex)
    raise MalformedInput(f"Point {model!r} needs a single-vertex complex")


def build_any(description, validate: bool = True):
    """Build either kind of complex from a description"""
    kind = description.get("kind") if isinstance(description, dict) else None
    if kind == "single_vertex" or isinstance(description, SingleVertexComplexIn):
        return build_single_vertex(description, validate=validate)
    return build_complex(description)


def fixture_from_json(data, name: str = "input", validate: bool = True) -> Fixture:
    model = parse_fixture(data)
    description = model.complex.model_dump(exclude_none=True)
    c = build_any(description, validate)
    return Fixture(
        name,
        description,
        c,
        {k: point_from_model(c, p) for k, p in model.points.items()},
        {k: point_from_model(c, p) for k, p in model.queries.items()},
        model.source,
    )


def _single_vertex(name: str, rays, cones, validate: bool = True) -> Fixture:
    description = {
        "kind": "single_vertex",
        "rays": list(rays),
        "cones": [{"id": cid, "rays": [a, b], "angle": angle} for cid, a, b, angle in cones],
    }
    return Fixture(name, description, build_single_vertex(description, validate=validate))


def _angle_point(c: SingleVertexComplex, cone: str, degrees: float, radius: float = 1.0) -> ConePoint:
    return cone_point(c, ConeAnglePointIn(cone=cone, angle_from_first=degrees * DEG, radius=radius))


def _ray_point(c: SingleVertexComplex, ray: str, radius: float = 1.0) -> ConePoint:
    return cone_point(c, RayPointIn(ray=ray, radius=radius))


# ── Single-vertex fixtures ──

def fig3() -> Fixture:
    """
    Five-cone cycle A1..A5 of total angle 460 degrees with pendant cones on A3, A4, A5.
    The link distance from p1 to axis A5 is 160 degrees, to axis A4 200 degrees,
    and p3 and p4 sit exactly 180 degrees apart.
    """
    fx = _single_vertex("fig3", [f"A{i}" for i in range(1, 9)], [
        ("c12", "A1", "A2", 90 * DEG),
        ("c23", "A2", "A3", 90 * DEG),
        ("c34", "A3", "A4", 80 * DEG),
        ("c45", "A4", "A5", 100 * DEG),
        ("c51", "A5", "A1", 100 * DEG),
        ("c36", "A3", "A6", 90 * DEG),
        ("c47", "A4", "A7", 90 * DEG),
        ("c58", "A5", "A8", 90 * DEG),
    ])
    c = fx.complex
    fx.points = {
        "p1": _angle_point(c, "c12", 60),
        "p2": _angle_point(c, "c36", 45),
        "p3": _angle_point(c, "c47", 65),
        "p4": _angle_point(c, "c58", 15),
    }
    fx.queries = {"a": _ray_point(c, "A3"), "b": _ray_point(c, "A4"), "c": _ray_point(c, "A5")}
    return fx


def fig4() -> Fixture:
    """Five quadrants: S1, S2, S5 share ray V and S3, S4, S5 share ray H; p lies in S5"""
    fx = _single_vertex("fig4", ["V", "H", "X1", "X2", "X3", "X4"], [
        ("S1", "V", "X1", PI / 2),
        ("S2", "V", "X2", PI / 2),
        ("S3", "H", "X3", PI / 2),
        ("S4", "H", "X4", PI / 2),
        ("S5", "V", "H", PI / 2),
    ])
    c = fx.complex
    half = Fraction(1, 2)
    fx.points = {f"p{i}": cube_point(c, f"S{i}", half, 1) for i in range(1, 5)}
    fx.queries = {"p": cube_point(c, "S5", Fraction(1, 5), Fraction(1, 4))}
    return fx


def book3() -> Fixture:
    """Three half-planes on one spine, one point per page"""
    fx = _single_vertex("book3", ["L", "R"], [(f"P{i}", "L", "R", PI) for i in range(1, 4)])
    c = fx.complex
    fx.points = {f"p{i}": _angle_point(c, f"P{i}", 60, r) for i, r in ((1, 1.0), (2, 2.0), (3, 1.5))}
    return fx


def three_quarter() -> Fixture:
    """Three quarter-planes around O: link cycle 3π/2, not CAT(0)"""
    fx = _single_vertex("three_quarter", ["r0", "r1", "r2"], [
        ("q0", "r0", "r1", PI / 2),
        ("q1", "r1", "r2", PI / 2),
        ("q2", "r2", "r0", PI / 2),
    ], validate=False)
    c = fx.complex
    fx.points = {"a": _angle_point(c, "q0", 45), "b": _angle_point(c, "q1", 45), "c": _angle_point(c, "q2", 45)}
    return fx


def t5() -> Fixture:
    from cat0.services.treespace import build_t5

    c = build_t5()
    return Fixture("t5", describe_single_vertex(c), c)


def random_single_vertex(seed: int, rays: Optional[int] = None, points: Optional[int] = None) -> Fixture:
    """Random tree of cones plus extra cones that keep every link cycle at least 2π"""
    rng = np.random.default_rng(seed)
    k = int(rays or rng.integers(3, 21))
    names = [f"r{i}" for i in range(k)]
    cones = []
    for i in range(1, k):
        cones.append((f"c{i}", names[int(rng.integers(0, i))], names[i], float(rng.uniform(0.3, PI))))
    for j in range(int(rng.integers(0, 4))):
        a, b = rng.choice(k, size=2, replace=False)
        trial = cones + [(f"x{j}", names[int(a)], names[int(b)], float(rng.uniform(0.3, PI)))]
        try:
            _single_vertex("trial", names, trial)
        except NotCat0:
            continue
        cones = trial
    fx = _single_vertex(f"random_single_vertex:{seed}", names, cones)
    c = fx.complex
    ids = sorted(c.cones)
    for i in range(int(points or rng.integers(2, 11))):
        cone = c.cones[ids[int(rng.integers(0, len(ids)))]]
        off = float(rng.uniform(0.05, 0.95)) * cone.angle
        fx.points[f"p{i}"] = _angle_point(c, cone.id, off / DEG, float(rng.uniform(0.5, 2.0)))
    logger.debug(f"Random single-vertex complex {seed}: {k} rays, {len(cones)} cones")
    return fx


# ── Multi-face fixtures ──

def _from_builder(name: str, b: ComplexBuilder, source: Optional[str]) -> Fixture:
    description = b.description()
    return Fixture(name, description, build_complex(description), source=source)


def triangle() -> Fixture:
    b = ComplexBuilder()
    b.flat_face("f0", {"a": (0.0, 0.0), "b": (1.0, 0.0), "c": (0.5, math.sqrt(3) / 2)})
    return _from_builder("triangle", b, "a")


def plane4() -> Fixture:
    """Square [-1, 1]^2 as four triangles around s"""
    corners = [(1.0, -1.0), (1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0)]
    b = ComplexBuilder()
    for i in range(4):
        j = (i + 1) % 4
        b.flat_face(f"q{i}", {"s": (0.0, 0.0), f"c{i}": corners[i], f"c{j}": corners[j]})
    fx = _from_builder("plane4", b, "s")
    fx.queries = {"far": FacePoint("q2", *_face_xy(fx.complex, "q2", {"s": 0.2, "c2": 0.5, "c3": 0.3}))}
    return fx


def _face_xy(c: PolyComplex2D, fid: str, weights: Dict[str, float]):
    f = c.faces[fid]
    xy = sum(w * f.xy(v) for v, w in weights.items())
    return float(xy[0]), float(xy[1])


def _rect_description(rects, lengths) -> dict:
    vertices = []
    for a, b in lengths:
        for v in (a, b):
            if v not in vertices:
                vertices.append(v)
    edges = [{"id": f"{a}-{b}", "ends": [a, b], "length": length} for (a, b), length in lengths.items()]
    return {"kind": "rectangular", "vertices": vertices, "edges": edges, "rects": rects}


def _rect(rid: str, corners, width: float, height: float, lengths: dict) -> dict:
    """Rectangle on corners (bottom-left, bottom-right, top-right, top-left)"""
    bl, br, tr, tl = corners
    sides = []
    for (a, b), length in (((bl, br), width), ((br, tr), height), ((tl, tr), width), ((bl, tl), height)):
        key = (a, b) if (b, a) not in lengths else (b, a)
        lengths.setdefault(key, length)
        sides.append(f"{key[0]}-{key[1]}")
    return {"id": rid, "edges": sides, "width": width, "height": height}


def corridor(k: int) -> Fixture:
    """k unit squares in a row; source at the bottom-left corner"""
    lengths: dict = {}
    rects = [_rect(f"r{i}", (f"b{i}", f"b{i + 1}", f"t{i + 1}", f"t{i}"), 1.0, 1.0, lengths) for i in range(k)]
    description = _rect_description(rects, lengths)
    fx = Fixture(f"corridor:{k}", description, build_complex(description), source="b0")
    fx.queries = {"far": VertexPoint(f"t{k}")}
    return fx


def random_rectangular(seed: int, k: int = 4, fins: int = 2) -> Fixture:
    """Staircase of rectangles with random widths and heights, plus fins glued on random edges"""
    rng = np.random.default_rng(seed)
    widths = rng.uniform(0.5, 2.0, size=k)
    rows = [k]
    while len(rows) < k and rows[-1] > 1:
        rows.append(int(rng.integers(1, rows[-1] + 1)))
    heights = rng.uniform(0.5, 2.0, size=len(rows))
    lengths: dict = {}
    rects = []
    for i, n in enumerate(rows):
        for j in range(n):
            rects.append(_rect(f"r{i}_{j}", (f"x{i}_{j}", f"x{i}_{j + 1}", f"x{i + 1}_{j + 1}", f"x{i + 1}_{j}"),
                               float(widths[j]), float(heights[i]), lengths))
    for n in range(fins):
        (a, b), length = list(lengths.items())[int(rng.integers(0, len(lengths)))]
        rects.append(_rect(f"fin{n}", (a, b, f"fin{n}b", f"fin{n}a"), length,
                           float(rng.uniform(0.5, 2.0)), lengths))
    description = _rect_description(rects, lengths)
    return Fixture(f"random_rectangular:{seed}", description, build_complex(description), source="x0_0")


def _flap_lengths(rng, base: float):
    scale = max(1.0, 0.8 * base)
    while True:
        a, b = scale * rng.uniform(0.6, 1.6, size=2)
        if a + b > 1.15 * base and abs(a - b) < 0.85 * base:
            return float(a), float(b)


def _hub_angles(rng, k: int) -> List[float]:
    """k angles in [0.6, π - 0.2] summing to more than 2π"""
    while True:
        total = 2 * PI + float(rng.uniform(0.05, 0.8))
        w = rng.uniform(0.8, 1.2, size=k)
        angles = total * w / w.sum()
        if angles.min() >= 0.6 and angles.max() <= PI - 0.2:
            return [float(a) for a in angles]


def _glue_fan(b: ComplexBuilder, rng, hub: str, rim: List[str], first: int) -> List[frozenset]:
    """
    Closed fan of triangles around hub through the rim vertices in order.
    The angles at the hub sum past 2π. If rim[0]-rim[1] is already an edge the fan is glued along it.
    Returns the rim edges.
    """
    k = len(rim)
    angles = _hub_angles(rng, k)
    key = frozenset(rim[:2])
    if key in b.edges:
        r = b.edges[key]["length"] / (2 * math.sin(angles[0] / 2))
        spokes = [r, r] + [float(x) for x in rng.uniform(0.7, 1.4, size=k - 2)]
    else:
        spokes = [float(x) for x in rng.uniform(0.7, 1.4, size=k)]
    for v, r in zip(rim, spokes):
        b.edge(hub, v, r)
    out = []
    for i in range(k):
        j = (i + 1) % k
        ri, rj = spokes[i], spokes[j]
        b.edge(rim[i], rim[j], math.sqrt(ri * ri + rj * rj - 2 * ri * rj * math.cos(angles[i])))
        b.face(f"f{first + i}", hub, rim[i], rim[j])
        out.append(frozenset((rim[i], rim[j])))
    return out


def _random_glued(name: str, seed: int, faces: int, boundary_only: bool) -> Fixture:
    """
    Closed fans around hub vertices, each of total angle above 2π, and single triangles,
    glued one at a time along an existing edge. The first piece after the seed triangle is a fan
    whenever there is room for one.
    """
    rng = np.random.default_rng(seed)
    b = ComplexBuilder()
    b.flat_face("f0", {"v0": (0.0, 0.0), "v1": (1.0, 0.0), "v2": (0.4, 0.9)})
    use = {frozenset(("v0", "v1")): 1, frozenset(("v1", "v2")): 1, frozenset(("v0", "v2")): 1}
    count, hubs, fresh = 1, 0, 3
    while count < faces:
        open_edges = [e for e, n in use.items() if n == 1 or not boundary_only]
        key = open_edges[int(rng.integers(0, len(open_edges)))]
        p, q = b.edges[key]["ends"]
        left = faces - count
        if left >= 3 and (hubs == 0 or rng.uniform() < 0.6):
            k = int(rng.integers(3, min(7, left) + 1))
            rim = [p, q] + [f"v{fresh + i}" for i in range(k - 2)]
            fresh += k - 2
            hub = f"h{hubs}"
            hubs += 1
            for e in _glue_fan(b, rng, hub, rim, count):
                use[e] = use.get(e, 0) + 1
            for v in rim:
                use[frozenset((hub, v))] = 2
            count += k
            continue
        la, lb = _flap_lengths(rng, b.edges[key]["length"])
        w = f"v{fresh}"
        fresh += 1
        b.edge(p, w, la)
        b.edge(q, w, lb)
        b.face(f"f{count}", p, q, w)
        use[key] += 1
        use[frozenset((p, w))] = 1
        use[frozenset((q, w))] = 1
        count += 1
    logger.debug(f"{name}:{seed}: {faces} faces around {hubs} hubs")
    return _from_builder(f"{name}:{seed}", b, "v0")


def random_cat0(seed: int, faces: int = 12) -> Fixture:
    """Fans and triangles glued along any edge; edges may carry three or more faces"""
    return _random_glued("random_cat0", seed, faces, boundary_only=False)


def random_manifold(seed: int, n: int = 12) -> Fixture:
    """Fans and triangles glued only along boundary edges, so a disk"""
    return _random_glued("random_manifold", seed, n, boundary_only=True)


# ── Generated complexes ──

def exponential(n: int) -> Fixture:
    from cat0.services.spm import gen_exponential_complex

    g = gen_exponential_complex(n)
    return Fixture(f"exponential:{n}", g.description, g.complex, source=g.source)


def incoming_cycle() -> Fixture:
    from cat0.services.spm import gen_incoming_cycle

    g = gen_incoming_cycle()
    return Fixture("incoming-cycle", g.description, g.complex, source=g.source)


NAMED = {
    "t5": t5,
    "fig3": fig3,
    "fig4": fig4,
    "book3": book3,
    "three-quarter": three_quarter,
    "triangle": triangle,
    "plane4": plane4,
    "incoming-cycle": incoming_cycle,
}

PARAMETRIC = {
    "exponential": exponential,
    "corridor": corridor,
    "random-single-vertex": random_single_vertex,
    "random-cat0": random_cat0,
    "random-manifold": random_manifold,
    "random-rectangular": random_rectangular,
}


def load_fixture(name: str) -> Fixture:
    """Fixture by name, e.g. "fig3" or "exponential:5" """
    base, _, arg = name.partition(":")
    if base in NAMED and not arg:
        return NAMED[base]()
    if base in PARAMETRIC and arg:
        try:
            value = int(arg)
        except ValueError as e:
            raise MalformedInput(f"Fixture {name!r} needs an integer argument") from e
        return PARAMETRIC[base](value)
    raise MalformedInput(f"Unknown fixture {name!r}")


def describe_fixture(fx: Fixture) -> dict:
    if fx.single_vertex:
        return describe_single_vertex(fx.complex)
    return describe(fx.complex)
