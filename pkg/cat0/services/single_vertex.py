"""
Single-vertex cone complexes
Geodesics through the link graph, origin-in-hull tests and the support-ray closure
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, Iterable, List, Literal, Mapping, Optional, Sequence, Set, Tuple, Union

import networkx as nx
import numpy as np

from cat0.config import get_settings
from cat0.errors import MalformedInput, NotCat0, PairAtLeastPi, PointNotInComplex
from cat0.models import ConeAnglePointIn, OriginIn, RayPointIn, SingleVertexComplexIn, parse_complex
from cat0.services.complex_core import LinkGraph, path_arcs, shortest_link_cycle

logger = logging.getLogger(__name__)

PI = math.pi


class AtLeastPi:
    """Marker for link distances that reach pi"""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "AtLeastPi"


AT_LEAST_PI = AtLeastPi()


@dataclass(frozen=True)
class Cone:
    id: str
    rays: Tuple[str, str]
    angle: float


@dataclass(frozen=True)
class LinkPoint:
    node: Optional[str] = None
    arc: Optional[str] = None
    offset: float = 0.0


@dataclass(frozen=True)
class ConePoint:
    direction: Optional[LinkPoint]
    radius: float = 0.0
    # Exact coordinates along (first ray, second ray) of the cone, for right-angled cones
    coords: Optional[Tuple[Fraction, Fraction]] = None

    @property
    def is_origin(self) -> bool:
        return self.direction is None


ORIGIN = ConePoint(None, 0.0)


def chord_crossing(x_e: float, x_f: float, gamma1: float, gamma2: float) -> float:
    """Distance from O where the chord x_e-x_f meets a ray gamma1 past e"""
    return x_e * x_f * math.sin(gamma1 + gamma2) / (x_e * math.sin(gamma1) + x_f * math.sin(gamma2))


def split_link(link: LinkGraph, cuts: Iterable[Tuple[str, float]], tol: Optional[float] = None):
    """Insert nodes at interior arc offsets; returns the split link and a cut -> node map"""
    tol = get_settings().tol if tol is None else tol
    by_arc: Dict[str, List[float]] = {}
    for arc, offset in cuts:
        by_arc.setdefault(arc, []).append(offset)
    g = nx.MultiGraph()
    g.add_nodes_from(link.graph.nodes)
    arcs, parents, nodes = {}, {}, {}
    for arc, (u, v, w) in link.arcs.items():
        offsets = sorted(set(by_arc.get(arc, [])))
        stops = [(0.0, u)]
        for off in offsets:
            if off <= tol:
                nodes[(arc, off)] = u
            elif off >= w - tol:
                nodes[(arc, off)] = v
            elif off - stops[-1][0] <= tol:
                nodes[(arc, off)] = stops[-1][1]
            else:
                orig, lo = link.parent(arc)
                node = f"{orig}@{lo + off:.12g}"
                stops.append((off, node))
                nodes[(arc, off)] = node
        stops.append((w, v))
        if len(stops) == 2:
            g.add_edge(u, v, key=arc, weight=w)
            arcs[arc] = (u, v, w)
            continue
        for k, ((lo, a), (hi, b)) in enumerate(zip(stops, stops[1:])):
            piece = f"{arc}#{k}"
            g.add_edge(a, b, key=piece, weight=hi - lo)
            arcs[piece] = (a, b, hi - lo)
            parents[piece] = (arc, lo)
    return LinkGraph(link.anchor, g, arcs, parents), nodes


class SingleVertexComplex:
    """Cone complex on one vertex O; immutable after construction"""

    origin = "O"

    def __init__(self, rays: Sequence[str], cones: Mapping[str, Cone],
                 parents: Optional[Dict[str, Tuple[str, float]]] = None,
                 validate: bool = True, tol: Optional[float] = None):
        tol = get_settings().tol if tol is None else tol
        self.rays = list(rays)
        self.cones = dict(cones)
        # Cones produced by ray insertion map back to (original cone, offset)
        self.parents = dict(parents or {})
        known = set(self.rays)
        g = nx.MultiGraph()
        g.add_nodes_from(self.rays)
        arcs = {}
        self.ray_cones: Dict[str, List[str]] = {r: [] for r in self.rays}
        for cone in self.cones.values():
            if any(r not in known for r in cone.rays) or cone.rays[0] == cone.rays[1]:
                raise MalformedInput(f"Cone {cone.id} has invalid rays {cone.rays}")
            if not 0 < cone.angle <= PI + tol:
                raise MalformedInput(f"Cone {cone.id} angle {cone.angle} outside (0, π]")
            g.add_edge(cone.rays[0], cone.rays[1], key=cone.id, weight=cone.angle)
            arcs[cone.id] = (cone.rays[0], cone.rays[1], cone.angle)
            for r in cone.rays:
                self.ray_cones[r].append(cone.id)
        self.link = LinkGraph(self.origin, g, arcs)
        if validate:
            cycle = shortest_link_cycle(self.link)
            if cycle is not None and cycle.length < 2 * PI - tol:
                raise NotCat0(f"Link cycle {list(cycle.arcs)} has length {cycle.length:.12g} < 2π")

    def original(self, cone: str) -> Tuple[str, float]:
        return self.parents.get(cone, (cone, 0.0))

    def is_cube(self, tol: Optional[float] = None) -> bool:
        tol = get_settings().tol if tol is None else tol
        return all(abs(c.angle - PI / 2) <= tol for c in self.cones.values())

    def with_rays(self, inserts: Iterable[Tuple[str, float]]) -> "SingleVertexComplex":
        """New complex with a ray through each (cone, angle) position"""
        return self.insert_rays(inserts)[0]

    def insert_rays(self, inserts: Iterable[Tuple[str, float]]):
        """with_rays, also returning the (cone, angle) -> ray map"""
        split, nodes = split_link(self.link, inserts)
        cones, parents = {}, {}
        for arc, (u, v, w) in split.arcs.items():
            cones[arc] = Cone(arc, (u, v), w)
            if arc in split.parents:
                base, lo = split.parents[arc]
                orig, lo0 = self.original(base)
                parents[arc] = (orig, lo0 + lo)
            elif arc in self.parents:
                parents[arc] = self.parents[arc]
        rays = list(self.rays) + [n for n in split.graph.nodes if n not in self.link.graph]
        return SingleVertexComplex(rays, cones, parents, validate=False), nodes

    def direction(self, p: LinkPoint, tol: Optional[float] = None) -> LinkPoint:
        """Canonical form: arc endpoints become nodes"""
        tol = get_settings().tol if tol is None else tol
        if p.node is not None:
            if p.node not in self.link.graph:
                raise PointNotInComplex(f"Unknown ray {p.node}")
            return p
        if p.arc not in self.link.arcs:
            raise PointNotInComplex(f"Unknown cone {p.arc}")
        u, v, w = self.link.arcs[p.arc]
        if p.offset < -tol or p.offset > w + tol:
            raise PointNotInComplex(f"Angle {p.offset} outside cone {p.arc} of angle {w}")
        if p.offset <= tol:
            return LinkPoint(node=u)
        if p.offset >= w - tol:
            return LinkPoint(node=v)
        return p

    def cone_coords(self, p: ConePoint, cone: Optional[str] = None) -> Tuple[str, np.ndarray]:
        """Cartesian coordinates of p in a cone's frame (first ray along +x)"""
        d = self.direction(p.direction)
        if d.arc is not None:
            cone, offset = d.arc, d.offset
        else:
            cone = cone or self.ray_cones[d.node][0]
            u, v, w = self.link.arcs[cone]
            offset = 0.0 if d.node == u else w
        return cone, np.array([p.radius * math.cos(offset), p.radius * math.sin(offset)])


def build_single_vertex(description, validate: bool = True) -> SingleVertexComplex:
    desc = parse_complex(description) if isinstance(description, dict) else description
    if not isinstance(desc, SingleVertexComplexIn):
        raise MalformedInput("Expected a single_vertex complex")
    if len(set(desc.rays)) != len(desc.rays):
        raise MalformedInput("Duplicate ray ids")
    cones = {}
    for c in desc.cones:
        if c.id in cones:
            raise MalformedInput(f"Duplicate cone id {c.id}")
        cones[c.id] = Cone(c.id, tuple(c.rays), c.angle)
    return SingleVertexComplex(desc.rays, cones, validate=validate)


def cone_point(c: SingleVertexComplex, model) -> ConePoint:
    """Point schema -> ConePoint"""
    if isinstance(model, OriginIn):
        return ORIGIN
    if isinstance(model, RayPointIn):
        return ConePoint(c.direction(LinkPoint(node=model.ray)), model.radius)
    if isinstance(model, ConeAnglePointIn):
        return ConePoint(c.direction(LinkPoint(arc=model.cone, offset=model.angle_from_first)), model.radius)
    raise PointNotInComplex(f"Not a cone point: {model!r}")


def cube_point(c: SingleVertexComplex, cone: str, u, v) -> ConePoint:
    """Point at exact coordinates u along the first ray and v along the second of a right-angled cone"""
    u, v = Fraction(u), Fraction(v)
    radius = math.hypot(float(u), float(v))
    direction = c.direction(LinkPoint(arc=cone, offset=math.atan2(float(v), float(u))))
    return ConePoint(direction, radius, (u, v))


def _labelled(points) -> Dict[str, ConePoint]:
    if isinstance(points, Mapping):
        return dict(points)
    return {str(i): p for i, p in enumerate(points)}


def _cuts(c: SingleVertexComplex, points: Iterable[ConePoint]):
    out = []
    for p in points:
        if not p.is_origin:
            d = c.direction(p.direction)
            if d.arc is not None:
                out.append((d.arc, d.offset))
    return out


def _node(c: SingleVertexComplex, p: ConePoint, nodes) -> str:
    d = c.direction(p.direction)
    return d.node if d.arc is None else nodes[(d.arc, d.offset)]


def _with_points(c: SingleVertexComplex, points: Iterable[ConePoint]):
    points = list(points)
    split, nodes = split_link(c.link, _cuts(c, points))
    return split, [None if p.is_origin else _node(c, p, nodes) for p in points]


def _link_path(split: LinkGraph, a: str, b: str, tol: float):
    if a == b:
        return 0.0, [a]
    try:
        d, path = nx.single_source_dijkstra(split.graph, a, target=b, cutoff=PI + tol, weight="weight")
    except nx.NetworkXNoPath:
        return AT_LEAST_PI, None
    if d >= PI - tol:
        return AT_LEAST_PI, None
    return d, path


def link_distance(g: Union[SingleVertexComplex, LinkGraph], a: LinkPoint, b: LinkPoint,
                  tol: Optional[float] = None):
    """Finite distance below pi, or AT_LEAST_PI; the search never looks past pi"""
    tol = get_settings().tol if tol is None else tol
    c = g if isinstance(g, SingleVertexComplex) else _wrap(g)
    split, (na, nb) = _with_points(c, [ConePoint(a, 1.0), ConePoint(b, 1.0)])
    return _link_path(split, na, nb, tol)[0]


def link_path(c: SingleVertexComplex, a: LinkPoint, b: LinkPoint,
              tol: Optional[float] = None) -> Optional[List[Tuple[str, float]]]:
    """Rays crossed strictly between a and b with their cumulative angle from a; None past pi"""
    tol = get_settings().tol if tol is None else tol
    split, (na, nb) = _with_points(c, [ConePoint(a, 1.0), ConePoint(b, 1.0)])
    d, path = _link_path(split, na, nb, tol)
    if d is AT_LEAST_PI:
        return None
    out, cum = [], 0.0
    for u, v, arc in zip(path, path[1:], path_arcs(split.graph, path)):
        cum += split.arcs[arc][2]
        if v != nb:
            out.append((v, cum))
    return out


def _wrap(link: LinkGraph) -> SingleVertexComplex:
    cones = {arc: Cone(arc, (u, v), w) for arc, (u, v, w) in link.arcs.items()}
    return SingleVertexComplex(list(link.graph.nodes), cones, validate=False)


@dataclass
class GeodesicResult:
    length: float
    through_origin: bool
    crossings: List[Tuple[str, float]] = field(default_factory=list)
    link_path: List[str] = field(default_factory=list)
    cones: List[str] = field(default_factory=list)
    link_length: Optional[float] = None
    # (cone, angle, start offset, +1/-1) per cone piece walked, in order
    steps: List[Tuple[str, float, float, int]] = field(default_factory=list, repr=False)
    ends: Optional[tuple] = field(default=None, repr=False)

    def point_at(self, s: float) -> "ConePoint":
        c, a, b = self.ends
        return geodesic_point(c, a, b, s, self)


def geodesic(c: SingleVertexComplex, a: ConePoint, b: ConePoint, tol: Optional[float] = None) -> GeodesicResult:
    """Through O when the link distance reaches pi, otherwise the straight chord of the unfolded cones"""
    tol = get_settings().tol if tol is None else tol
    if a.is_origin or b.is_origin:
        return GeodesicResult(a.radius + b.radius, True, ends=(c, a, b))
    split, (na, nb) = _with_points(c, [a, b])
    d, path = _link_path(split, na, nb, tol)
    if d is AT_LEAST_PI:
        return GeodesicResult(a.radius + b.radius, True, ends=(c, a, b))
    ra, rb = a.radius, b.radius
    length = math.sqrt(max(0.0, ra * ra + rb * rb - 2 * ra * rb * math.cos(d)))
    result = GeodesicResult(length, False, link_path=list(path), link_length=d, ends=(c, a, b))
    cum = 0.0
    for u, v, arc in zip(path, path[1:], path_arcs(split.graph, path)):
        first, _, w = split.arcs[arc]
        base, lo = split.parent(arc)
        if u == first:
            result.steps.append((base, w, lo, 1))
        else:
            result.steps.append((base, w, lo + w, -1))
        if not result.cones or result.cones[-1] != base:
            result.cones.append(base)
        cum += w
        if v != nb:
            result.crossings.append((v, chord_crossing(ra, rb, cum, d - cum)))
    return result


def geodesic_point(c: SingleVertexComplex, a: ConePoint, b: ConePoint, s: float,
                   result: Optional[GeodesicResult] = None) -> ConePoint:
    """The point a fraction s of the way from a to b"""
    result = result or geodesic(c, a, b)
    if result.through_origin:
        x = s * result.length
        if x < a.radius:
            return ConePoint(a.direction, a.radius - x)
        if x > a.radius:
            return ConePoint(b.direction, x - a.radius)
        return ORIGIN
    d = result.link_length
    pa = np.array([a.radius, 0.0])
    pb = b.radius * np.array([math.cos(d), math.sin(d)])
    p = pa + s * (pb - pa)
    radius = float(np.linalg.norm(p))
    if radius == 0:
        return ORIGIN
    if not result.steps:
        return ConePoint(a.direction, radius)
    psi = min(max(math.atan2(p[1], p[0]), 0.0), d)
    cum = 0.0
    for i, (cone, w, start, sign) in enumerate(result.steps):
        if psi <= cum + w or i == len(result.steps) - 1:
            offset = start + sign * min(psi - cum, w)
            return ConePoint(c.direction(LinkPoint(arc=cone, offset=offset)), radius)
        cum += w


@dataclass
class OriginTest:
    in_hull: bool
    kind: Optional[Literal["origin", "pair", "cycle"]] = None
    witness: Optional[Tuple[str, ...]] = None


@dataclass
class LinkSubset:
    """Union of the shortest link paths between point directions"""
    graph: nx.MultiGraph
    link: LinkGraph
    point_nodes: Dict[str, str]
    cycle: Optional[List[str]] = None

    @property
    def has_cycle(self) -> bool:
        return self.cycle is not None

    def fragments(self) -> List[Tuple[str, float, float]]:
        """(cone, lo, hi) offset intervals covered, sorted"""
        out = []
        for u, v, arc in self.graph.edges(keys=True):
            base, lo = self.link.parent(arc)
            out.append((base, lo, lo + self.link.arcs[arc][2]))
        return sorted(out)


def _pairwise(c: SingleVertexComplex, points: Mapping[str, ConePoint]):
    labels = [k for k, p in points.items() if not p.is_origin]
    split, nodes = _with_points(c, [points[k] for k in labels])
    return split, dict(zip(labels, nodes))


def origin_in_hull(c: SingleVertexComplex, points, tol: Optional[float] = None) -> OriginTest:
    """O is in the hull iff O is given, some pair is pi apart, or the paths between the points close a cycle"""
    tol = get_settings().tol if tol is None else tol
    points = _labelled(points)
    for label, p in points.items():
        if p.is_origin:
            return OriginTest(True, "origin", (label,))
    split, nodes = _pairwise(c, points)
    labels = list(nodes)
    far = []
    for i, x in enumerate(labels):
        full = nx.single_source_dijkstra_path_length(split.graph, nodes[x], weight="weight")
        for y in labels[i + 1:]:
            d = full.get(nodes[y], math.inf)
            if d >= PI - tol:
                far.append((d, i, labels.index(y), x, y))
    if far:
        d, _, _, x, y = min(far)
        logger.debug(f"Pair ({x}, {y}) at link distance {d:.12g} puts O in the hull")
        return OriginTest(True, "pair", (x, y))
    gp = build_gp(c, points, tol)
    if gp.has_cycle:
        return OriginTest(True, "cycle", tuple(gp.cycle))
    return OriginTest(False)


def build_gp(c: SingleVertexComplex, points, tol: Optional[float] = None) -> LinkSubset:
    """Union of the shortest link paths between all point pairs"""
    tol = get_settings().tol if tol is None else tol
    points = _labelled(points)
    split, nodes = _pairwise(c, points)
    labels = list(nodes)
    sub = nx.MultiGraph()
    sub.add_nodes_from(set(nodes.values()))
    for x, y in combinations(labels, 2):
        d, path = _link_path(split, nodes[x], nodes[y], tol)
        if d is AT_LEAST_PI:
            raise PairAtLeastPi(f"Points {x} and {y} are at least π apart in the link")
        for u, v, arc in zip(path, path[1:], path_arcs(split.graph, path)):
            sub.add_edge(u, v, key=arc, weight=split.arcs[arc][2])
    cycle = None
    for comp in nx.connected_components(sub):
        h = sub.subgraph(comp)
        if h.number_of_edges() >= h.number_of_nodes():
            cycle = [key for _, _, key in nx.find_cycle(h)]
            break
    return LinkSubset(sub, split, nodes, cycle)


def hull_edge_support(c: SingleVertexComplex, points, tol: Optional[float] = None) -> Set[str]:
    """Rays of c met by the hull, by closing the point directions under short link paths"""
    tol = get_settings().tol if tol is None else tol
    points = _labelled(points)
    split, nodes = _pairwise(c, points)
    reached = set(nodes.values())
    frontier = deque(sorted(reached))
    while frontier:
        v = frontier.popleft()
        dist, paths = nx.single_source_dijkstra(split.graph, v, cutoff=PI, weight="weight")
        for u in list(reached):
            if u == v or dist.get(u, math.inf) >= PI - tol:
                continue
            for n in paths[u]:
                if n not in reached:
                    reached.add(n)
                    frontier.append(n)
    return {n for n in reached if n in c.link.graph}


def closure_oracle(c: SingleVertexComplex, points, tol: Optional[float] = None) -> Set[str]:
    """Pairwise closure to a fixpoint; slow reference for hull_edge_support"""
    tol = get_settings().tol if tol is None else tol
    points = _labelled(points)
    split, nodes = _pairwise(c, points)
    reached = set(nodes.values())
    changed = True
    while changed:
        changed = False
        for x, y in combinations(sorted(reached), 2):
            d, path = _link_path(split, x, y, tol)
            if d is AT_LEAST_PI:
                continue
            new = set(path) - reached
            if new:
                reached |= new
                changed = True
    return {n for n in reached if n in c.link.graph}
