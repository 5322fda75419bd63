"""
Single-source shortest paths in 2D CAT(0) complexes
Ruffles, window propagation with boundary trees, the last-step map and path recovery
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np
import pandas as pd

from cat0.config import get_settings
from cat0.errors import BudgetExceeded, DepthExceeded, DomainError, UnknownLocation
from cat0.models import FaceTypeOut, LastStepOut, PathOut
from cat0.services.complex_core import (
    ComplexBuilder,
    EdgePoint,
    Face,
    FacePoint,
    Location,
    PolyComplex2D,
    VertexPoint,
    build_complex,
    describe,
    glue_map,
)
from cat0.services.single_vertex import PI, LinkPoint, split_link

logger = logging.getLogger(__name__)


def _cross(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def _rotate(u: np.ndarray, theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([c * u[0] - s * u[1], s * u[0] + c * u[1]])


def _angle_at(f: Face, v: str, first: str, point) -> float:
    """Signed angle at v from the `first` edge toward `point`, positive into the face"""
    vxy = f.xy(v)
    ea, eb = f.edges_at(v)
    a = f.xy(_far_end(f, first, v)) - vxy
    b = f.xy(_far_end(f, eb if first == ea else ea, v)) - vxy
    o = 1.0 if _cross(a, b) > 0 else -1.0
    w = np.asarray(point, dtype=float) - vxy
    return math.atan2(o * _cross(a, w), float(np.dot(a, w)))


def _far_end(f: Face, edge: str, v: str) -> str:
    ends = dict(zip(f.edges, f.edge_ends))[edge]
    return ends[1] if ends[0] == v else ends[0]


def _direction(f: Face, v: str, offset: float) -> np.ndarray:
    """Unit direction at v inside f, `offset` radians from the face's first edge at v"""
    ea, eb = f.edges_at(v)
    vxy = f.xy(v)
    a = f.xy(_far_end(f, ea, v)) - vxy
    b = f.xy(_far_end(f, eb, v)) - vxy
    o = 1.0 if _cross(a, b) > 0 else -1.0
    return _rotate(_unit(a), o * offset)


# Ruffles

@dataclass(frozen=True)
class RuffleArc:
    face: str
    # Offsets from the face's first edge at the vertex
    lo: float
    hi: float
    lo_boundary: bool = False
    hi_boundary: bool = False

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass
class Ruffle:
    vertex: str
    incoming: Optional[LinkPoint]
    arcs: List[RuffleArc]
    # Incident edges whose direction lies in the ruffle
    edges: List[str]
    distances: Dict[str, float] = field(default_factory=dict)

    @property
    def boundary_rays(self) -> List[Tuple[str, float]]:
        rays = []
        for a in self.arcs:
            if a.lo_boundary:
                rays.append((a.face, a.lo))
            if a.hi_boundary and (a.width > 0 or not a.lo_boundary):
                rays.append((a.face, a.hi))
        return rays

    def is_empty(self) -> bool:
        return not self.arcs and not self.edges


def ruffle(complex_: PolyComplex2D, v: str, incoming: Optional[LinkPoint],
           tol: Optional[float] = None) -> Ruffle:
    """Directions at v at link distance at least pi from the incoming direction"""
    tol = get_settings().tol if tol is None else tol
    link = complex_.link(v)
    if incoming is None:
        arcs = [RuffleArc(fid, 0.0, w) for fid, (_, _, w) in link.arcs.items()]
        return Ruffle(v, None, arcs, sorted(link.graph.nodes))
    if incoming.arc is not None:
        split, nodes = split_link(link, [(incoming.arc, incoming.offset)], tol)
        src = nodes[(incoming.arc, incoming.offset)]
    else:
        split, src = link, incoming.node
    dist = nx.single_source_dijkstra_path_length(split.graph, src, cutoff=PI + 1.0, weight="weight")

    def far(n):
        return dist.get(n, math.inf)

    arcs = []
    for piece, (a, b, w) in split.arcs.items():
        orig, base = split.parent(piece)
        da, db = far(a), far(b)
        lo, hi = max(0.0, PI - da), min(w, w + db - PI)
        if hi < lo - tol:
            continue
        hi = max(lo, hi)
        # Zero-width pieces at an arc end are the edge direction itself
        if hi - lo <= tol and (hi <= tol or lo >= w - tol):
            continue
        lo_b = min(da + lo, db + w - lo) <= PI + tol
        hi_b = min(da + hi, db + w - hi) <= PI + tol
        arcs.append(RuffleArc(orig, base + lo, base + hi, lo_b, hi_b))
    edges = sorted(n for n in link.graph.nodes if far(n) >= PI - tol)
    arcs.sort(key=lambda r: (r.face, r.lo))
    return Ruffle(v, incoming, arcs, edges, {n: far(n) for n in link.graph.nodes})


# Shortest path map

@dataclass
class Region:
    """One cell of the shortest path map"""
    id: int
    dim: int
    sigma: float
    apex: Optional[str] = None
    face: Optional[str] = None
    edge: Optional[str] = None
    vertex: Optional[str] = None
    apex_xy: Optional[Tuple[float, float]] = None
    rays: Tuple[Tuple[float, float], ...] = ()
    # ("vertex", v, lo, hi) offsets at v, or ("edge", e, t0, t1) fractions along e
    entry: Tuple = ()
    exits: List[Tuple[str, float, float]] = field(default_factory=list)
    exit_vertex: Optional[str] = None
    tags: Tuple[Optional[int], Optional[int]] = (None, None)
    parent: Optional[int] = None


@dataclass(frozen=True)
class VertexReach:
    vertex: str
    distance: float
    incoming: Optional[LinkPoint]
    via: str
    ref: Optional[str] = None
    # Where the last segment entered the face, for vertices reached through a face
    entry: Optional[EdgePoint] = None
    region: Optional[int] = None

    @property
    def tag(self) -> str:
        return "source" if self.via == "source" else f"{self.via}:{self.ref}"


@dataclass
class TreeNode:
    id: int
    root: int
    parent: Optional[int] = None
    origin: Optional[Tuple[str, str]] = None
    faces: List[str] = field(default_factory=list)
    children: List[int] = field(default_factory=list)


@dataclass
class SourcePlacement:
    """The complex the map is built on, with the source as a vertex"""
    complex: PolyComplex2D
    vertex: str
    original: Optional[PolyComplex2D] = None
    # original face -> [(new face, {vertex: xy in the original face})]
    face_pieces: Dict[str, List[Tuple[str, Dict[str, Tuple[float, float]]]]] = field(default_factory=dict)
    # original edge -> [(new edge, start, end)] as distances along the original edge
    edge_pieces: Dict[str, List[Tuple[str, float, float]]] = field(default_factory=dict)

    def relocate(self, p: Location, tol: Optional[float] = None) -> Location:
        tol = get_settings().tol if tol is None else tol
        if isinstance(p, EdgePoint) and p.edge in self.edge_pieces:
            for eid, lo, hi in self.edge_pieces[p.edge]:
                if lo - tol <= p.t <= hi + tol:
                    e = self.complex.edges[eid]
                    start = self.original.edges[p.edge].ends[0] if lo == 0.0 else self.vertex
                    t = p.t - lo
                    return EdgePoint(eid, t if e.ends[0] == start else e.length - t)
        if isinstance(p, FacePoint) and p.face in self.face_pieces:
            x = np.array([p.x, p.y])
            for fid, corners in self.face_pieces[p.face]:
                names = list(corners)
                a, b, c = (np.array(corners[n]) for n in names)
                lam = np.linalg.solve(np.column_stack([b - a, c - a]), x - a)
                bary = (1 - lam.sum(), lam[0], lam[1])
                if min(bary) >= -tol:
                    g = self.complex.faces[fid]
                    xy = sum(w * g.xy(n) for w, n in zip(bary, names))
                    return FacePoint(fid, float(xy[0]), float(xy[1]))
        return p


def _fresh(complex_: PolyComplex2D, name: str) -> str:
    k, out = 0, name
    while out in complex_.vertex_edges:
        k += 1
        out = f"{name}{k}"
    return out


def place_source(complex_: PolyComplex2D, s: Location, tol: Optional[float] = None) -> SourcePlacement:
    """Make s a vertex, triangulating the face or splitting the edge that holds it"""
    tol = get_settings().tol if tol is None else tol
    if isinstance(s, VertexPoint):
        if s.vertex not in complex_.vertex_edges:
            raise UnknownLocation(f"Unknown vertex {s.vertex}")
        return SourcePlacement(complex_, s.vertex)
    try:
        spots = complex_.locate(s)
    except Exception as e:
        raise UnknownLocation(str(e)) from e
    desc = describe(complex_)
    sid = _fresh(complex_, "src")
    desc["vertices"].append(sid)
    if isinstance(s, EdgePoint):
        e = complex_.edges[s.edge]
        if s.t <= tol:
            return SourcePlacement(complex_, e.ends[0])
        if s.t >= e.length - tol:
            return SourcePlacement(complex_, e.ends[1])
        a, b = e.ends
        ea, eb = f"{e.id}/0", f"{e.id}/1"
        desc["edges"] = [d for d in desc["edges"] if d["id"] != e.id]
        desc["edges"] += [{"id": ea, "ends": [a, sid], "length": s.t},
                          {"id": eb, "ends": [sid, b], "length": e.length - s.t}]
        desc["faces"] = [d for d in desc["faces"] if e.id not in d["edges"]]
        face_pieces = {}
        for fid, xy in spots:
            f = complex_.faces[fid]
            c = f.opposite_vertex(e.id)
            sc = f"{fid}/s"
            desc["edges"].append({"id": sc, "ends": [sid, c], "length": float(np.linalg.norm(f.xy(c) - xy))})
            ac = next(g for g in f.edges if g != e.id and a in f._ends[g])
            bc = next(g for g in f.edges if g != e.id and b in f._ends[g])
            desc["faces"] += [{"id": f"{fid}/0", "edges": [ea, sc, ac]}, {"id": f"{fid}/1", "edges": [eb, bc, sc]}]
            face_pieces[fid] = [
                (f"{fid}/0", {sid: tuple(xy), a: tuple(f.xy(a)), c: tuple(f.xy(c))}),
                (f"{fid}/1", {sid: tuple(xy), b: tuple(f.xy(b)), c: tuple(f.xy(c))}),
            ]
        placed = build_complex(desc)
        logger.info(f"Source split edge {e.id} at {s.t:.12g}")
        return SourcePlacement(placed, sid, complex_, face_pieces,
                               {e.id: [(ea, 0.0, s.t), (eb, s.t, e.length)]})
    fid, xy = spots[0]
    f = complex_.faces[fid]
    for g in f.edges:
        p, q = f._ends[g]
        P, Q = f.xy(p), f.xy(q)
        if abs(_cross(Q - P, xy - P)) <= tol * max(1.0, float(np.linalg.norm(Q - P))):
            t = float(np.dot(xy - P, Q - P) / np.dot(Q - P, Q - P)) * complex_.edges[g].length
            if complex_.edges[g].ends[0] != p:
                t = complex_.edges[g].length - t
            return place_source(complex_, EdgePoint(g, t), tol)
    spokes = {}
    for v in f.vertices:
        spokes[v] = f"{fid}/{v}"
        desc["edges"].append({"id": spokes[v], "ends": [sid, v], "length": float(np.linalg.norm(f.xy(v) - xy))})
    desc["faces"] = [d for d in desc["faces"] if d["id"] != fid]
    pieces = []
    for k, g in enumerate(f.edges):
        p, q = f._ends[g]
        desc["faces"].append({"id": f"{fid}/{k}", "edges": [g, spokes[q], spokes[p]]})
        pieces.append((f"{fid}/{k}", {sid: tuple(xy), p: tuple(f.xy(p)), q: tuple(f.xy(q))}))
    placed = build_complex(desc)
    logger.info(f"Source triangulated face {fid}")
    return SourcePlacement(placed, sid, complex_, {fid: pieces})


@dataclass
class ShortestPathMap:
    placement: SourcePlacement
    regions: List[Region]
    reach: Dict[str, VertexReach]
    nodes: Dict[int, TreeNode]
    edge_sources: Dict[str, Set[str]]

    @property
    def complex(self) -> PolyComplex2D:
        return self.placement.complex

    @property
    def source(self) -> str:
        return self.placement.vertex

    def distance(self, v: str) -> float:
        return self.reach[v].distance

    def face_regions(self) -> Dict[str, List[int]]:
        out: Dict[str, List[int]] = {f: [] for f in self.complex.faces}
        for r in self.regions:
            if r.dim == 2:
                out[r.face].append(r.id)
        return out

    def roots(self, vertex: Optional[str] = None, face: Optional[str] = None) -> List[int]:
        return [n.id for n in self.nodes.values() if n.parent is None
                and (vertex is None or n.origin[0] == vertex) and (face is None or n.origin[1] == face)]

    def tree(self, root: int) -> List[TreeNode]:
        out, todo = [], [root]
        while todo:
            node = self.nodes[todo.pop()]
            out.append(node)
            todo.extend(node.children)
        return out

    def branches(self, root: int) -> int:
        return sum(1 for n in self.tree(root) if not n.children)

    def summary(self) -> dict:
        roots = self.roots()
        return {
            "regions": len(self.regions),
            "boundary_trees": len(roots),
            "max_branches_per_tree": max((self.branches(r) for r in roots), default=0),
        }


def _keep(c0: float, c1: float, tol: float) -> Optional[Tuple[float, float]]:
    """Sub-interval of [0, 1] where a linear function from c0 to c1 is non-negative"""
    if c0 >= -tol and c1 >= -tol:
        return 0.0, 1.0
    if c0 < -tol and c1 < -tol:
        return None
    r = c0 / (c0 - c1)
    return (0.0, r) if c0 > c1 else (r, 1.0)


@dataclass
class _Window:
    face: str
    apex: str
    apex_xy: np.ndarray
    sigma: float
    d_lo: np.ndarray
    d_hi: np.ndarray
    entry: Tuple
    tags: Tuple[Optional[int], Optional[int]]
    parent: Optional[int]


class _Propagation:
    """Frontier of windows and vertices, processed first in first out"""

    def __init__(self, placement: SourcePlacement, region_cap: int, tol: float):
        self.placement = placement
        self.complex = placement.complex
        self.cap = region_cap
        self.tol = tol
        self.regions: List[Region] = []
        self.reach: Dict[str, VertexReach] = {}
        self.nodes: Dict[int, TreeNode] = {}
        self.edge_sources: Dict[str, Set[str]] = {e: set() for e in self.complex.edges}
        self.queue: deque = deque()

    def region(self, **kwargs) -> Region:
        if len(self.regions) >= self.cap:
            raise BudgetExceeded(f"Shortest path map passed {self.cap} regions")
        r = Region(id=len(self.regions), **kwargs)
        self.regions.append(r)
        return r

    def node(self, parent: Optional[int] = None, origin: Optional[Tuple[str, str]] = None) -> int:
        nid = len(self.nodes)
        root = nid if parent is None else self.nodes[parent].root
        self.nodes[nid] = TreeNode(nid, root, parent, origin)
        if parent is not None:
            self.nodes[parent].children.append(nid)
        return nid

    def run(self) -> ShortestPathMap:
        s = self.placement.vertex
        self.arrive(VertexReach(s, 0.0, None, "source"))
        while self.queue:
            kind, item = self.queue.popleft()
            if kind == "vertex":
                self.expand_vertex(item)
            else:
                self.expand_window(item)
        missing = [v for v in self.complex.vertices if v not in self.reach]
        if missing:
            logger.warning(f"Vertices never reached: {missing}")
        return ShortestPathMap(self.placement, self.regions, self.reach, self.nodes, self.edge_sources)

    def arrive(self, reach: VertexReach):
        known = self.reach.get(reach.vertex)
        if known is None:
            self.reach[reach.vertex] = reach
            self.queue.append(("vertex", reach.vertex))
        elif abs(known.distance - reach.distance) > 1e-6 * max(1.0, known.distance):
            logger.warning(f"Vertex {reach.vertex} reached at {reach.distance:.12g} and {known.distance:.12g}")

    def expand_vertex(self, v: str):
        reach = self.reach[v]
        r = ruffle(self.complex, v, reach.incoming, self.tol)
        here = self.region(dim=0, sigma=reach.distance, vertex=v, apex=v)
        for e in r.edges:
            edge = self.complex.edges[e]
            self.region(dim=1, sigma=reach.distance, edge=e, apex=v, entry=("vertex", v), parent=here.id)
            self.edge_sources[e].add(f"vertex:{v}")
            w = edge.other(v)
            self.arrive(VertexReach(w, reach.distance + edge.length, LinkPoint(node=e), "edge", e, region=here.id))
        for arc in r.arcs:
            if arc.width <= self.tol:
                continue
            f = self.complex.faces[arc.face]
            lo = self.node(origin=(v, arc.face)) if arc.lo_boundary else None
            hi = self.node(origin=(v, arc.face)) if arc.hi_boundary else None
            self.queue.append(("window", _Window(
                arc.face, v, f.xy(v), reach.distance,
                _direction(f, v, arc.lo), _direction(f, v, arc.hi),
                ("vertex", v, arc.lo, arc.hi), (lo, hi), here.id)))
        logger.debug(f"Vertex {v} at {reach.distance:.12g}: {len(r.arcs)} ruffle arcs, {len(r.edges)} edges")

    def _inside(self, w: _Window, o: float, x: np.ndarray) -> Tuple[float, float]:
        d = x - w.apex_xy
        return o * _cross(_unit(w.d_lo), d), -o * _cross(_unit(w.d_hi), d)

    def _tag_at(self, w: _Window, o: float, x: np.ndarray, t: float) -> Optional[int]:
        # Boundary rays that run into a vertex end there
        if t <= self.tol or t >= 1.0 - self.tol:
            return None
        scale = self.tol * max(1.0, float(np.linalg.norm(x - w.apex_xy)))
        c_lo, c_hi = self._inside(w, o, x)
        if abs(c_lo) <= scale and (abs(c_lo) <= abs(c_hi)):
            return w.tags[0]
        if abs(c_hi) <= scale:
            return w.tags[1]
        return None

    def expand_window(self, w: _Window):
        f = self.complex.faces[w.face]
        o = 1.0 if _cross(w.d_lo, w.d_hi) > 0 else -1.0
        here = self.region(dim=2, sigma=w.sigma, apex=w.apex, face=w.face, apex_xy=tuple(w.apex_xy),
                           rays=(tuple(w.d_lo), tuple(w.d_hi)), entry=w.entry, tags=w.tags, parent=w.parent)
        for tag in w.tags:
            if tag is not None:
                self.nodes[tag].faces.append(w.face)
        if w.entry[0] == "edge":
            e = w.entry[1]
            exits = [g for g in f.edges if g != e]
            self._reach_opposite(w, o, f, e, here)
        else:
            exits = [f.opposite_edge(w.entry[1])]
        for g in exits:
            p, q = self.complex.edges[g].ends
            P, Q = f.xy(p), f.xy(q)
            scale = self.tol * max(1.0, float(np.linalg.norm(P - w.apex_xy)), float(np.linalg.norm(Q - w.apex_xy)))
            lo_p, hi_p = self._inside(w, o, P)
            lo_q, hi_q = self._inside(w, o, Q)
            a, b = _keep(lo_p, lo_q, scale), _keep(hi_p, hi_q, scale)
            if a is None or b is None:
                continue
            t0, t1 = max(a[0], b[0]), min(a[1], b[1])
            if (t1 - t0) * self.complex.edges[g].length <= scale:
                continue
            here.exits.append((g, t0, t1))
            self.edge_sources[g].add(f"face:{w.face}")
            x0, x1 = P + t0 * (Q - P), P + t1 * (Q - P)
            tags = (self._tag_at(w, o, x0, t0), self._tag_at(w, o, x1, t1))
            onward = self.complex.face_neighbors(w.face, g)
            children = [self._fork(tag, onward) for tag in tags]
            for nxt in onward:
                h = self.complex.faces[nxt]
                m, c = glue_map(P, Q, h.xy(p), h.xy(q), f.xy(f.opposite_vertex(g)), h.xy(h.opposite_vertex(g)))
                self.queue.append(("window", _Window(
                    nxt, w.apex, m @ w.apex_xy + c, w.sigma, m @ (x0 - w.apex_xy), m @ (x1 - w.apex_xy),
                    ("edge", g, t0, t1), (children[0].get(nxt), children[1].get(nxt)), here.id)))

    def _fork(self, tag: Optional[int], onward: Sequence[str]) -> Dict[str, int]:
        if tag is None:
            return {}
        if len(onward) == 1:
            return {onward[0]: tag}
        return {nxt: self.node(parent=tag) for nxt in onward}

    def _reach_opposite(self, w: _Window, o: float, f: Face, e: str, here: Region):
        v = f.opposite_vertex(e)
        x = f.xy(v)
        n = float(np.linalg.norm(x - w.apex_xy))
        c_lo, c_hi = self._inside(w, o, x)
        if min(c_lo, c_hi) < -self.tol * max(1.0, n):
            return
        here.exit_vertex = v
        ea, eb = f.edges_at(v)
        theta = self.complex.angle(f.id, v)
        off = min(max(_angle_at(f, v, ea, w.apex_xy), 0.0), theta)
        if off <= self.tol:
            incoming = LinkPoint(node=ea)
        elif off >= theta - self.tol:
            incoming = LinkPoint(node=eb)
        else:
            incoming = LinkPoint(arc=f.id, offset=off)
        p, q = self.complex.edges[e].ends
        P, Q = f.xy(p), f.xy(q)
        d = x - w.apex_xy
        s = _cross(w.apex_xy - P, d) / _cross(Q - P, d)
        s = min(max(s, 0.0), 1.0)
        entry = EdgePoint(e, s * self.complex.edges[e].length)
        self.arrive(VertexReach(v, w.sigma + n, incoming, "face", f.id, entry, here.id))


def build_spm(complex_: PolyComplex2D, s: Location, region_cap: Optional[int] = None,
              tol: Optional[float] = None) -> ShortestPathMap:
    """Propagate geodesic windows outward from s until every face is covered"""
    settings = get_settings()
    tol = settings.tol if tol is None else tol
    cap = settings.region_cap if region_cap is None else region_cap
    if isinstance(s, str):
        s = VertexPoint(s)
    placement = place_source(complex_, s, tol)
    spm = _Propagation(placement, int(cap), tol).run()
    summary = spm.summary()
    logger.info(f"Shortest path map from {spm.source}: {summary['regions']} regions, "
                f"{summary['boundary_trees']} boundary trees")
    return spm


# Last-step map

FACE_TYPES = ("E", "V", "EV", "EVE")


@dataclass(frozen=True)
class FaceInfo:
    face: str
    type: str
    edges: Tuple[str, ...] = ()
    vertex: Optional[str] = None
    # Offsets at `vertex` from its first edge in the face; equal ends for a single ray
    wedge: Optional[Tuple[float, float]] = None


@dataclass(frozen=True)
class PathStep:
    kind: str
    ref: str
    t: Optional[float] = None
    xy: Optional[Tuple[float, float]] = None

    def label(self) -> str:
        if self.kind == "edge":
            return f"{self.ref}@{self.t:.12g}"
        if self.kind == "face" and self.xy is not None:
            return f"{self.ref}({self.xy[0]:.12g},{self.xy[1]:.12g})"
        return self.ref


@dataclass(frozen=True)
class PathSegment:
    """Straight piece of a path, laid out across `faces` with start in the first face's frame"""
    faces: Tuple[str, ...]
    edges: Tuple[str, ...]
    start: Tuple[float, float]
    end: Tuple[float, float]


@dataclass(frozen=True)
class GeodesicPath:
    length: float
    steps: Tuple[PathStep, ...]
    segments: Tuple[PathSegment, ...] = ()

    def extended(self, steps: Sequence[PathStep], length: float,
                 segment: Optional[PathSegment] = None) -> "GeodesicPath":
        segments = self.segments + ((segment,) if segment is not None else ())
        return GeodesicPath(length, self.steps + tuple(steps), segments)

    @property
    def vertices(self) -> List[str]:
        return [s.ref for s in self.steps if s.kind == "vertex"]

    def to_model(self) -> PathOut:
        return PathOut(length=self.length, steps=[s.label() for s in self.steps])


@dataclass
class LastStepMap:
    placement: SourcePlacement
    edges: Dict[str, str]
    vertices: Dict[str, VertexReach]
    faces: Dict[str, FaceInfo]
    _paths: Dict[str, GeodesicPath] = field(default_factory=dict, repr=False)

    @property
    def complex(self) -> PolyComplex2D:
        return self.placement.complex

    @property
    def source(self) -> str:
        return self.placement.vertex

    def distance(self, v: str) -> float:
        return self.vertices[v].distance

    def size(self) -> int:
        items = len(self.edges) + len(self.vertices)
        for info in self.faces.values():
            items += 1 + len(info.edges) + (info.vertex is not None) + len(self._rays(info))
        return items

    def _rays(self, info: FaceInfo) -> List[List[List[float]]]:
        if info.vertex is None or info.wedge is None or info.type == "V":
            return []
        f = self.complex.faces[info.face]
        v = info.vertex
        theta = self.complex.angle(f.id, v)
        opp = f.opposite_edge(v)
        p, q = self.complex.edges[opp].ends
        P, Q = f.xy(p), f.xy(q)
        out = []
        for off in sorted(set(info.wedge)):
            if off <= 1e-12 or off >= theta - 1e-12:
                continue
            d = _direction(f, v, off)
            s = _cross(f.xy(v) - P, d) / _cross(Q - P, d)
            end = P + s * (Q - P)
            out.append([f.xy(v).tolist(), end.tolist()])
        return out

    def to_model(self) -> LastStepOut:
        faces = []
        for fid in sorted(self.faces):
            info = self.faces[fid]
            incoming = [f"edge:{e}" for e in info.edges]
            if info.vertex is not None and (info.type in ("V", "EV") or info.wedge is not None):
                incoming.append(f"vertex:{info.vertex}")
            faces.append(FaceTypeOut(face=fid, type=info.type, incoming=incoming, rays=self._rays(info)))
        return LastStepOut(
            source=self.source,
            edges=dict(sorted(self.edges.items())),
            vertices={v: r.tag for v, r in sorted(self.vertices.items())},
            faces=faces,
        )


def _zero_wedge(spm: ShortestPathMap, fid: str, v: str, tol: float) -> Optional[Tuple[float, float]]:
    if v not in spm.reach:
        return None
    for arc in ruffle(spm.complex, v, spm.reach[v].incoming, tol).arcs:
        if arc.face == fid:
            return arc.lo, arc.hi
    return None


def _face_type(spm: ShortestPathMap, fid: str, entries: List[str],
               wedges: Dict[str, List[float]], tol: float) -> FaceInfo:
    cplx = spm.complex

    def ends(e):
        return set(cplx.edges[e].ends)

    if not entries and len(wedges) == 1:
        v, (lo, hi) = next(iter(wedges.items()))
        return FaceInfo(fid, "V", (), v, (lo, hi))
    if len(entries) == 1 and not wedges:
        return FaceInfo(fid, "E", tuple(entries))
    if len(entries) == 1 and len(wedges) == 1:
        v, (lo, hi) = next(iter(wedges.items()))
        if v in ends(entries[0]):
            return FaceInfo(fid, "EV", tuple(entries), v, (lo, hi))
    if len(entries) == 2:
        common = ends(entries[0]) & ends(entries[1])
        v = next(iter(common))
        if not wedges or set(wedges) == {v}:
            wedge = tuple(wedges[v]) if wedges else _zero_wedge(spm, fid, v, tol)
            return FaceInfo(fid, "EVE", tuple(entries), v, wedge)
    logger.warning(f"Face {fid} entered through edges {entries} and vertices {sorted(wedges)}")
    return FaceInfo(fid, "?", tuple(entries), None)


def _conflicts(spm: ShortestPathMap) -> Dict[str, List[str]]:
    return {e: sorted(tags) for e, tags in spm.edge_sources.items() if len(tags) > 1}


def derive_last_step(spm: ShortestPathMap, tol: Optional[float] = None) -> LastStepMap:
    """Coarsen the map to the last edge, vertex or face of each geodesic"""
    tol = get_settings().tol if tol is None else tol
    conflicts = _conflicts(spm)
    if conflicts:
        raise DomainError(f"Edges reached from more than one side: {conflicts}")
    edges = {e: next(iter(tags)) for e, tags in spm.edge_sources.items() if tags}
    entering: Dict[str, Set[str]] = {f: set() for f in spm.complex.faces}
    wedges: Dict[str, Dict[str, List[float]]] = {f: {} for f in spm.complex.faces}
    for r in spm.regions:
        if r.dim != 2:
            continue
        if r.entry[0] == "edge":
            entering[r.face].add(r.entry[1])
        else:
            _, v, lo, hi = r.entry
            w = wedges[r.face].setdefault(v, [lo, hi])
            w[0], w[1] = min(w[0], lo), max(w[1], hi)
    faces = {fid: _face_type(spm, fid, sorted(entering[fid]), wedges[fid], tol) for fid in spm.complex.faces}
    lsm = LastStepMap(spm.placement, edges, dict(spm.reach), faces)
    logger.info(f"Last-step map from {spm.source}: {lsm.size()} items")
    return lsm


# Path recovery

def _last_part(lsm: LastStepMap, info: FaceInfo, m: np.ndarray, b: np.ndarray, target: np.ndarray,
               tol: float) -> Tuple[str, str]:
    if info.type == "V":
        return "vertex", info.vertex
    if info.type == "E":
        return "edge", info.edges[0]
    if info.type not in FACE_TYPES:
        raise DomainError(f"Face {info.face} has no usable last-step type")
    f = lsm.complex.faces[info.face]
    v = info.vertex
    ea, eb = f.edges_at(v)
    vxy = m @ f.xy(v) + b
    a = m @ f.xy(_far_end(f, ea, v)) + b - vxy
    c = m @ f.xy(_far_end(f, eb, v)) + b - vxy
    o = 1.0 if _cross(a, c) > 0 else -1.0
    w = target - vxy
    x = math.atan2(o * _cross(a, w), float(np.dot(a, w)))
    if info.wedge is not None:
        lo, hi = info.wedge
        if lo - tol <= x <= hi + tol:
            return "vertex", v
        if info.type == "EVE":
            return "edge", ea if x < lo else eb
    if info.type == "EV":
        return "edge", info.edges[0]
    logger.warning(f"Face {info.face} has no dividing ray; using edge {ea}")
    return "edge", ea


def _trace(lsm: LastStepMap, fid: str, target_xy, target: PathStep, tol: float) -> GeodesicPath:
    """Walk back from a point of `fid` through incoming faces until the last vertex"""
    cplx = lsm.complex
    m, b = np.eye(2), np.zeros(2)
    target_xy = np.asarray(target_xy, dtype=float)
    cur = fid
    chain: List[Tuple[str, np.ndarray, np.ndarray]] = []
    faces = [fid]
    for _ in range(4 * len(cplx.faces) + 4):
        info = lsm.faces.get(cur)
        if info is None:
            raise UnknownLocation(f"Face {cur} is not covered by the map")
        kind, ref = _last_part(lsm, info, m, b, target_xy, tol)
        if kind == "vertex":
            apex = ref
            break
        tag = lsm.edges.get(ref)
        if tag is None:
            raise DomainError(f"Edge {ref} has no incoming information")
        if tag.startswith("vertex:"):
            apex = tag[len("vertex:"):]
            break
        prev = tag[len("face:"):]
        f, g = cplx.faces[cur], cplx.faces[prev]
        p, q = cplx.edges[ref].ends
        P, Q = m @ f.xy(p) + b, m @ f.xy(q) + b
        away = m @ f.xy(f.opposite_vertex(ref)) + b
        m, b = glue_map(g.xy(p), g.xy(q), P, Q, g.xy(g.opposite_vertex(ref)), away)
        chain.append((ref, P, Q))
        cur = prev
        faces.append(prev)
    else:
        raise DomainError(f"Path recovery from face {fid} did not terminate")
    x = m @ cplx.faces[cur].xy(apex) + b
    d = target_xy - x
    steps = []
    for e, P, Q in reversed(chain):
        denom = _cross(Q - P, d)
        s = _cross(x - P, d) / denom if abs(denom) > 0 else 0.0
        s = min(max(s, 0.0), 1.0)
        steps.append(PathStep("edge", e, s * cplx.edges[e].length, tuple(P + s * (Q - P))))
    steps.append(target)
    head = _vertex_path(lsm, apex, tol)
    segment = PathSegment(tuple(reversed(faces)), tuple(e for e, _, _ in reversed(chain)),
                          tuple(cplx.faces[cur].xy(apex)), tuple(m.T @ (target_xy - b)))
    return head.extended(steps, lsm.distance(apex) + float(np.linalg.norm(d)), segment)


def _vertex_path(lsm: LastStepMap, v: str, tol: float) -> GeodesicPath:
    if v in lsm._paths:
        return lsm._paths[v]
    reach = lsm.vertices.get(v)
    if reach is None:
        raise UnknownLocation(f"Vertex {v} is not reached by the map")
    cplx = lsm.complex
    if reach.via == "source":
        path = GeodesicPath(0.0, (PathStep("vertex", v),))
    elif reach.via == "edge":
        u = cplx.edges[reach.ref].other(v)
        f = cplx.faces[cplx.edge_faces[reach.ref][0]]
        segment = PathSegment((f.id,), (), tuple(f.xy(u)), tuple(f.xy(v)))
        path = _vertex_path(lsm, u, tol).extended([PathStep("vertex", v)], reach.distance, segment)
    else:
        f = cplx.faces[reach.ref]
        path = _trace(lsm, f.id, f.xy(v), PathStep("vertex", v), tol)
    lsm._paths[v] = path
    return path


def query_path(lsm: LastStepMap, t, tol: Optional[float] = None) -> GeodesicPath:
    """Shortest path from the source to t, recovered from the last-step map"""
    tol = get_settings().tol if tol is None else tol
    cplx = lsm.complex
    if isinstance(t, str):
        t = VertexPoint(t)
    t = lsm.placement.relocate(t, tol)
    if isinstance(t, VertexPoint):
        return _vertex_path(lsm, t.vertex, tol)
    if isinstance(t, EdgePoint):
        e = cplx.edges.get(t.edge)
        if e is None or not -tol <= t.t <= e.length + tol:
            raise UnknownLocation(f"No point {t.t} on edge {t.edge}")
        if t.t <= tol:
            return _vertex_path(lsm, e.ends[0], tol)
        if t.t >= e.length - tol:
            return _vertex_path(lsm, e.ends[1], tol)
        tag = lsm.edges.get(e.id)
        if tag is None:
            raise UnknownLocation(f"Edge {e.id} is not reached by the map")
        f = cplx.faces[cplx.edge_faces[e.id][0]] if tag.startswith("vertex:") else cplx.faces[tag[len("face:"):]]
        a, c = f.xy(e.ends[0]), f.xy(e.ends[1])
        here = a + (c - a) * (t.t / e.length)
        step = PathStep("edge", e.id, t.t, tuple(here))
        if tag.startswith("vertex:"):
            u = tag[len("vertex:"):]
            along = t.t if u == e.ends[0] else e.length - t.t
            segment = PathSegment((f.id,), (), tuple(f.xy(u)), tuple(here))
            return _vertex_path(lsm, u, tol).extended([step], lsm.distance(u) + along, segment)
        return _trace(lsm, f.id, here, step, tol)
    if isinstance(t, FacePoint):
        if t.face not in cplx.faces:
            raise UnknownLocation(f"Unknown face {t.face}")
        if not cplx.faces[t.face].contains(t.x, t.y, tol):
            raise UnknownLocation(f"Point ({t.x}, {t.y}) lies outside face {t.face}")
        return _trace(lsm, t.face, (t.x, t.y), PathStep("face", t.face, xy=(t.x, t.y)), tol)
    raise UnknownLocation(f"Unsupported location {t!r}")


def point_on_path(cplx: PolyComplex2D, path: GeodesicPath, s: float, tol: Optional[float] = None) -> Location:
    """Point a fraction s of the way along the path, on the complex the path was recovered on"""
    tol = get_settings().tol if tol is None else tol
    segments = [g for g in path.segments if g.faces]
    if not segments:
        return VertexPoint(path.steps[0].ref)
    lengths = [float(np.linalg.norm(np.subtract(g.end, g.start))) for g in segments]
    left = min(max(s, 0.0), 1.0) * sum(lengths)
    for seg, length in zip(segments, lengths):
        if left <= length or seg is segments[-1]:
            break
        left -= length
    u = left / length if length > 0 else 0.0
    x = np.asarray(seg.start) + u * (np.asarray(seg.end) - np.asarray(seg.start))
    m, b = np.eye(2), np.zeros(2)
    for i, fid in enumerate(seg.faces):
        f = cplx.faces[fid]
        local = m.T @ (x - b)
        if f.contains(local[0], local[1], tol):
            return FacePoint(fid, float(local[0]), float(local[1]))
        if i == len(seg.edges):
            break
        e, g = seg.edges[i], cplx.faces[seg.faces[i + 1]]
        p, q = cplx.edges[e].ends
        away = m @ f.xy(f.opposite_vertex(e)) + b
        m, b = glue_map(g.xy(p), g.xy(q), m @ f.xy(p) + b, m @ f.xy(q) + b, g.xy(g.opposite_vertex(e)), away)
    raise DomainError(f"Point at {s} is off the faces of its segment")


# Brute-force oracle

def _in_wedge(wedge, d: np.ndarray, tol: float) -> bool:
    lo, hi = wedge
    n = float(np.linalg.norm(d))
    return (_cross(lo, d) >= -tol * np.linalg.norm(lo) * n
            and _cross(d, hi) >= -tol * np.linalg.norm(hi) * n)


def _meet(w1, w2, tol: float):
    lo = w1[0] if _cross(w2[0], w1[0]) >= 0 else w2[0]
    hi = w1[1] if _cross(w1[1], w2[1]) >= 0 else w2[1]
    if _cross(lo, hi) <= tol * np.linalg.norm(lo) * np.linalg.norm(hi):
        return None
    return lo, hi


def _visible(cplx: PolyComplex2D, starts, targets: Dict[str, list], max_faces: int,
             tol: float) -> Dict[str, float]:
    """Lengths of straight segments from a point to targets, over simple face corridors"""
    by_face: Dict[str, List[Tuple[str, np.ndarray]]] = {}
    for key, spots in targets.items():
        for fid, xy in spots:
            by_face.setdefault(fid, []).append((key, np.asarray(xy, dtype=float)))
    best: Dict[str, float] = {}
    for f0, origin in starts:
        origin = np.asarray(origin, dtype=float)
        stack = [(f0, np.eye(2), np.zeros(2), None, (f0,), None)]
        while stack:
            fid, m, b, entry, visited, wedge = stack.pop()
            for key, xy in by_face.get(fid, ()):
                d = m @ xy + b - origin
                if wedge is None or float(np.linalg.norm(d)) <= tol or _in_wedge(wedge, d, tol):
                    n = float(np.linalg.norm(d))
                    if n < best.get(key, math.inf):
                        best[key] = n
            if len(visited) >= max_faces:
                continue
            f = cplx.faces[fid]
            for g in f.edges:
                if g == entry:
                    continue
                p, q = cplx.edges[g].ends
                P, Q = m @ f.xy(p) + b, m @ f.xy(q) + b
                a, c = P - origin, Q - origin
                cr = _cross(a, c)
                if abs(cr) <= tol * max(1.0, float(np.linalg.norm(a) * np.linalg.norm(c))):
                    continue
                window = (a, c) if cr > 0 else (c, a)
                window = window if wedge is None else _meet(wedge, window, tol)
                if window is None:
                    continue
                away = m @ f.xy(f.opposite_vertex(g)) + b
                for nxt in cplx.face_neighbors(fid, g):
                    if nxt in visited:
                        continue
                    h = cplx.faces[nxt]
                    m2, b2 = glue_map(h.xy(p), h.xy(q), P, Q, h.xy(h.opposite_vertex(g)), away)
                    stack.append((nxt, m2, b2, g, visited + (nxt,), window))
    return best


def brute_force_geodesic(complex_: PolyComplex2D, s: Location, t: Location, max_faces: int = 12,
                         tol: Optional[float] = None) -> GeodesicPath:
    """Shortest polyline bending only at vertices, over every corridor of up to max_faces faces"""
    tol = get_settings().tol if tol is None else tol
    try:
        spots = {"@src": complex_.locate(s), "@dst": complex_.locate(t)}
    except Exception as e:
        raise UnknownLocation(str(e)) from e
    for v in complex_.vertices:
        spots[v] = complex_.locate(VertexPoint(v))
    graph = nx.DiGraph()
    for key in ["@src"] + list(complex_.vertices):
        targets = {k: spots[k] for k in list(complex_.vertices) + ["@dst"] if k != key}
        for other, length in _visible(complex_, spots[key], targets, max_faces, tol).items():
            graph.add_edge(key, other, weight=length)
    try:
        length, nodes = nx.single_source_dijkstra(graph, "@src", "@dst", weight="weight")
    except (nx.NetworkXNoPath, nx.NodeNotFound) as e:
        raise DepthExceeded(f"No corridor of at most {max_faces} faces joins the points") from e
    steps = tuple(PathStep("vertex", n) for n in nodes[1:-1])
    return GeodesicPath(float(length), steps)


# Structural checks

def verify_entry_lemmas(spm: ShortestPathMap, tol: Optional[float] = None) -> dict:
    """Every edge reached from one side, every face of a known type"""
    conflicts = _conflicts(spm)
    bad = {}
    if not conflicts:
        lsm = derive_last_step(spm, tol)
        bad = {fid: info.type for fid, info in lsm.faces.items() if info.type not in FACE_TYPES}
    report = {"ok": not conflicts and not bad, "edges": conflicts, "faces": bad}
    if not report["ok"]:
        logger.warning(f"Entry checks failed: {len(conflicts)} edges, {len(bad)} faces")
    return report


def branch_counts(spm: ShortestPathMap) -> dict:
    trees = {}
    crossings: Dict[str, int] = {}
    for root in spm.roots():
        nodes = spm.tree(root)
        by_id = {n.id: n for n in nodes}
        entered = [f for n in nodes for f in n.faces]
        repeated_branch = False
        for leaf in (n for n in nodes if not n.children):
            faces, cur = [], leaf
            while cur is not None:
                faces.extend(cur.faces)
                cur = by_id.get(cur.parent)
            repeated_branch = repeated_branch or len(faces) != len(set(faces))
        v, fid = spm.nodes[root].origin
        trees[f"{v}/{fid}/{root}"] = {
            "vertex": v,
            "face": fid,
            "branches": spm.branches(root),
            "faces_entered": len(entered),
            "repeats_in_branch": repeated_branch,
            "repeats_in_tree": len(entered) != len(set(entered)),
        }
        for f in entered:
            crossings[f] = crossings.get(f, 0) + 1
    return {"trees": trees, "faces": crossings}


@dataclass
class NaivePropagation:
    stalled: bool
    order: List[str]
    cycle: List[str]

    @property
    def cycle_faces(self) -> List[str]:
        return [n[len("face:"):] for n in self.cycle if n.startswith("face:")]


def _dependencies(lsm: LastStepMap) -> nx.DiGraph:
    g = nx.DiGraph()
    cplx = lsm.complex
    for v, reach in lsm.vertices.items():
        g.add_node(f"vertex:{v}")
        if reach.via == "edge":
            g.add_edge(f"vertex:{cplx.edges[reach.ref].other(v)}", f"vertex:{v}")
        elif reach.via == "face":
            g.add_edge(f"face:{reach.ref}", f"vertex:{v}")
    for e, tag in lsm.edges.items():
        g.add_edge(tag, f"edge:{e}")
    for fid, info in lsm.faces.items():
        g.add_node(f"face:{fid}")
        for e in info.edges:
            g.add_edge(f"edge:{e}", f"face:{fid}")
        if info.vertex is not None:
            g.add_edge(f"vertex:{info.vertex}", f"face:{fid}")
    return g


def naive_propagation(lsm: LastStepMap) -> NaivePropagation:
    """Fill in incoming information only once everything it depends on is known"""
    g = _dependencies(lsm)
    waiting = {n: g.in_degree(n) for n in g.nodes}
    ready = deque(sorted(n for n, k in waiting.items() if k == 0))
    order = []
    while ready:
        n = ready.popleft()
        order.append(n)
        for nxt in sorted(g.successors(n)):
            waiting[nxt] -= 1
            if waiting[nxt] == 0:
                ready.append(nxt)
    stuck = [n for n in g.nodes if waiting[n] > 0]
    cycle = []
    if stuck:
        cycle = [u for u, _ in nx.find_cycle(g.subgraph(stuck))]
        logger.info(f"Naive propagation stalled with {len(stuck)} items waiting; cycle of {len(cycle)}")
    return NaivePropagation(bool(stuck), order, cycle)


def region_growth(sizes: Sequence[int] = (10, 20, 40, 80), seed: int = 0,
                  factory: Optional[Callable] = None) -> pd.DataFrame:
    """Region counts against face counts, with the fitted constant of M = C n^2 in attrs["C"]"""
    if factory is None:
        from cat0.services.fixtures import random_manifold

        def factory(n, k):
            return random_manifold(k, n)

    rows = []
    for n in sizes:
        fixture = factory(n, seed)
        spm = build_spm(fixture.complex, VertexPoint(fixture.source))
        faces = len(fixture.complex.faces)
        rows.append({"n": n, "faces": faces, "regions": len(spm.regions),
                     "per_n2": len(spm.regions) / faces ** 2})
    df = pd.DataFrame(rows)
    df.attrs["C"] = float((df["regions"] * df["faces"] ** 2).sum() / (df["faces"] ** 4).sum())
    logger.info(f"Region growth over {list(sizes)}: C = {df.attrs['C']:.4g}")
    return df


# Generated complexes

@dataclass
class GeneratedComplex:
    description: dict
    complex: PolyComplex2D
    source: str
    # (vertex, face) of the boundary tree the construction is about
    root: Optional[Tuple[str, str]] = None


def _stage_exit(rho: float, phi: float, alpha: float, gamma: float, l_near: float, l_far: float,
                from_near: bool) -> Tuple[float, float]:
    """
    Follow a boundary copy through one stage.
    Frame: R at the origin, P on the positive x-axis, the copy crossing R-P at distance rho
    from R with angle phi to R->P. It runs through the face on R-P whose third vertex sits at
    angle alpha, then through g across R-near, and leaves g through its far edge.
    Returns (rho, phi) for the next stage, measured from the stage's X' vertex.
    """
    start = np.array([rho, 0.0])
    d = np.array([math.cos(phi), math.sin(phi)])
    near = l_near * np.array([math.cos(alpha), math.sin(alpha)])
    far = l_far * np.array([math.cos(alpha + gamma), math.sin(alpha + gamma)])
    # start + lam d = mu near
    lam1, mu = np.linalg.solve(np.column_stack([d, -near]), -start)
    if lam1 <= 0 or not 0 < mu < 1:
        raise DomainError(f"Boundary copy misses the near edge (mu={mu:.6g})")
    lam2, kappa = np.linalg.solve(np.column_stack([d, -(far - near)]), near - start)
    if lam2 <= lam1 or not 0 < kappa < 1:
        raise DomainError(f"Boundary copy misses the stage exit (kappa={kappa:.6g})")
    out = near + kappa * (far - near)
    x1, x2 = (near, far) if from_near else (far, near)
    u = _unit(x2 - x1)
    return float(np.linalg.norm(out - x1)), math.acos(max(-1.0, min(1.0, float(np.dot(u, d)))))


def gen_exponential_complex(n: int, mu: float = 1e-7) -> GeneratedComplex:
    """
    Boundary rays double at each stage of three faces.
    Each stage glues two faces on the previous exit edge, which then carries three faces,
    and closes them with a third face whose angle at the shared corner keeps the link cycle
    just above 2 pi. Stage lengths and angles adapt to the copies coming in.
    """
    if n < 0:
        raise DomainError("Stage count must be non-negative")
    delta = 0.2 * 3.0 ** -(max(n, 1) - 1)
    b = ComplexBuilder()
    z = np.array([0.5, 0.0])
    step = np.array([math.cos(delta), -math.sin(delta)])
    v = z + 1.5 * step
    s = v + step
    b.flat_face("h", {"s": tuple(s), "v": tuple(v), "p1": (1.0, 0.0)})
    b.flat_face("g0", {"v": tuple(v), "p1": (1.0, 0.0), "r1": (0.0, 0.0)})
    copies = [(0.5, PI - delta)]
    edge_len = 1.0
    for i in range(1, n + 1):
        r, p, x1, x2 = f"r{i}", f"p{i}", f"r{i + 1}", f"p{i + 1}"
        d_max = max(PI - phi for _, phi in copies)
        eps1, eps2 = 1.5 * d_max, PI / 3
        if eps2 <= d_max:
            raise DomainError(f"Stage {i} copies are too steep ({d_max:.6g})")
        alpha1, alpha2 = PI - eps1, PI - eps2
        gamma = 2 * PI - alpha1 - alpha2 + mu
        l1 = 2 * max(rho * math.sin(PI - phi) / math.sin(eps1 - (PI - phi)) for rho, phi in copies)
        l2 = 2 * max(rho * math.sin(PI - phi) / math.sin(eps2 - (PI - phi)) for rho, phi in copies)
        b.edge(r, x1, l1)
        b.edge(r, x2, l2)
        b.edge(p, x1, math.sqrt(edge_len ** 2 + l1 ** 2 - 2 * edge_len * l1 * math.cos(alpha1)))
        b.edge(p, x2, math.sqrt(edge_len ** 2 + l2 ** 2 - 2 * edge_len * l2 * math.cos(alpha2)))
        next_len = math.sqrt(l1 ** 2 + l2 ** 2 - 2 * l1 * l2 * math.cos(gamma))
        b.edge(x1, x2, next_len)
        b.face(f"f{i}a", r, p, x1)
        b.face(f"f{i}b", r, p, x2)
        b.face(f"g{i}", r, x1, x2)
        copies = [out for rho, phi in copies for out in (
            _stage_exit(rho, phi, alpha1, gamma, l1, l2, True),
            _stage_exit(rho, phi, alpha2, gamma, l2, l1, False),
        )]
        edge_len = next_len
        logger.debug(f"Stage {i}: {len(copies)} copies, steepest {max(PI - phi for _, phi in copies):.6g}")
    description = b.description()
    return GeneratedComplex(description, build_complex(description), "s", ("v", "g0"))


def gen_incoming_cycle(spokes: int = 6, tilt: float = math.radians(20), outer: float = 2.0) -> GeneratedComplex:
    """
    Flat disk around s whose ring faces are crossed in one rotational sense.
    Inner fan t_i = (s, a_i, a_i+1); ring faces u_i = (a_i, a_i+1, b_i+1) and d_i = (a_i, b_i, b_i+1)
    with the outer vertices turned by `tilt`, so every u_i waits on d_i+1 which waits on u_i+1.
    """
    b = ComplexBuilder()
    step = 2 * PI / spokes
    a = {i: (math.cos(i * step), math.sin(i * step)) for i in range(spokes)}
    o = {i: (outer * math.cos(i * step + tilt), outer * math.sin(i * step + tilt)) for i in range(spokes)}
    for i in range(spokes):
        j = (i + 1) % spokes
        b.flat_face(f"t{i}", {"s": (0.0, 0.0), f"a{i}": a[i], f"a{j}": a[j]})
        b.flat_face(f"u{i}", {f"a{i}": a[i], f"a{j}": a[j], f"b{j}": o[j]})
        b.flat_face(f"d{i}", {f"a{i}": a[i], f"b{i}": o[i], f"b{j}": o[j]})
    description = b.description()
    return GeneratedComplex(description, build_complex(description), "s")
