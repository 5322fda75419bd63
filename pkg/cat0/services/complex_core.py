"""
Finite 2D polyhedral complexes of Euclidean triangles
Link graphs, CAT(0) validation, planar unfolding and the comparison-triangle check
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from cat0.config import get_settings
from cat0.errors import (
    Disconnected,
    MalformedInput,
    NotAdjacent,
    PointNotInComplex,
    TriangleInequality,
    UnknownVertex,
)
from cat0.models import RectangularComplexIn, SingleVertexComplexIn, TriangulatedComplexIn, parse_complex

logger = logging.getLogger(__name__)

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class Edge:
    id: str
    ends: Tuple[str, str]
    length: float

    def other(self, v: str) -> str:
        return self.ends[1] if self.ends[0] == v else self.ends[0]


@dataclass(frozen=True)
class Face:
    id: str
    edges: Tuple[str, str, str]
    # v0, v1 span edges[0]; v2 is the apex opposite it
    vertices: Tuple[str, str, str]
    coords: Tuple[Tuple[float, float], ...]
    edge_ends: Tuple[Tuple[str, str], ...]
    rect: Optional[str] = None

    def xy(self, v: str) -> np.ndarray:
        return np.array(self.coords[self.vertices.index(v)])

    def edges_at(self, v: str) -> Tuple[str, str]:
        """The two edges of this face incident to v, in face order"""
        return tuple(e for e in self.edges if v in self._ends[e])

    def opposite_edge(self, v: str) -> str:
        return next(e for e in self.edges if v not in self._ends[e])

    def opposite_vertex(self, e: str) -> str:
        return next(v for v in self.vertices if v not in self._ends[e])

    def contains(self, x: float, y: float, tol: float) -> bool:
        """Inside or on the boundary of the canonical triangle, up to tol"""
        a, b, c = (np.array(p) for p in self.coords)
        lam = np.linalg.solve(np.column_stack([b - a, c - a]), np.array([x, y]) - a)
        return min(1 - lam.sum(), lam[0], lam[1]) >= -tol

    @property
    def _ends(self) -> Dict[str, Tuple[str, str]]:
        return dict(zip(self.edges, self.edge_ends))


@dataclass(frozen=True)
class FacePoint:
    face: str
    x: float
    y: float


@dataclass(frozen=True)
class EdgePoint:
    edge: str
    t: float


@dataclass(frozen=True)
class VertexPoint:
    vertex: str


Location = Union[FacePoint, EdgePoint, VertexPoint]


def angle_from_sides(a: float, b: float, c: float) -> float:
    """Interior angle between sides a and b, opposite side c"""
    cos = (a * a + b * b - c * c) / (2 * a * b)
    return math.acos(max(-1.0, min(1.0, cos)))


def triangle_coords(l01: float, l02: float, l12: float) -> Tuple[Tuple[float, float], ...]:
    x = (l01 * l01 + l02 * l02 - l12 * l12) / (2 * l01)
    y = math.sqrt(max(0.0, l02 * l02 - x * x))
    return ((0.0, 0.0), (l01, 0.0), (x, y))


class PolyComplex2D:
    """Immutable complex of triangles glued along edges, with adjacency indices"""

    def __init__(self, vertices: Sequence[str], edges: Dict[str, Edge], faces: Dict[str, Face],
                 rect_faces: Optional[Dict[str, Tuple[str, str]]] = None):
        self.vertices = list(vertices)
        self.edges = edges
        self.faces = faces
        self.rect_faces = rect_faces or {}
        self.edge_faces: Dict[str, List[str]] = {e: [] for e in edges}
        self.vertex_edges: Dict[str, List[str]] = {v: [] for v in self.vertices}
        self.vertex_faces: Dict[str, List[str]] = {v: [] for v in self.vertices}
        for e in edges.values():
            for v in e.ends:
                self.vertex_edges[v].append(e.id)
        for f in faces.values():
            for e in f.edges:
                self.edge_faces[e].append(f.id)
            for v in f.vertices:
                self.vertex_faces[v].append(f.id)
        self._links: Dict[str, "LinkGraph"] = {}

    @property
    def is_rectangular(self) -> bool:
        return bool(self.rect_faces)

    def angle(self, face: str, v: str) -> float:
        f = self.faces[face]
        ea, eb = f.edges_at(v)
        opp = f.opposite_edge(v)
        return angle_from_sides(self.edges[ea].length, self.edges[eb].length, self.edges[opp].length)

    def face_neighbors(self, face: str, edge: str) -> List[str]:
        return [g for g in self.edge_faces[edge] if g != face]

    def is_manifold(self) -> bool:
        return all(len(fs) <= 2 for fs in self.edge_faces.values())

    def link(self, v: str) -> "LinkGraph":
        if v not in self._links:
            self._links[v] = link_graph(self, v)
        return self._links[v]

    def locate(self, p: Location) -> List[Tuple[str, np.ndarray]]:
        """Canonical coordinates of a point in every face containing it"""
        if isinstance(p, FacePoint):
            if p.face not in self.faces:
                raise PointNotInComplex(f"Unknown face {p.face}")
            if not self.faces[p.face].contains(p.x, p.y, get_settings().tol):
                raise PointNotInComplex(f"Point ({p.x}, {p.y}) lies outside face {p.face}")
            return [(p.face, np.array([p.x, p.y]))]
        if isinstance(p, EdgePoint):
            if p.edge not in self.edges:
                raise PointNotInComplex(f"Unknown edge {p.edge}")
            e = self.edges[p.edge]
            if p.t < 0 or p.t > e.length + get_settings().tol:
                raise PointNotInComplex(f"Edge parameter {p.t} outside [0, {e.length}]")
            out = []
            for fid in self.edge_faces[e.id]:
                f = self.faces[fid]
                a, b = f.xy(e.ends[0]), f.xy(e.ends[1])
                out.append((fid, a + (b - a) * (p.t / e.length)))
            return out
        if isinstance(p, VertexPoint):
            if p.vertex not in self.vertex_faces:
                raise PointNotInComplex(f"Unknown vertex {p.vertex}")
            return [(fid, self.faces[fid].xy(p.vertex)) for fid in self.vertex_faces[p.vertex]]
        raise PointNotInComplex(f"Unsupported location {p!r}")


def _make_face(fid: str, edge_ids: Sequence[str], edges: Dict[str, Edge], rect: Optional[str] = None) -> Face:
    for e in edge_ids:
        if e not in edges:
            raise MalformedInput(f"Face {fid} references unknown edge {e}")
    e0, e1, e2 = (edges[e] for e in edge_ids)
    shared = [set(a.ends) & set(b.ends) for a, b in ((e0, e1), (e1, e2), (e2, e0))]
    if any(len(s) != 1 for s in shared) or len(set().union(*shared)) != 3:
        raise MalformedInput(f"Edges of face {fid} do not form a triangle")
    v0, v1 = e0.ends
    v2 = next(iter(set(e1.ends) - set(e0.ends)))
    lengths = {frozenset(e.ends): e.length for e in (e0, e1, e2)}
    l01, l02, l12 = lengths[frozenset((v0, v1))], lengths[frozenset((v0, v2))], lengths[frozenset((v1, v2))]
    for a, b, c in ((l01, l02, l12), (l02, l12, l01), (l12, l01, l02)):
        if not a + b > c:
            raise TriangleInequality(f"Face {fid} has sides {l01}, {l02}, {l12}")
    return Face(fid, tuple(edge_ids), (v0, v1, v2), triangle_coords(l01, l02, l12),
                (e0.ends, e1.ends, e2.ends), rect)


def _check_connected(complex_: PolyComplex2D):
    g = nx.Graph()
    g.add_nodes_from(complex_.vertices)
    g.add_edges_from(e.ends for e in complex_.edges.values())
    if complex_.vertices and not nx.is_connected(g):
        raise Disconnected(f"Complex has {nx.number_connected_components(g)} components")


def build_complex(description) -> PolyComplex2D:
    """Validate a JSON description and build the indexed complex"""
    desc = description
    if isinstance(description, dict):
        desc = parse_complex(description)
    if isinstance(desc, SingleVertexComplexIn):
        raise MalformedInput("Single-vertex complexes are built by single_vertex.build_single_vertex")
    vertices = list(desc.vertices)
    if len(set(vertices)) != len(vertices):
        raise MalformedInput("Duplicate vertex ids")
    known = set(vertices)
    edges: Dict[str, Edge] = {}
    for e in desc.edges:
        if e.id in edges:
            raise MalformedInput(f"Duplicate edge id {e.id}")
        if any(v not in known for v in e.ends) or e.ends[0] == e.ends[1]:
            raise MalformedInput(f"Edge {e.id} has invalid ends {e.ends}")
        edges[e.id] = Edge(e.id, tuple(e.ends), e.length or 0.0)

    faces: Dict[str, Face] = {}
    rect_faces: Dict[str, Tuple[str, str]] = {}
    if isinstance(desc, TriangulatedComplexIn):
        for e in desc.edges:
            if e.length is None:
                raise MalformedInput(f"Edge {e.id} is missing its length")
        for f in desc.faces:
            if f.id in faces:
                raise MalformedInput(f"Duplicate face id {f.id}")
            faces[f.id] = _make_face(f.id, f.edges, edges)
    elif isinstance(desc, RectangularComplexIn):
        for r in desc.rects:
            faces.update(_triangulate_rect(r, edges))
            rect_faces[r.id] = (f"{r.id}/a", f"{r.id}/b")
        missing = [e for e in edges.values() if e.length <= 0]
        if missing:
            raise MalformedInput(f"Edge {missing[0].id} is not part of any rectangle")
    complex_ = PolyComplex2D(vertices, edges, faces, rect_faces)
    _check_connected(complex_)
    logger.info(f"Built complex: {len(vertices)} vertices, {len(edges)} edges, {len(faces)} faces")
    return complex_


def _triangulate_rect(r, edges: Dict[str, Edge]) -> Dict[str, Face]:
    for e in r.edges:
        if e not in edges:
            raise MalformedInput(f"Rectangle {r.id} references unknown edge {e}")
    sides = [edges[e] for e in r.edges]
    for side, length in zip(sides, (r.width, r.height, r.width, r.height)):
        if side.length and abs(side.length - length) > get_settings().tol:
            raise MalformedInput(f"Edge {side.id} length disagrees with rectangle {r.id}")
        edges[side.id] = Edge(side.id, side.ends, length)
    corners = []
    for a, b in ((3, 0), (0, 1), (1, 2), (2, 3)):
        common = set(sides[a].ends) & set(sides[b].ends)
        if len(common) != 1:
            raise MalformedInput(f"Edges of rectangle {r.id} are not a 4-cycle")
        corners.append(common.pop())
    if len(set(corners)) != 4:
        raise MalformedInput(f"Rectangle {r.id} has repeated corners")
    diag = Edge(f"{r.id}/d", (corners[0], corners[2]), math.hypot(r.width, r.height))
    edges[diag.id] = diag
    return {
        f"{r.id}/a": _make_face(f"{r.id}/a", (r.edges[0], r.edges[1], diag.id), edges, r.id),
        f"{r.id}/b": _make_face(f"{r.id}/b", (r.edges[2], r.edges[3], diag.id), edges, r.id),
    }


# Link graphs

@dataclass
class LinkGraph:
    """Link of a vertex: nodes are incident edges, arcs are incident faces keyed by face id"""
    anchor: str
    graph: nx.MultiGraph
    arcs: Dict[str, Tuple[str, str, float]] = field(default_factory=dict)
    # Split arcs remember (original arc, offset of their first node)
    parents: Dict[str, Tuple[str, float]] = field(default_factory=dict)

    def weight(self, arc: str) -> float:
        return self.arcs[arc][2]

    def parent(self, arc: str) -> Tuple[str, float]:
        return self.parents.get(arc, (arc, 0.0))

    def total_weight(self) -> float:
        return sum(w for _, _, w in self.arcs.values())


def link_graph(complex_, v: str) -> LinkGraph:
    if not isinstance(complex_, PolyComplex2D):
        if v != getattr(complex_, "origin", None):
            raise UnknownVertex(f"Unknown vertex {v}")
        return complex_.link
    if v not in complex_.vertex_edges:
        raise UnknownVertex(f"Unknown vertex {v}")
    g = nx.MultiGraph()
    g.add_nodes_from(complex_.vertex_edges[v])
    arcs = {}
    for fid in complex_.vertex_faces[v]:
        ea, eb = complex_.faces[fid].edges_at(v)
        w = complex_.angle(fid, v)
        g.add_edge(ea, eb, key=fid, weight=w)
        arcs[fid] = (ea, eb, w)
    return LinkGraph(v, g, arcs)


@dataclass(frozen=True)
class LinkCycle:
    length: float
    arcs: Tuple[str, ...]
    nodes: Tuple[str, ...]


def path_arcs(graph: nx.MultiGraph, nodes: Sequence, exclude=None) -> List:
    """Lightest parallel arc between consecutive path nodes"""
    arcs = []
    for u, v in zip(nodes, nodes[1:]):
        options = [(d["weight"], k) for k, d in graph[u][v].items() if k != exclude]
        arcs.append(min(options)[1])
    return arcs


def shortest_link_cycle(g: Union[LinkGraph, nx.MultiGraph]) -> Optional[LinkCycle]:
    """Minimum-weight cycle: drop each arc in turn and join its ends by a shortest path"""
    graph = g.graph if isinstance(g, LinkGraph) else g
    best: Optional[LinkCycle] = None
    for u, v, key, w in sorted(graph.edges(keys=True, data="weight"), key=lambda t: str(t[2])):
        if u == v:
            cand = LinkCycle(w, (key,), (u,))
        else:
            def weight(a, b, d, key=key):
                ws = [attr["weight"] for k, attr in d.items() if k != key]
                return min(ws) if ws else None

            try:
                dist, nodes = nx.single_source_dijkstra(graph, u, v, weight=weight)
            except nx.NetworkXNoPath:
                continue
            cand = LinkCycle(dist + w, tuple(path_arcs(graph, nodes, exclude=key)) + (key,), tuple(nodes))
        if best is None or cand.length < best.length:
            best = cand
    return best


def _first_homology_rank(complex_: PolyComplex2D) -> int:
    if not complex_.faces:
        return len(complex_.edges) - len(complex_.vertices) + 1
    edge_index = {e: i for i, e in enumerate(complex_.edges)}
    boundary = np.zeros((len(complex_.edges), len(complex_.faces)))
    for j, f in enumerate(complex_.faces.values()):
        cycle = list(f.vertices) + [f.vertices[0]]
        for a, b in zip(cycle, cycle[1:]):
            e = next(e for e in f.edges if set(complex_.edges[e].ends) == {a, b})
            boundary[edge_index[e], j] = 1 if complex_.edges[e].ends == (a, b) else -1
    cycle_rank = len(complex_.edges) - len(complex_.vertices) + 1
    return cycle_rank - int(np.linalg.matrix_rank(boundary))


def validate_cat0(complex_, tol: Optional[float] = None) -> dict:
    """Link condition at every vertex plus the simple-connectivity proxy"""
    tol = get_settings().tol if tol is None else tol
    violations = []
    links = _links_of(complex_)
    for v, link in links.items():
        cycle = shortest_link_cycle(link)
        if cycle is not None and cycle.length < TWO_PI - tol:
            violations.append({
                "vertex": v,
                "kind": "short_link_cycle",
                "length": cycle.length,
                "cycle": list(cycle.arcs),
                "detail": f"link cycle of length {cycle.length:.12g} < 2π",
            })
    if isinstance(complex_, PolyComplex2D):
        rank = _first_homology_rank(complex_)
        if rank != 0:
            violations.append({
                "vertex": "",
                "kind": "homology",
                "detail": f"first homology has rank {rank}",
            })
    ok = not violations
    logger.info(f"CAT(0) validation: ok={ok}, {len(violations)} violations")
    return {"ok": ok, "violations": violations}


def _links_of(complex_) -> Dict[str, LinkGraph]:
    if isinstance(complex_, PolyComplex2D):
        return {v: complex_.link(v) for v in complex_.vertices}
    # Single-vertex complexes carry their own origin link
    return {complex_.origin: complex_.link}


# Planar layouts

@dataclass
class PlanarLayout:
    faces: List[str]
    shared_edges: List[str]
    # Affine maps canonical -> plane: x' = A @ x + b
    maps: List[Tuple[np.ndarray, np.ndarray]]

    def place(self, i: int, xy) -> np.ndarray:
        a, b = self.maps[i]
        return a @ np.asarray(xy, dtype=float) + b

    def vertex_image(self, complex_: PolyComplex2D, i: int, v: str) -> np.ndarray:
        return self.place(i, complex_.faces[self.faces[i]].xy(v))


def _perp(u: np.ndarray) -> np.ndarray:
    return np.array([-u[1], u[0]])


def _side(p: np.ndarray, q: np.ndarray, x: np.ndarray) -> float:
    d = q - p
    return d[0] * (x[1] - p[1]) - d[1] * (x[0] - p[0])


def glue_map(src_p, src_q, dst_p, dst_q, src_apex, away_from) -> Tuple[np.ndarray, np.ndarray]:
    """Rigid map sending src_p->dst_p, src_q->dst_q, with src_apex opposite away_from"""
    u_src = (src_q - src_p) / np.linalg.norm(src_q - src_p)
    u_dst = (dst_q - dst_p) / np.linalg.norm(dst_q - dst_p)
    basis_src = np.column_stack([u_src, _perp(u_src)])
    for sign in (1.0, -1.0):
        basis_dst = np.column_stack([u_dst, sign * _perp(u_dst)])
        a = basis_dst @ basis_src.T
        b = dst_p - a @ src_p
        apex = a @ src_apex + b
        if away_from is None or _side(dst_p, dst_q, apex) * _side(dst_p, dst_q, away_from) < 0:
            return a, b
    return a, b


def unfold(complex_: PolyComplex2D, face_sequence: Sequence[str], shared_edge_sequence: Sequence[str]) -> PlanarLayout:
    """Lay consecutive faces in the plane, each reflected across its shared edge"""
    if len(shared_edge_sequence) != max(0, len(face_sequence) - 1):
        raise NotAdjacent("Need exactly one shared edge between consecutive faces")
    maps = [(np.eye(2), np.zeros(2))]
    layout_tol = get_settings().layout_tol
    for i, e in enumerate(shared_edge_sequence):
        f, g = complex_.faces[face_sequence[i]], complex_.faces[face_sequence[i + 1]]
        if e not in f.edges or e not in g.edges:
            raise NotAdjacent(f"Faces {f.id} and {g.id} do not share edge {e}")
        p, q = complex_.edges[e].ends
        a, b = maps[-1]
        dst_p, dst_q = a @ f.xy(p) + b, a @ f.xy(q) + b
        apex_prev = a @ f.xy(f.opposite_vertex(e)) + b
        new = glue_map(g.xy(p), g.xy(q), dst_p, dst_q, g.xy(g.opposite_vertex(e)), apex_prev)
        length = complex_.edges[e].length
        if abs(np.linalg.norm(dst_q - dst_p) - length) > 16 * (i + 1) * layout_tol * max(1.0, length):
            logger.warning(f"Layout drift on edge {e}: {np.linalg.norm(dst_q - dst_p)} vs {length}")
        maps.append(new)
    return PlanarLayout(list(face_sequence), list(shared_edge_sequence), maps)


def cat0_sample_check(complex_, a, b, c, geodesic_oracle: Callable, samples: int = 64,
                      tol: Optional[float] = None) -> bool:
    """CAT(0) inequality along the geodesic b-c against the Euclidean comparison triangle"""
    tol = get_settings().tol if tol is None else tol
    ab = geodesic_oracle(a, b).length
    ac = geodesic_oracle(a, c).length
    bc_path = geodesic_oracle(b, c)
    bc = bc_path.length
    pa = np.array([0.0, 0.0])
    pb = np.array([ab, 0.0])
    if ab > 0:
        x = (ab * ab + ac * ac - bc * bc) / (2 * ab)
        pc = np.array([x, math.sqrt(max(0.0, ac * ac - x * x))])
    else:
        pc = np.array([ac, 0.0])
    for k in range(samples):
        s = (k + 0.5) / samples
        y = bc_path.point_at(s)
        comparison = float(np.linalg.norm(pb + s * (pc - pb) - pa))
        actual = geodesic_oracle(y, a).length
        if actual > comparison + tol:
            logger.debug(f"CAT(0) inequality fails at s={s}: {actual} > {comparison}")
            return False
    return True


# Descriptions

class ComplexBuilder:
    """Collects vertices, edges and triangles and emits a triangulated description"""

    def __init__(self):
        self.vertices: List[str] = []
        self.edges: Dict[frozenset, dict] = {}
        self.faces: List[dict] = []

    def vertex(self, v: str) -> str:
        if v not in self.vertices:
            self.vertices.append(v)
        return v

    def edge(self, a: str, b: str, length: float) -> str:
        key = frozenset((a, b))
        if key in self.edges:
            known = self.edges[key]["length"]
            if abs(known - length) > 1e-9 * max(1.0, length):
                raise MalformedInput(f"Edge {a}-{b} given lengths {known} and {length}")
            return self.edges[key]["id"]
        self.vertex(a)
        self.vertex(b)
        eid = f"{a}-{b}"
        self.edges[key] = {"id": eid, "ends": [a, b], "length": float(length)}
        return eid

    def face(self, fid: str, a: str, b: str, c: str) -> str:
        ids = []
        for p, q in ((a, b), (b, c), (c, a)):
            key = frozenset((p, q))
            if key not in self.edges:
                raise MalformedInput(f"Face {fid} needs edge {p}-{q} first")
            ids.append(self.edges[key]["id"])
        self.faces.append({"id": fid, "edges": ids})
        return fid

    def flat_face(self, fid: str, corners: Dict[str, Sequence[float]]) -> str:
        """Triangle given by planar corner positions"""
        (a, pa), (b, pb), (c, pc) = corners.items()
        for (p, xp), (q, xq) in (((a, pa), (b, pb)), ((b, pb), (c, pc)), ((c, pc), (a, pa))):
            self.edge(p, q, math.dist(xp, xq))
        return self.face(fid, a, b, c)

    def description(self) -> dict:
        return {
            "kind": "triangulated",
            "vertices": list(self.vertices),
            "edges": list(self.edges.values()),
            "faces": list(self.faces),
        }


def describe(complex_: PolyComplex2D) -> dict:
    """Triangulated description of a built complex (rectangles appear as their two triangles)"""
    return {
        "kind": "triangulated",
        "vertices": list(complex_.vertices),
        "edges": [{"id": e.id, "ends": list(e.ends), "length": e.length} for e in complex_.edges.values()],
        "faces": [{"id": f.id, "edges": list(f.edges)} for f in complex_.faces.values()],
    }
