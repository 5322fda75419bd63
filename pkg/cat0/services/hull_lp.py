"""
Convex hulls in single-vertex complexes
Linear programs over inverse crossing distances, per-cell polygons, the iterative oracle and peeling
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, Iterable, List, Literal, Mapping, Optional, Tuple, Union

import networkx as nx
import pandas as pd
from shapely.geometry import MultiPoint, Point
from shapely.geometry.polygon import orient

from cat0.config import get_settings
from cat0.errors import DomainError, LPInfeasible, LPUnbounded, MalformedInput, NumericalBreakdown
from cat0.services import simplex
from cat0.services.simplex import LinearProgram, LPStatus
from cat0.services.single_vertex import (
    AT_LEAST_PI,
    ORIGIN,
    ConePoint,
    LinkPoint,
    SingleVertexComplex,
    _labelled,
    _link_path,
    geodesic,
    geodesic_point,
    hull_edge_support,
    origin_in_hull,
)

logger = logging.getLogger(__name__)

Arith = Literal["auto", "float", "rational"]


def crossing_formula(x_e: float, x_f: float, gamma1: float, gamma2: float) -> float:
    """Where the segment from x_e on e to x_f on f meets a ray gamma1 past e"""
    if x_e <= 0 or x_f <= 0:
        raise DomainError(f"Crossing needs positive radii, got {x_e}, {x_f}")
    if gamma1 <= 0 or gamma2 <= 0 or gamma1 + gamma2 >= math.pi:
        raise DomainError(f"Angles {gamma1}, {gamma2} outside the open triangle range")
    return x_e * x_f * math.sin(gamma1 + gamma2) / (x_e * math.sin(gamma1) + x_f * math.sin(gamma2))


# Augmentation

@dataclass
class AugmentedComplex:
    base: SingleVertexComplex
    complex: SingleVertexComplex
    # label -> point re-expressed on a ray of `complex` (or ORIGIN)
    points: Dict[str, ConePoint]
    new_rays: Dict[str, str] = field(default_factory=dict)

    def ray_of(self, label: str) -> Optional[str]:
        p = self.points[label]
        return None if p.is_origin else p.direction.node


def augment(c: SingleVertexComplex, points) -> AugmentedComplex:
    """One new ray through each distinct interior point direction"""
    points = _labelled(points)
    inserts = []
    for p in points.values():
        if not p.is_origin:
            d = c.direction(p.direction)
            if d.arc is not None:
                inserts.append((d.arc, d.offset))
    aug, nodes = c.insert_rays(inserts)
    on_rays = {}
    for label, p in points.items():
        if p.is_origin:
            on_rays[label] = ORIGIN
            continue
        d = c.direction(p.direction)
        ray = d.node if d.arc is None else nodes[(d.arc, d.offset)]
        on_rays[label] = ConePoint(LinkPoint(node=ray), p.radius, p.coords)
    new_rays = {n: aug.original(aug.ray_cones[n][0])[0] for n in aug.rays if n not in c.link.graph}
    logger.debug(f"Augmented with {len(new_rays)} rays")
    return AugmentedComplex(c, aug, on_rays, new_rays)


# LP construction

@dataclass
class HullLP:
    lp: LinearProgram
    support: List[str]
    paired: bool = False
    # row label -> (e, f, crossed ray, gamma1, gamma2)
    provenance: Dict[str, Tuple[str, str, str, float, float]] = field(default_factory=dict)

    def index(self, ray: str, which: str = "") -> int:
        i = self.support.index(ray)
        if not self.paired:
            return i
        return 2 * i + (1 if which == "min" else 0)


def _crossed(link_complex: SingleVertexComplex, e: str, f: str, tol: float):
    """Every shortest link path e -> f below pi, as (ray, gamma1, gamma2) triples per path"""
    d, path = _link_path(link_complex.link, e, f, tol)
    if d is AT_LEAST_PI:
        return None, []
    paths = [path]
    try:
        paths = list(nx.all_shortest_paths(link_complex.link.graph, e, f, weight="weight"))
    except nx.NetworkXNoPath:
        pass
    out = []
    for nodes in paths:
        cum, crossings = 0.0, []
        for u, v in zip(nodes, nodes[1:]):
            cum += min(w for w in (a["weight"] for a in link_complex.link.graph[u][v].values()))
            if v != f:
                crossings.append((v, cum, d - cum))
        out.append(crossings)
    return d, out


def _point_rows(lp: LinearProgram, hull_lp: HullLP, ac: AugmentedComplex, cast):
    for label, p in ac.points.items():
        if p.is_origin:
            continue
        ray = p.direction.node
        inv = cast(1) / cast(p.radius)
        row = [cast(0)] * lp.num_vars
        row[hull_lp.index(ray)] = cast(1)
        lp.add_row(row, "<=", inv, f"point {label} on {ray}")
        if hull_lp.paired:
            row = [cast(0)] * lp.num_vars
            row[hull_lp.index(ray, "min")] = cast(1)
            lp.add_row(row, ">=", inv, f"point {label} on {ray} (min)")


def _pair_rows(lp: LinearProgram, hull_lp: HullLP, ac: AugmentedComplex, tol: float, which: str = ""):
    n = 0
    relation = ">=" if which == "min" else "<="
    for e, f in combinations(hull_lp.support, 2):
        d, paths = _crossed(ac.complex, e, f, tol)
        for crossings in paths:
            for ray, g1, g2 in crossings:
                if ray not in hull_lp.support:
                    continue
                s = math.sin(g1 + g2)
                row = [0.0] * lp.num_vars
                row[hull_lp.index(ray, which)] += 1.0
                row[hull_lp.index(f, which)] -= math.sin(g1) / s
                row[hull_lp.index(e, which)] -= math.sin(g2) / s
                label = f"{e}-{f} over {ray}" + (" (min)" if which else "")
                lp.add_row(row, relation, 0.0, label)
                hull_lp.provenance[label] = (e, f, ray, g1, g2)
                n += 1
    return n


def build_lp_origin_inside(ac: AugmentedComplex, support: Iterable[str], tol: Optional[float] = None) -> HullLP:
    """max Σ y_ℓ over y_ℓ = 1/x_ℓ"""
    tol = get_settings().tol if tol is None else tol
    support = sorted(support)
    lp = LinearProgram([1.0] * len(support), names=[f"y[{r}]" for r in support])
    hull_lp = HullLP(lp, support)
    _point_rows(lp, hull_lp, ac, float)
    n = _pair_rows(lp, hull_lp, ac, tol)
    logger.info(f"Origin-inside LP: {lp.num_vars} variables, {len(lp.rows)} rows ({n} crossing rows)")
    return hull_lp


def build_lp_origin_outside(ac: AugmentedComplex, support: Iterable[str], tol: Optional[float] = None) -> HullLP:
    """max Σ (y_max - y_min) with y_max bounded above and y_min below"""
    tol = get_settings().tol if tol is None else tol
    support = sorted(support)
    names = [f"y{w}[{r}]" for r in support for w in ("max", "min")]
    objective = [1.0 if i % 2 == 0 else -1.0 for i in range(2 * len(support))]
    lp = LinearProgram(objective, names=names)
    hull_lp = HullLP(lp, support, paired=True)
    _point_rows(lp, hull_lp, ac, float)
    n = _pair_rows(lp, hull_lp, ac, tol)
    n += _pair_rows(lp, hull_lp, ac, tol, "min")
    for ray in support:
        row = [0.0] * lp.num_vars
        row[hull_lp.index(ray, "min")] = 1.0
        row[hull_lp.index(ray)] = -1.0
        lp.add_row(row, ">=", 0.0, f"order on {ray}")
    logger.info(f"Origin-outside LP: {lp.num_vars} variables, {len(lp.rows)} rows ({n} crossing rows)")
    return hull_lp


def _exact_coords(c: SingleVertexComplex, p: ConePoint) -> Tuple[str, Fraction, Fraction]:
    """(cone, along first ray, along second ray) for a point inside a right-angled cone"""
    d = c.direction(p.direction)
    if p.coords is not None:
        return d.arc, Fraction(p.coords[0]), Fraction(p.coords[1])
    return d.arc, Fraction(p.radius * math.cos(d.offset)), Fraction(p.radius * math.sin(d.offset))


def _quadrant_image(c: SingleVertexComplex, p: ConePoint, near: str, first: bool):
    """Exact plane image of p: its quadrant is laid with `near` on +x and the far ray on -y (first) or +y"""
    d = c.direction(p.direction)
    if d.arc is None:
        # On the ray right-angled to `near`
        r = Fraction(p.radius)
        return (Fraction(0), -r) if first else (Fraction(0), r)
    cone, u, v = _exact_coords(c, p)
    r0, r1 = c.cones[cone].rays
    along, across = (u, v) if r0 == near else (v, u)
    return (along, -across) if first else (along, across)


def _rotate(xy, quarter_turns: int):
    x, y = xy
    for _ in range(quarter_turns % 4):
        x, y = -y, x
    return x, y


def _exact_crossings(c: SingleVertexComplex, p: ConePoint, q: ConePoint, crossed: List[str]):
    """Exact crossing radii of the p-q geodesic with consecutive right-angled rays"""
    k = len(crossed)
    a = _quadrant_image(c, p, crossed[0], first=True)
    b = _rotate(_quadrant_image(c, q, crossed[-1], first=False), k - 1)
    out = []
    for j, ray in enumerate(crossed):
        dx, dy = _rotate((Fraction(1), Fraction(0)), j)
        # Solve cross(D, a + s (b - a)) = 0
        num = dx * a[1] - dy * a[0]
        den = dx * (b[1] - a[1]) - dy * (b[0] - a[0])
        s = -num / den
        x, y = a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])
        out.append((ray, dx * x + dy * y))
    return out


def cube_rows(c: SingleVertexComplex, points, support: Iterable[str], tol: Optional[float] = None) -> HullLP:
    """Exact rows for right-angled complexes, without new rays through the points"""
    tol = get_settings().tol if tol is None else tol
    points = _labelled(points)
    support = sorted(support)
    zero, one = Fraction(0), Fraction(1)
    lp = LinearProgram([one] * len(support), field="rational", names=[f"y[{r}]" for r in support])
    hull_lp = HullLP(lp, support)
    ring = {label: p for label, p in points.items() if not p.is_origin}

    def row_for(ray):
        row = [zero] * len(support)
        row[support.index(ray)] = one
        return row

    for label, p in ring.items():
        d = c.direction(p.direction)
        if d.arc is None and d.node in support:
            lp.add_row(row_for(d.node), "<=", one / Fraction(p.radius), f"point {label} on {d.node}")
    # Point and variable: y_ℓ <= (h y_f + 1) / v
    for label, p in ring.items():
        d = c.direction(p.direction)
        if d.arc is None:
            continue
        cone, u, v = _exact_coords(c, p)
        for ell, h_coord, v_coord in ((c.cones[cone].rays[0], v, u), (c.cones[cone].rays[1], u, v)):
            if ell not in support or v_coord <= 0 or h_coord <= 0:
                continue
            for other in c.ray_cones[ell]:
                if other == cone:
                    continue
                f = next(r for r in c.cones[other].rays if r != ell)
                if f not in support:
                    continue
                row = row_for(ell)
                row[support.index(f)] -= h_coord / v_coord
                lp.add_row(row, "<=", one / v_coord, f"point {label} to {f} over {ell}")
    # Point pairs give constant rows
    for (la, p), (lb, q) in combinations(ring.items(), 2):
        g = geodesic(c, p, q, tol)
        if g.through_origin or not g.crossings:
            continue
        for ray, t in _exact_crossings(c, p, q, [r for r, _ in g.crossings]):
            if ray in support and t > 0:
                lp.add_row(row_for(ray), "<=", one / t, f"points {la}-{lb} over {ray}")
    logger.info(f"Cube LP: {lp.num_vars} variables, {len(lp.rows)} rows")
    return hull_lp


# Solving

@dataclass
class Crossing:
    ray: str
    x: Optional[float] = None
    x_min: Optional[float] = None
    x_max: Optional[float] = None

    @property
    def far(self) -> float:
        return self.x if self.x is not None else self.x_max


@dataclass
class HullResult:
    origin_in_hull: bool
    crossings: Dict[str, Crossing]
    cells: Dict[str, object]
    support: List[str]
    complex: SingleVertexComplex
    points: Dict[str, ConePoint]
    method: str = "trivial"
    lp_stats: Dict[str, int] = field(default_factory=lambda: {"vars": 0, "rows": 0, "pivots": 0})
    hull_lp: Optional[HullLP] = None
    witness: Optional[tuple] = None

    def polygon(self, cone: str) -> List[List[float]]:
        geom = self.cells[cone]
        if geom.geom_type == "Polygon":
            return [list(xy) for xy in list(orient(geom, 1.0).exterior.coords)[:-1]]
        if geom.geom_type == "Point":
            return [[geom.x, geom.y]]
        return [list(xy) for xy in geom.coords]


def _run(lp: LinearProgram, arith: Arith):
    field_ = "rational" if arith == "rational" else lp.field if arith == "auto" else "float"
    try:
        return simplex.solve(lp.converted(field_)), field_
    except NumericalBreakdown as e:
        if field_ == "rational":
            raise
        logger.warning(f"Float LP broke down ({e}); retrying with rationals")
        return simplex.solve(lp.converted("rational")), "rational"


def _invert(y, ray: str) -> float:
    if y <= 0:
        raise LPUnbounded(f"Crossing on {ray} at infinity")
    return float(1 / y)


def solve_hull(c: SingleVertexComplex, points, arith: Arith = "auto", tol: Optional[float] = None) -> HullResult:
    """Convex hull of a finite point set, as crossings on support rays plus one polygon per cone"""
    tol = get_settings().tol if tol is None else tol
    points = _labelled(points)
    if not points:
        raise MalformedInput("Empty point set")
    test = origin_in_hull(c, points, tol)
    ring = {k: p for k, p in points.items() if not p.is_origin}
    if not ring:
        return HullResult(True, {}, {}, [], c, points, witness=test.witness)
    if len(points) == 1:
        (p,) = ring.values()
        d = c.direction(p.direction)
        crossings = {d.node: Crossing(d.node, x=float(p.radius))} if d.node is not None else {}
        logger.info("Hull of a single point")
        return HullResult(False, crossings, _cells(c, c, crossings, ring, False), sorted(crossings), c, points,
                          witness=test.witness)

    if test.in_hull and c.is_cube(tol):
        support = sorted(hull_edge_support(c, points, tol))
        hull_lp = cube_rows(c, points, support, tol)
        sol, used = _run(hull_lp.lp, "rational" if arith == "auto" else arith)
        _check(sol)
        crossings = {r: Crossing(r, x=_invert(sol.point[i], r)) for i, r in enumerate(support)}
        cells = _cells(c, c, crossings, ring, True)
        method = "cube"
    else:
        ac = augment(c, points)
        support = sorted(hull_edge_support(ac.complex, ac.points, tol))
        build = build_lp_origin_inside if test.in_hull else build_lp_origin_outside
        hull_lp = build(ac, support, tol)
        sol, used = _run(hull_lp.lp, arith)
        _check(sol)
        if test.in_hull:
            crossings = {r: Crossing(r, x=_invert(sol.point[i], r)) for i, r in enumerate(support)}
        else:
            crossings = {}
            for r in support:
                y_max, y_min = sol.point[hull_lp.index(r)], sol.point[hull_lp.index(r, "min")]
                crossings[r] = Crossing(r, x_min=_invert(y_min, r), x_max=_invert(y_max, r))
        cells = _cells(c, ac.complex, crossings, ring, test.in_hull)
        method = "general"
    logger.info(f"Hull via {method} LP ({used}): {len(support)} support rays, {sol.pivots} pivots")
    stats = {"vars": hull_lp.lp.num_vars, "rows": len(hull_lp.lp.rows), "pivots": sol.pivots}
    return HullResult(test.in_hull, crossings, cells, support, c, points, method, stats, hull_lp, test.witness)


def _check(sol):
    if sol.status == LPStatus.INFEASIBLE:
        raise LPInfeasible("Hull LP infeasible")
    if sol.status == LPStatus.UNBOUNDED:
        raise LPUnbounded("Hull LP unbounded")


def _ray_position(c: SingleVertexComplex, ray_complex: SingleVertexComplex, ray: str) -> List[Tuple[str, float]]:
    """(original cone, angle from its first ray) for every cone of c the ray lies in"""
    out = []
    for piece in ray_complex.ray_cones[ray]:
        orig, lo = ray_complex.original(piece)
        u, v, w = ray_complex.link.arcs[piece]
        offset = lo if ray == u else lo + w
        if orig in c.cones:
            out.append((orig, offset))
    return sorted(set(out))


def _cells(c, ray_complex, crossings: Dict[str, Crossing], ring: Dict[str, ConePoint], with_origin: bool):
    pts: Dict[str, List[Tuple[float, float]]] = {}
    for ray, cr in crossings.items():
        radii = [cr.x] if cr.x is not None else [cr.x_min, cr.x_max]
        for cone, offset in _ray_position(c, ray_complex, ray):
            for r in radii:
                pts.setdefault(cone, []).append((r * math.cos(offset), r * math.sin(offset)))
    for p in ring.values():
        d = c.direction(p.direction)
        if d.arc is not None:
            pts.setdefault(d.arc, []).append(tuple(c.cone_coords(p)[1]))
    cells = {}
    for cone, xy in sorted(pts.items()):
        if with_origin:
            xy = xy + [(0.0, 0.0)]
        cells[cone] = MultiPoint(xy).convex_hull
    return cells


def membership(c: SingleVertexComplex, points, q: ConePoint, hull: Optional[HullResult] = None,
               tol: Optional[float] = None) -> bool:
    """Boundary-inclusive test against the per-cell polygons"""
    tol = get_settings().tol if tol is None else tol
    hull = hull or solve_hull(c, points, tol=tol)
    if q.is_origin:
        return hull.origin_in_hull
    d = c.direction(q.direction)
    cones = [d.arc] if d.arc is not None else c.ray_cones[d.node]
    for cone in cones:
        if cone not in hull.cells:
            continue
        xy = c.cone_coords(q, cone)[1]
        if hull.cells[cone].distance(Point(xy)) <= tol:
            return True
    return False


# Iterative oracle

@dataclass
class OracleResult:
    origin_in_hull: bool
    extremes: Dict[str, Tuple[float, float]]
    rounds: int
    converged: bool

    def crossing(self, ray: str) -> float:
        return self.extremes[ray][1]


def iterative_hull_oracle(c: SingleVertexComplex, points, eps: float = 1e-9,
                          max_rounds: Optional[int] = None, tol: Optional[float] = None) -> OracleResult:
    """Close the point set under pairwise geodesic-ray intersections, keeping the extremes per ray"""
    tol = get_settings().tol if tol is None else tol
    max_rounds = get_settings().max_rounds if max_rounds is None else max_rounds
    if eps <= 0:
        raise DomainError("eps must be positive")
    points = _labelled(points)
    inside = origin_in_hull(c, points, tol).in_hull
    ac = augment(c, points)
    g = ac.complex
    extremes: Dict[str, Tuple[float, float]] = {}
    for p in ac.points.values():
        if not p.is_origin:
            ray = p.direction.node
            lo, hi = extremes.get(ray, (p.radius, p.radius))
            extremes[ray] = (min(lo, p.radius), max(hi, p.radius))

    rounds, converged = 0, False
    while rounds < max_rounds:
        rounds += 1
        # Crossings grow with their endpoints, so the extremes suffice
        candidates = sorted({(ray, r) for ray, (lo, hi) in extremes.items() for r in ((hi,) if inside else (lo, hi))})
        updated = dict(extremes)
        for (e, re), (f, rf) in combinations(candidates, 2):
            if e == f:
                continue
            res = geodesic(g, ConePoint(LinkPoint(node=e), re), ConePoint(LinkPoint(node=f), rf), tol)
            if res.through_origin:
                continue
            for ray, t in res.crossings:
                lo, hi = updated.get(ray, (t, t))
                updated[ray] = (min(lo, t), max(hi, t))
        moved = 0.0
        for r, (lo, hi) in updated.items():
            if r not in extremes:
                moved = math.inf
                break
            old_lo, old_hi = extremes[r]
            moved = max(moved, abs(hi - old_hi), 0.0 if inside else abs(lo - old_lo))
        extremes = updated
        if moved < eps:
            converged = True
            break
    if not converged:
        logger.warning(f"Iterative hull oracle stopped after {rounds} rounds without converging")
    else:
        logger.info(f"Iterative hull oracle converged in {rounds} rounds")
    return OracleResult(inside, extremes, rounds, converged)


def report_rounds(instances: Mapping[str, Tuple[SingleVertexComplex, object]], eps: float = 1e-9,
                  max_rounds: Optional[int] = None) -> pd.DataFrame:
    """Rounds the iterative process needs per instance"""
    rows = []
    for name, (c, points) in instances.items():
        res = iterative_hull_oracle(c, points, eps, max_rounds)
        rows.append({
            "instance": name,
            "points": len(_labelled(points)),
            "rays": len(c.rays),
            "rounds": res.rounds,
            "converged": res.converged,
        })
    return pd.DataFrame(rows, columns=["instance", "points", "rays", "rounds", "converged"])


# Peeling

def _on_boundary(hull: HullResult, p: ConePoint, tol: float) -> bool:
    c = hull.complex
    if p.is_origin:
        for cone in c.cones:
            cell = hull.cells.get(cone)
            if cell is None or cell.area <= tol or any(r not in hull.crossings for r in c.cones[cone].rays):
                return True
        return False
    d = c.direction(p.direction)
    xy_of = lambda cone: Point(c.cone_coords(p, cone)[1])
    if d.arc is not None:
        cell = hull.cells.get(d.arc)
        if cell is None or cell.geom_type != "Polygon":
            return True
        return cell.exterior.distance(xy_of(d.arc)) <= tol
    ray = d.node
    cones = c.ray_cones[ray]
    cr = hull.crossings.get(ray)
    if len(cones) < 2 or cr is None:
        return True
    if p.radius >= cr.far - tol or (cr.x_min is not None and p.radius <= cr.x_min + tol):
        return True
    for cone in cones:
        cell = hull.cells.get(cone)
        if cell is None or cell.area <= tol or cell.distance(xy_of(cone)) > tol:
            return True
    return False


def peel(c: SingleVertexComplex, points, stop: Union[float, int] = 0.0, arith: Arith = "auto",
         tol: Optional[float] = None) -> List[List[str]]:
    """Strip hull-boundary points layer by layer; float stop = fraction to keep, int stop = layer count"""
    tol = get_settings().tol if tol is None else tol
    remaining = _labelled(points)
    total = len(remaining)
    layers: List[List[str]] = []
    while remaining:
        if isinstance(stop, int) and not isinstance(stop, bool):
            if len(layers) >= stop:
                break
        hull = solve_hull(c, remaining, arith, tol)
        layer = [k for k, p in remaining.items() if _on_boundary(hull, p, tol)]
        if not layer:
            logger.warning("No boundary points found; stopping")
            break
        if isinstance(stop, float) and (len(remaining) - len(layer)) / total < stop:
            break
        layers.append(layer)
        for k in layer:
            del remaining[k]
        logger.debug(f"Peeled layer {len(layers)} with {len(layer)} points")
    return layers


# Repeated-leaf construction

@dataclass
class LemmaConstruction:
    a: ConePoint
    b: ConePoint
    c: ConePoint
    p: ConePoint


def _crossing_on(res, ray: str) -> ConePoint:
    for r, t in res.crossings:
        if r == ray:
            return ConePoint(LinkPoint(node=ray), t)
    raise DomainError(f"Geodesic does not cross {ray}")


def lemma_point(c: SingleVertexComplex, points: Mapping[str, ConePoint],
                axes: Tuple[str, str, str] = ("A3", "A4", "A5")) -> LemmaConstruction:
    """a on the p1-p2 geodesic, b on p3-a, c on p1-p4, and p halfway from b to c"""
    p1, p2, p3, p4 = (points[k] for k in ("p1", "p2", "p3", "p4"))
    a = _crossing_on(geodesic(c, p1, p2), axes[0])
    b = _crossing_on(geodesic(c, p3, a), axes[1])
    cc = _crossing_on(geodesic(c, p1, p4), axes[2])
    p = geodesic_point(c, b, cc, 0.5)
    return LemmaConstruction(a, b, cc, p)
