"""
validate, link and gen: complex structure and fixture generation
"""

import logging
import math
from fractions import Fraction

from cat0.commands.common import add_input, emit, load_input, resolve_point, tolerance
from cat0.errors import MalformedInput
from cat0.models import ValidationOut
from cat0.services.complex_core import PolyComplex2D, link_graph, shortest_link_cycle, validate_cat0
from cat0.services.fixtures import NAMED, PARAMETRIC, load_fixture
from cat0.services.single_vertex import AT_LEAST_PI, link_distance, link_path

logger = logging.getLogger(__name__)


def pi_multiple(x: float, tol: float = 1e-9) -> str:
    """5π/2 style text for rational multiples of π, plain digits otherwise"""
    if math.isinf(x):
        return "inf"
    q = Fraction(x / math.pi).limit_denominator(24)
    if abs(float(q) * math.pi - x) > tol:
        return f"{x:.12g}"
    if q == 0:
        return "0"
    num = "π" if q.numerator == 1 else f"{q.numerator}π"
    return num if q.denominator == 1 else f"{num}/{q.denominator}"


def _girth(link) -> float:
    cycle = shortest_link_cycle(link)
    return math.inf if cycle is None else cycle.length


def link_stats(complex_) -> dict:
    if isinstance(complex_, PolyComplex2D):
        girth = min((_girth(complex_.link(v)) for v in complex_.vertices), default=math.inf)
        return {
            "vertices": len(complex_.vertices),
            "edges": len(complex_.edges),
            "faces": len(complex_.faces),
            "girth_weight": pi_multiple(girth),
        }
    g = complex_.link.graph
    stats = {
        "nodes": g.number_of_nodes(),
        "arcs": g.number_of_edges(),
        "girth_weight": pi_multiple(_girth(complex_.link)),
    }
    degrees = {d for _, d in g.degree()}
    if len(degrees) == 1:
        stats["degree"] = degrees.pop()
    return stats


def cmd_validate(args):
    fx = load_input(args, validate=False)
    report = validate_cat0(fx.complex, tolerance(args))
    emit(args, ValidationOut(link_stats=link_stats(fx.complex), **report))
    return 0


def cmd_link(args):
    fx = load_input(args, validate=False)
    tol = tolerance(args)
    c = fx.complex
    vertex = args.vertex or getattr(c, "origin", None)
    if vertex is None:
        raise MalformedInput("--vertex is required for a multi-face complex")
    link = link_graph(c, vertex)
    out = {
        "vertex": vertex,
        "nodes": sorted(link.graph.nodes),
        "arcs": [{"id": k, "ends": [a, b], "weight": w} for k, (a, b, w) in sorted(link.arcs.items())],
        "girth_weight": pi_multiple(_girth(link)),
    }
    if args.a or args.b:
        if isinstance(c, PolyComplex2D) or not (args.a and args.b):
            raise MalformedInput("--a and --b go together and need a single-vertex complex")
        pa, pb = resolve_point(fx, args.a), resolve_point(fx, args.b)
        if pa.is_origin or pb.is_origin:
            raise MalformedInput("The origin has no link direction")
        d = link_distance(c, pa.direction, pb.direction, tol)
        if d is AT_LEAST_PI:
            out["distance"] = "at_least_pi"
        else:
            out["distance"] = d
            out["crossed"] = [{"ray": r, "angle": a} for r, a in link_path(c, pa.direction, pb.direction, tol)]
    emit(args, out)
    return 0


def cmd_gen(args):
    fx = load_fixture(args.fixture)
    logger.info(f"Generated fixture {fx.name}")
    emit(args, fx.to_model())
    return 0


def register(subparsers):
    p = subparsers.add_parser("validate", help="check the link condition and simple connectivity")
    add_input(p)
    p.set_defaults(func=cmd_validate)

    p = subparsers.add_parser("link", help="link graph of a vertex, optionally the link distance of two points")
    add_input(p)
    p.add_argument("--vertex", help="vertex id (single-vertex complexes default to O)")
    p.add_argument("--a", help="first point reference")
    p.add_argument("--b", help="second point reference")
    p.set_defaults(func=cmd_link)

    names = sorted(NAMED) + [f"{k}:<n>" for k in sorted(PARAMETRIC)]
    p = subparsers.add_parser("gen", help="emit a fixture complex with its points")
    p.add_argument("fixture", help="one of " + ", ".join(names))
    p.add_argument("--output", metavar="PATH", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_gen)
