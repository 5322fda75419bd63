"""
geodesic: shortest paths between two points, or between two 5-leaf trees
"""

import logging

from cat0.commands.common import add_input, emit, load_input, read_json, resolve_point, tolerance
from cat0.errors import MalformedInput
from cat0.models import CrossingOut, GeodesicOut
from cat0.services.complex_core import PolyComplex2D
from cat0.services.single_vertex import geodesic
from cat0.services.spm import brute_force_geodesic
from cat0.services.treespace import build_t5, load_tree, tree_to_point

logger = logging.getLogger(__name__)


def _tree_geodesic(args):
    t1, t2 = load_tree(read_json(args.tree_a)), load_tree(read_json(args.tree_b))
    t5 = build_t5()
    result = geodesic(t5, tree_to_point(t1, t5), tree_to_point(t2, t5), tolerance(args))
    logger.info(f"Tree-space distance {result.length:.12g}")
    return result


def cmd_geodesic(args):
    if args.tree_a or args.tree_b:
        if not (args.tree_a and args.tree_b):
            raise MalformedInput("--tree-a and --tree-b go together")
        result = _tree_geodesic(args)
    else:
        if not (args.a and args.b):
            raise MalformedInput("geodesic needs --a and --b, or --tree-a and --tree-b")
        fx = load_input(args)
        a, b = resolve_point(fx, args.a), resolve_point(fx, args.b)
        if isinstance(fx.complex, PolyComplex2D):
            path = brute_force_geodesic(fx.complex, a, b, args.max_faces, tolerance(args))
            emit(args, path.to_model())
            return 0
        result = geodesic(fx.complex, a, b, tolerance(args))
    emit(args, GeodesicOut(
        length=result.length,
        through_origin=result.through_origin,
        crossings=[CrossingOut(ray=r, x=x) for r, x in result.crossings],
    ))
    return 0


def register(subparsers):
    p = subparsers.add_parser("geodesic", help="geodesic between two points or two 5-leaf trees")
    add_input(p)
    p.add_argument("--a", help="first point reference")
    p.add_argument("--b", help="second point reference")
    p.add_argument("--tree-a", metavar="PATH", help="first tree as split-length JSON")
    p.add_argument("--tree-b", metavar="PATH", help="second tree as split-length JSON")
    p.add_argument("--max-faces", type=int, default=12, help="corridor depth for multi-face complexes")
    p.set_defaults(func=cmd_geodesic)
