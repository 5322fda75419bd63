"""
hull, peel and member: convex hulls of point sets in single-vertex complexes
"""

import logging

from cat0.commands.common import add_input, emit, load_input, resolve_point, tolerance
from cat0.config import get_settings
from cat0.errors import MalformedInput
from cat0.models import CellOut, CrossingOut, HullOut, LPStatsOut
from cat0.services.hull_lp import HullResult, iterative_hull_oracle, membership, peel, solve_hull
from cat0.services.single_vertex import SingleVertexComplex

logger = logging.getLogger(__name__)


def _single_vertex_input(args):
    fx = load_input(args)
    if not isinstance(fx.complex, SingleVertexComplex):
        raise MalformedInput(f"{args.command} needs a single-vertex complex")
    return fx


def hull_model(result: HullResult) -> HullOut:
    return HullOut(
        origin_in_hull=result.origin_in_hull,
        crossings=[
            CrossingOut(ray=r, x=x.x, x_min=x.x_min, x_max=x.x_max)
            for r, x in sorted(result.crossings.items())
        ],
        cells=[CellOut(cone=k, polygon=result.polygon(k)) for k in sorted(result.cells)],
        lp_stats=LPStatsOut(**result.lp_stats),
    )


def cmd_hull(args):
    fx = _single_vertex_input(args)
    tol = tolerance(args)
    if args.oracle:
        rounds = args.max_rounds or get_settings().max_rounds
        res = iterative_hull_oracle(fx.complex, fx.points, eps=tol, max_rounds=rounds, tol=tol)
        emit(args, {
            "origin_in_hull": res.origin_in_hull,
            "rounds": res.rounds,
            "converged": res.converged,
            "crossings": [
                {"ray": r, "x_min": lo, "x_max": hi} for r, (lo, hi) in sorted(res.extremes.items())
            ],
        })
        return 0
    result = solve_hull(fx.complex, fx.points, args.arith, tol)
    if args.svg:
        from cat0.services.plotting import render_cells

        render_cells(result, args.svg)
    emit(args, hull_model(result))
    return 0


def _stop(text: str):
    """Below 1 a fraction of points to keep, otherwise a whole number of layers"""
    try:
        value = float(text)
    except ValueError as e:
        raise MalformedInput(f"--stop takes a layer count or a fraction, got {text!r}") from e
    if 0 <= value < 1:
        return value
    if value < 0 or not value.is_integer():
        raise MalformedInput(f"--stop takes a layer count or a fraction, got {text!r}")
    return int(value)


def cmd_peel(args):
    fx = _single_vertex_input(args)
    layers = peel(fx.complex, fx.points, _stop(args.stop), args.arith, tolerance(args))
    emit(args, {"layers": [sorted(layer) for layer in layers]})
    return 0


def cmd_member(args):
    fx = _single_vertex_input(args)
    q = resolve_point(fx, args.point)
    inside = membership(fx.complex, fx.points, q, tol=tolerance(args))
    logger.info(f"{args.point} in hull: {inside}")
    emit(args, {"point": args.point, "member": inside})
    return 0


def _arith(p):
    p.add_argument("--arith", choices=["auto", "float", "rational"], default="auto",
                   help="LP arithmetic (auto: rational on right-angled complexes)")


def register(subparsers):
    p = subparsers.add_parser("hull", help="convex hull of the input points")
    add_input(p, points=True)
    _arith(p)
    p.add_argument("--svg", metavar="PATH", help="also draw the hull cells")
    p.add_argument("--oracle", action="store_true", help="run the iterative closure instead of the LP")
    p.add_argument("--max-rounds", type=int, default=None, help="oracle round limit (default 1000)")
    p.set_defaults(func=cmd_hull)

    p = subparsers.add_parser("peel", help="hull peeling depth layers")
    add_input(p, points=True)
    _arith(p)
    p.add_argument("--stop", default="0.0", help="layer count (int) or fraction of points to keep (float)")
    p.set_defaults(func=cmd_peel)

    p = subparsers.add_parser("member", help="is a point in the hull of the input points")
    add_input(p, points=True)
    p.add_argument("--point", required=True, help="point reference, e.g. S5:p")
    p.set_defaults(func=cmd_member)
