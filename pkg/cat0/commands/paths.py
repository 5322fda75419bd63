"""
spm and query: shortest path maps from a source and path queries against them
"""

import logging

from cat0.commands.common import add_input, emit, load_input, resolve_point, tolerance
from cat0.errors import MalformedInput
from cat0.models import SpmSummaryOut
from cat0.services.complex_core import PolyComplex2D
from cat0.services.spm import branch_counts, build_spm, derive_last_step, query_path

logger = logging.getLogger(__name__)


def _location(fx, ref: str):
    """Vertex ids pass through; anything else is a point reference"""
    if ref in fx.complex.vertices and ref not in fx.points and ref not in fx.queries:
        return ref
    return resolve_point(fx, ref)


def _last_step(args):
    fx = load_input(args)
    if not isinstance(fx.complex, PolyComplex2D):
        raise MalformedInput(f"{args.command} needs a triangulated or rectangular complex")
    ref = args.source or fx.source
    if ref is None:
        raise MalformedInput("No --source given and the input names none")
    tol = tolerance(args)
    spm = build_spm(fx.complex, _location(fx, ref), args.region_cap, tol)
    return fx, spm, derive_last_step(spm, tol)


def cmd_spm(args):
    _, spm, lsm = _last_step(args)
    out = {"summary": SpmSummaryOut(**spm.summary()), "last_step": lsm.to_model()}
    if args.trees:
        out["trees"] = branch_counts(spm)["trees"]
    emit(args, out)
    return 0


def cmd_query(args):
    fx, _, lsm = _last_step(args)
    path = query_path(lsm, _location(fx, args.target), tolerance(args))
    logger.info(f"Path to {args.target}: length {path.length:.12g}")
    if args.svg:
        from cat0.services.plotting import render_path

        render_path(lsm.complex, path, args.svg)
    emit(args, path.to_model())
    return 0


def _source_args(p):
    add_input(p)
    p.add_argument("--source", help="vertex id or point reference (default: the input's source)")
    p.add_argument("--region-cap", type=int, default=None, help="abort past this many regions (default 1000000)")


def register(subparsers):
    p = subparsers.add_parser("spm", help="shortest path map summary and last-step map")
    _source_args(p)
    p.add_argument("--trees", action="store_true", help="include per-tree branch counts")
    p.set_defaults(func=cmd_spm)

    p = subparsers.add_parser("query", help="shortest path from the source to a target")
    _source_args(p)
    p.add_argument("--target", required=True, help="vertex id or point reference")
    p.add_argument("--svg", metavar="PATH", help="also draw the unfolded path")
    p.set_defaults(func=cmd_query)
