"""
Input loading, point references and canonical JSON output shared by every subcommand
"""

import json
import logging
import math
import sys
from fractions import Fraction
from typing import Optional

import numpy as np

from cat0.config import get_settings
from cat0.errors import MalformedInput, UnknownLocation
from cat0.services.fixtures import Fixture, fixture_from_json, point_from_model

logger = logging.getLogger(__name__)


def add_input(parser, points: bool = False):
    parser.add_argument("--input", metavar="PATH", help="complex+points JSON (default: stdin)")
    if points:
        parser.add_argument("--points", metavar="PATH", help="JSON object of labelled points replacing the input's")
    parser.add_argument("--output", metavar="PATH", help="write JSON here instead of stdout")
    parser.add_argument("--eps", type=float, default=None, help="numeric tolerance (default 1e-9)")


def read_json(path: Optional[str]):
    try:
        if path is None or path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise MalformedInput(f"Cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise MalformedInput(f"Invalid JSON in {path or 'stdin'}: {e}") from e


def load_input(args, validate: bool = True) -> Fixture:
    fx = fixture_from_json(read_json(args.input), args.input or "stdin", validate)
    if getattr(args, "points", None):
        data = read_json(args.points)
        if not isinstance(data, dict):
            raise MalformedInput("Points file must hold an object of labelled points")
        fx.points = {k: point_from_model(fx.complex, v) for k, v in data.items()}
    logger.info(f"Loaded {fx.name}: {len(fx.points)} points, {len(fx.queries)} queries")
    return fx


def tolerance(args) -> float:
    return get_settings().tol if args.eps is None else args.eps


def resolve_point(fx: Fixture, ref: str):
    """
    A point reference is one of:
    - a label from the input's points or queries ("p1")
    - a label qualified by its cell ("S5:p")
    - an inline point object ('{"vertex": "v3"}')
    """
    ref = ref.strip()
    if ref.startswith("{"):
        try:
            return point_from_model(fx.complex, json.loads(ref))
        except json.JSONDecodeError as e:
            raise MalformedInput(f"Invalid point literal {ref!r}") from e
    known = {**fx.points, **fx.queries}
    if ref in known:
        return known[ref]
    _, _, label = ref.rpartition(":")
    if label in known:
        return known[label]
    raise UnknownLocation(f"No point named {ref!r}")


def _plain(obj):
    if hasattr(obj, "model_dump"):
        return _plain(obj.model_dump(exclude_none=True))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, Fraction, np.floating)):
        x = float(obj)
        return float(f"{x:.12g}") if math.isfinite(x) else x
    return obj


def canonical_json(obj) -> str:
    """Sorted keys, floats rounded to 12 significant digits"""
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))


def emit(args, obj):
    text = canonical_json(obj) + "\n"
    if getattr(args, "output", None):
        try:
            with open(args.output, "w") as fh:
                fh.write(text)
        except OSError as e:
            raise MalformedInput(f"Cannot write {args.output}: {e}") from e
        logger.info(f"Wrote {args.output}")
    else:
        sys.stdout.write(text)
