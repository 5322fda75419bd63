"""
cat0 command line: JSON in, JSON out.

Exit codes: 0 on success, 1 on a domain error (JSON error object on stderr),
2 on a usage error.
"""

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from cat0.commands import complexes, geodesics, hulls, paths
from cat0.config import LOG_LEVELS, configure_logging
from cat0.errors import Cat0Error

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cat0",
        description="Geodesics, convex hulls and shortest path maps in 2D CAT(0) polyhedral complexes",
    )
    parser.add_argument("--log", choices=sorted(LOG_LEVELS), help="log level (overrides CAT0_LOG)")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for group in (complexes, geodesics, hulls, paths):
        group.register(subparsers)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    configure_logging(args.log)
    logger.debug(f"Running {args.command}")
    try:
        return args.func(args)
    except Cat0Error as e:
        logger.info(f"{args.command} failed: {e}")
        sys.stderr.write(json.dumps({"error": e.code, "detail": str(e)}, sort_keys=True) + "\n")
        return 1
