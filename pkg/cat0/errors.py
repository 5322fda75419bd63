"""
Domain errors for the CAT(0) toolkit.
Every error carries a stable ``code`` used in the CLI's JSON error payload.
"""


class Cat0Error(ValueError):
    "Base class for all domain errors."
    code = "cat0_error"


class MalformedInput(Cat0Error):
    "Input does not satisfy the JSON schema."
    code = "malformed_input"


class TriangleInequality(Cat0Error):
    "A face has side lengths that cannot form a triangle."
    code = "triangle_inequality"


class Disconnected(Cat0Error):
    code = "disconnected"


class UnknownVertex(Cat0Error):
    code = "unknown_vertex"


class NotAdjacent(Cat0Error):
    "Consecutive faces of an unfolding do not share the stated edge."
    code = "not_adjacent"


class PointNotInComplex(Cat0Error):
    code = "point_not_in_complex"


class PairAtLeastPi(Cat0Error):
    "Two directions are at link distance at least pi."
    code = "pair_at_least_pi"


class NotCat0(Cat0Error):
    "A link cycle shorter than 2*pi was found."
    code = "not_cat0"


class IncompatibleSplits(Cat0Error):
    code = "incompatible_splits"


class DomainError(Cat0Error):
    code = "domain_error"


class LPInfeasible(Cat0Error):
    code = "lp_infeasible"


class LPUnbounded(Cat0Error):
    code = "lp_unbounded"


class NumericalBreakdown(Cat0Error):
    "Float pivoting hit a pivot below tolerance with no alternative."
    code = "numerical_breakdown"


class BudgetExceeded(Cat0Error):
    "Shortest path map grew past the region cap."
    code = "budget_exceeded"


class UnknownLocation(Cat0Error):
    code = "unknown_location"


class DepthExceeded(Cat0Error):
    code = "depth_exceeded"
