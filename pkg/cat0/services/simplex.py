"""
Dense two-phase simplex solver
Maximizes c·y subject to rows a·y <= b or a·y >= b with y >= 0, over floats or exact rationals
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import List, Literal, Optional, Sequence

from cat0.errors import NumericalBreakdown

logger = logging.getLogger(__name__)

Field = Literal["float", "rational"]

PIVOT_TOL = 1e-9
BREAKDOWN_TOL = 1e-12


class LPStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Row:
    coefficients: tuple
    relation: Literal["<=", ">="]
    rhs: object
    label: str = ""


@dataclass
class LinearProgram:
    objective: list
    rows: List[Row] = field(default_factory=list)
    field: Field = "float"
    names: Optional[List[str]] = None

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    def add_row(self, coefficients: Sequence, relation: str, rhs, label: str = ""):
        if len(coefficients) != self.num_vars:
            raise ValueError(f"Row has {len(coefficients)} coefficients, expected {self.num_vars}")
        if relation not in ("<=", ">="):
            raise ValueError(f"Unknown relation {relation!r}")
        self.rows.append(Row(tuple(coefficients), relation, rhs, label))

    def converted(self, target: Field) -> "LinearProgram":
        """Copy of this program with every number cast into the target field"""
        cast = _caster(target)
        lp = LinearProgram([cast(c) for c in self.objective], field=target, names=self.names)
        for row in self.rows:
            lp.rows.append(Row(tuple(cast(a) for a in row.coefficients), row.relation, cast(row.rhs), row.label))
        return lp

    def dump(self) -> str:
        """Plain-text 'objective / rows' rendering for inspection"""
        names = self.names or [f"y{j}" for j in range(self.num_vars)]

        def expr(coeffs):
            terms = [f"{c}*{n}" for c, n in zip(coeffs, names) if c != 0]
            return " + ".join(terms) if terms else "0"

        lines = [f"objective: max {expr(self.objective)}", "rows:"]
        for row in self.rows:
            suffix = f"  # {row.label}" if row.label else ""
            lines.append(f"  {expr(row.coefficients)} {row.relation} {row.rhs}{suffix}")
        return "\n".join(lines)


@dataclass
class LPSolution:
    status: LPStatus
    point: Optional[list] = None
    objective: Optional[object] = None
    pivots: int = 0


def _caster(target: Field):
    if target == "rational":
        return lambda v: v if isinstance(v, Fraction) else Fraction(v)
    return float


class _Tableau:
    """Row-major tableau; the last column is the right-hand side"""

    def __init__(self, rows, basis, exact: bool):
        self.rows = rows
        self.basis = basis
        self.exact = exact
        self.pivots = 0

    def is_negative(self, v) -> bool:
        return v < 0 if self.exact else v < -PIVOT_TOL

    def is_positive(self, v) -> bool:
        return v > 0 if self.exact else v > PIVOT_TOL

    def pivot(self, r: int, c: int, obj: list):
        row = self.rows[r]
        p = row[c]
        row[:] = [v / p for v in row]
        for i, other in enumerate(self.rows):
            if i != r and other[c] != 0:
                f = other[c]
                other[:] = [a - f * b for a, b in zip(other, row)]
        if obj[c] != 0:
            f = obj[c]
            obj[:] = [a - f * b for a, b in zip(obj, row)]
        if not self.exact:
            row[c] = 1.0
            for other in self.rows:
                if other is not row:
                    other[c] = 0.0
            obj[c] = 0.0
        self.basis[r] = c
        self.pivots += 1

    def entering(self, obj: list, columns: range, bland: bool) -> Optional[int]:
        best, best_val = None, None
        for j in columns:
            v = obj[j]
            if not self.is_negative(v):
                continue
            if bland:
                return j
            if best is None or v < best_val:
                best, best_val = j, v
        return best

    def leaving(self, c: int) -> Optional[int]:
        best, best_ratio = None, None
        tiny = False
        for i, row in enumerate(self.rows):
            a = row[c]
            if self.is_positive(a):
                ratio = row[-1] / a
                if (
                    best is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and self.basis[i] < self.basis[best])
                ):
                    best, best_ratio = i, ratio
            elif not self.exact and a > BREAKDOWN_TOL:
                tiny = True
        if best is None and tiny:
            raise NumericalBreakdown(f"Only pivots below {PIVOT_TOL} remain in column {c}")
        return best

    def run(self, obj: list, columns: range, limit: int) -> bool:
        """Pivot to optimality; False signals an unbounded column"""
        bland_after = 10 * (len(self.rows) + len(columns))
        start = self.pivots
        while True:
            steps = self.pivots - start
            if steps > limit:
                raise NumericalBreakdown(f"No convergence after {steps} pivots")
            c = self.entering(obj, columns, bland=steps >= bland_after)
            if c is None:
                return True
            r = self.leaving(c)
            if r is None:
                return False
            self.pivot(r, c, obj)


def solve(lp: LinearProgram) -> LPSolution:
    """Two-phase simplex: Dantzig pricing, Bland's rule after 10·(rows+cols) pivots"""
    exact = lp.field == "rational"
    cast = _caster(lp.field)
    zero, one = cast(0), cast(1)
    n = lp.num_vars
    m = len(lp.rows)

    # Normalize to nonnegative right-hand sides
    normalized = []
    for row in lp.rows:
        coeffs = [cast(a) for a in row.coefficients]
        rhs = cast(row.rhs)
        relation = row.relation
        if rhs < 0:
            coeffs = [-a for a in coeffs]
            rhs = -rhs
            relation = ">=" if relation == "<=" else "<="
        normalized.append((coeffs, relation, rhs))

    n_slack = m
    n_art = sum(1 for _, rel, _ in normalized if rel == ">=")
    width = n + n_slack + n_art
    rows, basis = [], []
    art_cols = []
    k = 0
    for i, (coeffs, relation, rhs) in enumerate(normalized):
        row = coeffs + [zero] * (n_slack + n_art) + [rhs]
        if relation == "<=":
            row[n + i] = one
            basis.append(n + i)
        else:
            row[n + i] = -one
            col = n + n_slack + k
            row[col] = one
            basis.append(col)
            art_cols.append(col)
            k += 1
        rows.append(row)

    tab = _Tableau(rows, basis, exact)
    limit = 50 * (m + width) + 1000

    if art_cols:
        obj = [zero] * (width + 1)
        for col in art_cols:
            obj[col] = one
        for i, b in enumerate(basis):
            if b in art_cols:
                obj[:] = [a - r for a, r in zip(obj, rows[i])]
        tab.run(obj, range(width), limit)
        if tab.is_negative(obj[-1]):
            logger.debug(f"Phase 1 ended at {obj[-1]}; infeasible")
            return LPSolution(LPStatus.INFEASIBLE, pivots=tab.pivots)
        _drive_out_artificials(tab, set(art_cols), n + n_slack)

    width = n + n_slack
    for row in tab.rows:
        del row[width:-1]
    c = [cast(v) for v in lp.objective]
    obj = [-v for v in c] + [zero] * n_slack + [zero]
    for i, b in enumerate(tab.basis):
        if b < n and c[b] != 0:
            f = c[b]
            obj[:] = [a + f * r for a, r in zip(obj, tab.rows[i])]
    if not tab.run(obj, range(width), limit):
        return LPSolution(LPStatus.UNBOUNDED, pivots=tab.pivots)

    point = [zero] * n
    for i, b in enumerate(tab.basis):
        if b < n:
            point[b] = tab.rows[i][-1]
    if not exact:
        point = [max(0.0, v) for v in point]
    value = sum((ci * xi for ci, xi in zip(c, point)), zero)
    logger.debug(f"Optimal value {value} after {tab.pivots} pivots")
    return LPSolution(LPStatus.OPTIMAL, point=point, objective=value, pivots=tab.pivots)


def _drive_out_artificials(tab: _Tableau, artificial: set, real_width: int):
    keep = []
    for i, b in enumerate(tab.basis):
        if b not in artificial:
            keep.append(i)
            continue
        row = tab.rows[i]
        col = next((j for j in range(real_width) if tab.is_positive(abs(row[j]))), None)
        if col is None:
            # Redundant row
            continue
        tab.pivot(i, col, [0] * len(row))
        keep.append(i)
    tab.rows = [tab.rows[i] for i in keep]
    tab.basis = [tab.basis[i] for i in keep]


def check_feasible(lp: LinearProgram, point: Sequence, tol: float = 1e-9) -> bool:
    """Verify a point against every row; exact in rational mode"""
    exact = lp.field == "rational"
    if len(point) != lp.num_vars:
        return False
    slack = 0 if exact else tol
    if any(v < -slack for v in point):
        return False
    for row in lp.rows:
        lhs = sum(a * x for a, x in zip(row.coefficients, point))
        if row.relation == "<=" and lhs > row.rhs + slack:
            return False
        if row.relation == ">=" and lhs < row.rhs - slack:
            return False
    return True
