"""
Dense two-phase simplex over floats and rationals.

Proves:
 Group 1 — Small programs
   1.  Bounded, unbounded and infeasible cases
   2.  Beale's cycling program terminates at 5/4
   3.  Identical input gives identical pivots

 Group 2 — Feasibility checker
   4.  Origin, returned optimum, and a perturbed optimum

 Group 3 — Random programs
   5.  Rational mode matches exhaustive vertex enumeration
   6.  Float mode matches scipy's linprog
   7.  Weak duality: sampled feasible points never beat the optimum
"""

from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from cat0.services.simplex import LinearProgram, LPStatus, check_feasible, solve


# ── Shared fixtures ───────────────────────────────────────────────────────────

def _lp(objective, rows, field="float"):
    lp = LinearProgram(list(objective), field=field)
    for coeffs, rel, rhs in rows:
        lp.add_row(coeffs, rel, rhs)
    return lp


def _random_lp(seed: int, n_max: int, field: str):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, 5))
    cast = Fraction if field == "rational" else float
    objective = [cast(int(v)) for v in rng.integers(-5, 6, size=n)]
    rows = [([cast(1)] * n, "<=", cast(10))]
    for _ in range(m):
        coeffs = [cast(int(v)) for v in rng.integers(-5, 6, size=n)]
        rel = "<=" if rng.random() < 0.75 else ">="
        rows.append((coeffs, rel, cast(int(rng.integers(-3, 8)))))
    return _lp(objective, rows, field)


def _enumerate(lp: LinearProgram):
    """Best vertex of {G y <= h} by brute force, or None when empty"""
    n = lp.num_vars
    g, h = [], []
    for row in lp.rows:
        sign = 1.0 if row.relation == "<=" else -1.0
        g.append([sign * float(a) for a in row.coefficients])
        h.append(sign * float(row.rhs))
    for j in range(n):
        g.append([-1.0 if k == j else 0.0 for k in range(n)])
        h.append(0.0)
    g, h = np.array(g), np.array(h)
    c = np.array([float(v) for v in lp.objective])
    best = None
    for rows in combinations(range(len(h)), n):
        a = g[list(rows)]
        if abs(np.linalg.det(a)) < 1e-10:
            continue
        y = np.linalg.solve(a, h[list(rows)])
        if np.all(g @ y <= h + 1e-9):
            value = float(c @ y)
            best = value if best is None else max(best, value)
    return best


# ═══════════════════════════════════════════════════════════════════════════════
# Group 1 — Small programs
# ═══════════════════════════════════════════════════════════════════════════════


def test_single_bound():
    sol = solve(_lp([1], [([1], "<=", 3)]))
    assert sol.status == LPStatus.OPTIMAL
    assert sol.point == pytest.approx([3.0])


def test_unbounded():
    assert solve(_lp([1], [([1], ">=", 1)])).status == LPStatus.UNBOUNDED


def test_infeasible():
    sol = solve(_lp([1], [([1], "<=", 1), ([1], ">=", 2)]))
    assert sol.status == LPStatus.INFEASIBLE


def test_two_variables():
    sol = solve(_lp([1, 1], [([1, 1], "<=", 1), ([1, 0], "<=", 0.4)]))
    assert sol.objective == pytest.approx(1.0)


def test_negative_rhs_normalised():
    # -y <= -2 is y >= 2
    sol = solve(_lp([-1], [([-1], "<=", -2), ([1], "<=", 5)]))
    assert sol.status == LPStatus.OPTIMAL
    assert sol.point == pytest.approx([2.0])


def _beale() -> LinearProgram:
    q = Fraction
    return _lp(
        [q(3, 4), q(-20), q(1, 2), q(-6)],
        [
            ([q(1, 4), q(-8), q(-1), q(9)], "<=", q(0)),
            ([q(1, 2), q(-12), q(-1, 2), q(3)], "<=", q(0)),
            ([q(0), q(0), q(1), q(0)], "<=", q(1)),
        ],
        "rational",
    )


def test_beale_terminates_exact():
    sol = solve(_beale())
    assert sol.status == LPStatus.OPTIMAL
    assert sol.objective == Fraction(5, 4)


def test_beale_terminates_float():
    sol = solve(_beale().converted("float"))
    assert sol.status == LPStatus.OPTIMAL
    assert sol.objective == pytest.approx(1.25)


def test_bad_rows_rejected():
    lp = LinearProgram([1, 1])
    with pytest.raises(ValueError):
        lp.add_row([1], "<=", 1)
    with pytest.raises(ValueError):
        lp.add_row([1, 1], "==", 1)


def test_deterministic():
    lp = _random_lp(7, 6, "float")
    a, b = solve(lp), solve(lp)
    assert (a.status, a.point, a.pivots) == (b.status, b.point, b.pivots)


def test_dump_lists_rows():
    lp = LinearProgram([1, 2])
    lp.add_row([1, 1], "<=", 4, "cap")
    text = lp.dump()
    assert text.splitlines()[0] == "objective: max 1*y0 + 2*y1"
    assert "# cap" in text


# ═══════════════════════════════════════════════════════════════════════════════
# Group 2 — Feasibility checker
# ═══════════════════════════════════════════════════════════════════════════════


def test_origin_feasible():
    lp = _lp([1, 1], [([1, 2], "<=", 3), ([2, 1], "<=", 3)])
    assert check_feasible(lp, [0.0, 0.0])


def test_solution_feasible_and_perturbation_not():
    lp = _lp([1, 1], [([1, 2], "<=", 3), ([2, 1], "<=", 3)])
    sol = solve(lp)
    assert sol.objective == pytest.approx(2.0)
    assert check_feasible(lp, sol.point)
    assert not check_feasible(lp, [sol.point[0] + 1e-6, sol.point[1]])


def test_rational_check_is_exact():
    lp = _lp([1], [([1], "<=", Fraction(1, 3))], "rational")
    assert check_feasible(lp, [Fraction(1, 3)])
    assert not check_feasible(lp, [Fraction(1, 3) + Fraction(1, 10 ** 15)])


# ═══════════════════════════════════════════════════════════════════════════════
# Group 3 — Random programs
# ═══════════════════════════════════════════════════════════════════════════════


@pytest.mark.parametrize("seed", range(200))
def test_rational_matches_enumeration(seed):
    lp = _random_lp(seed, 4, "rational")
    sol = solve(lp)
    best = _enumerate(lp)
    if best is None:
        assert sol.status == LPStatus.INFEASIBLE
        return
    assert sol.status == LPStatus.OPTIMAL
    assert all(isinstance(v, Fraction) for v in sol.point)
    assert check_feasible(lp, sol.point)
    assert float(sol.objective) == pytest.approx(best, abs=1e-9)


@pytest.mark.parametrize("seed", range(200))
def test_float_matches_linprog(seed):
    linprog = pytest.importorskip("scipy.optimize").linprog
    lp = _random_lp(1000 + seed, 8, "float")
    a_ub, b_ub = [], []
    for row in lp.rows:
        sign = 1.0 if row.relation == "<=" else -1.0
        a_ub.append([sign * a for a in row.coefficients])
        b_ub.append(sign * row.rhs)
    ref = linprog([-c for c in lp.objective], A_ub=a_ub, b_ub=b_ub, bounds=[(0, None)] * lp.num_vars,
                  method="highs")
    sol = solve(lp)
    if ref.status == 2:
        assert sol.status == LPStatus.INFEASIBLE
        return
    assert ref.status == 0
    assert sol.status == LPStatus.OPTIMAL
    assert check_feasible(lp, sol.point)
    assert sol.objective == pytest.approx(-ref.fun, rel=1e-7, abs=1e-7)


@pytest.mark.parametrize("seed", range(20))
def test_weak_duality_sampling(seed):
    lp = _random_lp(5000 + seed, 5, "float")
    sol = solve(lp)
    if sol.status != LPStatus.OPTIMAL:
        return
    rng = np.random.default_rng(seed)
    c = np.array(lp.objective)
    for _ in range(200):
        y = rng.uniform(0, 10, size=lp.num_vars) * rng.random()
        if check_feasible(lp, list(y)):
            assert float(c @ y) <= sol.objective + 1e-9
