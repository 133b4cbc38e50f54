"""Dense two-phase simplex for the small LPs behind subsidies and pricing.

Problem sizes here are tiny (tens of variables), so the implementation favors
clarity and determinism: Bland's rule everywhere, which also rules out
cycling.  Free variables are encoded internally as differences of two
non-negative variables.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import StructuralError
from .model import Allocation, Market, utilities

_PIVOT_EPS = 1e-9
FEAS_TOL = 1e-7

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """min/max  c @ x  subject to  A x (<=|>=|==) b, with x_i >= 0 or free."""

    objective: np.ndarray
    a: np.ndarray
    senses: tuple[str, ...]
    rhs: np.ndarray
    free: tuple[bool, ...] = ()
    goal: str = "min"

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.asarray(self.rhs, dtype=float)
        free = tuple(self.free) if self.free else tuple(False for _ in c)
        if a.shape != (len(b), len(c)):
            raise StructuralError(
                f"constraint matrix {a.shape} inconsistent with "
                f"{len(c)} variables / {len(b)} rows"
            )
        if len(free) != len(c):
            raise StructuralError("free-variable flags inconsistent with objective")
        if len(self.senses) != len(b):
            raise StructuralError("senses inconsistent with rows")
        for s in self.senses:
            if s not in ("<=", ">=", "=="):
                raise StructuralError(f"unknown constraint sense {s!r}")
        if self.goal not in ("min", "max"):
            raise StructuralError(f"goal must be 'min' or 'max', got {self.goal!r}")
        if not (np.isfinite(c).all() and np.isfinite(a).all() and np.isfinite(b).all()):
            raise StructuralError("LP data must be finite")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "rhs", b)
        object.__setattr__(self, "senses", tuple(self.senses))
        object.__setattr__(self, "free", free)


def _bland_entering(reduced: np.ndarray) -> int:
    for j, r in enumerate(reduced):
        if r < -_PIVOT_EPS:
            return j
    return -1


def _bland_leaving(tableau: np.ndarray, col: int, basis: list[int]) -> int:
    best_ratio = None
    best_row = -1
    best_var = None
    for i in range(tableau.shape[0] - 1):
        coef = tableau[i, col]
        if coef > _PIVOT_EPS:
            ratio = tableau[i, -1] / coef
            key = (ratio, basis[i])
            if best_ratio is None or key < (best_ratio, best_var):
                best_ratio, best_row, best_var = ratio, i, basis[i]
    return best_row


def _pivot(tableau: np.ndarray, row: int, col: int, basis: list[int]) -> None:
    tableau[row] /= tableau[row, col]
    for r in range(tableau.shape[0]):
        if r != row and abs(tableau[r, col]) > 0:
            tableau[r] -= tableau[r, col] * tableau[row]
    basis[row] = col


def _run_simplex(tableau: np.ndarray, basis: list[int], cost: np.ndarray) -> str:
    """Minimize cost over the tableau in place; returns OPTIMAL or UNBOUNDED."""
    m = tableau.shape[0] - 1
    # objective row: reduced costs = cost - cost_B @ rows
    tableau[-1, :] = 0.0
    tableau[-1, : len(cost)] = cost
    for i in range(m):
        if cost[basis[i]] != 0.0:
            tableau[-1] -= cost[basis[i]] * tableau[i]
    while True:
        col = _bland_entering(tableau[-1, :-1])
        if col == -1:
            return OPTIMAL
        row = _bland_leaving(tableau, col, basis)
        if row == -1:
            return UNBOUNDED
        _pivot(tableau, row, col, basis)


def solve(lp: LinearProgram) -> tuple[str, Optional[float], Optional[np.ndarray]]:
    """Solve the LP; returns (status, value, primal solution).

    On ``optimal`` the solution is a vertex satisfying every constraint
    within ``FEAS_TOL``; on ``infeasible``/``unbounded`` value and solution
    are None.
    """
    n_orig = len(lp.objective)
    # expand free variables into positive/negative parts
    col_map: list[tuple[int, float]] = []  # structural column -> (orig var, sign)
    for j in range(n_orig):
        col_map.append((j, 1.0))
        if lp.free[j]:
            col_map.append((j, -1.0))
    n_struct = len(col_map)
    sign = 1.0 if lp.goal == "min" else -1.0
    c_struct = np.array([sign * lp.objective[v] * s for v, s in col_map])
    a_struct = np.column_stack([lp.a[:, v] * s for v, s in col_map]) if n_struct else np.zeros((len(lp.rhs), 0))

    m = len(lp.rhs)
    rows = a_struct.copy()
    b = lp.rhs.copy()
    senses = list(lp.senses)
    for i in range(m):
        if b[i] < 0:
            rows[i] *= -1
            b[i] *= -1
            if senses[i] == "<=":
                senses[i] = ">="
            elif senses[i] == ">=":
                senses[i] = "<="

    n_slack = sum(1 for s in senses if s in ("<=", ">="))
    n_art = sum(1 for s in senses if s in (">=", "=="))
    total = n_struct + n_slack + n_art
    tableau = np.zeros((m + 1, total + 1))
    tableau[:m, :n_struct] = rows
    tableau[:m, -1] = b
    basis: list[int] = []
    slack_at = n_struct
    art_at = n_struct + n_slack
    art_cols = []
    for i, s in enumerate(senses):
        if s == "<=":
            tableau[i, slack_at] = 1.0
            basis.append(slack_at)
            slack_at += 1
        elif s == ">=":
            tableau[i, slack_at] = -1.0
            slack_at += 1
            tableau[i, art_at] = 1.0
            basis.append(art_at)
            art_cols.append(art_at)
            art_at += 1
        else:
            tableau[i, art_at] = 1.0
            basis.append(art_at)
            art_cols.append(art_at)
            art_at += 1

    if art_cols:
        phase1_cost = np.zeros(total)
        phase1_cost[art_cols] = 1.0
        status = _run_simplex(tableau, basis, phase1_cost)
        if status != OPTIMAL:
            raise AssertionError("phase-1 simplex cannot be unbounded")
        if -tableau[-1, -1] > FEAS_TOL:  # objective row holds minus the phase-1 value
            return INFEASIBLE, None, None
        # drive leftover artificials out of the basis, dropping redundant rows
        art_set = set(art_cols)
        for i in range(m):
            if basis[i] in art_set:
                pivot_col = next(
                    (j for j in range(n_struct + n_slack) if abs(tableau[i, j]) > _PIVOT_EPS),
                    None,
                )
                if pivot_col is not None:
                    _pivot(tableau, i, pivot_col, basis)
        # forbid artificials from re-entering
        tableau[:, art_cols] = 0.0

    phase2_cost = np.zeros(total)
    phase2_cost[:n_struct] = c_struct
    status = _run_simplex(tableau, basis, phase2_cost)
    if status == UNBOUNDED:
        return UNBOUNDED, None, None

    x_struct = np.zeros(total)
    for i in range(m):
        x_struct[basis[i]] = tableau[i, -1]
    x = np.zeros(n_orig)
    for col, (v, s) in enumerate(col_map):
        x[v] += s * x_struct[col]
    value = float(lp.objective @ x)
    _check_solution(lp, x)
    return OPTIMAL, value, x


def _check_solution(lp: LinearProgram, x: np.ndarray) -> None:
    lhs = lp.a @ x
    for i, s in enumerate(lp.senses):
        if s == "<=" and lhs[i] > lp.rhs[i] + FEAS_TOL:
            raise AssertionError(f"constraint {i} violated by simplex solution")
        if s == ">=" and lhs[i] < lp.rhs[i] - FEAS_TOL:
            raise AssertionError(f"constraint {i} violated by simplex solution")
        if s == "==" and abs(lhs[i] - lp.rhs[i]) > FEAS_TOL:
            raise AssertionError(f"constraint {i} violated by simplex solution")
    for j, f in enumerate(lp.free):
        if not f and x[j] < -FEAS_TOL:
            raise AssertionError(f"variable {j} negative in simplex solution")


def minimum_stabilizing_subsidy(
    market: Market, alloc: Allocation
) -> tuple[float, np.ndarray, np.ndarray]:
    """Cheapest utility injection (tau to buyers, eta to sellers) that makes
    the allocation stable.

    Minimizes ``sum(tau) + sum(eta)`` subject to individual rationality with
    the injections and, for every pair, subsidized combined utility covering
    the pair's surplus.  The optimum equals the allocation's subset
    instability.
    """
    prof = utilities(market, alloc)
    nb, ns = market.n_buyers, market.n_sellers
    a = market.surplus
    n = nb + ns  # variables: tau then eta, all >= 0
    rows = []
    senses = []
    rhs = []
    for i in range(nb):
        row = np.zeros(n)
        row[i] = 1.0
        rows.append(row)
        senses.append(">=")
        rhs.append(-prof.u[i])
    for j in range(ns):
        row = np.zeros(n)
        row[nb + j] = 1.0
        rows.append(row)
        senses.append(">=")
        rhs.append(-prof.v[j])
    for i in range(nb):
        for j in range(ns):
            row = np.zeros(n)
            row[i] = 1.0
            row[nb + j] = 1.0
            rows.append(row)
            senses.append(">=")
            rhs.append(a[i, j] - prof.u[i] - prof.v[j])
    lp = LinearProgram(np.ones(n), np.array(rows), tuple(senses), np.array(rhs))
    status, value, x = solve(lp)
    if status != OPTIMAL:
        raise AssertionError(f"subsidy LP must be solvable, got {status}")
    return float(value), x[:nb], x[nb:]
