"""Dense two-phase simplex over exact rational arithmetic.

Solves   maximize c.x   subject to   A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0
entirely in fractions.Fraction, so feasibility and optimality of the returned
vertex are exact statements, not tolerances. Floats in the input are converted
via Fraction(float), i.e. to the exact binary value they hold.

Problem sizes here are small (tens of variables, tens of rows); a dense
tableau with Dantzig pricing and a Bland fallback under stalling is plenty.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


class LpError(Exception):
    pass


class InfeasibleError(LpError):
    """The constraint set is empty."""


class UnboundedError(LpError):
    """The objective is unbounded over the feasible set."""


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    return Fraction(v)  # exact binary value for floats


@dataclass(frozen=True)
class LpSolution:
    """Optimal vertex with exact objective value and reduced costs.

    `certified` is True when the final tableau passed the exact optimality
    check (primal feasibility and non-positive reduced costs), which closes
    the duality gap at exactly zero.
    """

    x: tuple
    objective: Fraction
    certified: bool

    def value(self) -> float:
        return float(self.objective)


# pivots with no objective progress tolerated before switching to Bland's rule
_STALL_LIMIT = 30


def solve(c, a_ub=None, b_ub=None, a_eq=None, b_eq=None) -> LpSolution:
    """Maximize c.x subject to a_ub x <= b_ub, a_eq x = b_eq, x >= 0."""
    c = [_frac(v) for v in c]
    n = len(c)
    a_ub = [[_frac(v) for v in row] for row in (a_ub or [])]
    b_ub = [_frac(v) for v in (b_ub or [])]
    a_eq = [[_frac(v) for v in row] for row in (a_eq or [])]
    b_eq = [_frac(v) for v in (b_eq or [])]
    if len(a_ub) != len(b_ub) or len(a_eq) != len(b_eq):
        raise ValueError("constraint matrix/vector length mismatch")
    for row in a_ub + a_eq:
        if len(row) != n:
            raise ValueError("constraint row length != number of variables")

    m_ub, m_eq = len(a_ub), len(a_eq)
    m = m_ub + m_eq
    n_slack = m_ub

    # Tableau columns: x (n) | slacks (m_ub) | artificials (appended) | rhs.
    rows: list[list[Fraction]] = []
    basis: list[int] = []
    needs_artificial: list[int] = []

    for i in range(m_ub):
        row = list(a_ub[i]) + [ZERO] * n_slack + [b_ub[i]]
        row[n + i] = ONE
        if b_ub[i] < 0:  # negate so rhs >= 0; slack flips sign and cannot be basic
            row = [-v for v in row]
            needs_artificial.append(len(rows))
            basis.append(-1)
        else:
            basis.append(n + i)
        rows.append(row)
    for i in range(m_eq):
        row = list(a_eq[i]) + [ZERO] * n_slack + [b_eq[i]]
        if b_eq[i] < 0:
            row = [-v for v in row]
        needs_artificial.append(len(rows))
        basis.append(-1)
        rows.append(row)

    n_art = len(needs_artificial)
    n_total = n + n_slack + n_art
    for row in rows:
        rhs = row.pop()
        row.extend([ZERO] * n_art)
        row.append(rhs)
    for k, i in enumerate(needs_artificial):
        rows[i][n + n_slack + k] = ONE
        basis[i] = n + n_slack + k

    if n_art:
        # Phase 1: maximize -(sum of artificials).
        obj = [ZERO] * n_total + [ZERO]
        for k in range(n_art):
            obj[n + n_slack + k] = Fraction(-1)
        _price_out(obj, rows, basis)
        _iterate(rows, basis, obj, n_total)
        if obj[-1] != 0:
            raise InfeasibleError("phase-1 optimum nonzero: no feasible point")
        _expel_artificials(rows, basis, n + n_slack)

    # Phase 2 on the original objective (artificial columns pinned at zero).
    obj = [ZERO] * n_total + [ZERO]
    obj[:n] = c
    _price_out(obj, rows, basis)
    art_start = n + n_slack
    _iterate(rows, basis, obj, art_start)

    x = [ZERO] * n
    for i, bj in enumerate(basis):
        if bj < n:
            x[bj] = rows[i][-1]

    # Independent exact certificate: replay the original constraints on x and
    # require non-negative reduced costs (zero duality gap at this vertex).
    if any(v < 0 for v in x):
        raise LpError("internal error: negative component in solution")
    for row, rhs in zip(a_ub, b_ub):
        if sum(ai * xi for ai, xi in zip(row, x)) > rhs:
            raise LpError("internal error: solution violates an inequality")
    for row, rhs in zip(a_eq, b_eq):
        if sum(ai * xi for ai, xi in zip(row, x)) != rhs:
            raise LpError("internal error: solution violates an equality")
    value = sum(ci * xi for ci, xi in zip(c, x))
    if value != obj[-1]:
        raise LpError("internal error: objective bookkeeping drifted")
    certified = all(obj[j] >= 0 for j in range(art_start))
    return LpSolution(x=tuple(x), objective=value, certified=certified)


def _price_out(obj, rows, basis):
    """Make reduced costs consistent with the current basis (z_j - c_j form)."""
    for i, bj in enumerate(basis):
        coef = obj[bj]
        if coef != 0:
            row = rows[i]
            for j in range(len(obj)):
                if row[j] != 0:
                    obj[j] -= coef * row[j]
    # obj now holds c_j - z_j negated below: we keep obj[j] = z_j - c_j by sign flip
    for j in range(len(obj)):
        obj[j] = -obj[j]


def _iterate(rows, basis, obj, n_price):
    """Run simplex pivots in place until optimal; raises UnboundedError.

    `obj` holds z_j - c_j for each column plus the objective value at the end
    (entering candidates are columns with obj[j] < 0). Only columns below
    `n_price` are priced (artificials are excluded in phase 2).
    """
    m = len(rows)
    stall = 0
    while True:
        use_bland = stall >= _STALL_LIMIT
        enter = -1
        if use_bland:
            for j in range(n_price):
                if obj[j] < 0:
                    enter = j
                    break
        else:
            best = ZERO
            for j in range(n_price):
                v = obj[j]
                if v < best:
                    best = v
                    enter = j
        if enter < 0:
            return

        leave = -1
        best_ratio = None
        for i in range(m):
            a = rows[i][enter]
            if a > 0:
                ratio = rows[i][-1] / a
                if leave < 0 or ratio < best_ratio or (
                        ratio == best_ratio and basis[i] < basis[leave]):
                    best_ratio = ratio
                    leave = i
        if leave < 0:
            raise UnboundedError(f"column {enter} has no blocking row")

        stall = stall + 1 if best_ratio == 0 else 0
        _pivot(rows, basis, obj, leave, enter)


def _pivot(rows, basis, obj, leave, enter):
    piv_row = rows[leave]
    inv = ONE / piv_row[enter]
    if inv != 1:
        rows[leave] = piv_row = [v * inv for v in piv_row]
    width = len(piv_row)
    for i, row in enumerate(rows):
        if i == leave:
            continue
        f = row[enter]
        if f != 0:
            rows[i] = [row[j] - f * piv_row[j] for j in range(width)]
    f = obj[enter]
    if f != 0:
        for j in range(width):
            obj[j] -= f * piv_row[j]
    basis[leave] = enter


def _expel_artificials(rows, basis, art_start):
    """Pivot zero-valued artificials out of the basis; drop redundant rows."""
    i = 0
    while i < len(rows):
        if basis[i] >= art_start:
            row = rows[i]
            pivot_col = next((j for j in range(art_start) if row[j] != 0), -1)
            if pivot_col < 0:
                del rows[i]  # identically-zero constraint
                del basis[i]
                continue
            dummy_obj = [ZERO] * len(row)
            _pivot(rows, basis, dummy_obj, i, pivot_col)
        i += 1
