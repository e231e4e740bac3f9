"""Classical-bound certification over the measurement-dependent local polytope.

A local model with measurement dependence assigns each hidden strategy
lambda a probability and an input distribution P(xy|lambda) whose entries
stay >= l. With binary inputs/outputs, mixed local responses are convex
combinations of the 16 deterministic response pairs, so the model space is
the polytope over variables

    q(lambda, xy) = P(lambda) * P(xy|lambda) >= 0

with the input-marginal equalities sum_lambda q(lambda, xy) = P(xy) and the
measurement-dependence constraints q(lambda, xy) >= l * sum_x'y' q(lambda, x'y').
Maximizing a Bell expression over this polytope is a small dense LP, solved
here by the exact rational simplex; `brute_force_bound` recomputes the same
maximum by exhaustive search over the polytope's known vertex structure and
serves as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import simplex
from .ineq import XY_PAIRS, InequalitySpec, ProbTable
from .simplex import InfeasibleError, LpSolution, UnboundedError  # noqa: F401

UNIFORM_INPUTS = (Fraction(1, 4),) * 4


@dataclass(frozen=True)
class DeterministicStrategy:
    """One of the 16 deterministic local response pairs (a = response_a[x])."""

    index: int
    response_a: tuple[int, int]
    response_b: tuple[int, int]

    def outputs(self, x: int, y: int) -> tuple[int, int]:
        return self.response_a[x], self.response_b[y]

    def conditional_table(self, x: int, y: int) -> np.ndarray:
        t = np.zeros((2, 2))
        t[self.outputs(x, y)] = 1.0
        return t


def enumerate_strategies() -> list[DeterministicStrategy]:
    """All 16 deterministic strategies, indexed 0..15."""
    out = []
    for i in range(16):
        ra = ((i >> 3) & 1, (i >> 2) & 1)
        rb = ((i >> 1) & 1, i & 1)
        out.append(DeterministicStrategy(index=i, response_a=ra, response_b=rb))
    return out


STRATEGIES = tuple(enumerate_strategies())


def _as_fraction(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def _input_dist(input_dist) -> tuple[Fraction, ...]:
    if input_dist is None:
        return UNIFORM_INPUTS
    d = tuple(_as_fraction(v) for v in np.asarray(input_dist).reshape(4))
    if sum(d) != 1:
        raise ValueError(f"input distribution sums to {float(sum(d))}, not 1")
    if any(v < 0 for v in d):
        raise ValueError("negative input probability")
    return d


def _objective_weight(spec: InequalitySpec, strat: DeterministicStrategy,
                      k: int, l: Fraction, pxy: Fraction) -> Fraction:
    x, y = XY_PAIRS[k]
    a, b = strat.outputs(x, y)
    w = _as_fraction(spec.coeff(a, b, x, y, l))
    if spec.form == "conditional":
        if pxy == 0:
            raise ValueError(f"conditional-form objective with zero mass on ({x},{y})")
        w /= pxy
    return w


@dataclass(frozen=True)
class MdlProgram:
    """The LP data: 64 variables q(lambda, xy) with marginal and MDL constraints."""

    l: Fraction
    input_dist: tuple[Fraction, ...]
    objective: tuple[Fraction, ...]
    a_eq: tuple[tuple[Fraction, ...], ...]
    b_eq: tuple[Fraction, ...]
    a_ub: tuple[tuple[Fraction, ...], ...]
    b_ub: tuple[Fraction, ...]

    @staticmethod
    def var(lam: int, k: int) -> int:
        return lam * 4 + k


def build_program(spec: InequalitySpec, l, input_dist=None) -> MdlProgram:
    """Assemble the polytope LP for one inequality at one value of l."""
    l = _as_fraction(l)
    dist = _input_dist(input_dist)
    if l < 0:
        raise ValueError(f"l = {float(l)} is negative")
    if l > min(dist):  # subsumes l > 1/4: four probabilities summing to 1 have min <= 1/4
        raise InfeasibleError(
            f"l = {float(l)} exceeds the smallest input probability {float(min(dist))}")

    n = 64
    zero = Fraction(0)
    a_eq = []
    for k in range(4):
        row = [zero] * n
        for lam in range(16):
            row[MdlProgram.var(lam, k)] = Fraction(1)
        a_eq.append(tuple(row))
    a_ub = []
    for lam in range(16):
        for k in range(4):
            # l * sum_k' q(lam, k') - q(lam, k) <= 0
            row = [zero] * n
            for k2 in range(4):
                row[MdlProgram.var(lam, k2)] = l
            row[MdlProgram.var(lam, k)] += Fraction(-1)
            a_ub.append(tuple(row))

    obj = [zero] * n
    for lam, strat in enumerate(STRATEGIES):
        for k in range(4):
            obj[MdlProgram.var(lam, k)] = _objective_weight(spec, strat, k, l, dist[k])

    return MdlProgram(l=l, input_dist=dist, objective=tuple(obj),
                      a_eq=tuple(a_eq), b_eq=dist,
                      a_ub=tuple(a_ub), b_ub=(zero,) * 64)


def lp_solve(program: MdlProgram) -> LpSolution:
    """Solve the program exactly; infeasible and unbounded raise distinct errors."""
    return simplex.solve(program.objective, a_ub=program.a_ub, b_ub=program.b_ub,
                         a_eq=program.a_eq, b_eq=program.b_eq)


@dataclass(frozen=True)
class MdlWitness:
    """An optimal model: q(lambda, xy) weights realizing the LP optimum."""

    q: tuple[Fraction, ...]
    l: Fraction
    input_dist: tuple[Fraction, ...]
    objective: Fraction

    def strategy_mass(self, lam: int) -> Fraction:
        return sum(self.q[MdlProgram.var(lam, k)] for k in range(4))

    def input_marginal(self) -> tuple[Fraction, ...]:
        return tuple(sum(self.q[MdlProgram.var(lam, k)] for lam in range(16))
                     for k in range(4))

    def prob_table(self) -> ProbTable:
        """The joint distribution P(abxy) this model produces."""
        joint = np.zeros((2, 2, 2, 2))
        for lam, strat in enumerate(STRATEGIES):
            for k, (x, y) in enumerate(XY_PAIRS):
                a, b = strat.outputs(x, y)
                joint[a, b, x, y] += float(self.q[MdlProgram.var(lam, k)])
        return ProbTable.from_joint(joint, provenance="ideal")


def max_bell_mdl(spec: InequalitySpec, l, input_dist=None) -> tuple[float, MdlWitness]:
    """Exact maximum of the inequality over the MDL polytope, with a witness."""
    program = build_program(spec, l, input_dist)
    sol = lp_solve(program)
    witness = MdlWitness(q=sol.x, l=program.l, input_dist=program.input_dist,
                         objective=sol.objective)
    return float(sol.objective), witness


def brute_force_bound(spec: InequalitySpec, l) -> Fraction:
    """Independent oracle for max_bell_mdl with uniform inputs.

    Every admissible P(xy|lambda) is a mixture of the four vertices that put
    weight l on three input pairs and 1-3l on a preferred one, and matching
    the uniform input marginal forces total weight 1/4 on each preferred
    pair. The maximum therefore decomposes over preferred pairs; exhaustive
    search over (preferred pair, strategy) atoms is exact.
    """
    l = _as_fraction(l)
    if not 0 <= l <= Fraction(1, 4):
        raise ValueError(f"l = {float(l)} outside [0, 1/4]")
    quarter = Fraction(1, 4)
    total = Fraction(0)
    for kp in range(4):
        best = None
        for strat in STRATEGIES:
            v = Fraction(0)
            for k in range(4):
                w = (1 - 3 * l) if k == kp else l
                v += w * _objective_weight(spec, strat, k, l, quarter)
            if best is None or v > best:
                best = v
        total += quarter * best
    return total
