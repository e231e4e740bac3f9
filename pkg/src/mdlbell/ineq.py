"""Bell-inequality evaluators and critical measurement-dependence extraction.

Two inequality families are built in:

- the CHSH form, evaluated on conditional probabilities P(ab|xy) with
  coefficients (-1)^(a+b) and one minus sign among the four basis pairs
  (outcome relabeling moves the minus sign around, so a best-of-8 variant
  is exposed alongside the fixed convention), with the relaxed classical
  bound 4(1-2l) under measurement dependence l;
- the measurement-dependent-local form, evaluated on joint probabilities:
  l*P(0000) - (1-3l)*(P(0101) + P(1010) + P(0011)) <= 0 for every model
  whose input distribution conditioned on the hidden variable stays >= l.

Everything operates on immutable values; concurrent use is unrestricted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import qstate

XY_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))
ABXY = [(a, b, x, y) for a in (0, 1) for b in (0, 1) for x in (0, 1) for y in (0, 1)]

MDL_POSITIVE_CELL = (0, 0, 0, 0)
MDL_NEGATIVE_CELLS = ((0, 1, 0, 1), (1, 0, 1, 0), (0, 0, 1, 1))


class DegenerateTableError(ValueError):
    """Raised when a table has no information to pin down a critical l."""


@dataclass(frozen=True)
class ProbTable:
    """Joint probabilities P(abxy) plus the input distribution P(xy).

    `joint` is indexed [a, b, x, y]; `input_dist` is indexed [x, y] and
    always equals the ab-marginal of `joint`.
    """

    joint: np.ndarray
    input_dist: np.ndarray
    provenance: str = "ideal"  # "ideal" | "simulated" | "ingested"

    def __post_init__(self):
        j = np.asarray(self.joint, dtype=float).reshape(2, 2, 2, 2)
        if j.min() < -1e-9:
            raise ValueError("negative joint probability")
        if abs(j.sum() - 1.0) > 1e-9:
            raise ValueError(f"joint probabilities sum to {j.sum()}, not 1")
        marg = j.sum(axis=(0, 1))
        d = np.asarray(self.input_dist, dtype=float).reshape(2, 2)
        if not np.allclose(marg, d, atol=1e-9):
            raise ValueError("input distribution inconsistent with joint table")
        j.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "joint", j)
        object.__setattr__(self, "input_dist", d)

    @classmethod
    def from_joint(cls, joint, provenance="ingested") -> "ProbTable":
        j = np.asarray(joint, dtype=float).reshape(2, 2, 2, 2)
        return cls(joint=j, input_dist=j.sum(axis=(0, 1)), provenance=provenance)

    def conditional(self, x: int, y: int) -> np.ndarray:
        """P(ab|xy) as a 2x2 array; raises on a zero-mass basis pair."""
        pxy = self.input_dist[x, y]
        if pxy <= 0.0:
            raise ValueError(f"no input mass on basis pair ({x},{y})")
        return self.joint[:, :, x, y] / pxy

    def correlators(self) -> dict[tuple[int, int], float]:
        return {(x, y): qstate.correlator(self.conditional(x, y)) for x, y in XY_PAIRS}


def ideal_table(state: qstate.TwoQubitState, angles_a: dict[int, float],
                angles_b: dict[int, float], input_dist=None) -> ProbTable:
    """Born-rule ProbTable for a state and per-input basis angles."""
    if input_dist is None:
        input_dist = np.full((2, 2), 0.25)
    d = np.asarray(input_dist, dtype=float).reshape(2, 2)
    joint = np.empty((2, 2, 2, 2))
    for x, y in XY_PAIRS:
        cond = qstate.born_probs(state, qstate.MeasurementBasis(angles_a[x]),
                                 qstate.MeasurementBasis(angles_b[y]))
        joint[:, :, x, y] = cond * d[x, y]
    return ProbTable(joint=joint, input_dist=d, provenance="ideal")


@dataclass(frozen=True)
class InequalitySpec:
    """Coefficient rule c(a, b, x, y; l) plus how its classical bound is known.

    `form` declares whether the linear combination runs over joint
    probabilities P(abxy) or conditional ones P(ab|xy). Coefficients may
    depend on the measurement-dependence parameter l; exact (Fraction)
    arithmetic is preserved when l is a Fraction.
    """

    name: str
    coeff: Callable[[int, int, int, int, object], object]
    form: str  # "joint" | "conditional"
    bound_form: str = "lp-certified"  # "constant" | "analytic-in-l" | "lp-certified"
    bound: Callable[[object], object] | None = None

    def __post_init__(self):
        if self.form not in ("joint", "conditional"):
            raise ValueError(f"unknown form {self.form!r}")


def chsh_spec(minus_at: tuple[int, int] = (1, 1)) -> InequalitySpec:
    """CHSH with coefficients (-1)^(a+b) and the minus sign on one basis pair.

    The default minus_at=(1,1) is the convention c = (-1)^(a+b+xy).
    """
    if minus_at not in XY_PAIRS:
        raise ValueError("minus_at must be one of the four basis pairs")

    def coeff(a, b, x, y, l=None):
        sign = -1 if (x, y) == minus_at else 1
        return sign * (-1) ** (a + b)

    return InequalitySpec(name=f"chsh[{minus_at[0]}{minus_at[1]}]", coeff=coeff,
                          form="conditional", bound_form="analytic-in-l",
                          bound=jc_of_l)


def mdl_spec() -> InequalitySpec:
    """The measurement-dependent-local inequality (joint-probability form)."""

    def coeff(a, b, x, y, l):
        if (a, b, x, y) == MDL_POSITIVE_CELL:
            return l
        if (a, b, x, y) in MDL_NEGATIVE_CELLS:
            return -(1 - 3 * l)
        return 0 * l  # keeps Fraction arithmetic exact

    return InequalitySpec(name="mdl", coeff=coeff, form="joint",
                          bound_form="lp-certified", bound=lambda l: 0.0)


def bell_value(spec: InequalitySpec, table: ProbTable, l: float = 0.25) -> float:
    """Sum of coefficients times probabilities, joint or conditional per the inequality."""
    total = 0.0
    if spec.form == "joint":
        for a, b, x, y in ABXY:
            total += float(spec.coeff(a, b, x, y, l)) * table.joint[a, b, x, y]
    else:
        for x, y in XY_PAIRS:
            pxy = table.input_dist[x, y]
            if pxy <= 0.0:
                raise ValueError(
                    f"conditional-form value needs input mass on basis pair ({x},{y})")
            for a in (0, 1):
                for b in (0, 1):
                    total += (float(spec.coeff(a, b, x, y, l))
                              * table.joint[a, b, x, y] / pxy)
    return total


def best_chsh_value(table: ProbTable) -> float:
    """Max |bell_value| over the four minus-sign placements (outcome relabelings)."""
    return max(abs(bell_value(chsh_spec(minus_at=p), table)) for p in XY_PAIRS)


def chsh_value(e00: float, e01: float, e10: float, e11: float,
               convention: str = "fixed") -> float:
    """CHSH S from four correlators.

    "fixed" puts the minus sign on E11 (the c = (-1)^(a+b+xy) convention);
    "best-of-8" returns the largest |S| over the eight canonical sign
    placements (one minus sign, up to global negation).
    """
    es = (e00, e01, e10, e11)
    for e in es:
        if abs(e) > 1.0 + 1e-12:
            raise ValueError(f"correlator {e} outside [-1, 1]")
    if convention == "fixed":
        return e00 + e01 + e10 - e11
    if convention == "best-of-8":
        total = sum(es)
        return max(abs(total - 2 * e) for e in es)
    raise ValueError(f"unknown convention {convention!r}")


@dataclass(frozen=True)
class MdlBound:
    """A measurement-dependence level l = min P(xy|lambda), in [0, 1/4]."""

    l: float
    exact: Fraction | None = field(default=None, compare=False)
    clamped: bool = False

    def __post_init__(self):
        if not -1e-12 <= self.l <= 0.25 + 1e-12:
            raise ValueError(f"l = {self.l} outside [0, 1/4]")


def jc_of_l(l: float) -> float:
    """Relaxed classical CHSH bound 4(1 - 2l) for input randomness level l."""
    if not 0.0 <= l <= 0.25:
        raise ValueError(f"l = {l} outside [0, 1/4]")
    return 4.0 * (1.0 - 2.0 * l)


def critical_l_chsh(s: float) -> MdlBound:
    """Invert the relaxed bound: the l at which 4(1-2l) equals the observed S.

    S below the standard classical bound needs no measurement dependence at
    all; that case returns l = 1/4 with the clamped flag set.
    """
    if not 0.0 <= s <= 4.0:
        raise ValueError(f"S = {s} outside [0, 4]")
    if s < 2.0:
        return MdlBound(l=0.25, clamped=True)
    return MdlBound(l=(4.0 - s) / 8.0)


def mdl_lhs(table: ProbTable, l: float) -> float:
    """l*P(0000) - (1-3l)*(P(0101) + P(1010) + P(0011)) on joint probabilities."""
    if not 0.0 <= l <= 0.25:
        raise ValueError(f"l = {l} outside [0, 1/4]")
    pos = table.joint[MDL_POSITIVE_CELL]
    neg = sum(table.joint[c] for c in MDL_NEGATIVE_CELLS)
    return l * pos - (1.0 - 3.0 * l) * neg


def critical_l_mdl(table: ProbTable) -> MdlBound:
    """The unique l* where the MDL expression changes sign: S3/(P(0000) + 3 S3)."""
    pos = float(table.joint[MDL_POSITIVE_CELL])
    s3 = float(sum(table.joint[c] for c in MDL_NEGATIVE_CELLS))
    if pos + 3.0 * s3 <= 0.0:
        raise DegenerateTableError("all monitored cells are zero; l* undefined")
    return MdlBound(l=s3 / (pos + 3.0 * s3))


def critical_l_from_counts(n0000: int, n0101: int, n1010: int, n0011: int) -> MdlBound:
    """Exact-count variant of critical_l_mdl (scale-invariant ratio of counts)."""
    s3 = n0101 + n1010 + n0011
    denom = n0000 + 3 * s3
    if denom <= 0:
        raise DegenerateTableError("all monitored cells are zero; l* undefined")
    exact = Fraction(s3, denom)
    return MdlBound(l=float(exact), exact=exact)
