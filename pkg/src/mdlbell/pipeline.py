"""Turns session logs into count tables, probabilities, and bound estimates.

Probabilities are raw joint frequencies over the grand coincidence total
(P(abxy) = N(abxy)/N), matching how coincidence-counted experiments tabulate
them; no input-distribution correction is applied even when the setting
streams are visibly biased. Uncertainties are sample standard deviations of
per-section estimates (the standard error is also carried, labeled, since
either convention is defensible).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import ineq
from .ineq import DegenerateTableError, MdlBound, ProbTable
from .session import SessionLog, TrialRecord

ABXY_CELLS = [(a, b, x, y) for a in (0, 1) for b in (0, 1) for x in (0, 1) for y in (0, 1)]


class EmptyCellError(ValueError):
    """A basis pair has no coincidences, so its correlator is undefined."""


@dataclass(frozen=True)
class CountTable:
    """Coincidence counts N(abxy) with per-basis and grand totals."""

    counts: np.ndarray  # int64, indexed [a, b, x, y]

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64).reshape(2, 2, 2, 2)
        if c.min() < 0:
            raise ValueError("negative count")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def per_basis_totals(self) -> np.ndarray:
        return self.counts.sum(axis=(0, 1))

    @property
    def grand_total(self) -> int:
        return int(self.counts.sum())

    def cell(self, a: int, b: int, x: int, y: int) -> int:
        return int(self.counts[a, b, x, y])

    def __add__(self, other: "CountTable") -> "CountTable":
        return CountTable(self.counts + other.counts)

    @classmethod
    def zero(cls) -> "CountTable":
        return cls(np.zeros((2, 2, 2, 2), dtype=np.int64))

    @classmethod
    def from_cells(cls, cells: dict[tuple[int, int, int, int], int]) -> "CountTable":
        c = np.zeros((2, 2, 2, 2), dtype=np.int64)
        for (a, b, x, y), n in cells.items():
            c[a, b, x, y] = n
        return cls(c)

    @classmethod
    def from_measured_and_totals(cls, measured: dict[tuple[int, int, int, int], int],
                                 totals: dict[tuple[int, int], int]) -> "CountTable":
        """Reconstruct a table from one published cell per basis plus basis totals.

        The unpublished remainder of each basis is lumped into the last free
        outcome cell of that basis; every monitored quantity downstream (the
        four published probabilities, l*) is unaffected by the lumping.
        """
        c = np.zeros((2, 2, 2, 2), dtype=np.int64)
        for (a, b, x, y), n in measured.items():
            c[a, b, x, y] = n
        for (x, y), total in totals.items():
            seen = int(c[:, :, x, y].sum())
            if seen > total:
                raise ValueError(f"basis ({x},{y}): measured {seen} exceeds total {total}")
            spare = next((a, b) for a in (1, 0) for b in (1, 0)
                         if (a, b, x, y) not in measured)
            c[spare[0], spare[1], x, y] += total - seen
        return cls(c)


def ingest(log: SessionLog) -> CountTable:
    """Count coincidence trials (both arms detected) per outcome/basis cell."""
    c = np.zeros((2, 2, 2, 2), dtype=np.int64)
    for r in log.records:
        if r.coincidence:
            c[r.a, r.b, r.x, r.y] += 1
    return CountTable(c)


def probabilities(counts: CountTable) -> ProbTable:
    """Joint frequencies P(abxy) = N(abxy)/N over the grand total."""
    total = counts.grand_total
    if total <= 0:
        raise ValueError("no coincidences: cannot form probabilities")
    return ProbTable.from_joint(counts.counts / total, provenance="ingested")


@dataclass(frozen=True)
class SectionSpec:
    """How to slice a log for fluctuation analysis: by trials or by time."""

    trials: int | None = None
    duration_ns: int | None = None

    def __post_init__(self):
        if (self.trials is None) == (self.duration_ns is None):
            raise ValueError("specify exactly one of trials / duration_ns")
        if self.trials is not None and self.trials <= 0:
            raise ValueError("section trial count must be positive")
        if self.duration_ns is not None and self.duration_ns <= 0:
            raise ValueError("section duration must be positive")

    def label(self) -> str:
        if self.trials is not None:
            return f"{self.trials}-trials"
        return f"{self.duration_ns}ns"

    def index_of(self, record: TrialRecord) -> int:
        if self.trials is not None:
            return record.trial // self.trials
        return record.time_ns // self.duration_ns


def section_counts(log: SessionLog, spec: SectionSpec) -> list[CountTable]:
    """Per-section count tables in section order (empty sections included)."""
    buckets: dict[int, np.ndarray] = {}
    for r in log.records:
        if not r.coincidence:
            continue
        idx = spec.index_of(r)
        if idx not in buckets:
            buckets[idx] = np.zeros((2, 2, 2, 2), dtype=np.int64)
        buckets[idx][r.a, r.b, r.x, r.y] += 1
    return [CountTable(buckets[k]) for k in sorted(buckets)]


@dataclass(frozen=True)
class SectionedEstimate:
    """A point estimate with per-section fluctuation statistics.

    `uncertainty` is the sample standard deviation across sections;
    `std_error` divides it by sqrt(#sections). Fewer than two usable
    sections leave both None.
    """

    value: float
    uncertainty: float | None = None
    std_error: float | None = None
    method: str = "pooled"
    section_label: str | None = None
    section_values: tuple[float, ...] = ()
    dropped_sections: int = 0
    exact: Fraction | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.uncertainty is not None and self.uncertainty < 0:
            raise ValueError("uncertainty must be >= 0")


def _spread(values: list[float]) -> tuple[float | None, float | None]:
    if len(values) < 2:
        return None, None
    sd = float(np.std(values, ddof=1))
    return sd, sd / math.sqrt(len(values))


def _section_l_values(log: SessionLog, spec: SectionSpec) -> tuple[list[float], int]:
    values, dropped = [], 0
    for counts in section_counts(log, spec):
        try:
            values.append(_pooled_l(counts).l)
        except (DegenerateTableError, ValueError):
            dropped += 1
    if dropped:
        warnings.warn(f"dropped {dropped} degenerate section(s) from l estimate",
                      stacklevel=3)
    return values, dropped


def _pooled_l(counts: CountTable) -> MdlBound:
    return ineq.critical_l_from_counts(
        counts.cell(*ineq.MDL_POSITIVE_CELL),
        *(counts.cell(*c) for c in ineq.MDL_NEGATIVE_CELLS))


def estimate_l(source, method: str = "pooled",
               section: SectionSpec | None = None) -> SectionedEstimate:
    """Critical l of the data, pooled or as a mean of per-section values.

    `source` is a SessionLog (sections available) or a bare CountTable
    (pooled only, no fluctuation statistics).
    """
    if isinstance(source, CountTable):
        counts, log = source, None
    else:
        counts, log = ingest(source), source

    if method == "pooled":
        bound = _pooled_l(counts)
        sd = se = None
        section_values: tuple[float, ...] = ()
        dropped = 0
        label = None
        if log is not None and section is not None:
            values, dropped = _section_l_values(log, section)
            sd, se = _spread(values)
            section_values = tuple(values)
            label = section.label()
        return SectionedEstimate(value=bound.l, uncertainty=sd, std_error=se,
                                 method="pooled", section_label=label,
                                 section_values=section_values,
                                 dropped_sections=dropped, exact=bound.exact)
    if method == "sectioned":
        if log is None or section is None:
            raise ValueError("sectioned estimate needs a log and a section spec")
        values, dropped = _section_l_values(log, section)
        if not values:
            raise DegenerateTableError("every section was degenerate")
        sd, se = _spread(values)
        return SectionedEstimate(value=float(np.mean(values)), uncertainty=sd,
                                 std_error=se, method="sectioned",
                                 section_label=section.label(),
                                 section_values=tuple(values),
                                 dropped_sections=dropped)
    raise ValueError(f"unknown method {method!r}")


def correlators_from_counts(counts: CountTable) -> dict[tuple[int, int], float]:
    """Per-basis correlators E(xy) from conditional coincidence frequencies."""
    out = {}
    for x, y in ineq.XY_PAIRS:
        basis = counts.counts[:, :, x, y]
        total = int(basis.sum())
        if total == 0:
            raise EmptyCellError(f"no coincidences in basis pair ({x},{y})")
        out[(x, y)] = float(basis[0, 0] + basis[1, 1] - basis[0, 1] - basis[1, 0]) / total
    return out


def _chsh_from_counts(counts: CountTable) -> tuple[float, float, dict]:
    es = correlators_from_counts(counts)
    ordered = [es[p] for p in ineq.XY_PAIRS]
    return (ineq.chsh_value(*ordered, convention="best-of-8"),
            ineq.chsh_value(*ordered, convention="fixed"),
            es)


def estimate_chsh(source, section: SectionSpec | None = None) -> SectionedEstimate:
    """Best-of-8 CHSH S with per-section fluctuation when a log is given."""
    if isinstance(source, CountTable):
        counts, log = source, None
    else:
        counts, log = ingest(source), source
    s_best, _s_fixed, _es = _chsh_from_counts(counts)
    sd = se = None
    section_values: tuple[float, ...] = ()
    dropped = 0
    label = None
    if log is not None and section is not None:
        values = []
        for sec in section_counts(log, section):
            try:
                values.append(_chsh_from_counts(sec)[0])
            except EmptyCellError:
                dropped += 1
        if dropped:
            warnings.warn(f"dropped {dropped} section(s) with an empty basis cell",
                          stacklevel=2)
        sd, se = _spread(values)
        section_values = tuple(values)
        label = section.label()
    return SectionedEstimate(value=s_best, uncertainty=sd, std_error=se,
                             method="pooled", section_label=label,
                             section_values=section_values,
                             dropped_sections=dropped)


# --- canonical analysis object (shared by the CLI and the live service) ---

MONITORED_CELLS = (ineq.MDL_POSITIVE_CELL,) + ineq.MDL_NEGATIVE_CELLS


def _round6(v: float) -> float:
    return round(float(v), 6)


def _estimate_dict(est: SectionedEstimate) -> dict:
    return {
        "value": float(est.value),
        "uncertainty_stddev": None if est.uncertainty is None else float(est.uncertainty),
        "uncertainty_stderr": None if est.std_error is None else float(est.std_error),
        "method": est.method,
        "section": est.section_label,
        "sections_used": len(est.section_values),
        "sections_dropped": est.dropped_sections,
        "exact": None if est.exact is None else f"{est.exact.numerator}/{est.exact.denominator}",
    }


def analysis_dict(counts: CountTable, log: SessionLog | None = None,
                  section: SectionSpec | None = None) -> dict:
    """Counts, probabilities, and both inequality estimates as one JSON-safe dict.

    Estimates that the data cannot support are flagged insufficient rather
    than raised, so the same object shape serves fresh and mature sessions.
    """
    out: dict = {
        "counts": {
            "grand_total": counts.grand_total,
            "per_basis": {f"{x}{y}": int(counts.per_basis_totals[x, y])
                          for x, y in ineq.XY_PAIRS},
            "cells": {f"{a}{b}{x}{y}": counts.cell(a, b, x, y)
                      for a, b, x, y in ABXY_CELLS},
        },
    }
    if counts.grand_total == 0:
        out["probabilities"] = None
        out["mdl"] = {"status": "insufficient data"}
        out["chsh"] = {"status": "insufficient data"}
        return out

    table = probabilities(counts)
    out["probabilities"] = {f"{a}{b}{x}{y}": float(table.joint[a, b, x, y])
                            for a, b, x, y in ABXY_CELLS}
    try:
        est = estimate_l(log if log is not None else counts,
                         method="pooled", section=section)
        lhs_quarter = ineq.mdl_lhs(table, 0.25)
        out["mdl"] = {"critical_l": _estimate_dict(est),
                      "lhs_at_quarter": float(lhs_quarter)}
    except (DegenerateTableError, ValueError):
        out["mdl"] = {"status": "insufficient data"}
    try:
        est = estimate_chsh(log if log is not None else counts, section=section)
        _s_best, s_fixed, es = _chsh_from_counts(counts)
        out["chsh"] = {
            "s": _estimate_dict(est),
            "s_fixed_sign": float(s_fixed),
            "correlators": {f"{x}{y}": float(es[(x, y)]) for x, y in ineq.XY_PAIRS},
            "critical_l": float(ineq.critical_l_chsh(min(4.0, abs(est.value))).l),
        }
    except EmptyCellError as exc:
        out["chsh"] = {"status": f"insufficient data: {exc}"}
    return out


def to_canonical_json(obj) -> bytes:
    """Byte-stable JSON: sorted keys, tight separators, UTF-8."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


BASIS_NAMES = {(0, 0): "A0 B0", (0, 1): "A0 B1", (1, 0): "A1 B0", (1, 1): "A1 B1"}


def render_counts_table(counts: CountTable) -> str:
    """The published-table layout: one row per basis with its monitored cell."""
    lines = [f"{'Basis':<8}{'Measured':>10}{'Total':>10}  P(abxy)"]
    total = counts.grand_total
    totals = counts.per_basis_totals
    for a, b, x, y in MONITORED_CELLS:
        measured = counts.cell(a, b, x, y)
        p = measured / total if total else float("nan")
        lines.append(f"{BASIS_NAMES[(x, y)]:<8}{measured:>10}{int(totals[x, y]):>10}"
                     f"  P({a}{b}{x}{y})= {p:.5f}")
    return "\n".join(lines)


def render_text(analysis: dict, extras: dict | None = None) -> str:
    """Human-readable report of an analysis dict (plus optional extras)."""
    lines = []
    c = analysis["counts"]
    if c["grand_total"] == 0:
        lines.append("no data: zero coincidences")
    else:
        lines.append(f"coincidences: {c['grand_total']}")
        counts = CountTable.from_cells(
            {tuple(int(ch) for ch in key): v for key, v in c["cells"].items()})
        lines.append(render_counts_table(counts))
    mdl = analysis["mdl"]
    if "critical_l" in mdl:
        est = mdl["critical_l"]
        unc = est["uncertainty_stddev"]
        unc_txt = "" if unc is None else f" +- {unc:.5f} (stddev over {est['sections_used']} sections)"
        exact = f" (= {est['exact']})" if est["exact"] else ""
        lines.append(f"MDL critical l* = {est['value']:.5f}{exact}{unc_txt}")
    else:
        lines.append(f"MDL: {mdl['status']}")
    chsh = analysis["chsh"]
    if "s" in chsh:
        est = chsh["s"]
        unc = est["uncertainty_stddev"]
        unc_txt = "" if unc is None else f" +- {unc:.4f}"
        lines.append(f"CHSH S (best-of-8) = {est['value']:.4f}{unc_txt}"
                     f"   [fixed-sign {chsh['s_fixed_sign']:.4f}]")
        lines.append("correlators: " + "  ".join(
            f"E({k})={v:+.4f}" for k, v in sorted(chsh["correlators"].items())))
        lines.append(f"CHSH critical l = {chsh['critical_l']:.4f}")
    else:
        lines.append(f"CHSH: {chsh['status']}")
    for key, value in (extras or {}).items():
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def report_text(analysis: dict, margin_ns: float | None = None,
                rng_reports=None) -> str:
    """Full session report: the analysis plus timing and bitstream summaries."""
    extras = {}
    if margin_ns is not None:
        verdict = "locality ok" if margin_ns > 0 else "LOCALITY VIOLATED"
        extras["timing margin"] = f"{margin_ns:+.1f} ns ({verdict})"
    for report in rng_reports or []:
        extras[f"rng {report.name}"] = (
            f"p={report.p_value:.4f} {'pass' if report.passed else 'FAIL'}")
    return render_text(analysis, extras)


def render_csv(analysis: dict) -> str:
    """Flat key,value CSV of the analysis (cells, probabilities, estimates)."""
    rows = [("key", "value")]
    c = analysis["counts"]
    rows.append(("grand_total", c["grand_total"]))
    for key in sorted(c["per_basis"]):
        rows.append((f"total_{key}", c["per_basis"][key]))
    for key in sorted(c["cells"]):
        rows.append((f"count_{key}", c["cells"][key]))
    if analysis.get("probabilities"):
        for key in sorted(analysis["probabilities"]):
            rows.append((f"p_{key}", repr(analysis["probabilities"][key])))
    mdl = analysis["mdl"]
    if "critical_l" in mdl:
        rows.append(("mdl_critical_l", repr(mdl["critical_l"]["value"])))
        if mdl["critical_l"]["exact"]:
            rows.append(("mdl_critical_l_exact", mdl["critical_l"]["exact"]))
    chsh = analysis["chsh"]
    if "s" in chsh:
        rows.append(("chsh_s_best", repr(chsh["s"]["value"])))
        rows.append(("chsh_s_fixed", repr(chsh["s_fixed_sign"])))
        rows.append(("chsh_critical_l", repr(chsh["critical_l"])))
    return "\n".join(f"{k},{v}" for k, v in rows) + "\n"
