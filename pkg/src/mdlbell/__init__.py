"""Workbench for measurement-dependent-locality Bell tests.

Submodules: qstate (two-qubit model), ineq (inequality evaluators),
mdlopt (polytope LP bounds), session (trial simulation), rngstat
(bitstream diagnostics), pipeline (counts-to-estimates analysis),
livesvc (live HTTP session service), cli (command line).
"""

from .ineq import (MdlBound, ProbTable, bell_value, best_chsh_value, chsh_spec,
                   chsh_value, critical_l_chsh, critical_l_from_counts,
                   critical_l_mdl, ideal_table, jc_of_l, mdl_lhs, mdl_spec)
from .mdlopt import brute_force_bound, enumerate_strategies, max_bell_mdl
from .pipeline import CountTable, SectionSpec, estimate_chsh, estimate_l, ingest, probabilities
from .qstate import (MeasurementBasis, NoiseModel, TwoQubitState, apply_noise,
                     born_probs, calibrate_fidelity, calibrate_visibilities,
                     correlator, fidelity, make_state, mdl_angle)
from .session import (Geometry, PrngBits, QueueBits, SessionConfig, SessionLog,
                      StringBits, TrialRecord, file_bits, pair_bits, read_log,
                      run_session, timing_margin, write_log)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
