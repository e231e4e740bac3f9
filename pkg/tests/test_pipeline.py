import json
import math
from fractions import Fraction

import numpy as np
import pytest

from mdlbell import ineq, pipeline, qstate, session


def make_log(preset="mdl", trials=20000, seed=1, noise=None, bits=(101, 102)):
    cfg = session.SessionConfig.preset(preset, rng_seed=seed, max_trials=trials,
                                       **({"noise": noise} if noise else {}))
    return session.run_session(cfg, session.PrngBits(bits[0]),
                               session.PrngBits(bits[1]))


class TestCountTable:
    def test_totals_consistent(self, human_counts):
        assert human_counts.grand_total == 135355
        totals = human_counts.per_basis_totals
        assert totals[0, 0] == 34408 and totals[1, 1] == 19853

    def test_measured_exceeding_total_rejected(self):
        with pytest.raises(ValueError):
            pipeline.CountTable.from_measured_and_totals(
                {(0, 0, 0, 0): 10}, {(0, 0): 5, (0, 1): 5, (1, 0): 5, (1, 1): 5})

    def test_negative_rejected(self):
        bad = np.zeros((2, 2, 2, 2), dtype=np.int64)
        bad[0, 0, 0, 0] = -1
        with pytest.raises(ValueError):
            pipeline.CountTable(bad)


class TestIngest:
    def test_counts_only_coincidences(self):
        recs = (
            session.TrialRecord(0, 0, 0, 0, 0, 0),
            session.TrialRecord(1, 1, 0, 1, 0, 1),
            session.TrialRecord(2, 2, 1, 0, 1, 0),
            session.TrialRecord(3, 3, 1, 1, 0, 0),
            session.TrialRecord(4, 4, 1, 1, None, 0),
        )
        counts = pipeline.ingest(session.SessionLog(records=recs))
        assert counts.grand_total == 4
        assert counts.cell(0, 0, 1, 1) == 1

    def test_matches_session_internal_counter(self):
        log = make_log(trials=5000, noise=qstate.NoiseModel(eta_a=0.9, eta_b=0.85))
        assert pipeline.ingest(log).grand_total == log.coincidences


class TestProbabilities:
    def test_human_rng_table(self, human_counts):
        table = pipeline.probabilities(human_counts)
        assert round(float(table.joint[0, 0, 0, 0]), 5) == 0.02093
        assert round(float(table.joint[0, 1, 0, 1]), 5) == 0.00074
        assert round(float(table.joint[1, 0, 1, 0]), 5) == 0.00143
        assert round(float(table.joint[0, 0, 1, 1]), 5) == 0.00064

    def test_qrng_table(self, qrng_counts):
        table = pipeline.probabilities(qrng_counts)
        assert round(float(table.joint[0, 0, 0, 0]), 5) == 0.02101

    def test_single_count(self):
        counts = pipeline.CountTable.from_cells({(1, 0, 0, 1): 1})
        table = pipeline.probabilities(counts)
        assert table.joint[1, 0, 0, 1] == 1.0
        assert table.joint.sum() == 1.0

    def test_zero_total_rejected(self):
        with pytest.raises(ValueError):
            pipeline.probabilities(pipeline.CountTable.zero())


class TestEstimateL:
    def test_pooled_human(self, human_counts):
        est = pipeline.estimate_l(human_counts)
        assert est.exact == Fraction(379, 3970)
        assert round(est.value, 2) == 0.10  # the published rounding

    def test_pooled_qrng(self, qrng_counts):
        est = pipeline.estimate_l(qrng_counts)
        assert est.value == pytest.approx(0.106, abs=1e-3)

    def test_ideal_simulation_sections_near_zero(self):
        log = make_log(trials=40000, seed=9)
        est = pipeline.estimate_l(log, method="sectioned",
                                  section=pipeline.SectionSpec(trials=10000))
        assert len(est.section_values) == 4
        # noiseless Hardy point: zeros stay zero, so every section gives l*=0
        assert all(v == 0.0 for v in est.section_values)
        assert est.value == 0.0

    def test_pooled_uncertainty_from_sections(self):
        noise = qstate.calibrate_fidelity(qstate.make_state("mdl-nonmaximal"), 0.987)
        log = make_log(trials=50000, noise=noise, seed=3)
        est = pipeline.estimate_l(log, section=pipeline.SectionSpec(trials=10000))
        assert est.uncertainty is not None and est.uncertainty > 0
        assert est.std_error == pytest.approx(
            est.uncertainty / math.sqrt(len(est.section_values)))

    def test_counts_only_has_no_uncertainty(self, human_counts):
        est = pipeline.estimate_l(human_counts)
        assert est.uncertainty is None

    def test_degenerate_sections_dropped_with_warning(self):
        recs = tuple(session.TrialRecord(i, i * 10, 1, 1, 1, 1) for i in range(100))
        recs += (session.TrialRecord(100, 1000, 0, 0, 0, 0),)
        log = session.SessionLog(records=recs)
        with pytest.warns(UserWarning, match="degenerate"):
            est = pipeline.estimate_l(log, method="sectioned",
                                      section=pipeline.SectionSpec(trials=50))
        assert est.dropped_sections == 2  # only the last section has monitored mass

    def test_convergence_with_more_trials(self):
        noise = qstate.calibrate_fidelity(qstate.make_state("mdl-nonmaximal"), 0.987)
        aa, bb = qstate.mdl_basis_angles()
        truth = ineq.critical_l_mdl(ineq.ideal_table(
            qstate.apply_noise(qstate.make_state("mdl-nonmaximal"), noise), aa, bb)).l
        small = pipeline.estimate_l(pipeline.ingest(make_log(trials=10 ** 4, noise=noise)))
        large = pipeline.estimate_l(pipeline.ingest(make_log(trials=2 * 10 ** 5, noise=noise)))
        assert abs(large.value - truth) < abs(small.value - truth)


class TestEstimateChsh:
    def test_reported_correlators(self):
        s = ineq.chsh_value(-0.751, 0.651, 0.657, 0.745, convention="best-of-8")
        assert s == pytest.approx(2.804)

    def test_ideal_simulation(self):
        log = make_log(preset="chsh", trials=10 ** 5, seed=2, bits=(7, 8))
        est = pipeline.estimate_chsh(log)
        assert est.value == pytest.approx(2 * math.sqrt(2), abs=0.02)

    def test_deterministic_table_gives_two(self):
        recs = tuple(session.TrialRecord(i, i, x, y, 0, 0)
                     for i, (x, y) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)] * 10))
        est = pipeline.estimate_chsh(session.SessionLog(records=recs))
        assert est.value == 2.0

    def test_empty_cell_named(self):
        recs = (session.TrialRecord(0, 0, 0, 0, 0, 0),)
        with pytest.raises(pipeline.EmptyCellError, match=r"\(0,1\)"):
            pipeline.estimate_chsh(session.SessionLog(records=recs))


class TestAnalysisAndReport:
    def test_rendered_table_matches_published_rows(self, human_counts):
        text = pipeline.render_counts_table(human_counts)
        assert "A0 B0" in text and "2833" in text and "34408" in text
        assert "P(0000)= 0.02093" in text
        assert "P(0101)= 0.00074" in text
        assert "P(1010)= 0.00143" in text
        assert "P(0011)= 0.00064" in text

    def test_no_data_report(self):
        analysis = pipeline.analysis_dict(pipeline.CountTable.zero())
        text = pipeline.render_text(analysis)
        assert "no data" in text
        assert analysis["mdl"]["status"] == "insufficient data"

    def test_json_round_trip(self, human_counts):
        analysis = pipeline.analysis_dict(human_counts)
        blob = pipeline.to_canonical_json(analysis)
        assert json.loads(blob) == json.loads(pipeline.to_canonical_json(analysis))
        assert json.loads(blob)["mdl"]["critical_l"]["exact"] == "379/3970"

    def test_report_bytes_deterministic(self, human_counts):
        a = pipeline.to_canonical_json(pipeline.analysis_dict(human_counts))
        b = pipeline.to_canonical_json(pipeline.analysis_dict(
            pipeline.CountTable(human_counts.counts.copy())))
        assert a == b

    def test_scale_invariance_of_l(self, human_counts):
        doubled = pipeline.CountTable(human_counts.counts * 2)
        assert pipeline.estimate_l(doubled).exact == pipeline.estimate_l(human_counts).exact

    def test_csv_render_contains_estimates(self, human_counts):
        csv_text = pipeline.render_csv(pipeline.analysis_dict(human_counts))
        assert "mdl_critical_l" in csv_text
        assert "grand_total,135355" in csv_text

    def test_report_text_includes_timing_and_rng(self, human_counts):
        from mdlbell import rngstat
        reports = [rngstat.monobit_test(np.zeros(200, dtype=np.uint8))]
        text = pipeline.report_text(pipeline.analysis_dict(human_counts),
                                    margin_ns=140.2, rng_reports=reports)
        assert "timing margin: +140.2 ns (locality ok)" in text
        assert "rng monobit" in text and "FAIL" in text


class TestSectionedUncertainty:
    def test_error_shrinks_with_more_sections(self):
        # same section length, 5x the sections: the mean's error contracts
        noise = qstate.calibrate_fidelity(qstate.make_state("mdl-nonmaximal"), 0.987)
        spec = pipeline.SectionSpec(trials=10000)
        short = pipeline.estimate_l(make_log(trials=4 * 10 ** 4, noise=noise, seed=12),
                                    method="sectioned", section=spec)
        long = pipeline.estimate_l(make_log(trials=2 * 10 ** 5, noise=noise, seed=12),
                                   method="sectioned", section=spec)
        assert len(short.section_values) == 4
        assert len(long.section_values) == 20
        assert long.std_error < short.std_error

    def test_time_based_sections(self):
        log = make_log(trials=10000, seed=4)
        # trials tick at 10 us; 20 ms sections hold 2000 trials each
        est = pipeline.estimate_l(log, method="sectioned",
                                  section=pipeline.SectionSpec(duration_ns=20_000_000))
        assert len(est.section_values) == 5
