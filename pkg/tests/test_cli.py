import json

import pytest

from mdlbell import cli, pipeline, session


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr().out


class TestSimulateAnalyze:
    def test_simulate_then_analyze_text(self, tmp_path, capsys):
        log_path = tmp_path / "run.log"
        code, out = run_cli(capsys, "simulate", "--experiment", "mdl",
                            "--bits-a", "prng:1", "--bits-b", "prng:2",
                            "--out", str(log_path), "--trials", "2000", "--seed", "5")
        assert code == 0
        assert "2000 trials" in out
        assert "locality ok" in out

        code, out = run_cli(capsys, "analyze", str(log_path))
        assert code == 0
        assert "MDL critical l*" in out
        assert "CHSH S" in out

    def test_analyze_json_is_canonical(self, tmp_path, capsys):
        log_path = tmp_path / "run.log"
        run_cli(capsys, "simulate", "--experiment", "chsh", "--bits-a", "prng:3",
                "--bits-b", "prng:4", "--out", str(log_path), "--trials", "500")
        code, out = run_cli(capsys, "analyze", str(log_path), "--format", "json")
        assert code == 0
        parsed = json.loads(out)
        log = session.read_log(log_path)
        expected = pipeline.analysis_dict(pipeline.ingest(log), log=log)
        assert out.strip().encode() == pipeline.to_canonical_json(expected)
        assert parsed["counts"]["grand_total"] == 500

    def test_analyze_with_sections(self, tmp_path, capsys):
        log_path = tmp_path / "run.log"
        run_cli(capsys, "simulate", "--experiment", "mdl", "--bits-a", "prng:5",
                "--bits-b", "prng:6", "--out", str(log_path), "--trials", "4000")
        code, out = run_cli(capsys, "analyze", str(log_path),
                            "--section", "1000", "--format", "json")
        assert code == 0
        assert json.loads(out)["mdl"]["critical_l"]["sections_used"] == 4

    def test_analyze_single_inequality(self, tmp_path, capsys):
        log_path = tmp_path / "run.log"
        run_cli(capsys, "simulate", "--experiment", "chsh", "--bits-a", "prng:3",
                "--bits-b", "prng:4", "--out", str(log_path), "--trials", "200")
        _, out = run_cli(capsys, "analyze", str(log_path), "--inequality", "chsh",
                         "--format", "json")
        assert json.loads(out)["mdl"]["status"] == "not requested"

    def test_bits_from_file(self, tmp_path, capsys):
        bits_file = tmp_path / "bits.txt"
        bits_file.write_text("0101 0101\n0101\n")
        log_path = tmp_path / "run.log"
        code, out = run_cli(capsys, "simulate", "--bits-a", str(bits_file),
                            "--bits-b", str(bits_file), "--out", str(log_path))
        assert code == 0
        assert "12 trials" in out

    def test_config_file_round_trip(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "experiment = mdl\n"
            "calibrate = fidelity      # two-parameter scale\n"
            "calibrate.fidelity = 0.987\n"
            "seed = 9\n"
            "max_trials = 1000\n"
            "geometry.response_ns = 120\n")
        log_path = tmp_path / "cfg.log"
        code, out = run_cli(capsys, "simulate", "--config", str(cfg),
                            "--bits-a", "prng:1", "--bits-b", "prng:2",
                            "--out", str(log_path))
        assert code == 0 and "1000 trials" in out

    def test_config_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("experiment = chsh\nbogus.key = 3\n")
        with pytest.raises(ValueError, match="bogus.key"):
            cli.load_session_config(cfg)

    def test_analyze_with_config_reports_timing(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("experiment = chsh\ngeometry.response_ns = 150\n")
        log_path = tmp_path / "t.log"
        run_cli(capsys, "simulate", "--config", str(cfg), "--bits-a", "prng:1",
                "--bits-b", "prng:2", "--out", str(log_path), "--trials", "100")
        _, out = run_cli(capsys, "analyze", str(log_path), "--config", str(cfg))
        assert "timing margin: +140.2 ns" in out


class TestOptimize:
    def test_chsh_curve_csv(self, capsys):
        code, out = run_cli(capsys, "optimize", "--inequality", "chsh",
                            "--l", "0,0.05,0.1,0.25")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "l,bound"
        values = {float(l): float(b) for l, b in
                  (line.split(",") for line in lines[1:])}
        assert values == {0.0: 4.0, 0.05: 3.6, 0.1: 3.2, 0.25: 2.0}

    def test_grid_syntax(self, capsys):
        code, out = run_cli(capsys, "optimize", "--inequality", "mdl",
                            "--l", "0.05:0.25:0.1")
        lines = out.strip().splitlines()[1:]
        assert len(lines) == 3
        assert all(float(line.split(",")[1]) == 0.0 for line in lines)

    def test_output_file(self, tmp_path, capsys):
        out_path = tmp_path / "curve.csv"
        code, _ = run_cli(capsys, "optimize", "--inequality", "chsh",
                          "--l", "0.125", "--out", str(out_path))
        assert code == 0
        assert out_path.read_text() == "l,bound\n0.125,3.0\n"


class TestRngtest:
    def test_uniform_file_passes(self, tmp_path, capsys, uniform_bits):
        bit_file = tmp_path / "bits.txt"
        bit_file.write_text("".join(str(b) for b in uniform_bits(0, 100000)))
        code, out = run_cli(capsys, "rngtest", str(bit_file))
        assert code == 0
        assert out.count("pass") == 4

    def test_alternating_file_fails_named_tests(self, tmp_path, capsys):
        bit_file = tmp_path / "alt.txt"
        bit_file.write_text("01" * 2000)
        code, out = run_cli(capsys, "rngtest", str(bit_file))
        assert code == 1
        lines = {line.split()[0]: line for line in out.splitlines()[1:] if line}
        assert "FAIL" in lines["runs"] and "FAIL" in lines["serial"]
        assert "pass" in lines["monobit"]

    def test_short_stream_skips_gracefully(self, tmp_path, capsys):
        bit_file = tmp_path / "short.txt"
        bit_file.write_text("01" * 500)  # too short for block-frequency at M=128
        code, out = run_cli(capsys, "rngtest", str(bit_file))
        assert "skipped" in out

    def test_subset_and_csv(self, tmp_path, capsys):
        bit_file = tmp_path / "z.txt"
        bit_file.write_text("0" * 1000)
        csv_path = tmp_path / "out.csv"
        code, out = run_cli(capsys, "rngtest", str(bit_file),
                            "--tests", "monobit", "--csv", str(csv_path))
        assert code == 1  # all-zeros fails monobit
        assert csv_path.read_text().startswith("test,p_value,result")
