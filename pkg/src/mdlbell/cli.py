"""Command-line entry points: simulate, analyze, optimize, rngtest, serve."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from . import ineq, mdlopt, pipeline, qstate, rngstat, session


def _parse_config_file(path) -> dict:
    """Flat key = value config; '#' starts a comment. Keys documented in README."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


def load_session_config(path) -> session.SessionConfig:
    kv = _parse_config_file(path)
    preset = kv.pop("experiment", "chsh")
    cfg = session.SessionConfig.preset(preset)

    noise_kwargs = {}
    for key, attr in [("noise.white", "white"), ("noise.dephasing", "dephasing"),
                      ("noise.eta_a", "eta_a"), ("noise.eta_b", "eta_b")]:
        if key in kv:
            noise_kwargs[attr] = float(kv.pop(key))
    calibrate = kv.pop("calibrate", "none")
    state = qstate.make_state(cfg.state_kind)
    if calibrate == "visibilities":
        model = qstate.calibrate_visibilities(
            state, float(kv.pop("calibrate.vis_hv", 0.992)),
            float(kv.pop("calibrate.vis_da", 0.980)))
        noise_kwargs.setdefault("white", model.white)
        noise_kwargs.setdefault("dephasing", model.dephasing)
    elif calibrate == "fidelity":
        model = qstate.calibrate_fidelity(state, float(kv.pop("calibrate.fidelity", 0.987)))
        noise_kwargs.setdefault("white", model.white)
        noise_kwargs.setdefault("dephasing", model.dephasing)
    elif calibrate != "none":
        raise ValueError(f"unknown calibrate mode {calibrate!r}")

    overrides = {}
    if noise_kwargs:
        overrides["noise"] = qstate.NoiseModel(**noise_kwargs)
    angle_keys = {"angles.a0": ("angles_a", 0), "angles.a1": ("angles_a", 1),
                  "angles.b0": ("angles_b", 0), "angles.b1": ("angles_b", 1)}
    angles = {"angles_a": list(cfg.angles_a), "angles_b": list(cfg.angles_b)}
    for key, (attr, idx) in angle_keys.items():
        if key in kv:
            angles[attr][idx] = float(kv.pop(key))
            overrides[attr] = tuple(angles[attr])
    for key, attr, conv in [("pulse_rate_hz", "pulse_rate_hz", float),
                            ("pulse_width_ns", "pulse_width_ns", float),
                            ("seed", "rng_seed", int),
                            ("max_trials", "max_trials", int)]:
        if key in kv:
            overrides[attr] = conv(kv.pop(key))
    geom_kwargs = {}
    for key, attr in [("geometry.alice_m", "source_to_alice_m"),
                      ("geometry.bob_m", "source_to_bob_m"),
                      ("geometry.response_ns", "setting_response_ns")]:
        if key in kv:
            geom_kwargs[attr] = float(kv.pop(key))
    if geom_kwargs:
        overrides["geometry"] = session.Geometry(**geom_kwargs)
    if kv:
        raise ValueError(f"unknown config keys: {sorted(kv)}")
    return replace(cfg, **overrides) if overrides else cfg


def _bit_source(spec: str):
    if spec.startswith("prng:"):
        return session.PrngBits(int(spec.split(":", 1)[1]))
    return session.file_bits(spec)


def _parse_section(text: str | None) -> pipeline.SectionSpec | None:
    if text in (None, "none"):
        return None
    if text.endswith("-trials"):
        return pipeline.SectionSpec(trials=int(text[:-len("-trials")]))
    units = {"h": 3600_000_000_000, "m": 60_000_000_000, "s": 1_000_000_000}
    if text[-1] in units:
        return pipeline.SectionSpec(duration_ns=int(float(text[:-1]) * units[text[-1]]))
    return pipeline.SectionSpec(trials=int(text))


def _parse_l_grid(text: str) -> list[Fraction]:
    if ":" in text:
        start, stop, step = (Fraction(t) for t in text.split(":"))
        out = []
        v = start
        while v <= stop:
            out.append(v)
            v += step
        return out
    return [Fraction(t) for t in text.split(",")]


def cmd_simulate(args) -> int:
    cfg = load_session_config(args.config) if args.config else session.SessionConfig.preset(args.experiment)
    if args.trials is not None:
        cfg = replace(cfg, max_trials=args.trials)
    if args.seed is not None:
        cfg = replace(cfg, rng_seed=args.seed)
    log = session.run_session(cfg, _bit_source(args.bits_a), _bit_source(args.bits_b))
    session.write_log(log, args.out)
    margin = session.timing_margin(cfg.geometry)
    print(f"wrote {len(log)} trials ({log.coincidences} coincidences, "
          f"status {log.status}) to {args.out}")
    print(f"timing margin: {margin:+.1f} ns "
          f"({'locality ok' if margin > 0 else 'LOCALITY VIOLATED'})")
    return 0


def cmd_analyze(args) -> int:
    log = session.read_log(args.log)
    counts = pipeline.ingest(log)
    sect = _parse_section(args.section)
    analysis = pipeline.analysis_dict(counts, log=log, section=sect)
    margin_ns = None
    if args.config:
        cfg = load_session_config(args.config)
        margin_ns = session.timing_margin(cfg.geometry)
    if args.inequality == "mdl":
        analysis = {"counts": analysis["counts"],
                    "probabilities": analysis["probabilities"],
                    "mdl": analysis["mdl"], "chsh": {"status": "not requested"}}
    elif args.inequality == "chsh":
        analysis = {"counts": analysis["counts"],
                    "probabilities": analysis["probabilities"],
                    "mdl": {"status": "not requested"}, "chsh": analysis["chsh"]}
    if args.format == "json":
        sys.stdout.buffer.write(pipeline.to_canonical_json(analysis) + b"\n")
    elif args.format == "csv":
        print(pipeline.render_csv(analysis), end="")
    else:
        print(pipeline.report_text(analysis, margin_ns=margin_ns), end="")
    return 0


def cmd_optimize(args) -> int:
    spec = ineq.chsh_spec() if args.inequality == "chsh" else ineq.mdl_spec()
    lines = ["l,bound"]
    for l in _parse_l_grid(args.l):
        value, _witness = mdlopt.max_bell_mdl(spec, l)
        lines.append(f"{float(l)},{value}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_rngtest(args) -> int:
    bits = rngstat.as_bits(Path(args.bitfile).read_text())
    names = list(rngstat.ALL_TESTS) if args.tests == "all" else args.tests.split(",")
    rows = []
    for name in names:
        try:
            report = rngstat.ALL_TESTS[name](bits, alpha=args.alpha)
            rows.append((name, f"{report.p_value:.6f}",
                         "pass" if report.passed else "FAIL"))
        except rngstat.InsufficientDataError as exc:
            rows.append((name, "-", f"skipped ({exc})"))
    width = max(len(r[0]) for r in rows)
    print(f"{'test':<{width}}  {'p-value':>10}  result   (n={len(bits)}, alpha={args.alpha})")
    for name, p, verdict in rows:
        print(f"{name:<{width}}  {p:>10}  {verdict}")
    if args.csv:
        csv_text = "test,p_value,result\n" + "\n".join(
            f"{name},{p},{verdict.split()[0]}" for name, p, verdict in rows) + "\n"
        Path(args.csv).write_text(csv_text)
        print(f"wrote {args.csv}")
    return 0 if all(verdict != "FAIL" for _, _, verdict in rows) else 1


def cmd_serve(args) -> int:
    import uvicorn

    from .livesvc import create_app
    uvicorn.run(create_app(log_dir=args.log_dir, ui_dir=args.ui),
                host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdlbell",
                                     description="measurement-dependent-locality Bell test workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a trial-level session to a log file")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--experiment", choices=["chsh", "mdl"], default="chsh",
                   help="preset when no config file is given")
    p.add_argument("--bits-a", required=True, help="bit source: file path or prng:SEED")
    p.add_argument("--bits-b", required=True)
    p.add_argument("--out", required=True, help="output log path")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="estimate l and S from a session log")
    p.add_argument("log")
    p.add_argument("--inequality", choices=["mdl", "chsh", "both"], default="both")
    p.add_argument("--section", default=None,
                   help="section length: e.g. 1h, 5m, 30s, or a trial count")
    p.add_argument("--format", choices=["text", "csv", "json"], default="text")
    p.add_argument("--config", default=None,
                   help="config file; adds the geometry timing margin to text reports")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("optimize", help="classical bound curve over the MDL polytope")
    p.add_argument("--inequality", choices=["chsh", "mdl"], required=True)
    p.add_argument("--l", required=True,
                   help="grid: comma list (0,0.1,0.25) or start:stop:step")
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("rngtest", help="statistical battery on an ASCII bit file")
    p.add_argument("bitfile")
    p.add_argument("--tests", default="all",
                   help="all or comma list of monobit,block-frequency,runs,serial")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--csv", default=None, help="also write results as CSV")
    p.set_defaults(func=cmd_rngtest)

    p = sub.add_parser("serve", help="start the live session HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--log-dir", default=None)
    p.add_argument("--ui", default=None,
                   help="directory with the built browser UI (e.g. frontend/dist)")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
