"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .audio_io import extract_channel, load_wav
from .errors import AvsyncError
from .experiment import (
    SimConfig,
    load_sim_config,
    save_sim_config,
    simulate,
    summarize,
    write_json,
    write_report_csv,
)
from .ltc import PlaybackSchedule, align_session, decode_ltc_detailed, write_alignment_csv, write_frames_csv
from .melspec import MelParams, compute_mel_spectrogram, write_mel_csv
from .selection import (
    DEFAULT_OUTLIER_THRESHOLD,
    build_selection_report,
    load_manifest,
    scan_corpus,
    sensitivity_report,
    write_report_json,
    write_selection_csv,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we keep 2 for data errors
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _mel_params(args) -> MelParams:
    return MelParams(n_bands=args.mel_bands)


def _parse_mismatched(value: str) -> tuple[str, float]:
    if value in ("off", "exact"):
        return value, 1.0
    if value.startswith("sample:"):
        fraction = float(value.split(":", 1)[1])
        if not 0 < fraction <= 1:
            raise argparse.ArgumentTypeError("sample fraction must be in (0, 1]")
        return "sample", fraction
    raise argparse.ArgumentTypeError(f"expected off, exact, or sample:<p>, got {value!r}")


def build_parser() -> _Parser:
    parser = _Parser(prog="avsync", description=__doc__)
    parser.add_argument("--version", action="version", version=f"avsync {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sync = sub.add_parser("sync", help="dubbed-take asynchrony analysis").add_subparsers(
        dest="subcommand", required=True
    )
    scan = sync.add_parser("scan", help="score a corpus and write the selection report")
    scan.add_argument("--manifest", required=True)
    scan.add_argument("--out", required=True)
    scan.add_argument("--mel-bands", type=int, default=64)
    scan.add_argument("--threshold-ms", type=float, default=DEFAULT_OUTLIER_THRESHOLD * 1000.0)
    scan.add_argument("--mismatched", type=_parse_mismatched, default=("off", 1.0))
    scan.add_argument("--csv", help="also write the per-sentence CSV here")
    scan.add_argument("--figures", help="render figures into this directory")

    select = sync.add_parser("select", help="write the per-sentence best-take CSV")
    select.add_argument("--manifest", required=True)
    select.add_argument("--out", required=True)
    select.add_argument("--mel-bands", type=int, default=64)
    select.add_argument("--threshold-ms", type=float, default=DEFAULT_OUTLIER_THRESHOLD * 1000.0)

    sens = sync.add_parser("sensitivity", help="matched vs mismatched score distributions")
    sens.add_argument("--manifest", required=True)
    sens.add_argument("--out", required=True)
    sens.add_argument("--mel-bands", type=int, default=64)
    sens.add_argument("--mismatched", type=_parse_mismatched, default=("exact", 1.0))
    sens.add_argument("--figures", help="render figures into this directory")

    ltc = sub.add_parser("ltc", help="linear timecode tools").add_subparsers(dest="subcommand", required=True)
    decode = ltc.add_parser("decode", help="decode timecode frames from a WAV channel")
    decode.add_argument("--wav", required=True)
    decode.add_argument("--channel", type=int, default=0)
    decode.add_argument("--out", required=True)
    decode.add_argument("--schedule", help="playback schedule CSV to align")
    decode.add_argument("--align-out", help="where to write the sentence alignment CSV")

    mel = sub.add_parser("mel", help="mel spectrogram tools").add_subparsers(dest="subcommand", required=True)
    dump = mel.add_parser("dump", help="write a spectrogram as CSV")
    dump.add_argument("--wav", required=True)
    dump.add_argument("--channel", type=int, default=0)
    dump.add_argument("--out", required=True)
    dump.add_argument("--mel-bands", type=int, default=64)

    sim = sub.add_parser("sim", help="simulated evaluation sessions").add_subparsers(
        dest="subcommand", required=True
    )
    run = sim.add_parser("run", help="simulate test and retest sessions")
    run.add_argument("--config", help="JSON config; defaults used when omitted")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True)
    run.add_argument("--population-csv", help="also export the sampled listener profiles")

    rep = sim.add_parser("report", help="summarize raw simulation results")
    rep.add_argument("--in", dest="raw_in", required=True)
    rep.add_argument("--out", required=True)
    rep.add_argument("--csv", help="also write the per-condition CSV here")
    rep.add_argument("--figures", help="render figures into this directory")

    init = sim.add_parser("init-config", help="write the default config as JSON")
    init.add_argument("--out", required=True)
    return parser


def _cmd_sync_scan(args) -> int:
    corpus = load_manifest(args.manifest)
    mode, fraction = args.mismatched
    report = build_selection_report(
        corpus,
        params=_mel_params(args),
        threshold=args.threshold_ms / 1000.0,
        mismatched=mode,
        sample_fraction=fraction,
    )
    write_report_json(report, args.out)
    if args.csv:
        write_selection_csv(report, args.csv)
    if args.figures:
        from .figures import plot_selection_scores

        plot_selection_scores(report["sentences"], args.threshold_ms / 1000.0, Path(args.figures) / "selection_scores.png")
    print(f"scored {report['summary']['n_scores']} pairs, {report['summary']['n_outliers']} outliers -> {args.out}")
    return 0


def _cmd_sync_select(args) -> int:
    corpus = load_manifest(args.manifest)
    report = build_selection_report(corpus, params=_mel_params(args), threshold=args.threshold_ms / 1000.0)
    write_selection_csv(report, args.out)
    print(f"selected {report['summary']['n_sentences']} takes -> {args.out}")
    return 0


def _cmd_sync_sensitivity(args) -> int:
    corpus = load_manifest(args.manifest)
    mode, fraction = args.mismatched
    if mode == "off":
        raise AvsyncError("sensitivity needs mismatched scores; use exact or sample:<p>")
    scan = scan_corpus(corpus, _mel_params(args), mismatched=mode, sample_fraction=fraction)
    report = sensitivity_report(scan)
    write_report_json(report.to_dict(include_values=False), args.out)
    if args.figures:
        from .figures import plot_score_distributions

        plot_score_distributions(
            {
                "matched best": report.matched_best.values,
                "matched all": report.matched_all.values,
                "mismatched": report.mismatched.values,
            },
            Path(args.figures) / "score_distributions.png",
        )
    print(f"distributions {report.matched_best.summary()['n']}/{report.matched_all.summary()['n']}/{report.mismatched.summary()['n']} -> {args.out}")
    return 0


def _cmd_ltc_decode(args) -> int:
    audio = load_wav(args.wav)
    mono = extract_channel(audio, args.channel)
    decoded = decode_ltc_detailed(mono)
    write_frames_csv(decoded.frames, args.out)
    print(f"decoded {len(decoded.frames)} frames ({decoded.discarded_runs} discarded runs) -> {args.out}")
    if args.schedule:
        if not args.align_out:
            raise AvsyncError("--schedule needs --align-out")
        fps = decoded.frames[0].timecode.fps if decoded.frames else 25
        schedule = PlaybackSchedule.load_csv(args.schedule, fps=fps)
        mapping = align_session(decoded.frames, schedule)
        write_alignment_csv(mapping, args.align_out)
        print(f"aligned {sum(v is not None for v in mapping.values())}/{len(mapping)} entries -> {args.align_out}")
    return 0


def _cmd_mel_dump(args) -> int:
    audio = load_wav(args.wav)
    mono = extract_channel(audio, args.channel)
    spec = compute_mel_spectrogram(mono, _mel_params(args))
    write_mel_csv(spec, args.out)
    print(f"{spec.n_frames} frames x {spec.n_bands} bands -> {args.out}")
    return 0


def _cmd_sim_run(args) -> int:
    config = load_sim_config(args.config) if args.config else SimConfig()
    raw = simulate(config, args.seed)
    write_json(raw, args.out)
    if args.population_csv:
        from .listener import sample_population, save_population_csv

        save_population_csv(sample_population(config.population, args.seed), args.population_csv)
    print(f"{len(raw['tracks'])} tracks for {len(raw['listeners'])} listeners -> {args.out}")
    return 0


def _cmd_sim_report(args) -> int:
    import json

    with open(args.raw_in, encoding="utf-8") as fh:
        raw = json.load(fh)
    report = summarize(raw)
    write_json(report, args.out)
    if args.csv:
        write_report_csv(report, args.csv)
    if args.figures:
        from .figures import render_report_figures

        paths = render_report_figures(raw, report, args.figures)
        print(f"figures: {', '.join(p.name for p in paths)}")
    print(f"report -> {args.out}")
    return 0


def _cmd_sim_init_config(args) -> int:
    save_sim_config(SimConfig(), args.out)
    print(f"default config -> {args.out}")
    return 0


_HANDLERS = {
    ("sync", "scan"): _cmd_sync_scan,
    ("sync", "select"): _cmd_sync_select,
    ("sync", "sensitivity"): _cmd_sync_sensitivity,
    ("ltc", "decode"): _cmd_ltc_decode,
    ("mel", "dump"): _cmd_mel_dump,
    ("sim", "run"): _cmd_sim_run,
    ("sim", "report"): _cmd_sim_report,
    ("sim", "init-config"): _cmd_sim_init_config,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = _HANDLERS[(args.command, args.subcommand)]
    try:
        return handler(args)
    except (AvsyncError, FileNotFoundError, ValueError) as exc:
        print(f"avsync: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
