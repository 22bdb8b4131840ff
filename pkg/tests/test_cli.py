import json

import numpy as np
import pytest

from avsync.audio_io import AudioBuffer, save_wav
from avsync.cli import main
from avsync.ltc import PlaybackSchedule, Timecode, encode_ltc

from helpers import build_corpus, write_manifest_csv


@pytest.fixture(scope="module")
def manifest(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_corpus")
    corpus = build_corpus(root, 3, 2, seed=9)
    return write_manifest_csv(corpus, root / "manifest.csv")


def test_scan_writes_report_and_csv(manifest, tmp_path):
    out = tmp_path / "report.json"
    csv_out = tmp_path / "report.csv"
    figures = tmp_path / "figs"
    code = main(
        [
            "sync",
            "scan",
            "--manifest",
            str(manifest),
            "--out",
            str(out),
            "--csv",
            str(csv_out),
            "--figures",
            str(figures),
        ]
    )
    assert code == 0
    report = json.loads(out.read_text())
    assert len(report["sentences"]) == 3
    assert report["summary"]["n_scores"] == 6
    assert csv_out.exists()
    assert (figures / "selection_scores.png").exists()


def test_select_writes_csv(manifest, tmp_path):
    out = tmp_path / "selection.csv"
    assert main(["sync", "select", "--manifest", str(manifest), "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 4
    assert lines[0].startswith("sentence_id,best_take_id")


def test_sensitivity_distributions(manifest, tmp_path):
    out = tmp_path / "sens.json"
    figures = tmp_path / "figs"
    code = main(
        ["sync", "sensitivity", "--manifest", str(manifest), "--out", str(out), "--figures", str(figures)]
    )
    assert code == 0
    sens = json.loads(out.read_text())
    assert sens["matched_best"]["n"] == 3
    assert sens["matched_all"]["n"] == 6
    assert sens["mismatched"]["n"] == 3 * 2 * 2
    assert (figures / "score_distributions.png").exists()


def test_sensitivity_rejects_mismatched_off(manifest, tmp_path):
    code = main(
        ["sync", "sensitivity", "--manifest", str(manifest), "--out", str(tmp_path / "x.json"), "--mismatched", "off"]
    )
    assert code == 2


def test_ltc_decode_with_alignment(tmp_path):
    start = Timecode(0, 0, 2, 0)
    carrier = encode_ltc(start, 30, 48000)
    speech = np.zeros((carrier.n_frames, 1))
    stereo = AudioBuffer(np.hstack([speech, carrier.samples]), 48000)
    wav = tmp_path / "session.wav"
    save_wav(wav, stereo)
    schedule = tmp_path / "schedule.csv"
    PlaybackSchedule([("s1", start.advance(3)), ("s2", start.advance(20))]).save_csv(schedule)

    frames_csv = tmp_path / "frames.csv"
    align_csv = tmp_path / "align.csv"
    code = main(
        [
            "ltc",
            "decode",
            "--wav",
            str(wav),
            "--channel",
            "1",
            "--out",
            str(frames_csv),
            "--schedule",
            str(schedule),
            "--align-out",
            str(align_csv),
        ]
    )
    assert code == 0
    assert len(frames_csv.read_text().strip().splitlines()) == 31
    align_lines = align_csv.read_text().strip().splitlines()
    assert align_lines[0] == "sentence_id,start_sample"
    assert float(align_lines[1].split(",")[1]) == pytest.approx(3 * 1920, abs=1)


def test_mel_dump(tmp_path, manifest):
    first_wav = next(manifest.parent.glob("*_orig.wav"))
    out = tmp_path / "mel.csv"
    assert main(["mel", "dump", "--wav", str(first_wav), "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines[0].split(",")) == 64


def test_sim_run_report_and_figures(tmp_path):
    config = tmp_path / "config.json"
    assert main(["sim", "init-config", "--out", str(config)]) == 0
    data = json.loads(config.read_text())
    data["population"]["n_listeners"] = 3
    config.write_text(json.dumps(data))

    raw_path = tmp_path / "raw.json"
    assert main(["sim", "run", "--config", str(config), "--seed", "3", "--out", str(raw_path)]) == 0
    raw = json.loads(raw_path.read_text())
    assert len(raw["listeners"]) == 3
    assert raw["config"]["population"]["n_listeners"] == 3

    report_path = tmp_path / "report.json"
    csv_path = tmp_path / "report.csv"
    figures = tmp_path / "figs"
    code = main(
        [
            "sim",
            "report",
            "--in",
            str(raw_path),
            "--out",
            str(report_path),
            "--csv",
            str(csv_path),
            "--figures",
            str(figures),
        ]
    )
    assert code == 0
    report = json.loads(report_path.read_text())
    assert "conditions" in report and "clamping" in report
    assert csv_path.read_text().startswith("condition,")
    for name in ("training_curve.png", "vo_scores.png", "benefit_scatter.png", "adaptive_tracks.png"):
        assert (figures / name).exists()


def test_sim_run_byte_identical(tmp_path):
    config = tmp_path / "c.json"
    config.write_text(json.dumps({"population": {"n_listeners": 2}}))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["sim", "run", "--config", str(config), "--seed", "11", "--out", str(a)]) == 0
    assert main(["sim", "run", "--config", str(config), "--seed", "11", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sim_run_population_csv(tmp_path):
    config = tmp_path / "c.json"
    config.write_text(json.dumps({"population": {"n_listeners": 2}}))
    pop_csv = tmp_path / "pop.csv"
    code = main(
        ["sim", "run", "--config", str(config), "--seed", "1", "--out", str(tmp_path / "raw.json"), "--population-csv", str(pop_csv)]
    )
    assert code == 0
    lines = pop_csv.read_text().strip().splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("listener_id,")


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as excinfo:
        main(["sync", "scan", "--nonsense"])
    assert excinfo.value.code == 1
    with pytest.raises(SystemExit) as excinfo:
        main(["unknown-command"])
    assert excinfo.value.code == 1


def test_data_error_exit_code(tmp_path):
    missing = tmp_path / "missing.csv"
    assert main(["sync", "scan", "--manifest", str(missing), "--out", str(tmp_path / "r.json")]) == 2


def test_help_exits_zero():
    with pytest.raises(SystemExit) as excinfo:
        main(["--help"])
    assert excinfo.value.code == 0
