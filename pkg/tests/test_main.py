"""Tests for the ``exercise-clips`` command line (``exercise_clips.__main__``)."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from exercise_clips import __version__
from exercise_clips.__main__ import main
from exercise_clips.clips import load_manifest
from exercise_clips.models import ClipLabel

from .conftest import FIXTURES_DIR, Project, build_project


def test_version(capsys: pytest.CaptureFixture[str]) -> None:
    with pytest.raises(SystemExit) as exc_info:
        main(["--version"])

    assert exc_info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_unknown_subcommand_is_a_usage_error() -> None:
    with pytest.raises(SystemExit) as exc_info:
        main(["frobnicate"])

    assert exc_info.value.code == 2


def test_lexicon_check_prints_counts(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["lexicon", "check"]) == 0

    out = capsys.readouterr().out
    assert "(packaged default)" in out
    assert "coarse.keywords" in out
    assert "fine.body_parts" in out


def test_stages_one_by_one_match_the_pipeline(
    project: Project, tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    work = tmp_path / "stages"
    work.mkdir()
    tokens, spans, sentences = work / "tokens.jsonl", work / "spans.json", work / "s.jsonl"
    labeled, model, manifest = work / "labeled.jsonl", work / "model.json", work / "m.jsonl"

    assert main(["ingest", str(project.root / "pushup-01.srt"), "--out", str(tokens)]) == 0
    assert main(["segment", "coarse", "--tokens", str(tokens), "--out", str(spans)]) == 0
    assert main(["segment", "sentences", "--spans", str(spans), "--out", str(sentences)]) == 0
    relevance = ["classify", "relevance", "--sentences", str(sentences), "--out", str(labeled)]
    assert main([*relevance, "--poses", str(project.poses)]) == 0
    corpus = project.root / "corpus.tsv"
    assert main(["correctness", "train", "--corpus", str(corpus), "--out", str(model)]) == 0
    assert main(["correctness", "classify", "--model", str(model), "--in", str(labeled)]) == 0
    assert main(["summarize", "--in", str(labeled)]) == 0
    build = ["clips", "build", "--in", str(labeled), "--fps", "30", "--frames", "720"]
    assert main([*build, "--video-id", "pushup-01", "--out", str(manifest)]) == 0

    assert main(["pipeline", "run", "--config", str(project.config), "--no-progress"]) == 0
    assert load_manifest(manifest) == load_manifest(project.output_dir / "manifest.jsonl")
    assert "1 videos ok, 0 failed" in capsys.readouterr().out


def test_clips_stats_and_poses_validate(
    project: Project, capsys: pytest.CaptureFixture[str]
) -> None:
    assert main(["pipeline", "run", "--config", str(project.config), "--no-progress"]) == 0
    capsys.readouterr()

    assert main(["clips", "stats", "--in", str(project.output_dir / "manifest.jsonl")]) == 0
    out = capsys.readouterr().out
    assert ClipLabel.RELEVANT_INCORRECT.value in out
    assert "160.00" in out

    assert main(["poses", "validate", str(project.poses)]) == 0
    out = capsys.readouterr().out
    assert "frames          : 720" in out
    assert "duration_s      : 24.000" in out


def test_analyze_subcommands(
    project: Project, tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    assert main(["pipeline", "run", "--config", str(project.config), "--no-progress"]) == 0
    manifest = str(project.output_dir / "manifest.jsonl")
    table, clusters, figures = tmp_path / "v.csv", tmp_path / "c.json", tmp_path / "fig"

    inputs = ["--manifest", manifest, "--poses", str(project.poses)]

    assert main(["analyze", "visibility", *inputs, "--out", str(table)]) == 0
    cluster = ["analyze", "cluster", *inputs, "--k", "2", "--out", str(clusters)]
    assert main([*cluster, "--render-dir", str(figures)]) == 0

    assert table.read_text(encoding="utf-8").count("\n") == 34
    document = json.loads(clusters.read_text(encoding="utf-8"))
    assert document["combined"]["k"] == 2
    assert sorted(p.name for p in figures.iterdir()) == ["combined_0.svg", "combined_1.svg"]
    assert "720 frames clustered, 2 figures" in capsys.readouterr().out


def test_missing_project_file_exits_2(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    assert main(["pipeline", "run", "--config", str(tmp_path / "nope.toml")]) == 2

    assert "missing file" in capsys.readouterr().err


def test_invalid_project_exits_2(project: Project, capsys: pytest.CaptureFixture[str]) -> None:
    text = project.config.read_text(encoding="utf-8")
    project.config.write_text(text.replace("cluster_k = 2", "cluster_k = 0"), encoding="utf-8")

    assert main(["pipeline", "run", "--config", str(project.config)]) == 2

    err = capsys.readouterr().err
    assert "configuration error" in err
    assert "parameters.cluster_k" in err


def test_bad_log_level_env_exits_2(
    monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]
) -> None:
    monkeypatch.setenv("EXERCISE_CLIPS_LOG_LEVEL", "chatty")

    assert main(["lexicon", "check"]) == 2

    assert "EXERCISE_CLIPS_LOG_LEVEL" in capsys.readouterr().err


def test_parse_error_exits_2(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    bad = tmp_path / "bad.srt"
    bad.write_text("1\nnot a timing line\nhello\n", encoding="utf-8")

    assert main(["ingest", str(bad), "--out", str(tmp_path / "t.jsonl")]) == 2

    assert "parse_error" in capsys.readouterr().err


def test_every_video_failing_exits_1(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    project = build_project(tmp_path / "p")
    project.poses.write_text('{"frame": 0, "landmarks": []}\n', encoding="utf-8")

    assert main(["pipeline", "run", "--config", str(project.config), "--no-progress"]) == 1

    captured = capsys.readouterr()
    assert "0 videos ok, 1 failed" in captured.out
    assert "pushup-01: poses: validation_error" in captured.err


def test_ingest_vtt_fixture(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    out = tmp_path / "tokens.jsonl"

    assert main(["ingest", str(FIXTURES_DIR / "rollup.vtt"), "--out", str(out)]) == 0

    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines
    assert f"{len(lines)} tokens" in capsys.readouterr().out
