import json

import pytest
from click.testing import CliRunner

from reprompt.cli import main
from reprompt.providers.mock import planted_image


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def workspace(tmp_path):
    reference = tmp_path / "reference.png"
    reference.write_bytes(planted_image(["cat", "blue", "bow", "tie"], 32, 32).read_bytes())
    config = tmp_path / "config.yaml"
    config.write_text("providers:\n  mode: mock\nrun:\n  image_size: 32\n")
    return tmp_path


def test_run_success_writes_store_and_prints_prompt(runner, workspace):
    out = workspace / "out"
    result = runner.invoke(main, ["--config", str(workspace / "config.yaml"),
                                  "--out", str(out),
                                  "run", str(workspace / "reference.png"),
                                  "--init-prompt", "dog"])
    assert result.exit_code == 0, result.output
    assert "final prompt:" in result.output
    assert "score:" in result.output
    run_dirs = list(out.iterdir())
    assert len(run_dirs) == 1
    assert (run_dirs[0] / "final.json").exists()


def test_run_missing_reference_exits_2_and_names_path(runner, workspace):
    missing = workspace / "missing.png"
    result = runner.invoke(main, ["--config", str(workspace / "config.yaml"),
                                  "run", str(missing)])
    assert result.exit_code == 2
    assert str(missing) in result.output


def test_run_malformed_config_exits_2_and_names_key(runner, workspace):
    bad = workspace / "bad.yaml"
    bad.write_text("run:\n  max_iter: 5\n")
    result = runner.invoke(main, ["--config", str(bad),
                                  "run", str(workspace / "reference.png")])
    assert result.exit_code == 2
    assert "max_iter" in result.output


def test_eval_identity_method_writes_reports(runner, workspace):
    image = workspace / "m1.png"
    image.write_bytes(planted_image(["cat"], 32, 32).read_bytes())
    manifest = workspace / "manifest.json"
    manifest.write_text(json.dumps({"entries": [
        {"id": "m1", "image": "m1.png", "source": "ai_generated", "prompt": "cat"}]}))
    out = workspace / "eval-out"
    result = runner.invoke(main, ["--config", str(workspace / "config.yaml"),
                                  "--out", str(out),
                                  "eval", str(manifest), "--method", "identity"])
    assert result.exit_code == 0, result.output
    assert (out / "report.json").exists()
    assert (out / "report.txt").exists()
    assert "CLIP-T" in result.output


def test_eval_missing_manifest_exits_2(runner, workspace):
    result = runner.invoke(main, ["--config", str(workspace / "config.yaml"),
                                  "eval", str(workspace / "none.json")])
    assert result.exit_code == 2


def test_eval_optimize_method_runs_full_loop(runner, workspace):
    image = workspace / "m1.png"
    image.write_bytes(planted_image(["cat", "blue"], 32, 32).read_bytes())
    manifest = workspace / "manifest.json"
    manifest.write_text(json.dumps({"entries": [
        {"id": "m1", "image": "m1.png", "source": "ai_generated"}]}))
    out = workspace / "eval-out"
    result = runner.invoke(main, ["--config", str(workspace / "config.yaml"),
                                  "--out", str(out),
                                  "eval", str(manifest), "--method", "optimize"])
    assert result.exit_code == 0, result.output
    report = json.loads((out / "report.json").read_text())
    assert report["per_image"]["m1"]["clip_t"] >= 95.0


def test_eval_identity_matches_direct_scoring(runner, workspace):
    image = workspace / "m1.png"
    image.write_bytes(planted_image(["cat", "blue"], 32, 32).read_bytes())
    manifest = workspace / "manifest.json"
    manifest.write_text(json.dumps({"entries": [
        {"id": "m1", "image": "m1.png", "source": "human_created", "prompt": "cat"}]}))
    out = workspace / "eval-out"
    result = runner.invoke(main, ["--config", str(workspace / "config.yaml"),
                                  "--out", str(out),
                                  "eval", str(manifest), "--method", "identity"])
    assert result.exit_code == 0
    report = json.loads((out / "report.json").read_text())
    from reprompt.providers.mock import MockProviders
    from reprompt.scoring import ClipScorer
    from reprompt.core import parse_tags, ImageRef
    scorer = ClipScorer(MockProviders())
    direct = scorer.clip_sim(ImageRef.from_path(image), parse_tags("cat")).reported
    assert report["per_image"]["m1"]["clip_t"] == pytest.approx(direct, abs=1e-9)


def test_classify_prints_partition(runner, workspace):
    result = runner.invoke(main, ["--config", str(workspace / "config.yaml"),
                                  "classify", "--prompt", "cat, watercolor"])
    assert result.exit_code == 0
    body = json.loads(result.output)
    assert body == {"content": ["cat"], "style": ["watercolor"]}


def test_fuse_merges_files(runner, workspace):
    style_file = workspace / "style.json"
    style_file.write_text(json.dumps({"content": ["a lighthouse"], "style": ["ink painting"]}))
    content_file = workspace / "content.json"
    content_file.write_text(json.dumps({"content": ["a red fox"], "style": ["photo"]}))
    result = runner.invoke(main, ["fuse", "--style-from", str(style_file),
                                  "--content-from", str(content_file)])
    assert result.exit_code == 0
    assert result.output.strip() == "a red fox, ink painting"


def test_fuse_missing_file_exits_2(runner, workspace):
    result = runner.invoke(main, ["fuse", "--style-from", str(workspace / "none.json"),
                                  "--content-from", str(workspace / "none.json")])
    assert result.exit_code == 2
