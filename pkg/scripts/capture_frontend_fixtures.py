"""Regenerate frontend/tests/fixtures/ from the mock-backed service.

Run from the repository root:  python3 scripts/capture_frontend_fixtures.py
"""

import base64
import json
import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

from reprompt.config import AppConfig
from reprompt.optimizer import RunConfig
from reprompt.providers.mock import planted_image
from reprompt.service import create_app

FIXTURES = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    config = AppConfig()
    config.run = RunConfig(image_size=32)
    with tempfile.TemporaryDirectory() as tmp:
        app = create_app(config, store_root=tmp)
        with TestClient(app) as client:
            reference = planted_image(["cat", "blue", "bow", "tie"], 32, 32)
            started = client.post("/runs", json={
                "reference_b64": base64.b64encode(reference.read_bytes()).decode(),
                "config": {"init_prompt": "dog"}})
            run_id = started.json()["run_id"]
            deadline = time.time() + 15
            while time.time() < deadline:
                handle = client.get(f"/runs/{run_id}").json()
                if handle["status"] in ("done", "failed"):
                    break
                time.sleep(0.02)
            assert handle["status"] == "done", handle

            iterations = client.get(f"/runs/{run_id}/iterations", params={"since": 0}).json()
            classify = client.post("/prompts/classify", json={
                "fragments": ["imaginative landscape", "dramatic sky", "watercolor"]}).json()
            modify = client.post("/prompts/modify", json={
                "fragments": ["imaginative landscape", "dramatic sky"],
                "find": "landscape", "replace": "cityscape"}).json()
            fuse = client.post("/prompts/fuse", json={
                "style_source": {"content": ["a lighthouse"], "style": ["watercolor"]},
                "content_source": {"content": ["imaginative cityscape", "dramatic sky"],
                                   "style": []}}).json()
            generate = client.post("/generate", json={
                "prompt": ["imaginative cityscape", "dramatic sky", "watercolor"],
                "seed": 7, "width": 32, "height": 32}).json()

    # The run id is timestamped; rewrite it so fixtures are stable.
    stable = "fixture-run"
    handle["run_id"] = stable
    handle["result"]["run_id"] = stable
    for name, payload in {
        "run_handle_done.json": handle,
        "iterations.json": iterations,
        "classify.json": classify,
        "modify.json": modify,
        "fuse.json": fuse,
        "generate.json": generate,
    }.items():
        (FIXTURES / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        print("wrote", FIXTURES / name)


if __name__ == "__main__":
    main()
