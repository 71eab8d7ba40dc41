"""On-disk layout for runs: one directory per run id.

    <root>/<run_id>/
        config.json
        reference.png
        iterations.jsonl      one JSON record per completed iteration
        images/step_000.png   generated image per iteration
        final.json            run summary, written once at completion

The store only moves dicts and PNG bytes; (de)serialization of domain
types lives with the optimizer.
"""

from __future__ import annotations

import json
from pathlib import Path

from reprompt.core import ImageRef


class RunDirectory:
    def __init__(self, path: Path):
        self.path = Path(path)
        self.images_dir = self.path / "images"

    @property
    def run_id(self) -> str:
        return self.path.name

    def create(self) -> "RunDirectory":
        self.images_dir.mkdir(parents=True, exist_ok=True)
        return self

    def write_config(self, config: dict) -> None:
        (self.path / "config.json").write_text(
            json.dumps(config, indent=2, sort_keys=True), encoding="utf-8")

    def read_config(self) -> dict:
        return json.loads((self.path / "config.json").read_text(encoding="utf-8"))

    def save_reference(self, image: ImageRef) -> ImageRef:
        target = self.path / "reference.png"
        target.write_bytes(image.read_bytes())
        return image.with_path(target)

    def reference_path(self) -> Path:
        return self.path / "reference.png"

    def save_step_image(self, step: int, image: ImageRef) -> ImageRef:
        target = self.images_dir / f"step_{step:03d}.png"
        target.write_bytes(image.read_bytes())
        return image.with_path(target)

    def step_image_path(self, step: int) -> Path:
        return self.images_dir / f"step_{step:03d}.png"

    def append_iteration(self, record: dict) -> None:
        with open(self.path / "iterations.jsonl", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    def read_iterations(self, since: int = 0) -> list[dict]:
        """Iteration records with index >= since, in file order."""
        path = self.path / "iterations.jsonl"
        if not path.exists():
            return []
        records = []
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                if i >= since and line.strip():
                    records.append(json.loads(line))
        return records

    def iteration_count(self) -> int:
        path = self.path / "iterations.jsonl"
        if not path.exists():
            return 0
        with open(path, encoding="utf-8") as fh:
            return sum(1 for line in fh if line.strip())

    def write_final(self, result: dict) -> None:
        (self.path / "final.json").write_text(
            json.dumps(result, indent=2, sort_keys=True), encoding="utf-8")

    def read_final(self) -> dict | None:
        path = self.path / "final.json"
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))


class RunStore:
    """Root directory holding one RunDirectory per run."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def create(self, run_id: str) -> RunDirectory:
        run_dir = RunDirectory(self.root / run_id)
        if run_dir.path.exists():
            raise FileExistsError(f"run {run_id} already exists")
        return run_dir.create()

    def open(self, run_id: str) -> RunDirectory:
        run_dir = RunDirectory(self.root / run_id)
        if not run_dir.path.is_dir():
            raise KeyError(run_id)
        return run_dir

    def list_runs(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if p.is_dir())
