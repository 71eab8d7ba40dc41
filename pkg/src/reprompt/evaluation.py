"""Prompt- and image-fidelity metrics, multi-seed protocol, and reports.

Prompt fidelity is the cosine between the rendered prompt's text embedding
and the reference image's embedding (x100). Image fidelity regenerates an
image from the prompt once per seed and reports, per embedding extractor,
the mean and population variance of the reference-vs-recreation cosine
(x100). The variance estimator divides by n, not n-1; the report header
says so.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from reprompt.core import ImageRef, ScoreValue, TagPrompt, render
from reprompt.errors import EmptyManifest, RepromptError
from reprompt.providers.profiles import GenerationRequest
from reprompt.scoring import ClipScorer, cosine

DEFAULT_SEEDS = (0, 1, 2)
EXTRACTOR_ORDER = ("clip_i", "dino", "vit")


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    image_path: str
    source: str
    gold_prompt: str | None = None

    def __post_init__(self):
        if self.source not in ("ai_generated", "human_created"):
            raise ValueError(f"unknown source {self.source!r} for entry {self.id}")


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self):
        ids = [e.id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("manifest ids must be unique")


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load and validate a manifest: unique ids, image paths that exist."""
    base = Path(path).parent
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = []
    for raw in data.get("entries", []):
        image_path = Path(raw["image"])
        if not image_path.is_absolute():
            image_path = base / image_path
        if not image_path.exists():
            raise FileNotFoundError(f"manifest entry {raw.get('id')}: image not found: {image_path}")
        entries.append(ManifestEntry(
            id=raw["id"], image_path=str(image_path), source=raw["source"],
            gold_prompt=raw.get("prompt")))
    return DatasetManifest(tuple(entries))


@dataclass(frozen=True)
class NamedExtractor:
    """An image-embedding backend used as a fidelity metric backbone."""

    name: str
    embedder: object  # needs .embed_image(ImageRef) -> EmbeddingVector


@dataclass
class EvalConfig:
    scorer: ClipScorer
    generator: object  # needs .generate_image(GenerationRequest) -> ImageRef
    extractors: list[NamedExtractor]
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    image_size: int = 512
    steps: int | None = None
    parallelism: int = 2
    optimized_with: str = "unknown"
    generated_with: str = "unknown"

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


def clip_t(prompt: TagPrompt, reference: ImageRef, scorer: ClipScorer) -> ScoreValue:
    """Prompt fidelity: identical computation to the selection score."""
    return scorer.clip_sim(reference, prompt)


def image_fidelity(prompt: TagPrompt, reference: ImageRef, seeds, extractors,
                   generator, image_size: int = 512, steps: int | None = None) -> dict:
    """Per-extractor {mean, variance} of reference-vs-recreation cosine x100."""
    if not seeds:
        raise ValueError("seeds must be non-empty")
    values: dict[str, list[float]] = {ex.name: [] for ex in extractors}
    for seed in seeds:
        recreated = generator.generate_image(GenerationRequest(
            prompt_text=render(prompt), seed=seed,
            width=image_size, height=image_size, steps=steps))
        for extractor in extractors:
            ref_vec = extractor.embedder.embed_image(reference)
            gen_vec = extractor.embedder.embed_image(recreated)
            values[extractor.name].append(cosine(ref_vec, gen_vec) * 100.0)
    result = {}
    for name, series in values.items():
        mean = sum(series) / len(series)
        variance = sum((v - mean) ** 2 for v in series) / len(series)
        result[name] = {"mean": mean, "variance": variance}
    return result


@dataclass
class EvalReport:
    per_image: dict[str, dict]
    aggregate: dict
    seeds: tuple[int, ...]
    skipped: list[dict] = field(default_factory=list)
    optimized_with: str = "unknown"
    generated_with: str = "unknown"

    def to_json(self) -> dict:
        return {
            "variance_estimator": "population (n divisor) over seeds, x100 scale",
            "optimized_with": self.optimized_with,
            "generated_with": self.generated_with,
            "seeds": list(self.seeds),
            "per_image": self.per_image,
            "aggregate": self.aggregate,
            "skipped": self.skipped,
        }


def eval_manifest(manifest: DatasetManifest, method, cfg: EvalConfig) -> EvalReport:
    """Run `method` (ImageRef -> TagPrompt) per image and score the outputs.

    Per-image failures are recorded in `skipped` and excluded from the
    aggregate. Aggregation is an arithmetic mean in manifest order.
    """
    if not manifest.entries:
        raise EmptyManifest("manifest has no entries")

    def evaluate(entry: ManifestEntry):
        reference = ImageRef.from_path(entry.image_path)
        prompt = method(reference)
        if not prompt:
            raise ValueError(f"method produced an empty prompt for {entry.id}")
        fidelity = image_fidelity(prompt, reference, cfg.seeds, cfg.extractors,
                                  cfg.generator, cfg.image_size, cfg.steps)
        return {
            "prompt": render(prompt),
            "clip_t": clip_t(prompt, reference, cfg.scorer).reported,
            "image_fidelity": fidelity,
        }

    results: list[tuple[ManifestEntry, dict | None, str | None]] = []
    with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
        futures = [(entry, pool.submit(evaluate, entry)) for entry in manifest.entries]
        for entry, future in futures:
            try:
                results.append((entry, future.result(), None))
            except (RepromptError, ValueError, OSError) as exc:
                results.append((entry, None, str(exc)))

    per_image: dict[str, dict] = {}
    skipped: list[dict] = []
    for entry, scores, error in results:
        if error is not None:
            skipped.append({"id": entry.id, "error": error})
        else:
            per_image[entry.id] = scores

    aggregate: dict = {}
    if per_image:
        rows = list(per_image.values())
        aggregate["clip_t"] = sum(r["clip_t"] for r in rows) / len(rows)
        aggregate["image_fidelity"] = {}
        for extractor in cfg.extractors:
            means = [r["image_fidelity"][extractor.name]["mean"] for r in rows]
            variances = [r["image_fidelity"][extractor.name]["variance"] for r in rows]
            aggregate["image_fidelity"][extractor.name] = {
                "mean": sum(means) / len(means),
                "variance": sum(variances) / len(variances),
            }
    return EvalReport(per_image=per_image, aggregate=aggregate, seeds=tuple(cfg.seeds),
                      skipped=skipped, optimized_with=cfg.optimized_with,
                      generated_with=cfg.generated_with)


def _ordered_extractors(report: EvalReport) -> list[str]:
    names = []
    for row in report.per_image.values():
        names = list(row["image_fidelity"].keys())
        break
    return sorted(names, key=lambda n: (EXTRACTOR_ORDER.index(n) if n in EXTRACTOR_ORDER else 99, n))


def render_report_text(report: EvalReport) -> str:
    """Plain-text table: CLIP-T first, then per-extractor mean +- variance."""
    extractors = _ordered_extractors(report)
    lines = [
        "Image reverse-prompt fidelity report",
        f"optimized with: {report.optimized_with} | generated with: {report.generated_with}",
        f"seeds: {', '.join(str(s) for s in report.seeds)} | "
        "variance = population variance over seeds (x100 scale)",
        "",
    ]
    header = f"{'id':<20}{'CLIP-T':>10}"
    for name in extractors:
        header += f"{name.upper().replace('_', '-'):>20}"
    lines.append(header)
    for image_id, row in report.per_image.items():
        line = f"{image_id:<20}{row['clip_t']:>10.2f}"
        for name in extractors:
            stats = row["image_fidelity"][name]
            line += f"{stats['mean']:>13.2f} ±{stats['variance']:<5.2f}"
        lines.append(line)
    if report.aggregate:
        line = f"{'aggregate':<20}{report.aggregate['clip_t']:>10.2f}"
        for name in extractors:
            stats = report.aggregate["image_fidelity"][name]
            line += f"{stats['mean']:>13.2f} ±{stats['variance']:<5.2f}"
        lines.append(line)
    lines.append("")
    lines.append(f"skipped entries: {len(report.skipped)}")
    for item in report.skipped:
        lines.append(f"  {item['id']}: {item['error']}")
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "report.json"
    text_path = out / "report.txt"
    json_path.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True), encoding="utf-8")
    text_path.write_text(render_report_text(report), encoding="utf-8")
    return json_path, text_path
