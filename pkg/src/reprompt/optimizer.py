"""The optimization loop: initialize, generate/compare/select, stop, persist.

Each iteration renders the current prompt, generates an image with the run
seed, turns the image differences into candidate fragments, and updates the
prompt via greedy selection. The loop stops at the iteration budget, when
the prompt stops changing, or on a backend failure (with partial history
preserved).
"""

from __future__ import annotations

import hashlib
import json
import time
import uuid
from dataclasses import dataclass, field, replace

from reprompt.core import ImageRef, IterationRecord, ScoreValue, TagPrompt, parse_tags, render
from reprompt.errors import ParseFailure, ProviderError, UnsupportedMultiImage
from reprompt.promptgen import (
    CandidateSet,
    DEFAULT_CANDIDATE_CAP,
    DEFAULT_TEMPLATES,
    enhanced_describe,
    enhanced_differences,
    generate_candidates_with_aspects,
    vanilla_differences,
)
from reprompt.providers.profiles import GenerationRequest
from reprompt.runstore import RunDirectory
from reprompt.scoring import ClipScorer
from reprompt.selection import build_pool, greedy_select

FRAMEWORKS = ("auto", "vanilla", "enhanced")
POOL_MODES = ("combined", "candidates_only")
SELECTION_MODES = ("greedy", "accept_all")


@dataclass(frozen=True)
class RunConfig:
    """Knobs for one optimization run.

    pool_mode and selection_mode exist for ablation experiments: excluding
    the current prompt's fragments from the pool, or skipping selection and
    accepting every candidate.
    """

    max_iterations: int = 10
    early_stop_patience: int = 2
    framework: str = "auto"
    seed: int = 0
    image_size: int = 512
    candidate_cap: int = DEFAULT_CANDIDATE_CAP
    steps: int | None = None
    init_prompt: str | None = None
    pool_mode: str = "combined"
    selection_mode: str = "greedy"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.early_stop_patience < 1:
            raise ValueError("early_stop_patience must be >= 1")
        if self.framework not in FRAMEWORKS:
            raise ValueError(f"framework must be one of {FRAMEWORKS}")
        if self.pool_mode not in POOL_MODES:
            raise ValueError(f"pool_mode must be one of {POOL_MODES}")
        if self.selection_mode not in SELECTION_MODES:
            raise ValueError(f"selection_mode must be one of {SELECTION_MODES}")
        if self.candidate_cap < 1:
            raise ValueError("candidate_cap must be >= 1")


@dataclass(frozen=True)
class RunResult:
    run_id: str
    reference: ImageRef
    initial_prompt: TagPrompt
    final_prompt: TagPrompt
    iterations: tuple[IterationRecord, ...]
    final_score: ScoreValue
    stop_reason: str
    aspect_hints: dict[str, str] = field(default_factory=dict)

    def replay_fingerprint(self) -> str:
        """Hash of every semantic field; excludes run_id and wall times."""
        payload = run_result_to_json(self)
        payload.pop("run_id")
        for record in payload["iterations"]:
            record.pop("wall_time")
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


def new_run_id() -> str:
    return time.strftime("%Y%m%d-%H%M%S") + "-" + uuid.uuid4().hex[:8]


class PromptOptimizer:
    def __init__(self, providers, scorer: ClipScorer | None = None, templates=None):
        self.providers = providers
        self.scorer = scorer if scorer is not None else ClipScorer(providers)
        self.templates = templates or DEFAULT_TEMPLATES

    def initialize(self, reference: ImageRef) -> TagPrompt:
        """Caption the reference into the starting prompt."""
        caption = self.providers.caption(reference)
        prompt = parse_tags(caption, provenance="init")
        if not prompt:
            raise ProviderError("caption produced an empty prompt", role="caption")
        return prompt

    def resolve_framework(self, cfg: RunConfig) -> str:
        if cfg.framework == "vanilla":
            if not self.providers.multi_image_capable:
                raise UnsupportedMultiImage(
                    "vanilla framework forced but the VLM profile is single-image", role="vlm")
            return "vanilla"
        if cfg.framework == "enhanced":
            return "enhanced"
        return "vanilla" if self.providers.multi_image_capable else "enhanced"

    def step(self, current: TagPrompt, reference: ImageRef, cfg: RunConfig,
             step_index: int = 0) -> IterationRecord:
        score_in = self.scorer.clip_sim(reference, current)
        record, _, error = self._step(current, reference, cfg, step_index, score_in)
        if error is not None:
            raise error
        return record

    def _step(self, current: TagPrompt, reference: ImageRef, cfg: RunConfig,
              step_index: int, score_in: ScoreValue):
        """Run one iteration; on provider failure return a partial record."""
        t0 = time.perf_counter()
        generated: ImageRef | None = None
        differences: tuple[str, ...] = ()
        cands = CandidateSet()
        prompt_out = current
        score_out = score_in
        error: Exception | None = None
        try:
            generated = self.providers.generate_image(GenerationRequest(
                prompt_text=render(current), seed=cfg.seed,
                width=cfg.image_size, height=cfg.image_size, steps=cfg.steps))
            framework = self.resolve_framework(cfg)
            if framework == "vanilla":
                diff_set = vanilla_differences(reference, generated, self.providers, self.templates)
            else:
                ref_desc = enhanced_describe(reference, self.providers, self.templates)
                gen_desc = enhanced_describe(generated, self.providers, self.templates)
                diff_set = enhanced_differences(ref_desc, gen_desc, self.providers, self.templates)
            differences = diff_set.blocks
            try:
                cands = generate_candidates_with_aspects(
                    diff_set, current, self.providers, self.templates, cap=cfg.candidate_cap)
            except ParseFailure:
                # Flaky model formatting: proceed with zero candidates and
                # let selection fall back to the unchanged prompt.
                cands = CandidateSet()
            prompt_out, score_out = self._select(current, cands.fragments, reference, cfg)
        except ProviderError as exc:
            error = exc
        record = IterationRecord(
            step=step_index, prompt_in=current, generated_image=generated,
            differences=differences, candidates=tuple(cands.fragments),
            prompt_out=prompt_out, score_in=score_in, score_out=score_out,
            wall_time=time.perf_counter() - t0)
        return record, cands.aspects, error

    def _select(self, current: TagPrompt, candidates: list[str], reference: ImageRef,
                cfg: RunConfig) -> tuple[TagPrompt, ScoreValue]:
        pool_current = current if cfg.pool_mode == "combined" else TagPrompt()
        if cfg.selection_mode == "accept_all":
            pool = build_pool(pool_current, candidates)
            if not pool:
                return current, self.scorer.clip_sim(reference, current)
            prompt_out = TagPrompt.from_fragments([f for f, _ in pool], [o for _, o in pool])
            return prompt_out, self.scorer.clip_sim(reference, prompt_out)
        outcome = greedy_select(pool_current, candidates, reference, self.scorer.clip_sim)
        if not outcome.selected:
            return current, self.scorer.clip_sim(reference, current)
        if outcome.final_score is None:
            return outcome.selected, self.scorer.clip_sim(reference, outcome.selected)
        return outcome.selected, outcome.final_score

    def run(self, reference: ImageRef, cfg: RunConfig, store: RunDirectory | None = None,
            run_id: str | None = None, on_iteration=None) -> RunResult:
        run_id = run_id or new_run_id()
        if store is not None:
            store.write_config(run_config_to_json(cfg))
            reference = store.save_reference(reference)

        if cfg.init_prompt is not None:
            initial = parse_tags(cfg.init_prompt, provenance="init")
            if not initial:
                raise ValueError("init_prompt parses to an empty prompt")
        else:
            initial = self.initialize(reference)

        init_score = self.scorer.clip_sim(reference, initial)
        iterations: list[IterationRecord] = []
        aspect_hints: dict[str, str] = {}
        current = initial
        score_in = init_score
        stop_reason = "max_iterations"
        unchanged = 0
        for index in range(cfg.max_iterations):
            record, aspects, error = self._step(current, reference, cfg, index, score_in)
            if store is not None:
                if record.generated_image is not None:
                    saved = store.save_step_image(index, record.generated_image)
                    record = replace(record, generated_image=saved)
                store.append_iteration(iteration_to_json(record))
            iterations.append(record)
            for fragment, aspect in aspects.items():
                if aspect in ("content", "style"):
                    aspect_hints[fragment] = aspect
            if on_iteration is not None:
                on_iteration(record)
            if error is not None:
                stop_reason = "error"
                break
            unchanged = unchanged + 1 if record.prompt_out == record.prompt_in else 0
            current = record.prompt_out
            score_in = record.score_out
            if unchanged >= cfg.early_stop_patience:
                stop_reason = "early_stop"
                break

        final_score = iterations[-1].score_out if iterations else init_score
        result = RunResult(
            run_id=run_id, reference=reference, initial_prompt=initial,
            final_prompt=current, iterations=tuple(iterations),
            final_score=final_score, stop_reason=stop_reason, aspect_hints=aspect_hints)
        if store is not None:
            store.write_final(run_result_to_json(result))
        return result


# -- JSON serialization -------------------------------------------------


def prompt_to_json(prompt: TagPrompt) -> dict:
    return {"fragments": list(prompt.fragments), "provenance": list(prompt.provenance)}


def prompt_from_json(data: dict) -> TagPrompt:
    return TagPrompt(tuple(data["fragments"]), tuple(data["provenance"]))


def image_to_json(image: ImageRef | None) -> dict | None:
    if image is None:
        return None
    return {"id": image.id, "width": image.width, "height": image.height,
            "seed": image.seed, "path": image.path}


def score_to_json(score: ScoreValue) -> dict:
    return {"raw_cosine": score.raw_cosine, "reported": score.reported}


def iteration_to_json(record: IterationRecord) -> dict:
    return {
        "step": record.step,
        "prompt_in": prompt_to_json(record.prompt_in),
        "generated_image": image_to_json(record.generated_image),
        "differences": list(record.differences),
        "candidates": list(record.candidates),
        "prompt_out": prompt_to_json(record.prompt_out),
        "score_in": score_to_json(record.score_in),
        "score_out": score_to_json(record.score_out),
        "wall_time": record.wall_time,
    }


def run_config_to_json(cfg: RunConfig) -> dict:
    return {
        "max_iterations": cfg.max_iterations,
        "early_stop_patience": cfg.early_stop_patience,
        "framework": cfg.framework,
        "seed": cfg.seed,
        "image_size": cfg.image_size,
        "candidate_cap": cfg.candidate_cap,
        "steps": cfg.steps,
        "init_prompt": cfg.init_prompt,
        "pool_mode": cfg.pool_mode,
        "selection_mode": cfg.selection_mode,
    }


def run_config_from_json(data: dict) -> RunConfig:
    return RunConfig(**data)


def run_result_to_json(result: RunResult) -> dict:
    return {
        "run_id": result.run_id,
        "reference": image_to_json(result.reference),
        "initial_prompt": prompt_to_json(result.initial_prompt),
        "final_prompt": prompt_to_json(result.final_prompt),
        "iterations": [iteration_to_json(rec) for rec in result.iterations],
        "final_score": score_to_json(result.final_score),
        "stop_reason": result.stop_reason,
        "aspect_hints": dict(sorted(result.aspect_hints.items())),
    }
