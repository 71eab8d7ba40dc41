"""HTTP service exposing runs, one-off generation, and prompt editing.

Runs execute on background threads (bounded by a semaphore); clients poll
GET /runs/{id} for status and GET /runs/{id}/iterations?since=k for
incremental history. Completed run records are never mutated. Errors are
JSON bodies of the form {"error": ..., "detail": ...}.
"""

from __future__ import annotations

import base64
import threading
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel

from reprompt import editing
from reprompt.config import AppConfig, build_optimizer, build_providers, build_scorer
from reprompt.core import ImageRef, TagPrompt, parse_tags
from reprompt.errors import ProviderError, RepromptError
from reprompt.optimizer import (
    PromptOptimizer,
    RunConfig,
    new_run_id,
    prompt_to_json,
    run_config_from_json,
    run_config_to_json,
)
from reprompt.providers.profiles import GenerationRequest
from reprompt.runstore import RunStore


@dataclass
class ServiceRunHandle:
    run_id: str
    status: str = "queued"  # queued -> running -> done | failed
    completed: int = 0
    max_iterations: int = 0
    error: str | None = None

    _ORDER = ("queued", "running", "done", "failed")

    def advance(self, status: str) -> None:
        if self._ORDER.index(status) < self._ORDER.index(self.status):
            raise ValueError(f"cannot move status backwards: {self.status} -> {status}")
        self.status = status

    def to_json(self) -> dict:
        return {
            "run_id": self.run_id,
            "status": self.status,
            "progress": {"completed": self.completed, "max": self.max_iterations},
            "error": self.error,
        }


class RunManager:
    """Owns run threads and their status handles."""

    def __init__(self, optimizer: PromptOptimizer, store: RunStore, max_parallel: int = 2):
        self.optimizer = optimizer
        self.store = store
        self._semaphore = threading.Semaphore(max_parallel)
        self._handles: dict[str, ServiceRunHandle] = {}
        self._lock = threading.Lock()

    def start(self, reference: ImageRef, cfg: RunConfig) -> str:
        run_id = new_run_id()
        handle = ServiceRunHandle(run_id=run_id, max_iterations=cfg.max_iterations)
        with self._lock:
            self._handles[run_id] = handle
        run_dir = self.store.create(run_id)

        def work():
            with self._semaphore:
                handle.advance("running")
                try:
                    result = self.optimizer.run(
                        reference, cfg, store=run_dir, run_id=run_id,
                        on_iteration=lambda rec: setattr(handle, "completed", rec.step + 1))
                except Exception as exc:  # noqa: BLE001 - reported via the handle
                    handle.error = str(exc)
                    handle.advance("failed")
                    return
                if result.stop_reason == "error":
                    handle.error = "run aborted on a backend failure; partial history kept"
                handle.advance("done")

        threading.Thread(target=work, daemon=True).start()
        return run_id

    def get(self, run_id: str) -> ServiceRunHandle | None:
        with self._lock:
            return self._handles.get(run_id)


class RunRequest(BaseModel):
    reference_b64: str | None = None
    reference_path: str | None = None
    config: dict = {}


class PromptBody(BaseModel):
    fragments: list[str]
    provenance: list[str] | None = None
    aspect_hints: dict[str, str] | None = None


class ModifyBody(BaseModel):
    fragments: list[str]
    provenance: list[str] | None = None
    find: str
    replace: str


class ClassifiedBody(BaseModel):
    content: list[str]
    style: list[str]


class FuseBody(BaseModel):
    style_source: ClassifiedBody
    content_source: ClassifiedBody


class GenerateBody(BaseModel):
    prompt: str | list[str]
    seed: int = 0
    width: int = 512
    height: int = 512


def _body_prompt(fragments: list[str], provenance: list[str] | None) -> TagPrompt:
    return TagPrompt.from_fragments(fragments, provenance if provenance else "user-edit")


def create_app(config: AppConfig, store_root: str | Path, max_parallel: int = 2) -> FastAPI:
    providers = build_providers(config)
    scorer = build_scorer(config, providers)
    optimizer = build_optimizer(config, providers=providers, scorer=scorer)
    store = RunStore(store_root)
    manager = RunManager(optimizer, store, max_parallel=max_parallel)

    app = FastAPI(title="reprompt service")
    app.state.config = config
    app.state.providers = providers
    app.state.store = store
    app.state.manager = manager

    @app.exception_handler(RequestValidationError)
    async def invalid_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={"error": "invalid_body", "detail": str(exc)})

    @app.exception_handler(ProviderError)
    async def backend_failure(request: Request, exc: ProviderError):
        return JSONResponse(status_code=502, content={"error": "backend_failure", "detail": str(exc)})

    @app.exception_handler(RepromptError)
    async def domain_error(request: Request, exc: RepromptError):
        return JSONResponse(status_code=422, content={"error": "invalid_request", "detail": str(exc)})

    @app.exception_handler(ValueError)
    async def value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=422, content={"error": "invalid_request", "detail": str(exc)})

    def not_found(detail: str) -> JSONResponse:
        return JSONResponse(status_code=404, content={"error": "not_found", "detail": detail})

    @app.post("/runs", status_code=202)
    def start_run(body: RunRequest):
        if bool(body.reference_b64) == bool(body.reference_path):
            raise ValueError("provide exactly one of reference_b64 or reference_path")
        if body.reference_b64:
            reference = ImageRef.from_bytes(base64.b64decode(body.reference_b64))
        else:
            path = Path(body.reference_path)
            if not path.exists():
                return not_found(f"reference image not found: {path}")
            reference = ImageRef.from_path(path)
        merged = run_config_to_json(config.run)
        merged.update(body.config)
        cfg = run_config_from_json(merged)
        run_id = manager.start(reference, cfg)
        return {"run_id": run_id}

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        handle = manager.get(run_id)
        if handle is None:
            return not_found(f"unknown run: {run_id}")
        payload = handle.to_json()
        if handle.status == "done":
            payload["result"] = store.open(run_id).read_final()
        else:
            payload["result"] = None
        return payload

    @app.get("/runs/{run_id}/iterations")
    def get_iterations(run_id: str, since: int = 0):
        handle = manager.get(run_id)
        if handle is None:
            return not_found(f"unknown run: {run_id}")
        records = store.open(run_id).read_iterations(since=since)
        return {
            "iterations": records,
            "next_since": since + len(records),
            "done": handle.status in ("done", "failed"),
        }

    @app.get("/runs/{run_id}/images/{step}")
    def get_step_image(run_id: str, step: int):
        handle = manager.get(run_id)
        if handle is None:
            return not_found(f"unknown run: {run_id}")
        path = store.open(run_id).step_image_path(step)
        if not path.exists():
            return not_found(f"no image for step {step}")
        return FileResponse(path, media_type="image/png")

    @app.get("/runs/{run_id}/reference")
    def get_reference_image(run_id: str):
        handle = manager.get(run_id)
        if handle is None:
            return not_found(f"unknown run: {run_id}")
        path = store.open(run_id).reference_path()
        if not path.exists():
            return not_found("reference image not stored")
        return FileResponse(path, media_type="image/png")

    @app.post("/prompts/classify")
    def classify_prompt(body: PromptBody):
        prompt = _body_prompt(body.fragments, body.provenance)
        classified = editing.classify(prompt, providers=providers,
                                      aspect_hints=body.aspect_hints,
                                      templates=config.templates)
        return {"content": list(classified.content), "style": list(classified.style),
                "origin": classified.origin}

    @app.post("/prompts/modify")
    def modify_prompt(body: ModifyBody):
        prompt = _body_prompt(body.fragments, body.provenance)
        return prompt_to_json(editing.modify(prompt, body.find, body.replace))

    @app.post("/prompts/fuse")
    def fuse_prompts(body: FuseBody):
        style_source = editing.ClassifiedPrompt(
            content=tuple(body.style_source.content), style=tuple(body.style_source.style))
        content_source = editing.ClassifiedPrompt(
            content=tuple(body.content_source.content), style=tuple(body.content_source.style))
        return prompt_to_json(editing.fuse(style_source, content_source))

    @app.post("/generate")
    def generate(body: GenerateBody):
        if isinstance(body.prompt, str):
            prompt = parse_tags(body.prompt)
        else:
            prompt = TagPrompt.from_fragments(body.prompt)
        if not prompt:
            raise ValueError("prompt is empty")
        image = providers.generate_image(GenerationRequest(
            prompt_text=prompt.render(), seed=body.seed,
            width=body.width, height=body.height))
        return {
            "id": image.id,
            "image_b64": base64.b64encode(image.read_bytes()).decode("ascii"),
            "width": image.width,
            "height": image.height,
            "seed": image.seed,
        }

    return app
