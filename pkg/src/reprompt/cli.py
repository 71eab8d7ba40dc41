"""Command line entry points: run, eval, classify, fuse, serve."""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from reprompt import editing
from reprompt.config import (
    AppConfig,
    build_extractors,
    build_optimizer,
    build_providers,
    build_scorer,
    load_config,
)
from reprompt.core import ImageRef, parse_tags, render
from reprompt.errors import ConfigError, EmptyManifest, ProviderError, RepromptError
from reprompt.evaluation import EvalConfig, eval_manifest, load_manifest, write_report
from reprompt.optimizer import new_run_id, run_result_to_json
from reprompt.runstore import RunStore

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _load_app_config(path: str | None) -> AppConfig:
    if path is None:
        return AppConfig()
    return load_config(path)


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
@click.option("--config", "config_path", type=str, default=None, help="YAML/JSON config file.")
@click.option("--out", "out_dir", type=str, default="./runs", help="Output directory.")
@click.option("--verbose", is_flag=True, default=False)
@click.pass_context
def main(ctx, config_path, out_dir, verbose):
    """Decode reference images into editable tag-form reverse prompts."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path
    ctx.obj["out_dir"] = out_dir
    ctx.obj["verbose"] = verbose


def _context_config(ctx) -> AppConfig:
    try:
        return _load_app_config(ctx.obj["config_path"])
    except ConfigError as exc:
        _fail(str(exc), EXIT_USAGE)


@main.command("run")
@click.argument("reference", type=str)
@click.option("--init-prompt", type=str, default=None, help="Skip captioning; start from this prompt.")
@click.pass_context
def cli_run(ctx, reference, init_prompt):
    """Optimize a reverse prompt for REFERENCE (a PNG file)."""
    cfg = _context_config(ctx)
    ref_path = Path(reference)
    if not ref_path.exists():
        _fail(f"reference image not found: {ref_path}", EXIT_USAGE)
    if init_prompt is not None:
        cfg.run = replace(cfg.run, init_prompt=init_prompt)

    providers = build_providers(cfg)
    scorer = build_scorer(cfg, providers)
    optimizer = build_optimizer(cfg, providers=providers, scorer=scorer)
    store = RunStore(ctx.obj["out_dir"])
    run_id = new_run_id()
    try:
        run_dir = store.create(run_id)
        result = optimizer.run(ImageRef.from_path(ref_path), cfg.run, store=run_dir, run_id=run_id)
    except ProviderError as exc:
        _fail(str(exc), EXIT_RUNTIME)
    except (RepromptError, ValueError, OSError) as exc:
        _fail(str(exc), EXIT_RUNTIME)

    click.echo(f"run id: {result.run_id}")
    click.echo(f"stop reason: {result.stop_reason}")
    click.echo(f"final prompt: {render(result.final_prompt)}")
    click.echo(f"score: {result.final_score.reported:.2f}")
    if ctx.obj["verbose"]:
        for record in result.iterations:
            click.echo(f"  step {record.step}: {record.score_in.reported:.2f} "
                       f"-> {record.score_out.reported:.2f}")
    if result.stop_reason == "error":
        _fail("run aborted on a backend failure; partial history kept", EXIT_RUNTIME)
    sys.exit(EXIT_OK)


@main.command("eval")
@click.argument("manifest", type=str)
@click.option("--method", type=click.Choice(["identity", "caption", "optimize"]), default="identity",
              help="identity = gold prompt passthrough; caption = initializer only; optimize = full loop.")
@click.pass_context
def cli_eval(ctx, manifest, method):
    """Score a prompt-producing method over a dataset MANIFEST."""
    cfg = _context_config(ctx)
    manifest_path = Path(manifest)
    if not manifest_path.exists():
        _fail(f"manifest not found: {manifest_path}", EXIT_USAGE)
    try:
        dataset = load_manifest(manifest_path)
    except (ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        _fail(f"invalid manifest: {exc}", EXIT_USAGE)

    providers = build_providers(cfg)
    scorer = build_scorer(cfg, providers)
    optimizer = build_optimizer(cfg, providers=providers, scorer=scorer)
    gold_prompts = {}
    for entry in dataset.entries:
        if entry.gold_prompt is not None:
            gold_prompts[entry.id] = entry.gold_prompt

    def identity_method(image: ImageRef):
        for entry in dataset.entries:
            if Path(entry.image_path).resolve() == Path(image.path).resolve():
                if entry.gold_prompt is None:
                    raise ValueError(f"entry {entry.id} has no gold prompt")
                return parse_tags(entry.gold_prompt)
        raise ValueError("image not present in manifest")

    methods = {
        "identity": identity_method,
        "caption": optimizer.initialize,
        "optimize": lambda image: optimizer.run(image, cfg.run).final_prompt,
    }
    eval_cfg = EvalConfig(
        scorer=scorer, generator=providers, extractors=build_extractors(cfg, providers),
        seeds=cfg.evaluation.seeds, image_size=cfg.run.image_size,
        parallelism=cfg.evaluation.parallelism,
        optimized_with=f"{cfg.provider_mode}:{method}", generated_with=cfg.provider_mode)
    try:
        report = eval_manifest(dataset, methods[method], eval_cfg)
    except EmptyManifest as exc:
        _fail(str(exc), EXIT_USAGE)
    except ProviderError as exc:
        _fail(str(exc), EXIT_RUNTIME)
    json_path, text_path = write_report(report, ctx.obj["out_dir"])
    click.echo(text_path.read_text(), nl=False)
    click.echo(f"report written to {json_path} and {text_path}")
    sys.exit(EXIT_OK)


@main.command("classify")
@click.option("--prompt", "prompt_text", type=str, required=True, help="Comma-separated tag prompt.")
@click.pass_context
def cli_classify(ctx, prompt_text):
    """Split a tag prompt into content and style groups (JSON on stdout)."""
    cfg = _context_config(ctx)
    prompt = parse_tags(prompt_text)
    if not prompt:
        _fail("prompt is empty", EXIT_USAGE)
    providers = build_providers(cfg)
    try:
        classified = editing.classify(prompt, providers=providers, templates=cfg.templates)
    except ProviderError as exc:
        _fail(str(exc), EXIT_RUNTIME)
    click.echo(json.dumps({"content": list(classified.content), "style": list(classified.style)},
                          indent=2))
    sys.exit(EXIT_OK)


@main.command("fuse")
@click.option("--style-from", "style_path", type=str, required=True,
              help="JSON file with a classified prompt supplying style tags.")
@click.option("--content-from", "content_path", type=str, required=True,
              help="JSON file with a classified prompt supplying content tags.")
@click.pass_context
def cli_fuse(ctx, style_path, content_path):
    """Merge one prompt's style tags with another's content tags."""
    def read_classified(path: str) -> editing.ClassifiedPrompt:
        p = Path(path)
        if not p.exists():
            _fail(f"file not found: {p}", EXIT_USAGE)
        data = json.loads(p.read_text(encoding="utf-8"))
        return editing.ClassifiedPrompt(content=tuple(data.get("content", [])),
                                        style=tuple(data.get("style", [])))

    style_source = read_classified(style_path)
    content_source = read_classified(content_path)
    try:
        fused = editing.fuse(style_source, content_source)
    except RepromptError as exc:
        _fail(str(exc), EXIT_RUNTIME)
    click.echo(render(fused))
    sys.exit(EXIT_OK)


@main.command("serve")
@click.option("--bind", type=str, default="127.0.0.1:8000", help="host:port to listen on.")
@click.pass_context
def cli_serve(ctx, bind):
    """Start the HTTP service."""
    import uvicorn

    from reprompt.service import create_app

    cfg = _context_config(ctx)
    host, _, port = bind.partition(":")
    app = create_app(cfg, store_root=ctx.obj["out_dir"])
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))


if __name__ == "__main__":
    main()
