"""Load and validate the single YAML/JSON configuration document.

Sections: providers, run, evaluation, templates. Environment variables are
interpolated only where a secret belongs (the `auth` field names the
variable; it is resolved at call time, never at load time).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from reprompt.core import PromptTemplate
from reprompt.errors import ConfigError
from reprompt.evaluation import DEFAULT_SEEDS, NamedExtractor
from reprompt.optimizer import PromptOptimizer, RunConfig
from reprompt.promptgen import DEFAULT_TEMPLATES, load_templates
from reprompt.providers.http import HttpProviders
from reprompt.providers.mock import MockProviders
from reprompt.providers.profiles import ProviderProfile, ROLES
from reprompt.scoring import ClipScorer, EmbeddingCache

_PROFILE_FIELDS = {f.name for f in fields(ProviderProfile)}
_RUN_FIELDS = {f.name for f in fields(RunConfig)}


@dataclass
class EvalSettings:
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    parallelism: int = 2
    extractor_names: tuple[str, ...] = ("clip_i", "dino", "vit")
    extractor_profiles: dict[str, ProviderProfile] = field(default_factory=dict)


@dataclass
class AppConfig:
    provider_mode: str = "mock"
    multi_image: bool = True
    profiles: dict[str, ProviderProfile] = field(default_factory=dict)
    run: RunConfig = field(default_factory=RunConfig)
    evaluation: EvalSettings = field(default_factory=EvalSettings)
    templates: dict[str, PromptTemplate] = field(default_factory=lambda: dict(DEFAULT_TEMPLATES))
    cache_path: str | None = None


def _parse_profile(role: str, raw: dict) -> ProviderProfile:
    unknown = set(raw) - _PROFILE_FIELDS
    if unknown:
        raise ConfigError("unknown profile field(s): " + ", ".join(sorted(unknown)),
                          key=f"providers.{role}.{sorted(unknown)[0]}")
    try:
        return ProviderProfile(role=role, **{k: v for k, v in raw.items() if k != "role"})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), key=f"providers.{role}")


def _parse_providers(raw: dict, cfg: AppConfig) -> None:
    mode = raw.get("mode", "mock")
    if mode not in ("mock", "http"):
        raise ConfigError(f"mode must be 'mock' or 'http', got {mode!r}", key="providers.mode")
    cfg.provider_mode = mode
    cfg.multi_image = bool(raw.get("multi_image", True))
    for key, value in raw.items():
        if key in ("mode", "multi_image"):
            continue
        if key not in ROLES:
            raise ConfigError(f"unknown provider role {key!r}", key=f"providers.{key}")
        if not isinstance(value, dict):
            raise ConfigError("profile must be a mapping", key=f"providers.{key}")
        cfg.profiles[key] = _parse_profile(key, value)
    if mode == "http":
        missing = [role for role in ROLES if role not in cfg.profiles]
        if missing:
            raise ConfigError(f"http mode requires profiles for: {', '.join(missing)}",
                              key=f"providers.{missing[0]}")
        text_dim = cfg.profiles["text_embedding"].dimension
        image_dim = cfg.profiles["image_embedding"].dimension
        if text_dim is not None and image_dim is not None and text_dim != image_dim:
            raise ConfigError(
                f"dimension_mismatch: paired embedding profiles disagree ({text_dim} vs {image_dim})",
                key="providers.image_embedding.dimension")


def _parse_run(raw: dict, cfg: AppConfig) -> None:
    unknown = set(raw) - _RUN_FIELDS
    if unknown:
        raise ConfigError("unknown run option(s): " + ", ".join(sorted(unknown)),
                          key=f"run.{sorted(unknown)[0]}")
    try:
        cfg.run = RunConfig(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), key="run")


def _parse_evaluation(raw: dict, cfg: AppConfig) -> None:
    settings = EvalSettings()
    for key, value in raw.items():
        if key == "seeds":
            if not isinstance(value, list) or not value:
                raise ConfigError("seeds must be a non-empty list", key="evaluation.seeds")
            settings.seeds = tuple(int(s) for s in value)
        elif key == "parallelism":
            settings.parallelism = int(value)
        elif key == "extractors":
            names = []
            for item in value:
                if isinstance(item, str):
                    names.append(item)
                elif isinstance(item, dict) and "name" in item:
                    names.append(item["name"])
                    profile_raw = {k: v for k, v in item.items() if k != "name"}
                    if profile_raw:
                        settings.extractor_profiles[item["name"]] = _parse_profile(
                            "image_embedding", profile_raw)
                else:
                    raise ConfigError("extractor must be a name or a mapping with a name",
                                      key="evaluation.extractors")
            settings.extractor_names = tuple(names)
        else:
            raise ConfigError(f"unknown evaluation option {key!r}", key=f"evaluation.{key}")
    cfg.evaluation = settings


def _parse_templates(raw, cfg: AppConfig, base: Path) -> None:
    if isinstance(raw, str):
        path = Path(raw)
        if not path.is_absolute():
            path = base / path
        try:
            cfg.templates = load_templates(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(str(exc), key="templates")
        return
    if not isinstance(raw, dict):
        raise ConfigError("templates must be a file path or a name->text mapping", key="templates")
    merged = dict(DEFAULT_TEMPLATES)
    for name, text in raw.items():
        if name not in DEFAULT_TEMPLATES:
            raise ConfigError(f"unknown template name {name!r}", key=f"templates.{name}")
        placeholders = tuple(sorted(set(re.findall(r"\{([A-Za-z0-9_]+)\}", text))))
        merged[name] = PromptTemplate(name=name, text=text, placeholders=placeholders)
    cfg.templates = merged


def load_config(path: str | Path) -> AppConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        document = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}")
    if document is None:
        document = {}
    if not isinstance(document, dict):
        raise ConfigError("config root must be a mapping")

    cfg = AppConfig()
    for key, value in document.items():
        if key == "providers":
            _parse_providers(value or {}, cfg)
        elif key == "run":
            _parse_run(value or {}, cfg)
        elif key == "evaluation":
            _parse_evaluation(value or {}, cfg)
        elif key == "templates":
            _parse_templates(value, cfg, path.parent)
        elif key == "cache_path":
            cfg.cache_path = str(value)
        else:
            raise ConfigError(f"unknown config section {key!r}", key=key)
    return cfg


def build_providers(cfg: AppConfig):
    if cfg.provider_mode == "mock":
        return MockProviders(multi_image_capable=cfg.multi_image)
    return HttpProviders(cfg.profiles)


def build_scorer(cfg: AppConfig, providers) -> ClipScorer:
    cache = EmbeddingCache()
    if cfg.cache_path and Path(cfg.cache_path).exists():
        cache.load(cfg.cache_path)
    return ClipScorer(providers, cache=cache)


def build_extractors(cfg: AppConfig, providers) -> list[NamedExtractor]:
    extractors = []
    for name in cfg.evaluation.extractor_names:
        profile = cfg.evaluation.extractor_profiles.get(name)
        if profile is not None and cfg.provider_mode == "http":
            extractors.append(NamedExtractor(name, HttpProviders({"image_embedding": profile})))
        else:
            extractors.append(NamedExtractor(name, providers))
    return extractors


def build_optimizer(cfg: AppConfig, providers=None, scorer=None) -> PromptOptimizer:
    providers = providers if providers is not None else build_providers(cfg)
    scorer = scorer if scorer is not None else build_scorer(cfg, providers)
    return PromptOptimizer(providers, scorer=scorer, templates=cfg.templates)
