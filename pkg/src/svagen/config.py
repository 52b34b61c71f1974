"""Run configuration: strict JSON loading, defaults, and the design manifest."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Optional

from .checker.stimulus import PlanError, StimulusPlan
from .dataset import DEFAULT_THRESHOLD, EmbedderConfig
from .llm.gateway import ConfigError, ProviderConfig
from .repair import RepairPolicy
from .rtl import DEFAULT_CLOCK_NAMES, DEFAULT_RESET_NAMES


def data_dir() -> Path:
    return Path(str(resources.files("svagen").joinpath("data")))


def bundled_manifest() -> Path:
    return data_dir() / "designs" / "manifest.json"


def bundled_fixtures() -> Path:
    return data_dir() / "fixtures" / "replay.jsonl"


@dataclass(frozen=True)
class DesignEntry:
    design_id: str
    spec_path: Path
    rtl_path: Path
    model_path: Path


def load_manifest(path) -> list[DesignEntry]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read design manifest {path}: {e}") from None
    if set(doc) != {"designs"}:
        raise ConfigError(f"{path}: manifest must have exactly the key 'designs'")
    entries, seen = [], set()
    for i, d in enumerate(doc["designs"]):
        keys = {"design_id", "spec_path", "rtl_path", "model_path"}
        if set(d) != keys:
            raise ConfigError(f"{path}: designs[{i}] must have exactly the keys {sorted(keys)}")
        if d["design_id"] in seen:
            raise ConfigError(f"{path}: duplicate design id {d['design_id']!r}")
        seen.add(d["design_id"])
        paths = {k: (path.parent / d[k]) for k in ("spec_path", "rtl_path", "model_path")}
        for k, p in paths.items():
            if not p.is_file():
                raise ConfigError(f"{path}: {d['design_id']}: {k} {p} does not exist")
        entries.append(DesignEntry(d["design_id"], **paths))
    return sorted(entries, key=lambda e: e.design_id)


@dataclass(frozen=True)
class Paths:
    designs_manifest: str
    prompts_dir: Optional[str] = None
    output_dir: str = "runs"


@dataclass(frozen=True)
class RunConfig:
    provider: ProviderConfig
    repair: RepairPolicy = field(default_factory=RepairPolicy)
    stimulus: StimulusPlan = field(default_factory=StimulusPlan)
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    threshold: float = DEFAULT_THRESHOLD
    paths: Paths = field(default_factory=lambda: Paths(str(bundled_manifest())))
    model_id: str = "gpt-3.5-turbo"
    clock_names: tuple = DEFAULT_CLOCK_NAMES
    reset_names: tuple = DEFAULT_RESET_NAMES
    workers: int = 4

    def to_dict(self) -> dict:
        return {
            "provider": self.provider.to_dict(),
            "repair": {"max_iterations": self.repair.max_iterations,
                       "loop_window": self.repair.loop_window},
            "stimulus": self.stimulus.to_dict(),
            "dataset": {"embedder": {k: v for k, v in asdict(self.embedder).items() if v is not None},
                        "threshold": self.threshold},
            "paths": {k: v for k, v in asdict(self.paths).items() if v is not None},
            "model_id": self.model_id,
            "clock_names": list(self.clock_names),
            "reset_names": list(self.reset_names),
            "workers": self.workers,
        }

    def config_hash(self) -> str:
        doc = self.to_dict()
        del doc["paths"]["output_dir"]  # where a run lands is not part of what it is
        canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:10]

    def designs(self) -> list[DesignEntry]:
        return load_manifest(self.paths.designs_manifest)


_TOP_KEYS = {"provider", "repair", "stimulus", "dataset", "paths", "model_id", "clock_names",
             "reset_names", "workers"}


def _section(doc: dict, name: str, cls, where: str) -> dict:
    sub = doc.get(name, {})
    if not isinstance(sub, dict):
        raise ConfigError(f"{where}: '{name}' must be an object")
    allowed = {f.name for f in fields(cls)}
    unknown = set(sub) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys in '{name}': {sorted(unknown)}")
    return sub


def _resolve(base: Path, value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    p = Path(value)
    return str(p if p.is_absolute() else (base / p))


def config_from_dict(doc: dict, base_dir=".", where: str = "config") -> RunConfig:
    base = Path(base_dir)
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        prov = _section(doc, "provider", ProviderConfig, where)
        if "backend" not in prov:
            raise ConfigError(f"{where}: provider.backend is required")
        prov = dict(prov)
        for k in ("fixture_path", "script_path"):
            prov[k] = _resolve(base, prov.get(k))
        provider = ProviderConfig(**prov)
        rep = _section(doc, "repair", RepairPolicy, where)
        if "apply_combinational_rewrite" in rep:
            raise ConfigError(f"{where}: repair.apply_combinational_rewrite follows the design mode")
        repair = RepairPolicy(**rep)
        stimulus = StimulusPlan(**_section(doc, "stimulus", StimulusPlan, where))
        ds = doc.get("dataset", {})
        if set(ds) - {"embedder", "threshold"}:
            raise ConfigError(f"{where}: unknown keys in 'dataset': {sorted(set(ds) - {'embedder', 'threshold'})}")
        emb = _section(ds, "embedder", EmbedderConfig, where)
        emb = {**emb, "vectors_path": _resolve(base, emb.get("vectors_path"))}
        embedder = EmbedderConfig(**emb)
        threshold = float(ds.get("threshold", DEFAULT_THRESHOLD))
        pth = _section(doc, "paths", Paths, where)
        paths = Paths(
            designs_manifest=_resolve(base, pth.get("designs_manifest")) or str(bundled_manifest()),
            prompts_dir=_resolve(base, pth.get("prompts_dir")),
            output_dir=_resolve(base, pth.get("output_dir", "runs")),
        )
    except (TypeError, ValueError, PlanError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{where}: {e}") from None
    cfg = RunConfig(provider, repair, stimulus, embedder, threshold, paths,
                    str(doc.get("model_id", "gpt-3.5-turbo")),
                    tuple(doc.get("clock_names", DEFAULT_CLOCK_NAMES)),
                    tuple(doc.get("reset_names", DEFAULT_RESET_NAMES)),
                    int(doc.get("workers", 4)))
    check_paths(cfg, where)
    return cfg


def check_paths(cfg: RunConfig, where: str = "config") -> None:
    checks = [("paths.designs_manifest", cfg.paths.designs_manifest, "file"),
              ("paths.prompts_dir", cfg.paths.prompts_dir, "dir"),
              ("provider.fixture_path", cfg.provider.fixture_path, "file"),
              ("provider.script_path", cfg.provider.script_path, "file"),
              ("dataset.embedder.vectors_path", cfg.embedder.vectors_path, "file")]
    for name, value, kind in checks:
        if value is None:
            continue
        p = Path(value)
        ok = p.is_file() if kind == "file" else p.is_dir()
        if not ok:
            raise ConfigError(f"{where}: {name} {value} does not exist")
    if cfg.workers < 1:
        raise ConfigError(f"{where}: workers must be positive")


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except ValueError as e:
        raise ConfigError(f"{path}: invalid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return config_from_dict(doc, path.parent, str(path))


def default_config() -> RunConfig:
    """Bundled designs answered from the bundled replay fixtures."""
    return RunConfig(ProviderConfig("replay", fixture_path=str(bundled_fixtures())))


def with_backend(cfg: RunConfig, backend: str) -> RunConfig:
    if backend == cfg.provider.backend:
        return cfg
    p = cfg.provider
    try:
        if backend == "replay":
            provider = ProviderConfig("replay", fixture_path=p.fixture_path or str(bundled_fixtures()),
                                      max_concurrent_requests=p.max_concurrent_requests,
                                      retry_limit=p.retry_limit, timeout=p.timeout)
        elif backend == "scripted":
            provider = ProviderConfig("scripted", script_path=p.script_path,
                                      max_concurrent_requests=p.max_concurrent_requests,
                                      retry_limit=p.retry_limit, timeout=p.timeout)
        else:
            provider = ProviderConfig("http", endpoint_url=p.endpoint_url,
                                      api_key_env_var_name=p.api_key_env_var_name,
                                      max_concurrent_requests=p.max_concurrent_requests,
                                      retry_limit=p.retry_limit, timeout=p.timeout)
    except ConfigError as e:
        raise ConfigError(f"--backend {backend}: {e}") from None
    return replace(cfg, provider=provider)
