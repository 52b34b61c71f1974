import json

import pytest

from svagen.config import (
    ConfigError, bundled_fixtures, bundled_manifest, config_from_dict, default_config,
    load_config, load_manifest, with_backend,
)


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return path


def test_bundled_manifest_lists_five_designs():
    entries = load_manifest(bundled_manifest())
    assert [e.design_id for e in entries] == ["decade_counter", "fsm_1101", "mux2", "parity",
                                              "updown_counter"]
    assert all(e.rtl_path.is_file() and e.model_path.is_file() and e.spec_path.is_file() for e in entries)


def test_paths_resolve_against_the_config_file(tmp_path):
    (tmp_path / "fx.jsonl").write_text("")
    path = write(tmp_path, {"provider": {"backend": "replay", "fixture_path": "fx.jsonl"},
                            "repair": {"max_iterations": 2}, "stimulus": {"horizon": 10},
                            "dataset": {"threshold": 0.7}, "paths": {"output_dir": "out"},
                            "workers": 2})
    cfg = load_config(path)
    assert cfg.provider.fixture_path == str(tmp_path / "fx.jsonl")
    assert cfg.paths.output_dir == str(tmp_path / "out")
    assert (cfg.repair.max_iterations, cfg.stimulus.horizon, cfg.threshold, cfg.workers) == (2, 10, 0.7, 2)
    assert cfg.paths.designs_manifest == str(bundled_manifest())


@pytest.mark.parametrize("doc, needle", [
    ({"provider": {"backend": "scripted"}, "colour": 1}, "unknown keys"),
    ({"provider": {"backend": "scripted", "api_key": "sk-123"}}, "unknown keys in 'provider'"),
    ({"provider": {"backend": "replay", "fixture_path": "missing.jsonl"}}, "does not exist"),
    ({"provider": {}}, "provider.backend is required"),
    ({"provider": {"backend": "scripted"}, "repair": {"apply_combinational_rewrite": True}}, "design mode"),
    ({"provider": {"backend": "scripted"}, "stimulus": {"horizon": 0}}, "horizon"),
    ({"provider": {"backend": "scripted"}, "dataset": {"extra": 1}}, "dataset"),
    ({"provider": {"backend": "scripted"}, "workers": 0}, "workers"),
    ({"provider": {"backend": "scripted"}, "paths": {"prompts_dir": "nowhere"}}, "prompts_dir"),
])
def test_rejected_configs(tmp_path, doc, needle):
    with pytest.raises(ConfigError, match=needle):
        load_config(write(tmp_path, doc))


def test_unreadable_or_malformed(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "none.json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(write(tmp_path, "{"))
    with pytest.raises(ConfigError, match="JSON object"):
        load_config(write(tmp_path, "[]"))


@pytest.mark.parametrize("doc", [
    {"designs": [], "extra": 1},
    {"designs": [{"design_id": "x", "spec_path": "s", "rtl_path": "r"}]},
    {"designs": [{"design_id": "x", "spec_path": "s", "rtl_path": "r", "model_path": "m"}]},
])
def test_bad_manifests(tmp_path, doc):
    with pytest.raises(ConfigError):
        load_manifest(write(tmp_path, doc, "manifest.json"))


def test_duplicate_design_ids(tmp_path):
    for f in "srm":
        (tmp_path / f).write_text("x")
    entry = {"design_id": "x", "spec_path": "s", "rtl_path": "r", "model_path": "m"}
    with pytest.raises(ConfigError, match="duplicate|unique"):
        load_manifest(write(tmp_path, {"designs": [entry, entry]}, "manifest.json"))


def test_config_hash_tracks_content():
    a = default_config()
    assert a.config_hash() == default_config().config_hash() and len(a.config_hash()) == 10
    assert with_backend(a, "scripted").config_hash() != a.config_hash()
    assert config_from_dict(a.to_dict()).to_dict() == a.to_dict()


def test_backend_override():
    cfg = with_backend(default_config(), "scripted")
    assert cfg.provider.backend == "scripted"
    assert with_backend(cfg, "replay").provider.fixture_path == str(bundled_fixtures())
    with pytest.raises(ConfigError, match="--backend http"):
        with_backend(cfg, "http")
