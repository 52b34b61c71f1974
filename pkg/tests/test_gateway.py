import hashlib
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor

import httpx
import pytest

from svagen.llm import (
    ChatMessage, CompletionRequest, ConfigError, Gateway, GatewayError, ProviderConfig,
    ReplayMissError, ScriptExhaustedError, strip_fences,
)

URL = "https://llm.invalid/v1/chat/completions"
KEY_VAR = "SVAGEN_TEST_KEY"


def req(text="hello", model="m1", temperature=0.0):
    return CompletionRequest(model, (ChatMessage("system", "be brief"), ChatMessage("user", text)),
                             temperature)


def http_cfg(**kw):
    return ProviderConfig("http", endpoint_url=URL, api_key_env_var_name=KEY_VAR, **kw)


def ok(text):
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": text}}]})


def test_fingerprint_is_sha256_of_canonical_json():
    canon = ('{"messages":[{"content":"be brief","role":"system"},{"content":"hello","role":"user"}],'
             '"model":"m1","temperature":0.0}')
    assert req().request_fingerprint == hashlib.sha256(canon.encode()).hexdigest()
    assert req().request_fingerprint != req(temperature=0.5).request_fingerprint
    # max_tokens does not change the answer we would replay
    assert CompletionRequest("m1", req().messages, 0.0, 10).request_fingerprint == req().request_fingerprint


@pytest.mark.parametrize("kwargs", [
    dict(backend="grpc"),
    dict(backend="http", endpoint_url=URL),
    dict(backend="replay"),
    dict(backend="scripted", fixture_path="x.jsonl"),
    dict(backend="replay", fixture_path="x", endpoint_url=URL),
    dict(backend="scripted", max_concurrent_requests=0),
    dict(backend="scripted", retry_limit=11),
])
def test_bad_provider_configs(kwargs):
    with pytest.raises(ConfigError):
        ProviderConfig(**kwargs)


def test_http_sends_key_from_environment(monkeypatch):
    monkeypatch.setenv(KEY_VAR, "sk-test")
    seen = {}

    def handler(request):
        seen["auth"] = request.headers["authorization"]
        seen["body"] = json.loads(request.content)
        return ok("```sv\nassert (a);\n```")

    gw = Gateway(http_cfg(), transport=httpx.MockTransport(handler))
    assert gw.complete(req()) == "```sv\nassert (a);\n```"
    assert seen["auth"] == "Bearer sk-test"
    assert seen["body"]["model"] == "m1" and seen["body"]["messages"][1]["content"] == "hello"


def test_missing_key_is_an_error(monkeypatch):
    monkeypatch.delenv(KEY_VAR, raising=False)
    gw = Gateway(http_cfg(), transport=httpx.MockTransport(lambda r: ok("x")))
    with pytest.raises(GatewayError, match=KEY_VAR):
        gw.complete(req())


def test_transient_errors_are_retried_with_backoff(monkeypatch):
    monkeypatch.setenv(KEY_VAR, "k")
    answers = iter([httpx.Response(503), httpx.Response(429), ok("fine")])
    sleeps = []
    gw = Gateway(http_cfg(retry_limit=2), transport=httpx.MockTransport(lambda r: next(answers)),
                 sleep=sleeps.append)
    assert gw.complete(req()) == "fine"
    assert sleeps == [0.5, 1.0]


def test_retries_give_up(monkeypatch):
    monkeypatch.setenv(KEY_VAR, "k")
    calls = []

    def handler(request):
        calls.append(1)
        raise httpx.ConnectTimeout("slow", request=request)

    gw = Gateway(http_cfg(retry_limit=1), transport=httpx.MockTransport(handler), sleep=lambda s: None)
    with pytest.raises(GatewayError, match="gave up after 2 attempts"):
        gw.complete(req())
    assert len(calls) == 2


@pytest.mark.parametrize("response", [httpx.Response(401, text="no"), httpx.Response(200, json={"x": 1})])
def test_permanent_errors_are_not_retried(monkeypatch, response):
    monkeypatch.setenv(KEY_VAR, "k")
    calls = []

    def handler(request):
        calls.append(1)
        return response

    with pytest.raises(GatewayError):
        Gateway(http_cfg(), transport=httpx.MockTransport(handler)).complete(req())
    assert len(calls) == 1


def test_concurrency_is_bounded(monkeypatch):
    monkeypatch.setenv(KEY_VAR, "k")
    lock = threading.Lock()
    state = {"now": 0, "peak": 0}

    def handler(request):
        with lock:
            state["now"] += 1
            state["peak"] = max(state["peak"], state["now"])
        time.sleep(0.02)
        with lock:
            state["now"] -= 1
        return ok("x")

    gw = Gateway(http_cfg(max_concurrent_requests=3), transport=httpx.MockTransport(handler))
    with ThreadPoolExecutor(12) as pool:
        list(pool.map(lambda i: gw.complete(req(f"q{i}")), range(24)))
    assert 1 <= state["peak"] <= 3


def test_record_then_replay(tmp_path):
    path = tmp_path / "rec.jsonl"
    gw = Gateway(ProviderConfig("scripted"), responses=["one", "two", "dup"], record_path=path)
    assert [gw.complete(req("a")), gw.complete(req("b")), gw.complete(req("a"))] == ["one", "two", "dup"]
    lines = [json.loads(x) for x in path.read_text().splitlines()]
    assert len(lines) == 2  # one line per fingerprint, first answer wins
    assert set(lines[0]) == {"fingerprint", "request_summary", "response_text"}
    assert lines[0]["request_summary"] == "m1: a"
    replay = Gateway(ProviderConfig("replay", fixture_path=str(path)))
    assert replay.complete(req("a")) == "one" and replay.complete(req("b")) == "two"
    with pytest.raises(ReplayMissError) as exc:
        replay.complete(req("c"))
    assert exc.value.fingerprint == req("c").request_fingerprint


def test_bad_fixture_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"fingerprint": "x"}\n')
    with pytest.raises(GatewayError, match="bad.jsonl:1"):
        Gateway(ProviderConfig("replay", fixture_path=str(path)))


def test_scripted_exhaustion_and_responder():
    gw = Gateway(ProviderConfig("scripted"), responses=["a"])
    assert gw.complete(req()) == "a"
    with pytest.raises(ScriptExhaustedError):
        gw.complete(req())
    gw = Gateway(ProviderConfig("scripted"), responses=["a"], responder=lambda r: r.messages[-1].content.upper())
    assert [gw.complete(req("x")), gw.complete(req("y"))] == ["a", "Y"]


def test_script_file(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(["first", "second"]))
    gw = Gateway(ProviderConfig("scripted", script_path=str(path)))
    assert gw.complete(req()) == "first"


def test_message_validation():
    with pytest.raises(ValueError):
        ChatMessage("robot", "x")
    with pytest.raises(ValueError):
        ChatMessage("user", "")


@pytest.mark.parametrize("text, want", [
    ("```systemverilog\nassert (a);\n```", "assert (a);"),
    ("Sure:\n```\nx\ny\n```\nbye", "x\ny"),
    ("no fence", "no fence"),
])
def test_strip_fences(text, want):
    assert strip_fences(text) == want
