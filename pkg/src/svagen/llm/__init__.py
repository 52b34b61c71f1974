from .gateway import (
    BACKENDS, ChatMessage, CompletionRequest, ConfigError, FineTuneJobDescriptor, Gateway,
    GatewayError, ProviderConfig, ReplayMissError, ScriptExhaustedError, complete, strip_fences,
)
from .prompts import PromptError, render_prompt, template_version, template_versions
from .schemas import SchemaError, validate_json_response

__all__ = [
    "BACKENDS", "ChatMessage", "CompletionRequest", "ConfigError", "FineTuneJobDescriptor",
    "Gateway", "GatewayError", "PromptError", "ProviderConfig", "ReplayMissError",
    "SchemaError", "ScriptExhaustedError", "complete", "render_prompt", "strip_fences",
    "template_version", "template_versions", "validate_json_response",
]
