from .base import CAP_BLIND, CAP_INPAINT, CAP_PROMPT_GUIDED, Enhancer
from .builtin import BuiltinBackend
from .remote import (
    BackendEndpoint,
    EnhanceRequest,
    InpaintRequest,
    RemoteBackend,
    enhance_remote,
    health_check,
    inpaint_remote,
)

__all__ = [
    "BackendEndpoint",
    "BuiltinBackend",
    "CAP_BLIND",
    "CAP_INPAINT",
    "CAP_PROMPT_GUIDED",
    "Enhancer",
    "EnhanceRequest",
    "InpaintRequest",
    "RemoteBackend",
    "enhance_remote",
    "health_check",
    "inpaint_remote",
]
