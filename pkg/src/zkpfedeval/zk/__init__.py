"""Proof backends: setup / prove / verify over a constraint system."""

from __future__ import annotations

from ..errors import ConfigError
from .cache import KeyCache
from .groth16 import Groth16Backend
from .keys import GROTH16_ID, MOCK_ID, Proof, ProvingKey, VerifyingKey, proof_size
from .mock import MockBackend

BACKENDS = {"snark": Groth16Backend, "mock": MockBackend}


def get_backend(name: str, secure: bool = False, **kwargs):
    """Instantiate a backend by name. ``secure`` configurations refuse
    backends that are not zero-knowledge."""
    try:
        cls = BACKENDS[name]
    except KeyError:
        raise ConfigError(f"unknown backend {name!r}; expected one of {sorted(BACKENDS)}") from None
    if secure and not cls.secure:
        raise ConfigError(f"backend {name!r} is not allowed in a secure configuration")
    return cls(**kwargs)


def backend_for_id(backend_id: int, **kwargs):
    for cls in BACKENDS.values():
        if cls.id == backend_id:
            return cls(**kwargs)
    raise ConfigError(f"unknown backend id {backend_id}")


__all__ = [
    "BACKENDS",
    "GROTH16_ID",
    "MOCK_ID",
    "Groth16Backend",
    "KeyCache",
    "MockBackend",
    "Proof",
    "ProvingKey",
    "VerifyingKey",
    "backend_for_id",
    "get_backend",
    "proof_size",
]
