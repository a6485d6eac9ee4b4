"""Key, proof and wire types shared by every backend."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Any

from ..errors import KeyMismatchError

MAGIC = b"ZKFE"
FORMAT_VERSION = 1
HEADER_LEN = 16

GROTH16_ID = 1
MOCK_ID = 2


@dataclass(frozen=True)
class Proof:
    backend_id: int
    data: bytes

    def to_bytes(self) -> bytes:
        return bytes([self.backend_id]) + self.data

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Proof":
        raw = bytes(raw)
        if not raw:
            raise ValueError("empty proof")
        return cls(raw[0], raw[1:])


def proof_size(proof: Proof) -> int:
    """Serialized length in bytes, backend id byte included."""
    return len(proof.to_bytes())


@dataclass
class ProvingKey:
    backend_id: int
    circuit_digest: bytes
    cs: Any = field(repr=False)
    body: Any = field(repr=False)


@dataclass
class VerifyingKey:
    backend_id: int
    circuit_digest: bytes
    body: Any = field(repr=False)
    cs: Any = field(default=None, repr=False)


def pack_header(backend_id: int, digest: bytes) -> bytes:
    return MAGIC + bytes([FORMAT_VERSION, backend_id]) + digest[:10]


def unpack_header(raw: bytes, backend_id: int, digest: bytes) -> bytes:
    """Validate a key-file header and return the remaining body."""
    if len(raw) < HEADER_LEN or raw[:4] != MAGIC:
        raise ValueError("not a key file")
    if raw[4] != FORMAT_VERSION:
        raise ValueError(f"unsupported key format version {raw[4]}")
    if raw[5] != backend_id:
        raise KeyMismatchError(f"key file is for backend {raw[5]}, expected {backend_id}")
    if raw[6:16] != digest[:10]:
        raise KeyMismatchError("key file belongs to a different circuit")
    return raw[HEADER_LEN:]


class Reader:
    """Cursor over a byte string for the key/proof decoders."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ValueError("truncated input")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def done(self):
        if self.pos != len(self.data):
            raise ValueError("trailing bytes")
