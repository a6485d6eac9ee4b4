"""Protocol messages and their wire encoding.

A frame is a 4-byte big-endian payload length, a 1-byte message type, then
the payload: canonical JSON (keys sorted, no whitespace) with byte fields as
lowercase hex and integers as JSON numbers.
"""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass
from typing import Optional

from ..errors import ProtocolError
from ..fixedpoint import FixedLoss
from ..nn import ModelDigest, ModelParams, canonical_deserialize, canonical_serialize
from ..zk.keys import Proof

FRAME_HEADER = struct.Struct(">IB")
MAX_FRAME = 64 * 1024 * 1024


class MessageType(enum.IntEnum):
    EVAL_TASK = 1
    PROOF_SUBMISSION = 2
    DECLINE = 3
    ROUND_RESULT = 4


@dataclass(frozen=True)
class EvalTask:
    round_id: int
    model_digest: ModelDigest
    threshold: FixedLoss
    nonce: int
    model: Optional[ModelParams] = None

    def public_inputs(self) -> list:
        lo, hi = self.model_digest.limbs
        return [lo, hi, self.threshold.raw, self.nonce]


@dataclass(frozen=True)
class ProofSubmission:
    round_id: int
    client_id: int
    public_inputs: tuple
    proof: Proof


@dataclass(frozen=True)
class DeclineNotice:
    round_id: int
    client_id: int


@dataclass(frozen=True)
class RoundResult:
    round_id: int
    valid_count: int
    decline_count: int
    reject_count: int
    participants: int

    @property
    def validation_rate(self) -> float:
        return self.valid_count / self.participants if self.participants else 0.0


def _payload(msg) -> tuple:
    if isinstance(msg, EvalTask):
        return MessageType.EVAL_TASK, {
            "model": canonical_serialize(msg.model).hex() if msg.model is not None else None,
            "model_digest": msg.model_digest.digest.hex(),
            "nonce": msg.nonce,
            "round_id": msg.round_id,
            "threshold": msg.threshold.raw,
        }
    if isinstance(msg, ProofSubmission):
        return MessageType.PROOF_SUBMISSION, {
            "client_id": msg.client_id,
            "proof": msg.proof.to_bytes().hex(),
            "public_inputs": list(msg.public_inputs),
            "round_id": msg.round_id,
        }
    if isinstance(msg, DeclineNotice):
        return MessageType.DECLINE, {"client_id": msg.client_id, "round_id": msg.round_id}
    if isinstance(msg, RoundResult):
        return MessageType.ROUND_RESULT, {
            "decline_count": msg.decline_count,
            "participants": msg.participants,
            "reject_count": msg.reject_count,
            "round_id": msg.round_id,
            "valid_count": msg.valid_count,
        }
    raise TypeError(f"not a protocol message: {type(msg).__name__}")


def payload_bytes(msg) -> bytes:
    _, body = _payload(msg)
    return json.dumps(body, sort_keys=True, separators=(",", ":")).encode("utf-8")


def encode_message(msg) -> bytes:
    kind, _ = _payload(msg)
    body = payload_bytes(msg)
    return FRAME_HEADER.pack(len(body), kind) + body


def _int(d, key):
    v = d.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v < 0:
        raise ProtocolError(f"field {key!r} must be a nonnegative integer")
    return v


def _hex(d, key):
    v = d.get(key)
    if not isinstance(v, str) or v != v.lower():
        raise ProtocolError(f"field {key!r} must be lowercase hex")
    try:
        return bytes.fromhex(v)
    except ValueError:
        raise ProtocolError(f"field {key!r} must be lowercase hex") from None


def decode_payload(kind: int, body: bytes):
    try:
        d = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"payload is not JSON: {exc}") from None
    if not isinstance(d, dict):
        raise ProtocolError("payload must be a JSON object")
    try:
        kind = MessageType(kind)
    except ValueError:
        raise ProtocolError(f"unknown message type {kind}") from None
    if kind is MessageType.EVAL_TASK:
        model = None
        if d.get("model") is not None:
            try:
                model = canonical_deserialize(_hex(d, "model"))
            except ValueError as exc:
                raise ProtocolError(f"bad model encoding: {exc}") from None
        digest = _hex(d, "model_digest")
        if len(digest) != 32:
            raise ProtocolError("model digest must be 32 bytes")
        try:
            threshold = FixedLoss(_int(d, "threshold"))
        except ValueError as exc:
            raise ProtocolError(str(exc)) from None
        return EvalTask(_int(d, "round_id"), ModelDigest(digest), threshold, _int(d, "nonce"), model)
    if kind is MessageType.PROOF_SUBMISSION:
        pub = d.get("public_inputs")
        if not isinstance(pub, list) or any(not isinstance(x, int) or isinstance(x, bool) for x in pub):
            raise ProtocolError("public_inputs must be a list of integers")
        raw = _hex(d, "proof")
        if not raw:
            raise ProtocolError("empty proof")
        return ProofSubmission(_int(d, "round_id"), _int(d, "client_id"), tuple(pub), Proof.from_bytes(raw))
    if kind is MessageType.DECLINE:
        return DeclineNotice(_int(d, "round_id"), _int(d, "client_id"))
    return RoundResult(
        _int(d, "round_id"),
        _int(d, "valid_count"),
        _int(d, "decline_count"),
        _int(d, "reject_count"),
        _int(d, "participants"),
    )


def decode_message(frame: bytes):
    if len(frame) < FRAME_HEADER.size:
        raise ProtocolError("frame shorter than its header")
    length, kind = FRAME_HEADER.unpack_from(frame)
    if len(frame) != FRAME_HEADER.size + length:
        raise ProtocolError(f"frame length field {length} does not match {len(frame) - FRAME_HEADER.size}")
    return decode_payload(kind, frame[FRAME_HEADER.size :])


def _recv_exact(sock, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ProtocolError("connection closed mid-frame")
        buf += chunk
    return bytes(buf)


def read_frame(sock) -> bytes:
    header = _recv_exact(sock, FRAME_HEADER.size)
    length, _ = FRAME_HEADER.unpack(header)
    if length > MAX_FRAME:
        raise ProtocolError(f"frame of {length} bytes exceeds limit")
    return header + _recv_exact(sock, length)


def send_message(sock, msg) -> int:
    frame = encode_message(msg)
    sock.sendall(frame)
    return len(frame)
