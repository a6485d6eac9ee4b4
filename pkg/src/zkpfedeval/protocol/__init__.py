"""Evaluation-round state machines and the message wire format."""

from .client import client_evaluate, threshold_circuit
from .messages import (
    DeclineNotice,
    EvalTask,
    MessageType,
    ProofSubmission,
    RoundResult,
    decode_message,
    encode_message,
    payload_bytes,
    read_frame,
    send_message,
)
from .server import EvaluationServer, RejectReason, Verdict
from .transport import RoundMetrics, run_round, tcp_client

__all__ = [
    "DeclineNotice",
    "EvalTask",
    "EvaluationServer",
    "MessageType",
    "ProofSubmission",
    "RejectReason",
    "RoundMetrics",
    "RoundResult",
    "Verdict",
    "client_evaluate",
    "decode_message",
    "encode_message",
    "payload_bytes",
    "read_frame",
    "run_round",
    "send_message",
    "tcp_client",
    "threshold_circuit",
]
