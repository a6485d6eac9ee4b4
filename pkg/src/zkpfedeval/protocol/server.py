"""Server side of an evaluation round: nonce registry, submission checks,
tallying."""

from __future__ import annotations

import enum
import logging
import secrets
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

from ..errors import ProtocolError
from ..fixedpoint import FixedLoss, encode_fixed
from ..nn import ModelParams, model_hash
from .messages import DeclineNotice, EvalTask, ProofSubmission, RoundResult

log = logging.getLogger(__name__)


class RejectReason(enum.Enum):
    BAD_PUBLIC_INPUT = "BadPublicInput"
    STALE_NONCE = "StaleNonce"
    INVALID_PROOF = "InvalidProof"
    DUPLICATE = "Duplicate"


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: Optional[RejectReason] = None

    def __bool__(self):
        return self.accepted


ACCEPT = Verdict(True)


@dataclass
class _Round:
    task: EvalTask
    participants: Optional[int]
    accepted: set = field(default_factory=set)
    declined: set = field(default_factory=set)
    rejected: dict = field(default_factory=dict)
    verify_seconds: list = field(default_factory=list)


class EvaluationServer:
    """Publishes tasks, verifies submissions strictly one at a time, and
    aggregates outcomes. All state mutation happens under one lock."""

    def __init__(self, backend, vk, rng=None):
        self.backend = backend
        self.vk = vk
        self.rng = rng or secrets.SystemRandom()
        self._lock = threading.Lock()
        self._nonces: dict = {}
        self._last_round_id: Optional[int] = None
        self._round: Optional[_Round] = None

    @property
    def current_task(self) -> Optional[EvalTask]:
        return self._round.task if self._round else None

    @property
    def verify_seconds(self) -> list:
        return list(self._round.verify_seconds) if self._round else []

    def start_round(self, model: ModelParams, threshold, round_id: int, participants=None, include_model=True) -> EvalTask:
        if not isinstance(threshold, FixedLoss):
            threshold = encode_fixed(threshold)
        with self._lock:
            if self._last_round_id is not None and round_id <= self._last_round_id:
                raise ProtocolError(f"round id {round_id} not above previous {self._last_round_id}")
            nonce = self.rng.getrandbits(128)
            while nonce in self._nonces:
                nonce = self.rng.getrandbits(128)
            self._nonces[nonce] = round_id
            self._last_round_id = round_id
            task = EvalTask(round_id, model_hash(model), threshold, nonce, model if include_model else None)
            self._round = _Round(task, participants)
            return task

    def verify_submission(self, sub: ProofSubmission) -> Verdict:
        with self._lock:
            rnd = self._round
            if rnd is None:
                return self._reject(None, sub, RejectReason.STALE_NONCE)
            expected = rnd.task.public_inputs()
            pub = list(sub.public_inputs)
            if len(pub) != len(expected):
                return self._reject(rnd, sub, RejectReason.BAD_PUBLIC_INPUT)
            nonce = pub[3]
            if nonce != rnd.task.nonce:
                reason = RejectReason.STALE_NONCE if nonce in self._nonces else RejectReason.BAD_PUBLIC_INPUT
                return self._reject(rnd, sub, reason)
            if sub.round_id != rnd.task.round_id or pub != expected:
                return self._reject(rnd, sub, RejectReason.BAD_PUBLIC_INPUT)
            if sub.client_id in rnd.accepted:
                return self._reject(rnd, sub, RejectReason.DUPLICATE)
            start = time.perf_counter()
            try:
                ok = self.backend.verify(self.vk, pub, sub.proof)
            except Exception:  # malformed proofs must never take the server down
                log.exception("verifier raised on submission from client %s", sub.client_id)
                ok = False
            rnd.verify_seconds.append(time.perf_counter() - start)
            if not ok:
                return self._reject(rnd, sub, RejectReason.INVALID_PROOF)
            rnd.accepted.add(sub.client_id)
            rnd.rejected.pop(sub.client_id, None)
            return ACCEPT

    def _reject(self, rnd, sub, reason) -> Verdict:
        if rnd is not None and sub.client_id not in rnd.accepted:
            rnd.rejected.setdefault(sub.client_id, reason)
        log.info("rejected submission from client %s: %s", sub.client_id, reason.value)
        return Verdict(False, reason)

    def record_decline(self, notice: DeclineNotice):
        with self._lock:
            rnd = self._round
            if rnd is None or notice.round_id != rnd.task.round_id:
                return
            if notice.client_id not in rnd.accepted:
                rnd.declined.add(notice.client_id)

    def handle(self, msg):
        """Dispatch one client message; returns a Verdict for submissions."""
        if isinstance(msg, ProofSubmission):
            return self.verify_submission(msg)
        if isinstance(msg, DeclineNotice):
            self.record_decline(msg)
            return None
        raise ProtocolError(f"unexpected message {type(msg).__name__} from a client")

    def aggregate(self, participants=None) -> RoundResult:
        """Tally the active round. Expected participants that never answered
        count as declines."""
        with self._lock:
            rnd = self._round
            if rnd is None:
                raise ProtocolError("no active round")
            valid = len(rnd.accepted)
            declined = len(rnd.declined - rnd.accepted)
            rejected = len(set(rnd.rejected) - rnd.accepted - rnd.declined)
            total = participants if participants is not None else rnd.participants
            if total is None:
                total = valid + declined + rejected
            missing = total - (valid + declined + rejected)
            if missing < 0:
                raise ProtocolError(f"{valid + declined + rejected} responders exceed {total} participants")
            return RoundResult(rnd.task.round_id, valid, declined + missing, rejected, total)
