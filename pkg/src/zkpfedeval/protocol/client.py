"""Client side of an evaluation round."""

from __future__ import annotations

import functools
import logging
from typing import Optional, Union

from ..errors import RangeError, ZkpFedEvalError
from ..fixedpoint import encode_fixed
from ..nn import ModelParams, local_loss, model_hash
from ..r1cs import ThresholdCircuit, synthesize_threshold_circuit
from .messages import DeclineNotice, EvalTask, ProofSubmission

log = logging.getLogger(__name__)


@functools.lru_cache(maxsize=None)
def threshold_circuit(width: int = 32) -> ThresholdCircuit:
    return synthesize_threshold_circuit(width)


def client_evaluate(
    task: EvalTask,
    shard,
    pk,
    backend,
    model: Optional[ModelParams] = None,
    circuit: Optional[ThresholdCircuit] = None,
) -> Union[ProofSubmission, DeclineNotice]:
    """Evaluate the published model on ``shard`` and prove ``loss < T`` or decline.

    ``model`` is the pre-shared copy when the task carries only a digest.
    The loss itself never leaves this function.
    """
    decline = DeclineNotice(task.round_id, shard.client_id)
    model = task.model if task.model is not None else model
    if model is None:
        log.warning("client %s: task carries no model and none was pre-shared", shard.client_id)
        return decline
    if model_hash(model) != task.model_digest:
        log.warning("client %s: model does not match the published digest", shard.client_id)
        return decline
    try:
        loss = encode_fixed(local_loss(model, shard))
    except RangeError:
        return decline
    if loss.raw >= task.threshold.raw:
        return decline
    circuit = circuit or threshold_circuit()
    public = task.public_inputs()
    try:
        witness = circuit.witness(loss.raw, public)
        proof = backend.prove(pk, public, witness)
    except ZkpFedEvalError:
        log.exception("client %s: proving failed on a qualifying loss", shard.client_id)
        return decline
    return ProofSubmission(task.round_id, shard.client_id, tuple(public), proof)
