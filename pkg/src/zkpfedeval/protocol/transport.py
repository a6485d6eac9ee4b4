"""Running one evaluation round over an in-process queue or local TCP.

Both transports split the round into a client phase, where shards are
evaluated and proved on a worker pool, and a verification phase, where the
server handles messages one at a time in arrival order.
"""

from __future__ import annotations

import logging
import os
import queue
import socket
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..errors import ConfigError, ProtocolError
from ..zk.keys import proof_size
from .client import client_evaluate
from .messages import (
    DeclineNotice,
    EvalTask,
    ProofSubmission,
    RoundResult,
    decode_message,
    encode_message,
    read_frame,
    send_message,
)

log = logging.getLogger(__name__)

TRANSPORTS = ("inproc", "tcp")


@dataclass
class RoundMetrics:
    result: RoundResult
    client_seconds: list = field(default_factory=list)
    prover_seconds: list = field(default_factory=list)
    verify_seconds: list = field(default_factory=list)
    proof_sizes: list = field(default_factory=list)
    submission_sizes: list = field(default_factory=list)
    upload_bytes: int = 0
    verdicts: list = field(default_factory=list)

    @property
    def total_verify_seconds(self) -> float:
        return sum(self.verify_seconds)


def default_workers(n_clients: int) -> int:
    return max(1, min(n_clients, os.cpu_count() or 1))


def _process(server, metrics: RoundMetrics, msg, frame_len: int):
    metrics.upload_bytes += frame_len
    if isinstance(msg, ProofSubmission):
        metrics.proof_sizes.append(proof_size(msg.proof))
        metrics.submission_sizes.append(frame_len)
    verdict = server.handle(msg)
    if verdict is not None:
        metrics.verdicts.append((msg.client_id, verdict))


def _finish(server, metrics: RoundMetrics, n_clients: int) -> RoundMetrics:
    metrics.result = server.aggregate(n_clients)
    metrics.verify_seconds = server.verify_seconds
    return metrics


def run_round(
    server,
    model,
    threshold,
    round_id: int,
    shards,
    pk,
    backend,
    transport: str = "inproc",
    workers=None,
    timeout=None,
    circuit=None,
) -> RoundMetrics:
    if transport == "inproc":
        return _run_inproc(server, model, threshold, round_id, shards, pk, backend, workers, timeout, circuit)
    if transport == "tcp":
        return _run_tcp(server, model, threshold, round_id, shards, pk, backend, workers, timeout, circuit)
    raise ConfigError(f"unknown transport {transport!r}; expected one of {TRANSPORTS}")


def _run_inproc(server, model, threshold, round_id, shards, pk, backend, workers, timeout, circuit):
    # weights are shared by reference; clients still re-hash them before proving
    task = server.start_round(model, threshold, round_id, participants=len(shards), include_model=False)
    inbox: queue.Queue = queue.Queue()
    metrics = RoundMetrics(result=None)

    def work(shard):
        start = time.perf_counter()
        msg = client_evaluate(task, shard, pk, backend, model=model, circuit=circuit)
        inbox.put((msg, time.perf_counter() - start))

    deadline = None if timeout is None else time.monotonic() + timeout
    with ThreadPoolExecutor(workers or default_workers(len(shards))) as pool:
        for shard in shards:
            pool.submit(work, shard)
        arrived = []
        for _ in shards:
            try:
                remaining = None if deadline is None else max(0.0, deadline - time.monotonic())
                arrived.append(inbox.get(timeout=remaining))
            except queue.Empty:
                log.warning("round %s: %d clients timed out", round_id, len(shards) - len(arrived))
                break
    for msg, seconds in arrived:
        metrics.client_seconds.append(seconds)
        if isinstance(msg, ProofSubmission):
            metrics.prover_seconds.append(seconds)
        _process(server, metrics, msg, len(encode_message(msg)))
    return _finish(server, metrics, len(shards))


def tcp_client(address, shard, pk, backend, circuit=None):
    """Connect, receive the task, reply, and half-close. Returns the open
    socket (for reading the round result) and the evaluation time."""
    sock = socket.create_connection(address)
    task = decode_message(read_frame(sock))
    if not isinstance(task, EvalTask):
        sock.close()
        raise ProtocolError(f"expected an EvalTask, got {type(task).__name__}")
    start = time.perf_counter()
    msg = client_evaluate(task, shard, pk, backend, circuit=circuit)
    elapsed = time.perf_counter() - start
    send_message(sock, msg)
    sock.shutdown(socket.SHUT_WR)
    return sock, elapsed, isinstance(msg, ProofSubmission)


def _run_tcp(server, model, threshold, round_id, shards, pk, backend, workers, timeout, circuit):
    task = server.start_round(model, threshold, round_id, participants=len(shards), include_model=True)
    task_frame = encode_message(task)
    inbox: queue.Queue = queue.Queue()
    conns = []
    listener = socket.create_server(("127.0.0.1", 0))
    listener.settimeout(timeout)
    address = listener.getsockname()

    def handle(conn):
        try:
            conn.sendall(task_frame)
            inbox.put(read_frame(conn))
        except (OSError, ProtocolError) as exc:
            log.warning("round %s: client connection failed: %s", round_id, exc)
            inbox.put(None)

    def accept_loop():
        for _ in shards:
            try:
                conn, _ = listener.accept()
            except OSError:
                return
            conns.append(conn)
            threading.Thread(target=handle, args=(conn,), daemon=True).start()

    acceptor = threading.Thread(target=accept_loop, daemon=True)
    acceptor.start()
    metrics = RoundMetrics(result=None)
    deadline = None if timeout is None else time.monotonic() + timeout
    client_socks = []
    with ThreadPoolExecutor(workers or default_workers(len(shards))) as pool:
        futures = [pool.submit(tcp_client, address, s, pk, backend, circuit) for s in shards]
        frames = []
        for _ in shards:
            try:
                remaining = None if deadline is None else max(0.0, deadline - time.monotonic())
                frames.append(inbox.get(timeout=remaining))
            except queue.Empty:
                break
        for fut in futures:
            try:
                sock, seconds, proved = fut.result()
            except Exception as exc:
                log.warning("round %s: client failed: %s", round_id, exc)
                continue
            client_socks.append(sock)
            metrics.client_seconds.append(seconds)
            if proved:
                metrics.prover_seconds.append(seconds)
    listener.close()
    for frame in frames:
        if frame is None:
            continue
        try:
            msg = decode_message(frame)
        except ProtocolError as exc:
            log.warning("round %s: undecodable client frame: %s", round_id, exc)
            continue
        _process(server, metrics, msg, len(frame))
    _finish(server, metrics, len(shards))
    for conn in conns:
        try:
            send_message(conn, metrics.result)
        except OSError:
            pass
        finally:
            conn.close()
    for sock in client_socks:
        try:
            echoed = decode_message(read_frame(sock))
            if echoed != metrics.result:
                log.warning("round %s: client saw a different result", round_id)
        except (OSError, ProtocolError):
            pass
        finally:
            sock.close()
    return metrics
