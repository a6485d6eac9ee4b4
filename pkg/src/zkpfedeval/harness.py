"""Experiment runner: trains the server model, runs evaluation rounds, and
writes per-seed metrics, per-group summaries and verification-scaling data
as CSV."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import os
import random
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dataio import load_dataset, partition_iid, partition_noniid, server_train_subset
from .errors import ConfigError, RangeError
from .fixedpoint import encode_fixed
from .nn import BATCH_SIZE, Arch, init_params, train_one_epoch
from .protocol import EvaluationServer, run_round, threshold_circuit
from .protocol.transport import TRANSPORTS
from .zk import KeyCache, get_backend

log = logging.getLogger(__name__)

ARCH_FOR = {"mnist": Arch.MNIST_CNN, "har": Arch.HAR_MLP}
SERVER_TRAIN_FRACTION = 0.10
DEFAULT_ALPHA = 0.5


def parse_distribution(text: str):
    """``"iid"`` or ``"noniid"`` / ``"noniid:ALPHA"`` -> (kind, alpha)."""
    kind = text.strip().lower()
    if kind == "iid":
        return "iid", None
    if kind == "noniid":
        return "noniid", DEFAULT_ALPHA
    if kind.startswith("noniid:"):
        try:
            alpha = float(kind.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad Dirichlet alpha in {text!r}") from None
        if not alpha > 0:
            raise ConfigError(f"Dirichlet alpha must be positive, got {alpha}")
        return "noniid", alpha
    raise ConfigError(f"unknown distribution {text!r}; use iid or noniid:ALPHA")


@dataclass
class ExperimentConfig:
    dataset: str
    n_clients: int
    threshold: float
    seeds: Sequence[int] = (0, 1, 2)
    distribution: str = "iid"
    backend: str = "snark"
    transport: str = "inproc"
    batch_size: int = BATCH_SIZE
    data_dir: Optional[str] = None
    key_dir: Optional[str] = None
    secure: bool = False
    workers: Optional[int] = None
    timeout: Optional[float] = None
    check_sizes: bool = True

    def __post_init__(self):
        if self.dataset not in ARCH_FOR:
            raise ConfigError(f"unknown dataset {self.dataset!r}; expected mnist or har")
        if self.n_clients <= 0:
            raise ConfigError(f"n_clients must be positive, got {self.n_clients}")
        if self.transport not in TRANSPORTS:
            raise ConfigError(f"unknown transport {self.transport!r}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        try:
            encode_fixed(self.threshold)
        except RangeError as exc:
            raise ConfigError(f"threshold {self.threshold!r}: {exc}") from None
        parse_distribution(self.distribution)
        get_backend(self.backend, secure=self.secure)
        if self.batch_size != BATCH_SIZE:
            warnings.warn(f"batch size overridden to {self.batch_size} (default {BATCH_SIZE})", stacklevel=2)


@dataclass
class MetricsRow:
    dataset: str
    n_clients: int
    threshold: float
    seed: int
    distribution: str
    backend: str
    transport: str
    batch_size: int
    mean_client_time_s: float
    mean_verify_time_s: Optional[float]
    total_verify_time_s: float
    proof_size_bytes: Optional[int]
    submission_size_bytes: Optional[int]
    total_upload_bytes: int
    valid_count: int
    decline_count: int
    reject_count: int
    validation_rate: float


COLUMNS = [f.name for f in dataclasses.fields(MetricsRow)]
TIMING_COLUMNS = {"mean_client_time_s", "mean_verify_time_s", "total_verify_time_s"}


def _mean(xs):
    return float(np.mean(xs)) if len(xs) else None


def _shards(cfg: ExperimentConfig, test, seed):
    kind, alpha = parse_distribution(cfg.distribution)
    if kind == "iid":
        return partition_iid(test, cfg.n_clients, seed)
    return partition_noniid(test, cfg.n_clients, alpha, seed)


def train_server_model(dataset: str, train, seed, batch_size: int = BATCH_SIZE):
    subset = server_train_subset(train, SERVER_TRAIN_FRACTION, seed)
    return train_one_epoch(init_params(ARCH_FOR[dataset], seed), subset, batch_size, seed)


def keys_for(backend, circuit, key_dir=None):
    """Setup once per circuit; snark keys are cached on disk by digest."""
    if backend.secure:
        cache = KeyCache(key_dir or default_key_dir())
        return cache.get(backend, circuit.cs)
    return backend.setup(circuit.cs)


def default_key_dir() -> Path:
    return Path(os.environ.get("ZKPFEDEVAL_KEY_DIR", Path.home() / ".cache" / "zkpfedeval" / "keys"))


def row_from_round(cfg: ExperimentConfig, seed, metrics) -> MetricsRow:
    res = metrics.result
    # client time follows the provers when there are any, else every evaluator
    client = metrics.prover_seconds or metrics.client_seconds
    proof_sizes = sorted(set(metrics.proof_sizes))
    if len(proof_sizes) > 1:
        log.warning("proof sizes vary within one round: %s", proof_sizes)
    return MetricsRow(
        dataset=cfg.dataset,
        n_clients=cfg.n_clients,
        threshold=cfg.threshold,
        seed=seed,
        distribution=cfg.distribution,
        backend=cfg.backend,
        transport=cfg.transport,
        batch_size=cfg.batch_size,
        mean_client_time_s=_mean(client) or 0.0,
        mean_verify_time_s=_mean(metrics.verify_seconds),
        total_verify_time_s=metrics.total_verify_seconds,
        proof_size_bytes=proof_sizes[0] if proof_sizes else None,
        submission_size_bytes=int(round(np.mean(metrics.submission_sizes))) if metrics.submission_sizes else None,
        total_upload_bytes=metrics.upload_bytes,
        valid_count=res.valid_count,
        decline_count=res.decline_count,
        reject_count=res.reject_count,
        validation_rate=res.validation_rate,
    )


def run_experiment(cfg: ExperimentConfig, data=None, models=None) -> list:
    """One evaluation round per seed. ``data`` is an optional preloaded
    ``(train, test)`` pair; ``models`` an optional ``{seed: ModelParams}``
    cache reused across configurations."""
    train, test = data if data is not None else load_dataset(cfg.dataset, cfg.data_dir, cfg.check_sizes)
    backend = get_backend(cfg.backend, secure=cfg.secure)
    circuit = threshold_circuit()
    pk, vk = keys_for(backend, circuit, cfg.key_dir)
    rows = []
    for seed in cfg.seeds:
        if models is not None and seed in models:
            model = models[seed]
        else:
            model = train_server_model(cfg.dataset, train, seed, cfg.batch_size)
            if models is not None:
                models[seed] = model
        shards = _shards(cfg, test, seed)
        # seeded nonce stream keeps frame sizes reproducible; live servers use the OS CSPRNG
        server = EvaluationServer(backend, vk, rng=random.Random(f"nonce-{seed}"))
        metrics = run_round(
            server, model, cfg.threshold, 1, shards, pk, backend,
            transport=cfg.transport, workers=cfg.workers, timeout=cfg.timeout, circuit=circuit,
        )
        row = row_from_round(cfg, seed, metrics)
        log.info(
            "%s clients=%d T=%s seed=%s: %d/%d valid",
            cfg.dataset, cfg.n_clients, cfg.threshold, seed, row.valid_count, cfg.n_clients,
        )
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# CSV


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(path, rows, columns=None):
    rows = list(rows)
    if columns is None:
        columns = COLUMNS
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            d = dataclasses.asdict(r) if dataclasses.is_dataclass(r) else r
            w.writerow([_fmt(d[c]) for c in columns])


def _parse(col, text):
    if text == "":
        return None
    kind = {f.name: f.type for f in dataclasses.fields(MetricsRow)}[col]
    if "int" in str(kind):
        return int(text)
    if "float" in str(kind):
        return float(text)
    return text


def read_rows(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != COLUMNS:
            raise ConfigError(f"{path}: unexpected CSV header {header}")
        return [MetricsRow(**{c: _parse(c, v) for c, v in zip(header, line)}) for line in reader]


SUMMARY_COLUMNS = [
    "dataset",
    "n_clients",
    "client_time_s",
    "verify_time_s",
    "comm_cost_kib",
    "proof_size_bytes",
    "valid_proofs_pct",
    "rows",
]


def _nanmean(xs):
    xs = [x for x in xs if x is not None]
    return float(np.mean(xs)) if xs else None


def summarize(rows) -> list:
    """Means over seeds, one row per (dataset, n_clients), sorted."""
    rows = list(rows)
    if not rows:
        raise ConfigError("nothing to summarize")
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.dataset, r.n_clients), []).append(r)
    out = []
    for (dataset, n), rs in sorted(groups.items()):
        sub = _nanmean([r.submission_size_bytes for r in rs])
        sizes = {r.proof_size_bytes for r in rs if r.proof_size_bytes is not None}
        out.append(
            {
                "dataset": dataset,
                "n_clients": n,
                "client_time_s": _nanmean([r.mean_client_time_s for r in rs]),
                "verify_time_s": _nanmean([r.mean_verify_time_s for r in rs]),
                "comm_cost_kib": None if sub is None else sub / 1024,
                "proof_size_bytes": sizes.pop() if len(sizes) == 1 else None,
                "valid_proofs_pct": 100.0 * float(np.mean([r.validation_rate for r in rs])),
                "rows": len(rs),
            }
        )
    return out


# ---------------------------------------------------------------------------
# verification scaling

SCALING_COLUMNS = ["n_clients", "valid_count", "total_verify_time_s", "per_proof_time_s"]


@dataclass
class ScalingResult:
    rows: list
    slope: float
    intercept: float
    r_squared: float
    models: dict = field(default_factory=dict, repr=False)


def linear_fit(xs, ys):
    """Least-squares line through (xs, ys): slope, intercept, R^2."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else (1.0 if not resid.any() else 0.0)
    return float(slope), float(intercept), r2


def scaling_run(
    dataset: str,
    threshold: float = 1.0,
    clients: Sequence[int] = (5, 10, 20, 30, 40, 50),
    seed: int = 0,
    backend: str = "snark",
    data_dir=None,
    data=None,
    model=None,
    key_dir=None,
    repeats: int = 1,
    check_sizes: bool = True,
) -> ScalingResult:
    """Total sequential verification time versus client count.

    With ``repeats > 1`` each client count runs several rounds and the
    median total is kept, which damps scheduler noise on shared machines.
    """
    train, test = data if data is not None else load_dataset(dataset, data_dir, check_sizes)
    be = get_backend(backend)
    circuit = threshold_circuit()
    pk, vk = keys_for(be, circuit, key_dir)
    if model is None:
        model = train_server_model(dataset, train, seed)
    rows = []
    round_id = 0
    for n in clients:
        shards = partition_iid(test, n, seed)
        totals, valid = [], 0
        server = EvaluationServer(be, vk)
        for _ in range(max(1, repeats)):
            round_id += 1
            m = run_round(server, model, threshold, round_id, shards, pk, be, circuit=circuit)
            totals.append(m.total_verify_seconds)
            valid = m.result.valid_count
        total = float(np.median(totals))
        rows.append(
            {
                "n_clients": n,
                "valid_count": valid,
                "total_verify_time_s": total,
                "per_proof_time_s": total / valid if valid else None,
            }
        )
    xs = [r["n_clients"] for r in rows]
    ys = [r["total_verify_time_s"] for r in rows]
    slope, intercept, r2 = linear_fit(xs, ys) if len(rows) >= 2 else (math.nan, math.nan, math.nan)
    return ScalingResult(rows, slope, intercept, r2)
