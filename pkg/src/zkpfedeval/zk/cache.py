"""On-disk key cache keyed by circuit digest.

Files are ``{digest}.pk`` / ``{digest}.vk`` under one directory per backend.
Setup for a given digest runs at most once: a thread lock guards the
in-process table and a file lock guards the directory across processes.
"""

from __future__ import annotations

import logging
import threading
import time
from pathlib import Path

from filelock import FileLock

log = logging.getLogger(__name__)


class KeyCache:
    def __init__(self, directory):
        self.directory = Path(directory)
        self._lock = threading.Lock()
        self._keys: dict = {}
        self.last_setup_seconds = 0.0

    def paths(self, backend, digest: bytes):
        base = self.directory / backend.name
        return base / f"{digest.hex()}.pk", base / f"{digest.hex()}.vk"

    def get(self, backend, cs, rng_seed=None):
        digest = cs.digest()
        key = (backend.name, digest)
        with self._lock:
            if key in self._keys:
                return self._keys[key]
            pk_path, vk_path = self.paths(backend, digest)
            pk_path.parent.mkdir(parents=True, exist_ok=True)
            with FileLock(str(pk_path) + ".lock"):
                if pk_path.exists() and vk_path.exists():
                    pk = backend.pk_from_bytes(pk_path.read_bytes(), cs)
                    vk = backend.vk_from_bytes(vk_path.read_bytes(), cs)
                    log.debug("loaded %s keys for circuit %s", backend.name, digest.hex()[:12])
                else:
                    start = time.perf_counter()
                    pk, vk = backend.setup(cs, rng_seed)
                    self.last_setup_seconds = time.perf_counter() - start
                    pk_path.write_bytes(backend.pk_to_bytes(pk))
                    vk_path.write_bytes(backend.vk_to_bytes(vk))
                    log.info(
                        "setup for circuit %s took %.3fs", digest.hex()[:12], self.last_setup_seconds
                    )
            self._keys[key] = (pk, vk)
            return pk, vk
