"""Kernel selection for BLS12-381 group arithmetic.

The compiled ``_curve_native`` extension is used when it imports; otherwise
the pure-Python kernel is used. Set ``ZKPFEDEVAL_KERNEL=python`` to force the
fallback, or ``native`` to make a missing extension an error.
"""

from __future__ import annotations

import importlib
import os
from types import ModuleType

from .errors import ConfigError

KERNELS = ("native", "python")


def load(name: str) -> ModuleType:
    if name == "native":
        return importlib.import_module("zkpfedeval._curve_native")
    if name == "python":
        return importlib.import_module("zkpfedeval._curve_py")
    raise ConfigError(f"unknown curve kernel {name!r}; expected one of {KERNELS}")


def available() -> list[str]:
    names = []
    for name in KERNELS:
        try:
            load(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select() -> tuple[str, ModuleType]:
    forced = os.environ.get("ZKPFEDEVAL_KERNEL", "").strip().lower()
    if forced:
        return forced, load(forced)
    try:
        return "native", load("native")
    except ImportError:
        return "python", load("python")


KERNEL_NAME, kernel = _select()
SCALAR_MODULUS = int(kernel.SCALAR_MODULUS)
