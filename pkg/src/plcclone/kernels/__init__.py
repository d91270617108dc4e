"""Distance kernels with a compiled fast path.

The compiled extension (``_speed``, built from Cython) is preferred when it
imported successfully; otherwise the pure-Python implementation is used.
Both produce identical results.  Set ``PLCCLONE_KERNELS=pure`` (or
``compiled``) to force a backend, or call :func:`set_backend` at runtime.
"""

from __future__ import annotations

import os

from . import _pure

try:
    from . import _speed  # type: ignore[attr-defined]
except ImportError:
    _speed = None

_BACKENDS = {"pure": _pure}
if _speed is not None:
    _BACKENDS["compiled"] = _speed

_active = "pure"
levenshtein = _pure.levenshtein
tree_distance = _pure.tree_distance


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def backend() -> str:
    return _active


def set_backend(name: str) -> str:
    """Select the kernel backend; returns the name actually activated."""
    global _active, levenshtein, tree_distance
    if name == "auto":
        name = "compiled" if "compiled" in _BACKENDS else "pure"
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; available: {available_backends()}")
    module = _BACKENDS[name]
    levenshtein = module.levenshtein
    tree_distance = module.tree_distance
    _active = name
    return name


set_backend(os.environ.get("PLCCLONE_KERNELS", "auto"))
