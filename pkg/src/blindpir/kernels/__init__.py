"""Kernel backend selection.

The compiled extension (`_fast`, built from _fast.pyx) and the numpy
reference (`ref`) implement the same two hot operations: `modmatvec` and
`pair_view_counts`.  The compiled one is preferred when importable; set
BLINDPIR_BACKEND=python or BLINDPIR_BACKEND=compiled to force a choice.
The convolution helpers only exist in `ref` (they are never hot).
"""

from __future__ import annotations

import os

from . import ref
from .ref import cr_convolve, cr_translates, digits_table

try:
    from . import _fast
except ImportError:
    _fast = None

_requested = os.environ.get("BLINDPIR_BACKEND", "auto").strip().lower()
if _requested in ("auto", ""):
    _impl = _fast if _fast is not None else ref
elif _requested in ("compiled", "fast", "c"):
    if _fast is None:
        raise ImportError(
            "BLINDPIR_BACKEND=compiled but the compiled extension is not built"
        )
    _impl = _fast
elif _requested in ("python", "numpy", "ref"):
    _impl = ref
else:
    raise ImportError(f"unknown BLINDPIR_BACKEND value: {_requested!r}")

BACKEND = "compiled" if _impl is _fast else "python"

modmatvec = _impl.modmatvec
pair_view_counts = _impl.pair_view_counts


def available_backends() -> dict:
    """Importable kernel modules by name, for benchmarks and cross-checks."""
    out = {"python": ref}
    if _fast is not None:
        out["compiled"] = _fast
    return out


__all__ = [
    "BACKEND",
    "available_backends",
    "cr_convolve",
    "cr_translates",
    "digits_table",
    "modmatvec",
    "pair_view_counts",
]
