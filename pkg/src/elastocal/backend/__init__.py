"""Backend selection for the serial-chain kernels.

The compiled Cython extension is used when available; otherwise the pure
numpy fallback with identical semantics. Set ELASTOCAL_BACKEND=python or
ELASTOCAL_BACKEND=compiled to force a choice (forcing an unavailable
compiled backend raises ImportError).
"""

import os

from . import _chain_py

_requested = os.environ.get("ELASTOCAL_BACKEND", "").strip().lower()

if _requested == "python":
    kernels = _chain_py
    BACKEND = "python"
else:
    try:
        from . import _chain as kernels  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        kernels = _chain_py
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
