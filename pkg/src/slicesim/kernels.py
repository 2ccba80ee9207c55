"""Backend selection for the allocation kernels.

The compiled extension is used when it was built; otherwise the pure-Python
twin. Set ``SLICESIM_KERNEL=python`` to force the fallback.
"""

from __future__ import annotations

import logging
import os

from . import _kernels_py as python_kernels

log = logging.getLogger(__name__)

try:
    from . import _kernels_ext as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None


def get(name: str | None = None):
    """Return the kernel module called ``name`` ("cython" or "python").

    ``None`` picks the compiled kernel if available, honouring SLICESIM_KERNEL.
    """
    name = name or os.environ.get("SLICESIM_KERNEL") or None
    if name == "python":
        return python_kernels
    if name in (None, "cython"):
        if compiled_kernels is not None:
            return compiled_kernels
        if name == "cython":
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return python_kernels
    raise ValueError(f"unknown kernel backend {name!r}")


def available() -> list[str]:
    return ["python"] + (["cython"] if compiled_kernels is not None else [])


active = get()
BACKEND = active.NAME
log.debug("allocation kernels: %s", BACKEND)
