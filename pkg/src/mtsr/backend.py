"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is a
drop-in replacement producing bit-identical instances.  Set MTSR_BACKEND=pure
or MTSR_BACKEND=compiled to force a choice (the latter raises if the extension
is missing).
"""

import os

from . import _pykernel


def _select():
    choice = os.environ.get("MTSR_BACKEND", "auto").lower()
    if choice not in ("auto", "pure", "compiled"):
        raise ValueError(f"MTSR_BACKEND must be auto, pure or compiled, got {choice!r}")
    if choice == "pure":
        return _pykernel
    try:
        from . import _kernel
    except ImportError:
        if choice == "compiled":
            raise ImportError("MTSR_BACKEND=compiled but the mtsr._kernel extension is not built")
        return _pykernel
    return _kernel


kernel = _select()

#: True when the active kernel is the compiled extension.
COMPILED = bool(getattr(kernel, "COMPILED", False))

#: Always-available pure fallback, kept importable for cross-checking.
pure_kernel = _pykernel

philox4x32 = _pykernel.philox4x32
derive_seed = _pykernel.derive_seed
