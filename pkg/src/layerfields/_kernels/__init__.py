"""Kernel backend selection.

The compiled Cython extension is preferred; the numpy fallback is selected
when the extension is missing or LAYERFIELDS_PURE=1 is set. Both expose the
same module-level functions (see purepy for the contracts).
"""

import os

from . import purepy

_force_pure = os.environ.get("LAYERFIELDS_PURE", "").lower() in ("1", "true", "yes")

impl = purepy
if not _force_pure:
    try:
        from . import fastcore as impl  # type: ignore[no-redef]
    except ImportError:
        pass


def backend_name() -> str:
    return impl.NAME
