"""Gate kernel selection.

Two interchangeable implementations live here: the compiled ``_ckernel``
extension and the pure-Python ``pykernel``. The compiled one is preferred
when it imported cleanly; set ``HEQUEL_KERNEL=py`` or ``HEQUEL_KERNEL=native``
to force a choice. ``active`` is the module the rest of the package uses.
"""

from __future__ import annotations

import os

from hequel.kernel import pykernel

try:
    from hequel.kernel import _ckernel  # type: ignore[attr-defined]
except ImportError:
    _ckernel = None


def available_kernels() -> tuple[str, ...]:
    return ("py", "native") if _ckernel is not None else ("py",)


def get_kernel(name: str):
    if name == "py":
        return pykernel
    if name == "native":
        if _ckernel is None:
            raise ImportError("native kernel extension is not built")
        return _ckernel
    raise ValueError(f"unknown kernel {name!r} (expected 'py' or 'native')")


_forced = os.environ.get("HEQUEL_KERNEL", "").strip().lower()
if _forced:
    active = get_kernel(_forced)
    KERNEL_NAME = _forced
elif _ckernel is not None:
    active = _ckernel
    KERNEL_NAME = "native"
else:
    active = pykernel
    KERNEL_NAME = "py"

MODE_CIRCULAR = pykernel.MODE_CIRCULAR
MODE_LEVELED = pykernel.MODE_LEVELED
