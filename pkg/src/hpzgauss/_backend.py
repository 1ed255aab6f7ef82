"""Selects the compiled core when available.

Set ``HPZGAUSS_PURE_PYTHON=1`` to force the pure-Python fallback.
"""

import os

from . import _pycore

core = _pycore
COMPILED = False

if not os.environ.get("HPZGAUSS_PURE_PYTHON"):
    try:
        from . import _core as core  # noqa: F811
        COMPILED = True
    except ImportError:  # extension not built
        pass

BACKENDS = {"python": _pycore}
if COMPILED:
    BACKENDS["compiled"] = core


def get(name=None):
    """Return the kernel module ``name`` (``"python"``/``"compiled"``) or the default."""
    if name is None:
        return core
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {sorted(BACKENDS)}") from None
