"""Backend selection for the hot loops.

The compiled module is used when it imports; ``TERLAB_PURE=1`` forces the
pure-Python version.  Callers must go through this module's attributes.
"""
import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

backend = None
disputes = reduce_masks = group_closure = None


def use(name):
    """Switch every kernel to ``name`` ("cython" or "python")."""
    global backend, disputes, reduce_masks, group_closure
    try:
        mod = BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {sorted(BACKENDS)}") from None
    backend = name
    disputes = mod.disputes
    reduce_masks = mod.reduce_masks
    group_closure = mod.group_closure
    return name


use("python" if os.environ.get("TERLAB_PURE") == "1" or _ckernels is None else "cython")
