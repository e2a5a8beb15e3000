"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``DISCGEN_PURE_PYTHON=1`` to force the fallback.  Both backends take plain
sequences of ``int``; the wrappers below route to Python whenever a value
leaves the int64 range the compiled code assumes.
"""

import array
import os

from . import _kernels_py

_INT64_MIN = -(1 << 63)
# differences of two in-range values must not overflow either
_SAFE = 1 << 61

_compiled = None
if not os.environ.get("DISCGEN_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
HIT_EQUAL = _kernels_py.HIT_EQUAL


def fits(value) -> bool:
    return -_SAFE < value < _SAFE


class IntArray:
    """Append-only int64 buffer that remembers whether it overflowed."""

    __slots__ = ("values", "packed", "ok")

    def __init__(self):
        self.values = []
        self.packed = array.array("q")
        self.ok = True

    def append(self, value):
        self.values.append(value)
        if self.ok:
            if fits(value):
                self.packed.append(value)
            else:
                self.ok = False

    def __len__(self):
        return len(self.values)


def zp_first_hit(g, centers: IntArray, levels: IntArray, p, backend=None):
    mod = _pick(backend)
    if mod is not _kernels_py and centers.ok and levels.ok and fits(g):
        return mod.zp_first_hit(g, centers.packed, levels.packed, p)
    return _kernels_py.zp_first_hit(g, centers.values, levels.values, p)


def zp_max_valuation(x, centers: IntArray, p, backend=None):
    mod = _pick(backend)
    if mod is not _kernels_py and centers.ok and fits(x):
        return mod.zp_max_valuation(x, centers.packed, p)
    return _kernels_py.zp_max_valuation(x, centers.values, p)


def int_difference_set(values, backend=None):
    mod = _pick(backend)
    values = list(values)
    if mod is not _kernels_py and all(fits(v) for v in values):
        return mod.int_difference_set(values)
    return _kernels_py.int_difference_set(values)


def int_pair_counts(values, targets, backend=None):
    mod = _pick(backend)
    values = sorted(set(values))
    targets = list(targets)
    if mod is not _kernels_py and all(fits(v) for v in values) and all(fits(t) for t in targets):
        return mod.int_pair_counts(values, targets)
    return _kernels_py.int_pair_counts(values, targets)


def _pick(backend):
    if backend == "python" or _compiled is None:
        return _kernels_py
    return _compiled
