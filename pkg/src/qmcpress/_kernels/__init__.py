"""Kernel backend selection.

The pairwise digit-prefix kernel (the hot inner loop of weight computation)
has two interchangeable implementations: a compiled Cython extension and a
NumPy reference.  The compiled one is used when importable; set
QMCPRESS_PURE_PYTHON=1 to force the reference implementation.  Both produce
bit-identical outputs: integer counts are exact and the float accumulations
perform the same operations in the same order.
"""

from __future__ import annotations

import os

from . import _ref

if os.environ.get("QMCPRESS_PURE_PYTHON"):
    _impl = _ref
    BACKEND = "python"
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _ref
        BACKEND = "python"

pairwise_st = _impl.pairwise_st
reference_pairwise_st = _ref.pairwise_st


def backend_name() -> str:
    return BACKEND
