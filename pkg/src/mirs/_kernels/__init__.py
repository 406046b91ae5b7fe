"""Kernel backend selection.

The compiled extension ``_fast`` is used when it imports; otherwise, or
when the environment sets ``MIRS_KERNEL=python``, the numpy versions in
``_reference`` are used.  ``BACKEND`` names the active choice.
"""

import os

from . import _reference

_compiled = None
if os.environ.get("MIRS_KERNEL", "").lower() != "python":
    try:
        from . import _fast as _compiled
    except ImportError:
        _compiled = None

_impl = _compiled if _compiled is not None else _reference
BACKEND = "cython" if _compiled is not None else "python"

irls = _impl.irls
impute_draws = _impl.impute_draws
impute_totals = _impl.impute_totals

OK = _reference.OK
SINGULAR = _reference.SINGULAR
STALLED = _reference.STALLED
NONFINITE = _reference.NONFINITE


def backends():
    """Available implementations keyed by name (for tests and benchmarks)."""
    out = {"python": _reference}
    if _compiled is not None:
        out["cython"] = _compiled
    return out
