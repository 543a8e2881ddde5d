"""Backend selection for the permutation kernel.

The compiled extension is used when it imports; otherwise the numpy
fallback.  Set ``LSMATCH_KERNEL=python`` to force the fallback.
"""

import os

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _pykernels}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

_requested = os.environ.get("LSMATCH_KERNEL", "").strip().lower()
if _requested and _requested not in BACKENDS:
    raise ImportError(f"LSMATCH_KERNEL={_requested!r} unavailable; have {sorted(BACKENDS)}")
BACKEND = _requested or ("compiled" if _compiled is not None else "python")


def joint_counts(donors, slot_prev, seed, start, n_rep, backend=None):
    """Joint marker counts for replicates ``start .. start + n_rep - 1``."""
    impl = BACKENDS[backend or BACKEND]
    return impl.joint_counts(donors, slot_prev, int(seed), int(start), int(n_rep))
