"""Pure numpy twin of the compiled permutation kernel.

Vectorized across replicates instead of looping per replicate; produces
the same integers as ``lsmatch._kernels`` for the same arguments.
"""

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31 = np.uint64(30), np.uint64(27), np.uint64(31)

# replicates processed per vectorized block; bounds peak memory
_BLOCK = 2048


def mix64(z):
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def replicate_keys(seed, start, n_rep):
    seed_key = mix64(np.array([seed], dtype=np.uint64))[0]
    idx = np.arange(start + 1, start + n_rep + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(seed_key ^ (idx * GAMMA))


def permutations(n_donors, n_slots, seed, start, n_rep):
    """Donor index placed in each slot, shape ``(n_rep, n_slots)``."""
    keys = replicate_keys(seed, start, n_rep)
    perm = np.tile(np.arange(n_donors, dtype=np.int64), (n_rep, 1))
    rows = np.arange(n_rep)
    for i in range(min(n_slots, n_donors - 1)):
        with np.errstate(over="ignore"):
            draws = mix64(keys + np.uint64(i + 1) * GAMMA)
        j = i + (draws % np.uint64(n_donors - i)).astype(np.int64)
        held = perm[:, i].copy()
        perm[:, i] = perm[rows, j]
        perm[rows, j] = held
    return perm[:, :n_slots]


def joint_counts(donors, slot_prev, seed, start, n_rep):
    donors = np.ascontiguousarray(donors, dtype=np.uint8)
    slot_prev = np.ascontiguousarray(slot_prev, dtype=np.uint8)
    n_donors, n_markers = donors.shape
    n_slots = slot_prev.shape[0]
    if slot_prev.shape[1] != n_markers:
        raise ValueError("donor and slot marker counts differ")
    if n_slots > n_donors:
        raise ValueError("more slots than donors")
    out = np.zeros((n_rep, n_markers), dtype=np.int64)
    prev = slot_prev.astype(bool)
    don = donors.astype(bool)
    for lo in range(0, n_rep, _BLOCK):
        hi = min(n_rep, lo + _BLOCK)
        perm = permutations(n_donors, n_slots, seed, start + lo, hi - lo)
        placed = don[perm]  # (block, slots, markers)
        out[lo:hi] = np.count_nonzero(placed & prev[None, :, :], axis=1)
    return out
