# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled permutation kernel.

Must stay bit-for-bit identical to ``lsmatch._pykernels``.
"""

import numpy as np

from libc.stdint cimport int64_t, uint8_t, uint64_t
from libc.stdlib cimport free, malloc

cdef extern from *:
    int __builtin_ctzll(unsigned long long x) nogil

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def joint_counts(const uint8_t[:, ::1] donors, const uint8_t[:, ::1] slot_prev,
                 uint64_t seed, Py_ssize_t start, Py_ssize_t n_rep):
    """Per-replicate joint marker counts under a random assignment.

    Replicate ``r`` (global index ``start + r``) shuffles the donor rows with
    a forward Fisher-Yates pass driven by its own counter-based stream, then
    places donor ``perm[s]`` into slot ``s`` for every slot.  The result
    ``out[r, m]`` counts slots whose predecessor carries marker ``m`` and
    whose placed donor carries it too.
    """
    cdef Py_ssize_t n_donors = donors.shape[0]
    cdef Py_ssize_t n_markers = donors.shape[1]
    cdef Py_ssize_t n_slots = slot_prev.shape[0]
    if slot_prev.shape[1] != n_markers:
        raise ValueError("donor and slot marker counts differ")
    if n_slots > n_donors:
        raise ValueError("more slots than donors")
    if n_markers > 64:
        raise ValueError("at most 64 markers supported")
    out = np.zeros((n_rep, n_markers), dtype=np.int64)
    cdef int64_t[:, ::1] o = out
    weights = (np.uint64(1) << np.arange(n_markers, dtype=np.uint64))
    donor_bits_arr = (np.asarray(donors, dtype=np.uint64) != 0).astype(np.uint64) @ weights if n_donors else np.zeros(0, np.uint64)
    prev_bits_arr = (np.asarray(slot_prev, dtype=np.uint64) != 0).astype(np.uint64) @ weights if n_slots else np.zeros(0, np.uint64)
    cdef const uint64_t[::1] donor_bits = np.ascontiguousarray(donor_bits_arr, dtype=np.uint64)
    cdef const uint64_t[::1] prev_bits = np.ascontiguousarray(prev_bits_arr, dtype=np.uint64)
    cdef uint64_t hit
    cdef Py_ssize_t *perm = <Py_ssize_t *> malloc(max(n_donors, 1) * sizeof(Py_ssize_t))
    if perm == NULL:
        raise MemoryError()
    cdef uint64_t seed_key = mix64(seed)
    cdef uint64_t key, draw
    cdef Py_ssize_t r, i, j, s, m, tmp
    cdef Py_ssize_t n_steps = n_slots if n_slots < n_donors - 1 else n_donors - 1
    try:
        with nogil:
            for r in range(n_rep):
                key = mix64(seed_key ^ (<uint64_t>(start + r + 1) * GAMMA))
                for i in range(n_donors):
                    perm[i] = i
                for i in range(n_steps):
                    draw = mix64(key + <uint64_t>(i + 1) * GAMMA)
                    j = i + <Py_ssize_t>(draw % <uint64_t>(n_donors - i))
                    tmp = perm[i]
                    perm[i] = perm[j]
                    perm[j] = tmp
                for s in range(n_slots):
                    hit = prev_bits[s] & donor_bits[perm[s]]
                    while hit:
                        m = __builtin_ctzll(hit)
                        o[r, m] += 1
                        hit &= hit - 1
    finally:
        free(perm)
    return out
