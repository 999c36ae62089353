# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Gibbs sweep kernels: collapsed-LDA training and document fold-in.

Arithmetic, operation order, and SplitMix64 consumption match
``genregap.topics._kernels_py`` exactly; both backends must produce
bit-identical samples from the same inputs and seed.
"""

from libc.stdlib cimport free, malloc

ctypedef unsigned long long u64

cdef double _INV53 = 1.0 / 9007199254740992.0

BACKEND = "compiled"


cdef inline double _next_double(u64 *state) nogil:
    cdef u64 z
    state[0] = state[0] + <u64>0x9E3779B97F4A7C15ULL
    z = state[0]
    z = (z ^ (z >> 30)) * <u64>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <u64>0x94D049BB133111EBULL
    z = z ^ (z >> 31)
    return <double>(z >> 11) * _INV53


def lda_train_sweeps(int[::1] words, int[::1] doc_ptr, int[::1] z,
                     int[:, ::1] ndk, int[:, ::1] nkw, int[::1] nk,
                     double alpha, double beta, int n_sweeps, u64 rng_state):
    """Run collapsed-Gibbs training sweeps in place; return the new RNG state."""
    cdef int n_docs = doc_ptr.shape[0] - 1
    cdef int k = ndk.shape[1]
    cdef int v = nkw.shape[1]
    cdef double vbeta = v * beta
    cdef double *probs = <double *>malloc(k * sizeof(double))
    if probs == NULL:
        raise MemoryError()
    cdef u64 state = rng_state
    cdef int sweep, d, i, w, t, t_old, t_new
    cdef double p, total, u, acc
    try:
        with nogil:
            for sweep in range(n_sweeps):
                for d in range(n_docs):
                    for i in range(doc_ptr[d], doc_ptr[d + 1]):
                        w = words[i]
                        t_old = z[i]
                        ndk[d, t_old] -= 1
                        nkw[t_old, w] -= 1
                        nk[t_old] -= 1
                        total = 0.0
                        for t in range(k):
                            p = (nkw[t, w] + beta) / (nk[t] + vbeta) * (ndk[d, t] + alpha)
                            probs[t] = p
                            total += p
                        u = _next_double(&state) * total
                        acc = 0.0
                        t_new = k - 1
                        for t in range(k):
                            acc += probs[t]
                            if u < acc:
                                t_new = t
                                break
                        z[i] = t_new
                        ndk[d, t_new] += 1
                        nkw[t_new, w] += 1
                        nk[t_new] += 1
    finally:
        free(probs)
    return state


def fold_in_sweeps(int[::1] words, double[:, ::1] phi, int[::1] ndk_doc,
                   int[::1] z, double alpha, int n_sweeps, u64 rng_state):
    """Resample one document's assignments holding topic-word rows fixed."""
    cdef int n = words.shape[0]
    cdef int k = phi.shape[0]
    cdef double *probs = <double *>malloc(k * sizeof(double))
    if probs == NULL:
        raise MemoryError()
    cdef u64 state = rng_state
    cdef int sweep, i, w, t, t_old, t_new
    cdef double p, total, u, acc
    try:
        with nogil:
            for sweep in range(n_sweeps):
                for i in range(n):
                    w = words[i]
                    t_old = z[i]
                    ndk_doc[t_old] -= 1
                    total = 0.0
                    for t in range(k):
                        p = phi[t, w] * (ndk_doc[t] + alpha)
                        probs[t] = p
                        total += p
                    u = _next_double(&state) * total
                    acc = 0.0
                    t_new = k - 1
                    for t in range(k):
                        acc += probs[t]
                        if u < acc:
                            t_new = t
                            break
                    z[i] = t_new
                    ndk_doc[t_new] += 1
    finally:
        free(probs)
    return state
