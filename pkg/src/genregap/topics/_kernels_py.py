"""Pure-Python Gibbs sweep kernels.

Fallback for environments where the compiled extension is unavailable. The
arithmetic, operation order, and SplitMix64 consumption match
``genregap.topics._kernels`` exactly, so both backends produce bit-identical
samples from the same inputs and seed. This path is orders of magnitude
slower; see bench/benchmark_kernels.py.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV53 = 1.0 / 9007199254740992.0

BACKEND = "python"


def lda_train_sweeps(words, doc_ptr, z, ndk, nkw, nk, alpha, beta, n_sweeps, rng_state):
    """Run collapsed-Gibbs training sweeps in place; return the new RNG state.

    words: int32[n_tokens] vocabulary ids, documents concatenated
    doc_ptr: int32[n_docs + 1] token-range offsets per document
    z: int32[n_tokens] current topic assignments (mutated)
    ndk/nkw/nk: int32 count tables, shapes (D,K)/(K,V)/(K,) (mutated)
    """
    n_docs = len(doc_ptr) - 1
    k = ndk.shape[1]
    v = nkw.shape[1]
    # Plain lists: ~20x faster than indexing numpy scalars in the loop.
    words_l = words.tolist()
    ptr_l = doc_ptr.tolist()
    z_l = z.tolist()
    ndk_l = ndk.ravel().tolist()
    nkw_l = nkw.ravel().tolist()
    nk_l = nk.tolist()

    vbeta = v * beta
    probs = [0.0] * k
    state = rng_state & _MASK64

    for _ in range(n_sweeps):
        for d in range(n_docs):
            base_d = d * k
            for i in range(ptr_l[d], ptr_l[d + 1]):
                w = words_l[i]
                t_old = z_l[i]
                ndk_l[base_d + t_old] -= 1
                nkw_l[t_old * v + w] -= 1
                nk_l[t_old] -= 1
                total = 0.0
                for t in range(k):
                    p = (nkw_l[t * v + w] + beta) / (nk_l[t] + vbeta) * (ndk_l[base_d + t] + alpha)
                    probs[t] = p
                    total += p
                state = (state + _GOLDEN) & _MASK64
                mix = state
                mix = ((mix ^ (mix >> 30)) * _MIX1) & _MASK64
                mix = ((mix ^ (mix >> 27)) * _MIX2) & _MASK64
                mix = mix ^ (mix >> 31)
                u = ((mix >> 11) * _INV53) * total
                acc = 0.0
                t_new = k - 1
                for t in range(k):
                    acc += probs[t]
                    if u < acc:
                        t_new = t
                        break
                z_l[i] = t_new
                ndk_l[base_d + t_new] += 1
                nkw_l[t_new * v + w] += 1
                nk_l[t_new] += 1

    z[:] = z_l
    ndk[:, :] = [ndk_l[i * k:(i + 1) * k] for i in range(n_docs)]
    nkw[:, :] = [nkw_l[t * v:(t + 1) * v] for t in range(k)]
    nk[:] = nk_l
    return state


def fold_in_sweeps(words, phi, ndk_doc, z, alpha, n_sweeps, rng_state):
    """Resample one document's assignments holding topic-word rows fixed.

    phi: float64[K, V] topic-word distribution (read-only)
    ndk_doc: int32[K] document topic counts (mutated); z: int32[n] (mutated)
    """
    k = phi.shape[0]
    v = phi.shape[1]
    words_l = words.tolist()
    z_l = z.tolist()
    ndk_l = ndk_doc.tolist()
    phi_l = phi.ravel().tolist()

    probs = [0.0] * k
    state = rng_state & _MASK64

    for _ in range(n_sweeps):
        for i in range(len(words_l)):
            w = words_l[i]
            t_old = z_l[i]
            ndk_l[t_old] -= 1
            total = 0.0
            for t in range(k):
                p = phi_l[t * v + w] * (ndk_l[t] + alpha)
                probs[t] = p
                total += p
            state = (state + _GOLDEN) & _MASK64
            mix = state
            mix = ((mix ^ (mix >> 30)) * _MIX1) & _MASK64
            mix = ((mix ^ (mix >> 27)) * _MIX2) & _MASK64
            mix = mix ^ (mix >> 31)
            u = ((mix >> 11) * _INV53) * total
            acc = 0.0
            t_new = k - 1
            for t in range(k):
                acc += probs[t]
                if u < acc:
                    t_new = t
                    break
            z_l[i] = t_new
            ndk_l[t_new] += 1

    z[:] = z_l
    ndk_doc[:] = ndk_l
    return state
