"""Pure numpy kernels: exact modular linear algebra and audit enumeration.

Everything here is exact integer arithmetic on int64 arrays.  The modulus
must satisfy q < 2^31 so products fit in signed 64-bit with headroom; the
matvec splits multipliers into 16-bit limbs and chunks long rows so no
intermediate sum can overflow.
"""

from __future__ import annotations

import numpy as np

_MAX_Q = 2**31


def _check_q(q: int) -> None:
    if not 2 <= q < _MAX_Q:
        raise ValueError(f"kernel modulus must be in [2, 2^31), got {q}")


def modmatvec(rows: np.ndarray, w: np.ndarray, q: int) -> np.ndarray:
    """Exact (rows @ w) mod q for int64 residue inputs.

    rows: (B, S) with entries in [0, q); w: (S,) in [0, q).
    """
    _check_q(q)
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    w = np.asarray(w, dtype=np.int64)
    if rows.ndim != 2 or w.ndim != 1 or rows.shape[1] != w.shape[0]:
        raise ValueError(f"shape mismatch: {rows.shape} @ {w.shape}")
    w = w % q
    w_lo = w & 0xFFFF
    w_hi = w >> 16
    out = np.zeros(rows.shape[0], dtype=np.int64)
    # chunk so that chunk * (q-1) * 2^16 stays below 2^63
    chunk = max(1, (2**62) // (q << 16))
    for s in range(0, rows.shape[1], chunk):
        block = rows[:, s : s + chunk]
        lo = block @ w_lo[s : s + chunk] % q
        hi = block @ w_hi[s : s + chunk] % q
        out = (out + lo + (hi << 16)) % q
    return out


def digits_table(q: int, ndigits: int) -> np.ndarray:
    """(q^ndigits, ndigits) table of base-q digit expansions, most
    significant digit first."""
    idx = np.arange(q**ndigits, dtype=np.int64)
    cols = []
    for d in range(ndigits):
        cols.append(idx // q ** (ndigits - 1 - d) % q)
    return np.stack(cols, axis=1)


def pair_view_counts(q: int, K: int, f1: int, alphas) -> np.ndarray:
    """Exhaustive answer-tuple counts for the two-user, single-tensor case
    with zeroed server randomness.

    For every (t1, t2, second user's noise vector, noise of user 1, data
    tensor) the N answers are computed exactly; the result accumulates
    counts[t1-1, t2-1, z2_index, data(t1,t2), answer_index] over the latent
    coordinates (user-1 noise and the rest of the data tensor).

    z2_index packs the second user's noise vector big-endian base q;
    answer_index packs (A_1..A_N) big-endian base q.
    """
    _check_q(q)
    alphas = [a % q for a in alphas]
    N = len(alphas)
    S = K * K
    qK, qN, qS = q**K, q**N, q**S
    d = np.array([(f1 - a) % q for a in alphas], dtype=np.int64)
    inv_d = np.array([pow(int(v), q - 2, q) for v in d], dtype=np.int64)

    wdig = digits_table(q, S)  # (qS, S) data tensors, row-major over (j,k)
    zdig = digits_table(q, K)  # (qK, K) noise vectors
    apow = q ** np.arange(N - 1, -1, -1, dtype=np.int64)

    counts = np.zeros((K, K, qK, q, qN), dtype=np.int64)
    for t1 in range(K):
        # user-1 share vectors for every noise value, z2-independent
        u = (np.equal(np.arange(K), t1).astype(np.int64)[None, None, :] + d[None, :, None] * zdig[:, None, :]) % q  # (qK, N, K)
        for t2 in range(K):
            widx = t1 * K + t2
            wval = wdig[:, widx]  # (qS,)
            for z2i in range(qK):
                v = (np.equal(np.arange(K), t2).astype(np.int64)[None, :] + np.outer(d, zdig[z2i])) % q  # (N, K)
                # coefficient of data entry (j,k) in answer n, per user-1 noise
                coef = u[:, :, :, None] * v[None, :, None, :] % q * inv_d[None, :, None, None] % q
                coef = coef.reshape(qK, N, S)
                # answers for every (noise, data): contract digits against coef
                A = np.einsum("ws,zns->wzn", wdig, coef, dtype=np.int64) % q  # (qS, qK, N)
                aidx = A @ apow  # < q^N, no overflow
                key = wval[:, None] * qN + aidx  # (qS, qK)
                counts[t1, t2, z2i] += np.bincount(
                    key.ravel(), minlength=q * qN
                ).reshape(q, qN)
    return counts


def cr_translates(q: int, alphas, D: int) -> np.ndarray:
    """(q^D, N) table of answer offsets induced by the server common
    randomness: row z is (sum_i z_i * a_n^(i-1))_n."""
    alphas = [a % q for a in alphas]
    N = len(alphas)
    zdig = digits_table(q, D)  # (qD, D), digit 0 most significant
    pw = np.array([[pow(a, i, q) for a in alphas] for i in range(D)], dtype=np.int64)  # (D, N)
    # reverse digit order so digit i multiplies a^i
    return zdig[:, ::-1] @ pw % q


def cr_convolve(counts: np.ndarray, q: int, alphas, D: int) -> np.ndarray:
    """Exact counts with common randomness active, from the zeroed counts:
    each answer tuple is translated by every common-randomness offset."""
    N = len(alphas)
    qN = q**N
    if counts.shape[-1] != qN:
        raise ValueError("counts last axis does not match q^N")
    adig = digits_table(q, N)  # (qN, N)
    apow = q ** np.arange(N - 1, -1, -1, dtype=np.int64)
    out = np.zeros_like(counts)
    flat = counts.reshape(-1, qN)
    oflat = out.reshape(-1, qN)
    for off in cr_translates(q, alphas, D):
        perm = (adig + off[None, :]) % q @ apow
        oflat[:, perm] += flat
    return out
