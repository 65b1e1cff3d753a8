# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels mirroring kernels.ref: modular matvec and the
exhaustive answer-tuple enumeration.  Same contracts, same results."""

import numpy as np


def modmatvec(rows, w, long long q):
    """Exact (rows @ w) mod q for int64 residues; q < 2^31."""
    if not 2 <= q < 2**31:
        raise ValueError(f"kernel modulus must be in [2, 2^31), got {q}")
    rows_arr = np.ascontiguousarray(rows, dtype=np.int64)
    w_arr = np.ascontiguousarray(np.asarray(w, dtype=np.int64) % q)
    if rows_arr.ndim != 2 or w_arr.ndim != 1 or rows_arr.shape[1] != w_arr.shape[0]:
        raise ValueError(f"shape mismatch: {rows_arr.shape} @ {w_arr.shape}")
    out = np.zeros(rows_arr.shape[0], dtype=np.int64)
    cdef long long[:, ::1] A = rows_arr
    cdef long long[::1] wv = w_arr
    cdef long long[::1] o = out
    cdef Py_ssize_t B = A.shape[0], S = A.shape[1], b, s
    # lazy reduction: residue products stay below 2^62, so keep adding into
    # an unsigned accumulator and drop a multiple of q only on near-overflow
    cdef unsigned long long acc, red = (<unsigned long long>1 << 63) // q * q
    cdef unsigned long long thresh = <unsigned long long>1 << 63
    for b in range(B):
        acc = 0
        for s in range(S):
            acc += <unsigned long long>A[b, s] * <unsigned long long>wv[s]
            if acc >= thresh:
                acc -= red
        o[b] = <long long>(acc % <unsigned long long>q)
    return out


def pair_view_counts(long long q, long long K, long long f1, alphas):
    """Exhaustive answer-tuple counts for the two-user, single-tensor case
    with zeroed server randomness; see kernels.ref.pair_view_counts for the
    layout of the returned (K, K, q^K, q, q^N) array."""
    if not 2 <= q < 2**31:
        raise ValueError(f"kernel modulus must be in [2, 2^31), got {q}")
    alpha_arr = np.ascontiguousarray(np.asarray(alphas, dtype=np.int64) % q)
    cdef long long[::1] al = alpha_arr
    cdef Py_ssize_t N = alpha_arr.shape[0]
    cdef Py_ssize_t S = K * K
    cdef long long qK = q**K, qN = q**N, qS = q**S
    counts = np.zeros((K, K, qK, q, qN), dtype=np.int64)
    cdef long long[::1] c = counts.reshape(-1)

    d_arr = np.array([(f1 - a) % q for a in alpha_arr], dtype=np.int64)
    inv_arr = np.array([pow(int(dd), int(q) - 2, int(q)) for dd in d_arr], dtype=np.int64)
    cdef long long[::1] dv = d_arr
    cdef long long[::1] iv = inv_arr

    zbuf = np.zeros(K, dtype=np.int64)
    ubuf = np.zeros((N, K), dtype=np.int64)
    vbuf = np.zeros((N, K), dtype=np.int64)
    cbuf = np.zeros((S, N), dtype=np.int64)
    wbuf = np.zeros(S, dtype=np.int64)
    abuf = np.zeros(N, dtype=np.int64)
    cdef long long[::1] z2 = zbuf
    cdef long long[:, ::1] u = ubuf
    cdef long long[:, ::1] v = vbuf
    cdef long long[:, ::1] coef = cbuf
    cdef long long[::1] wd = wbuf
    cdef long long[::1] A = abuf
    z1buf = np.zeros(K, dtype=np.int64)
    cdef long long[::1] z1 = z1buf

    cdef Py_ssize_t t1, t2, widx, n, j, k, s, it
    cdef long long z1i, z2i, base, aidx, rem, tmp
    for t1 in range(K):
        for t2 in range(K):
            widx = t1 * K + t2
            for z2i in range(qK):
                rem = z2i
                for k in range(K - 1, -1, -1):
                    z2[k] = rem % q
                    rem //= q
                for n in range(N):
                    for k in range(K):
                        v[n, k] = (z2[k] * dv[n] + (1 if k == t2 else 0)) % q
                base = ((t1 * K + t2) * qK + z2i) * q * qN
                for z1i in range(qK):
                    rem = z1i
                    for j in range(K - 1, -1, -1):
                        z1[j] = rem % q
                        rem //= q
                    for n in range(N):
                        for j in range(K):
                            u[n, j] = (z1[j] * dv[n] + (1 if j == t1 else 0)) % q
                    for j in range(K):
                        for k in range(K):
                            for n in range(N):
                                coef[j * K + k, n] = u[n, j] * v[n, k] % q * iv[n] % q
                    # odometer over the data tensor digits
                    for s in range(S):
                        wd[s] = 0
                    for n in range(N):
                        A[n] = 0
                    for it in range(qS):
                        aidx = 0
                        for n in range(N):
                            aidx = aidx * q + A[n]
                        c[base + wd[widx] * qN + aidx] += 1
                        # increment; each touched digit shifts answers by
                        # its coefficient column (a wrap adds -(q-1) = +1 mod q)
                        s = S - 1
                        while s >= 0:
                            for n in range(N):
                                tmp = A[n] + coef[s, n]
                                A[n] = tmp - q if tmp >= q else tmp
                            if wd[s] == q - 1:
                                wd[s] = 0
                                s -= 1
                            else:
                                wd[s] += 1
                                break
    return counts
