"""Kernel backends: exactness against big-int oracles, agreement between
the compiled and numpy implementations, and backend selection."""

import itertools
import os
import subprocess
import sys

import numpy as np
import pytest

from blindpir import kernels
from blindpir.field import Streams

BACKENDS = kernels.available_backends()


def _brute_pair_counts(q, K, f1, alphas):
    """Direct per-state enumeration of the two-user answer distribution,
    sharing no code with the kernels."""
    N = len(alphas)
    counts = np.zeros((K, K, q**K, q, q**N), dtype=np.int64)
    d = [(f1 - a) % q for a in alphas]
    inv = [pow(v, q - 2, q) for v in d]
    for t1, t2 in itertools.product(range(K), repeat=2):
        for z2 in itertools.product(range(q), repeat=K):
            z2i = sum(z * q ** (K - 1 - j) for j, z in enumerate(z2))
            for z1 in itertools.product(range(q), repeat=K):
                for wflat in itertools.product(range(q), repeat=K * K):
                    wval = wflat[t1 * K + t2]
                    aidx = 0
                    for n in range(N):
                        u = [((j == t1) + d[n] * z1[j]) % q for j in range(K)]
                        v = [((k == t2) + d[n] * z2[k]) % q for k in range(K)]
                        s = sum(
                            u[j] * wflat[j * K + k] * v[k]
                            for j in range(K)
                            for k in range(K)
                        )
                        aidx = aidx * q + s * inv[n] % q
                    counts[t1, t2, z2i, wval, aidx] += 1
    return counts


@pytest.fixture(scope="module")
def brute_q3():
    return _brute_pair_counts(3, 2, 0, (1, 2))


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_pair_view_counts_matches_enumeration(name, brute_q3):
    got = BACKENDS[name].pair_view_counts(3, 2, 0, (1, 2))
    assert np.array_equal(got, brute_q3)


def test_pair_view_counts_backend_agreement():
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    tables = [
        BACKENDS[n].pair_view_counts(5, 2, 0, (1, 2, 3)) for n in sorted(BACKENDS)
    ]
    assert np.array_equal(tables[0], tables[1])
    assert tables[0].sum() == 4 * 5**2 * 5**2 * 5**4  # every latent state once


@pytest.mark.parametrize("name", sorted(BACKENDS))
@pytest.mark.parametrize("q", [7, 2**31 - 1])
def test_modmatvec_exact(name, q):
    rng = Streams(15).generator(f"kern:{q}")
    rows = rng.integers(0, q, size=(9, 23), dtype=np.int64)
    w = rng.integers(0, q, size=23, dtype=np.int64)
    want = [sum(int(a) * int(b) for a, b in zip(r, w)) % q for r in rows]
    got = BACKENDS[name].modmatvec(rows, w, q)
    assert got.tolist() == want


def test_modmatvec_long_rows_chunking():
    # columns beyond the internal overflow chunk at the largest modulus
    q = 2**31 - 1
    rng = Streams(16).generator("kern:long")
    rows = rng.integers(0, q, size=(3, 70000), dtype=np.int64)
    w = rng.integers(0, q, size=70000, dtype=np.int64)
    want = [sum(int(a) * int(b) for a, b in zip(r, w)) % q for r in rows]
    for mod in BACKENDS.values():
        assert mod.modmatvec(rows, w, q).tolist() == want


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_modmatvec_input_validation(name):
    mod = BACKENDS[name]
    with pytest.raises(ValueError):
        mod.modmatvec(np.zeros((2, 3), dtype=np.int64), np.zeros(4, dtype=np.int64), 7)
    with pytest.raises(ValueError):
        mod.modmatvec(np.zeros((2, 3), dtype=np.int64), np.zeros(3, dtype=np.int64), 2**31)


def test_digits_table_oracle():
    got = kernels.digits_table(3, 2)
    assert got.tolist() == [
        [0, 0], [0, 1], [0, 2],
        [1, 0], [1, 1], [1, 2],
        [2, 0], [2, 1], [2, 2],
    ]
    assert kernels.digits_table(5, 1).tolist() == [[0], [1], [2], [3], [4]]


def test_cr_translates_oracle():
    # row z lists sum_i z_i * a^i per point, digits enumerated least
    # significant last in the index
    got = kernels.cr_translates(5, (1, 2), 2)
    for idx, row in enumerate(got):
        z0, z1 = idx // 5, idx % 5  # z1 multiplies a^0, z0 multiplies a^1
        assert row.tolist() == [(z1 + z0 * a) % 5 for a in (1, 2)]


def test_cr_convolve_matches_direct_enumeration(brute_q3):
    q, alphas, D = 3, (1, 2), 2
    got = kernels.cr_convolve(brute_q3, q, alphas, D)
    assert got.sum() == brute_q3.sum() * q**D
    # independent re-enumeration with the randomness folded into answers
    want = np.zeros_like(brute_q3)
    flat = brute_q3.reshape(-1, q ** len(alphas))
    wflat = want.reshape(-1, q ** len(alphas))
    for aidx in range(q ** len(alphas)):
        a1, a2 = aidx // q, aidx % q
        for z in itertools.product(range(q), repeat=D):
            off = [sum(zi * a**i for i, zi in enumerate(z)) % q for a in alphas]
            tidx = (a1 + off[0]) % q * q + (a2 + off[1]) % q
            wflat[:, tidx] += flat[:, aidx]
    assert np.array_equal(got, want)


def _probe_backend(env_value):
    env = {**os.environ, "BLINDPIR_BACKEND": env_value}
    return subprocess.run(
        [sys.executable, "-c", "from blindpir import kernels; print(kernels.BACKEND)"],
        capture_output=True,
        text=True,
        env=env,
    )


def test_backend_env_selection():
    r = _probe_backend("python")
    assert r.returncode == 0 and r.stdout.strip() == "python"
    if "compiled" in BACKENDS:
        r = _probe_backend("compiled")
        assert r.returncode == 0 and r.stdout.strip() == "compiled"
    r = _probe_backend("bogus")
    assert r.returncode != 0 and "BLINDPIR_BACKEND" in r.stderr
