"""Field arithmetic axioms, sampling uniformity, and stream determinism."""

import numpy as np
import pytest
from scipy.stats import chi2

from blindpir.errors import DivisionByZero, FieldMismatch, NonPrimeModulus
from blindpir.field import (
    FieldElement,
    FieldSpec,
    Streams,
    is_prime,
    sample_residues,
    sample_uniform,
)

AXIOM_MODULI = [5, 7, 11, 101, 2**61 - 1]


def test_is_prime_spot_checks():
    assert is_prime(2) and is_prime(3) and is_prime(101) and is_prime(2**61 - 1)
    assert not is_prime(1) and not is_prime(0)
    assert not is_prime(91) and not is_prime(2**61 + 1)  # 7*13, 3*...
    assert not is_prime(10**6)


def test_non_prime_modulus_rejected():
    for bad in (0, 1, 4, 10**6, 2**64):
        with pytest.raises(NonPrimeModulus):
            FieldSpec(bad)


@pytest.mark.parametrize("q", AXIOM_MODULI)
def test_field_axioms(q):
    # 10^4 random triples per modulus: ring axioms, inverses, and the
    # subtraction/negation identities
    spec = FieldSpec(q)
    rng = np.random.default_rng(q)
    vals = [int(v) for v in rng.integers(0, min(q, 2**63 - 1), size=3 * 10**4)]
    for i in range(0, len(vals), 3):
        a, b, c = (spec.element(v) for v in vals[i : i + 3])
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a + b == b + a
        assert a * b == b * a
        assert a * (b + c) == a * b + a * c
        assert a + spec.zero() == a
        assert a * spec.one() == a
        assert (a - b) + b == a
        assert a + (-a) == spec.zero()
        if b.value != 0:
            assert b * b.inv() == spec.one()
            assert (a / b) * b == a


def test_pow_and_zero_cases():
    spec = FieldSpec(11)
    a = spec.element(3)
    assert a.pow(0) == spec.one()
    assert spec.zero().pow(0) == spec.one()  # 0^0 = 1 by convention
    assert a.pow(10) == spec.one()  # Fermat
    with pytest.raises(ValueError):
        a.pow(-1)
    with pytest.raises(DivisionByZero):
        spec.zero().inv()


def test_field_mismatch():
    a = FieldSpec(5).element(2)
    b = FieldSpec(7).element(2)
    with pytest.raises(FieldMismatch):
        a + b
    with pytest.raises(FieldMismatch):
        a * b


def test_sampling_uniformity_chi_squared():
    # q = 7, 10^5 draws; reject only below the 10^-3 significance level
    spec = FieldSpec(7)
    rng = Streams(99).generator("uniformity")
    draws = sample_residues(spec, rng, 10**5)
    counts = np.bincount(np.asarray(draws), minlength=7)
    expected = len(draws) / 7
    stat = float(((counts - expected) ** 2 / expected).sum())
    p = float(chi2.sf(stat, df=6))
    assert p > 1e-3, f"chi2={stat:.2f}, p={p:.2e}"


def test_sampling_range_and_exactness():
    # every draw is a canonical residue; rejection sampling leaves no
    # modulo bias by construction, spot-check the extremes get hit
    spec = FieldSpec(5)
    rng = Streams(1).generator("range")
    draws = sample_residues(spec, rng, 2000)
    assert min(draws) == 0 and max(draws) == 4
    assert all(0 <= v < 5 for v in draws)


def test_prng_regression_pinned():
    # frozen fixture: changing the derivation or rejection rule breaks this
    spec = FieldSpec(7)
    assert sample_residues(spec, Streams(2026).generator("user:1"), 3) == [0, 4, 0]
    assert sample_residues(spec, Streams(2026).generator("storage"), 3) == [2, 2, 4]


def test_streams_determinism_and_separation():
    spec = FieldSpec(101)
    a = sample_residues(spec, Streams(7).generator("user:1"), 50)
    b = sample_residues(spec, Streams(7).generator("user:1"), 50)
    c = sample_residues(spec, Streams(7).generator("user:2"), 50)
    d = sample_residues(spec, Streams(8).generator("user:1"), 50)
    assert a == b
    assert a != c
    assert a != d


def test_stream_memoization_advances():
    # generator() restarts the stream; stream() keeps advancing it; the
    # same call pattern on a fresh Streams reproduces the same values
    spec = FieldSpec(11)
    s = Streams(3)
    first = sample_residues(spec, s.stream("storage"), 5)
    second = sample_residues(spec, s.stream("storage"), 5)
    assert first != second
    fresh = Streams(3)
    assert sample_residues(spec, fresh.stream("storage"), 5) == first
    assert sample_residues(spec, fresh.stream("storage"), 5) == second
    assert sample_residues(spec, s.generator("storage"), 5) == first


def test_sample_uniform_single():
    spec = FieldSpec(13)
    v = sample_uniform(spec, Streams(0).generator("x"))
    assert isinstance(v, FieldElement) and 0 <= v.value < 13
