"""Prime-field arithmetic and deterministic, seedable uniform sampling.

The field is F_q for a prime q that fits in 64 bits.  Elements are kept as
canonical residues in [0, q-1]; products go through Python integers, so no
intermediate overflow is possible for any 64-bit modulus.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import DivisionByZero, FieldMismatch, NonPrimeModulus

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

MAX_MODULUS = 2**64 - 1


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid for all n below 2^64."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class FieldSpec:
    """Descriptor of the prime field F_q."""

    __slots__ = ("q",)

    def __init__(self, q: int):
        q = int(q)
        if q < 2 or q > MAX_MODULUS or not is_prime(q):
            raise NonPrimeModulus(f"modulus {q} is not a prime in the 64-bit range")
        self.q = q

    def element(self, value: int) -> "FieldElement":
        return FieldElement(value, self)

    def zero(self) -> "FieldElement":
        return FieldElement(0, self)

    def one(self) -> "FieldElement":
        return FieldElement(1, self)

    def __eq__(self, other):
        return isinstance(other, FieldSpec) and self.q == other.q

    def __hash__(self):
        return hash(("FieldSpec", self.q))

    def __repr__(self):
        return f"FieldSpec(q={self.q})"


class FieldElement:
    """An element of F_q, stored as the canonical residue in [0, q-1]."""

    __slots__ = ("value", "spec")

    def __init__(self, value: int, spec: FieldSpec):
        self.spec = spec
        self.value = int(value) % spec.q

    def _check(self, other: "FieldElement") -> None:
        if self.spec.q != other.spec.q:
            raise FieldMismatch(
                f"cannot combine elements of F_{self.spec.q} and F_{other.spec.q}"
            )

    def __add__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return FieldElement(self.value + other.value, self.spec)

    def __sub__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return FieldElement(self.value - other.value, self.spec)

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return FieldElement(self.value * other.value, self.spec)

    def __neg__(self) -> "FieldElement":
        return FieldElement(-self.value, self.spec)

    def __truediv__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return self * other.inv()

    def inv(self) -> "FieldElement":
        """Multiplicative inverse by Fermat exponentiation."""
        if self.value == 0:
            raise DivisionByZero(f"no inverse of 0 in F_{self.spec.q}")
        return FieldElement(pow(self.value, self.spec.q - 2, self.spec.q), self.spec)

    def pow(self, e: int) -> "FieldElement":
        """Square-and-multiply power; 0^0 = 1 by convention."""
        if e < 0:
            raise ValueError("exponent must be nonnegative")
        return FieldElement(pow(self.value, e, self.spec.q), self.spec)

    def __eq__(self, other):
        return (
            isinstance(other, FieldElement)
            and self.spec.q == other.spec.q
            and self.value == other.value
        )

    def __hash__(self):
        return hash((self.value, self.spec.q))

    def __repr__(self):
        return f"{self.value} (mod {self.spec.q})"


def sample_residues(spec: FieldSpec, rng: np.random.Generator, count: int) -> list:
    """Draw ``count`` i.i.d. uniform residues from F_q.

    Uses rejection sampling over raw 64-bit words so the distribution is
    exactly uniform (no modulo bias).  Deterministic given the generator
    state: the sequence of accepted words depends only on the stream.
    """
    q = spec.q
    limit = 2**64 - (2**64 % q)
    out: list = []
    need = count
    while need > 0:
        # oversample slightly; the acceptance rate is > 1/2 for any q
        batch = rng.integers(0, 2**64, size=max(need + 8, int(need * 1.1)), dtype=np.uint64)
        accepted = batch[batch < limit]
        take = accepted[:need]
        out.extend(int(w) % q for w in take)
        need = count - len(out)
    return out


def sample_uniform(spec: FieldSpec, rng: np.random.Generator) -> FieldElement:
    """One uniform field element (see :func:`sample_residues`)."""
    return FieldElement(sample_residues(spec, rng, 1)[0], spec)


class Streams:
    """Domain-separated deterministic random streams under one master seed.

    Each logical party gets its own labeled stream ("user:2", "server:cr",
    "storage", ...) so that adding parties never perturbs existing draws.
    Labels are hashed into a Philox key, which is stable across platforms.
    """

    __slots__ = ("master_seed", "_streams")

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed)
        self._streams: dict = {}

    def generator(self, label: str) -> np.random.Generator:
        digest = hashlib.sha256(f"{self.master_seed}/{label}".encode()).digest()
        key = int.from_bytes(digest[:16], "little")
        return np.random.Generator(np.random.Philox(key=key))

    def stream(self, label: str) -> np.random.Generator:
        """Memoized variant of :meth:`generator`: repeated calls return the
        same advancing stream, so callers running several rounds draw fresh
        randomness each round while staying reproducible from the seed."""
        g = self._streams.get(label)
        if g is None:
            g = self._streams[label] = self.generator(label)
        return g

    def __repr__(self):
        return f"Streams(master_seed={self.master_seed})"
