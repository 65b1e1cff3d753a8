"""End-to-end retrieval protocol: share encoding, queries, answers, decoding.

One retrieval round moves L = N - X - sum(T) database symbols per cell: the
database for a round is L tensors, every server returns a single field
symbol, and stacking the N symbols against the Cauchy-Vandermonde decode
matrix separates the L desired entries from the interference terms.  Longer
messages are handled by the harness, which loops rounds while reusing the
query vectors and redrawing storage noise and server common randomness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .errors import (
    DimensionMismatch,
    FieldMismatch,
    IndexOutOfRange,
    VerificationFailed,
)
from .field import FieldElement, FieldSpec, Streams, sample_residues
from .scheme import SchemeParams
from .tensor import FieldVector, Tensor, basis_vector, collapse, cv_matrix, solve

SCHEMA = "blindpir/1"


@dataclass(frozen=True)
class MessageDatabase:
    """One round's worth of data: tensors[l-1] holds the l-th symbol of
    every message, so cell (k_1,..,k_M) across the L tensors is one
    L-symbol message block."""

    params: SchemeParams
    tensors: Tuple[Tensor, ...]

    def __post_init__(self):
        if len(self.tensors) != self.params.L:
            raise DimensionMismatch(
                f"need {self.params.L} tensors, got {len(self.tensors)}"
            )
        for t in self.tensors:
            if t.dims != self.params.K:
                raise DimensionMismatch(f"tensor dims {t.dims} != K {self.params.K}")
            if t.spec.q != self.params.q:
                raise FieldMismatch("tensor field differs from scheme field")

    @classmethod
    def random(cls, params: SchemeParams, rng) -> "MessageDatabase":
        spec = params.field_spec()
        size = 1
        for k in params.K:
            size *= k
        tensors = tuple(
            Tensor(params.K, sample_residues(spec, rng, size), spec)
            for _ in range(params.L)
        )
        return cls(params, tensors)

    @classmethod
    def zeros(cls, params: SchemeParams) -> "MessageDatabase":
        spec = params.field_spec()
        return cls(params, tuple(Tensor.zeros(params.K, spec) for _ in range(params.L)))

    @classmethod
    def from_cell_symbols(
        cls, params: SchemeParams, cell: Sequence[int], symbols: Sequence[int]
    ) -> "MessageDatabase":
        """All-zero database except the given cell, which holds `symbols`
        (at most L of them, padded with zeros)."""
        if len(symbols) > params.L:
            raise DimensionMismatch(f"more than L={params.L} symbols for one round")
        spec = params.field_spec()
        size = 1
        idx = 0
        for t, d in zip(cell, params.K):
            if not 1 <= t <= d:
                raise IndexOutOfRange(f"cell index {t} outside [1,{d}]")
            idx = idx * d + (t - 1)
        for k in params.K:
            size *= k
        tensors = []
        for l in range(params.L):
            flat = [0] * size
            if l < len(symbols):
                flat[idx] = int(symbols[l]) % params.q
            tensors.append(Tensor(params.K, flat, spec))
        return cls(params, tuple(tensors))

    def lookup(self, thetas: Sequence[int]) -> List[int]:
        """Plaintext oracle: the L symbols stored at cell thetas."""
        return [t.entry(*thetas).value for t in self.tensors]


@dataclass(frozen=True)
class StorageShare:
    """What server n physically stores: per tensor l the sum of the true
    data and X masking tensors scaled by (f_l - a_n)^x.  X = 0 means plain
    replication."""

    server: int
    shares: Tuple[Tensor, ...]


@dataclass(frozen=True)
class UserSecret:
    """User m's index plus the noise vectors protecting it.

    noise[l-1][t-1] is the degree-t coefficient vector for tensor l; any
    T_m query shares are jointly uniform, so T_m colluding servers learn
    nothing about theta.
    """

    m: int
    theta: int
    noise: Tuple[Tuple[FieldVector, ...], ...]


@dataclass(frozen=True)
class QueryShare:
    """What user m sends to server n: one vector per tensor l."""

    user: int
    server: int
    vectors: Tuple[FieldVector, ...]


@dataclass(frozen=True)
class CommonRandomness:
    """Round-scoped scalars shared by all servers and hidden from users;
    server n adds sum_i a_n^(i-1) * values[i-1] to its answer."""

    values: Tuple[FieldElement, ...]


@dataclass(frozen=True)
class AnswerShare:
    server: int
    value: FieldElement


@dataclass(frozen=True)
class Transcript:
    """Record of one retrieval round; symbol payloads are hex residues."""

    schema: str
    N: int
    M: int
    T: Tuple[int, ...]
    X: int
    K: Tuple[int, ...]
    q: int
    f: Tuple[int, ...]
    alpha: Tuple[int, ...]
    thetas: Tuple[int, ...]
    seed: int
    zero_cr: bool
    queries: Tuple[Tuple[Tuple[Tuple[int, ...], ...], ...], ...]  # [m][n][l] residues
    answers: Tuple[int, ...]
    symbols: Tuple[int, ...]
    interference: Tuple[int, ...]
    download_count: int

    def as_dict(self) -> dict:
        hx = lambda v: format(v, "x")
        return {
            "schema": self.schema,
            "params": {
                "N": self.N,
                "M": self.M,
                "T": list(self.T),
                "X": self.X,
                "K": list(self.K),
                "q": self.q,
                "f": list(self.f),
                "alpha": list(self.alpha),
            },
            "thetas": list(self.thetas),
            "seed": self.seed,
            "zero_cr": self.zero_cr,
            "queries": [
                [[[hx(v) for v in vec] for vec in server] for server in user]
                for user in self.queries
            ],
            "answers": [hx(a) for a in self.answers],
            "symbols": [hx(s) for s in self.symbols],
            "interference": [hx(j) for j in self.interference],
            "download_count": self.download_count,
        }


def _diff(params: SchemeParams, l: int, point: int) -> int:
    return (params.f[l - 1] - point) % params.q


def storage_masks(params: SchemeParams, rng) -> List[List[Tensor]]:
    """Draw the X uniform masking tensors per tensor slot: masks[l-1][x-1]."""
    spec = params.field_spec()
    size = 1
    for k in params.K:
        size *= k
    return [
        [Tensor(params.K, sample_residues(spec, rng, size), spec) for _ in range(params.X)]
        for _ in range(params.L)
    ]


def storage_at_point(
    db: MessageDatabase, masks: Sequence[Sequence[Tensor]], l: int, point: int
) -> Tensor:
    """Share of tensor l as evaluated at an arbitrary point: the true data
    plus sum_x (f_l - point)^x * masks[l][x]."""
    params = db.params
    spec = params.field_spec()
    s = db.tensors[l - 1]
    d = _diff(params, l, point)
    for x in range(1, params.X + 1):
        s = s + masks[l - 1][x - 1].scaled(spec.element(pow(d, x, params.q)))
    return s


def encode_storage(db: MessageDatabase, rng) -> List[StorageShare]:
    """Secret-share the round's tensors across the N servers; any X shares
    are jointly uniform and carry no information about the data."""
    params = db.params
    masks = storage_masks(params, rng)
    return [
        StorageShare(
            server=n,
            shares=tuple(
                storage_at_point(db, masks, l, params.alpha[n - 1])
                for l in range(1, params.L + 1)
            ),
        )
        for n in range(1, params.N + 1)
    ]


def gen_user_secret(params: SchemeParams, m: int, theta: int, rng) -> UserSecret:
    if not 1 <= m <= params.M:
        raise IndexOutOfRange(f"user {m} outside [1,{params.M}]")
    Km = params.K[m - 1]
    if not 1 <= theta <= Km:
        raise IndexOutOfRange(f"theta={theta} outside [1,{Km}]")
    spec = params.field_spec()
    Tm = params.T[m - 1]
    noise = tuple(
        tuple(FieldVector(sample_residues(spec, rng, Km), spec) for _ in range(Tm))
        for _ in range(params.L)
    )
    return UserSecret(m=m, theta=theta, noise=noise)


def query_at_point(
    params: SchemeParams, secret: UserSecret, l: int, point: int
) -> FieldVector:
    """Query vector for tensor l at an arbitrary evaluation point: the basis
    vector of the secret index masked by the noise polynomial evaluated at
    (f_l - point)."""
    spec = params.field_spec()
    Km = params.K[secret.m - 1]
    v = basis_vector(Km, secret.theta, spec)
    d = _diff(params, l, point)
    # degree count follows the secret's own noise, so audit probes can
    # run with fewer masking terms than the scheme prescribes
    for t, z in enumerate(secret.noise[l - 1], start=1):
        c = spec.element(pow(d, t, params.q))
        v = v + z.scaled(c)
    return v


def gen_queries(secret: UserSecret, params: SchemeParams) -> List[QueryShare]:
    """One QueryShare per server for this user."""
    return [
        QueryShare(
            user=secret.m,
            server=n,
            vectors=tuple(
                query_at_point(params, secret, l, params.alpha[n - 1])
                for l in range(1, params.L + 1)
            ),
        )
        for n in range(1, params.N + 1)
    ]


def gen_common_randomness(params: SchemeParams, rng, zero: bool = False) -> CommonRandomness:
    spec = params.field_spec()
    D = params.interference_dims
    if zero:
        vals = [spec.zero()] * D
    else:
        vals = [spec.element(v) for v in sample_residues(spec, rng, D)]
    return CommonRandomness(values=tuple(vals))


def server_answer(
    storage: StorageShare,
    queries: Sequence[QueryShare],
    cr: CommonRandomness,
    params: SchemeParams,
) -> AnswerShare:
    """Server n's single-symbol reply for the round."""
    n = storage.server
    if len(queries) != params.M:
        raise DimensionMismatch(f"need {params.M} query shares, got {len(queries)}")
    by_user = sorted(queries, key=lambda qs: qs.user)
    for m, qs in enumerate(by_user, start=1):
        if qs.user != m or qs.server != n:
            raise DimensionMismatch("query shares do not match this server's users")
    spec = params.field_spec()
    q = params.q
    a = params.alpha[n - 1]
    acc = 0
    for l in range(1, params.L + 1):
        d = _diff(params, l, a)
        c = pow(d, q - 2, q)
        prod = collapse(storage.shares[l - 1], [qs.vectors[l - 1] for qs in by_user])
        acc = (acc + c * prod.value) % q
    p = 1
    for z in cr.values:
        acc = (acc + p * z.value) % q
        p = p * a % q
    return AnswerShare(server=n, value=spec.element(acc))


def answer_at_point(
    db: MessageDatabase,
    masks: Sequence[Sequence[Tensor]],
    secrets: Sequence[UserSecret],
    cr: CommonRandomness,
    point: int,
) -> int:
    """What a server sitting at an arbitrary evaluation point would answer,
    given the same masks, user secrets, and common randomness.  Used to
    check that the N real answers determine the value at any fresh point."""
    params = db.params
    q = params.q
    point = point % q
    if any(point == fl for fl in params.f):
        raise DimensionMismatch("point collides with an f evaluation point")
    vecs = lambda l: [query_at_point(params, s, l, point) for s in secrets]
    acc = 0
    for l in range(1, params.L + 1):
        d = _diff(params, l, point)
        c = pow(d, q - 2, q)
        prod = collapse(storage_at_point(db, masks, l, point), vecs(l))
        acc = (acc + c * prod.value) % q
    p = 1
    for z in cr.values:
        acc = (acc + p * z.value) % q
        p = p * point % q
    return acc


def interpolate_answer(
    params: SchemeParams,
    symbols: Sequence[int],
    interference: Sequence[int],
    point: int,
) -> int:
    """Evaluate the answer function at a fresh point from one round's solve
    outputs: sum_l symbols[l]/(f_l - point) + sum_i interference[i] * point^(i-1)."""
    q = params.q
    point = point % q
    acc = 0
    for l in range(1, params.L + 1):
        d = _diff(params, l, point)
        acc = (acc + pow(d, q - 2, q) * int(symbols[l - 1])) % q
    p = 1
    for j in interference:
        acc = (acc + p * int(j)) % q
        p = p * point % q
    return acc


def decode_full(
    answers: Sequence[AnswerShare], params: SchemeParams
) -> Tuple[List[int], List[int]]:
    """Solve the round's linear system; returns (symbols, interference)."""
    if len(answers) != params.N:
        raise DimensionMismatch(f"need {params.N} answers, got {len(answers)}")
    spec = params.field_spec()
    ordered = sorted(answers, key=lambda a: a.server)
    for n, a in enumerate(ordered, start=1):
        if a.server != n:
            raise DimensionMismatch("answers must cover servers 1..N exactly once")
    f = FieldVector(list(params.f), spec)
    alpha = FieldVector(list(params.alpha), spec)
    C = cv_matrix(f, alpha, params.interference_dims)
    x = solve(C, FieldVector([a.value for a in ordered], spec))
    vals = x.residues()
    return vals[: params.L], vals[params.L :]


def decode(answers: Sequence[AnswerShare], params: SchemeParams) -> List[int]:
    return decode_full(answers, params)[0]


def retrieve(
    db: MessageDatabase,
    thetas: Sequence[int],
    seed: int,
    streams: Optional[Streams] = None,
    secrets: Optional[Sequence[UserSecret]] = None,
    zero_cr: bool = False,
    check: bool = True,
) -> Transcript:
    """Run one full round and decode the requested cell's L symbols.

    Deterministic in (db, thetas, seed, zero_cr): all randomness comes from
    domain-separated streams keyed by the seed.  Callers running several
    rounds pass the same `streams` and `secrets` so queries are reused while
    storage noise and common randomness are redrawn.
    """
    params = db.params
    thetas = tuple(int(t) for t in thetas)
    if len(thetas) != params.M:
        raise DimensionMismatch(f"need {params.M} indices, got {len(thetas)}")
    for m, (t, k) in enumerate(zip(thetas, params.K), start=1):
        if not 1 <= t <= k:
            raise IndexOutOfRange(f"theta_{m}={t} outside [1,{k}]")

    if streams is None:
        streams = Streams(seed)
    if secrets is None:
        secrets = [
            gen_user_secret(params, m, thetas[m - 1], streams.stream(f"user:{m}"))
            for m in range(1, params.M + 1)
        ]
    else:
        got = tuple(s.theta for s in secrets)
        if got != thetas:
            raise DimensionMismatch(f"secrets encode thetas {got}, expected {thetas}")

    query_sets = [gen_queries(s, params) for s in secrets]
    shares = encode_storage(db, streams.stream("storage"))
    cr = gen_common_randomness(params, streams.stream("server:cr"), zero=zero_cr)
    answers = [
        server_answer(
            shares[n - 1], [query_sets[m - 1][n - 1] for m in range(1, params.M + 1)], cr, params
        )
        for n in range(1, params.N + 1)
    ]
    symbols, interference = decode_full(answers, params)

    transcript = Transcript(
        schema=SCHEMA,
        N=params.N,
        M=params.M,
        T=params.T,
        X=params.X,
        K=params.K,
        q=params.q,
        f=params.f,
        alpha=params.alpha,
        thetas=thetas,
        seed=int(seed),
        zero_cr=bool(zero_cr),
        queries=tuple(
            tuple(tuple(tuple(v.residues()) for v in qs.vectors) for qs in user_qs)
            for user_qs in query_sets
        ),
        answers=tuple(a.value.value for a in answers),
        symbols=tuple(symbols),
        interference=tuple(interference),
        download_count=params.N,
    )
    if check:
        verify_round(db, thetas, transcript)
    return transcript


def verify_round(db: MessageDatabase, thetas: Sequence[int], transcript: Transcript) -> None:
    """Raise VerificationFailed unless the transcript's decoded symbols
    match the plaintext lookup."""
    expected = tuple(db.lookup(thetas))
    got = tuple(transcript.symbols)
    if got != expected:
        bad = [i + 1 for i, (g, e) in enumerate(zip(got, expected)) if g != e]
        raise VerificationFailed(f"decoded symbols differ from plaintext at slot(s) {bad}")
