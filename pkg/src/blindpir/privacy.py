"""Machine-checkable audits of the scheme's privacy and security claims.

Three audits, each phrased as a distribution question:

* server T-privacy: the queries any small-enough server coalition sees are
  identically distributed whatever index the user wants;
* storage X-security: the shares any small-enough coalition holds are
  identically distributed whatever the database contains;
* inter-user privacy: one user's whole download, given everything that user
  already knows, is independent of the other users' indices.

At tiny parameters the audits enumerate every realization and give exact
verdicts with integer-count probability tables.  Beyond the enumeration
budget they fall back to Monte-Carlo estimation with a permutation-null
bias correction.  Mutual information is reported in log-base-q units.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    BudgetExceeded,
    IndexOutOfRange,
    InfeasibleParams,
    UnnormalizedDistribution,
)
from .field import Streams, sample_residues
from .kernels import cr_convolve, pair_view_counts
from .protocol import (
    CommonRandomness,
    MessageDatabase,
    UserSecret,
    answer_at_point,
    gen_user_secret,
    query_at_point,
    storage_at_point,
)
from .scheme import SchemeParams
from .tensor import FieldVector, Tensor

DEFAULT_BUDGET = 10**6


def leakage_bound(q: int, K: int) -> Fraction:
    """Cap on one user's index leakage to another after removing the server
    common randomness, in q-ary units: 2 * (1 - (1 - q^(1-K)) * (1 - 1/q)^K).

    Tends to 0 as q grows.  Defined for any q >= 2 (including non-prime q,
    useful for limit checks) and K >= 2.
    """
    if q < 2 or K < 2:
        raise InfeasibleParams(f"need q >= 2 and K >= 2, got q={q}, K={K}")
    inner = (1 - Fraction(1, q ** (K - 1))) * (1 - Fraction(1, q)) ** K
    return 2 * (1 - inner)


@dataclass(frozen=True)
class ViewDistribution:
    """Probability table of an adversary view.

    Keys are hashable serialized views; values are exact Fractions when
    enumerated or floats when sampled.  `base` is the log base used for
    entropy accounting (the field size).
    """

    label: str
    table: dict
    base: int

    def __post_init__(self):
        total = sum(self.table.values())
        if isinstance(total, Fraction) or isinstance(total, int):
            if total != 1:
                raise UnnormalizedDistribution(f"{self.label}: total {total} != 1")
        elif abs(total - 1.0) > 1e-12:
            raise UnnormalizedDistribution(f"{self.label}: total {total} != 1")

    def support(self) -> int:
        return len(self.table)


def mi_estimate(joint: ViewDistribution) -> float:
    """Mutual information of a joint (secret, view) table, log base
    joint.base, with 0 log 0 = 0.  Symmetric and non-negative."""
    total = sum(joint.table.values())
    ok = total == 1 if isinstance(total, (Fraction, int)) else abs(total - 1.0) <= 1e-12
    if not ok:
        raise UnnormalizedDistribution(f"joint table sums to {total}")
    ps: Dict[object, object] = {}
    pv: Dict[object, object] = {}
    for (s, v), p in joint.table.items():
        ps[s] = ps.get(s, 0) + p
        pv[v] = pv.get(v, 0) + p
    acc = 0.0
    for (s, v), p in joint.table.items():
        if p > 0:
            acc += float(p) * math.log(float(p) / (float(ps[s]) * float(pv[v])))
    return max(0.0, acc / math.log(joint.base))


# ---------------------------------------------------------------------------
# server T-privacy


@dataclass(frozen=True)
class TPrivacyReport:
    m: int
    servers: Tuple[int, ...]
    t_level: int
    verdict: str
    states: int
    elapsed: float
    distributions: Tuple[ViewDistribution, ...]

    def as_dict(self) -> dict:
        return {
            "audit": "t-privacy",
            "user": self.m,
            "servers": list(self.servers),
            "t_level": self.t_level,
            "verdict": self.verdict,
            "states": self.states,
            "elapsed_s": round(self.elapsed, 6),
        }


def _check_servers(params: SchemeParams, servers: Sequence[int]) -> Tuple[int, ...]:
    out = tuple(sorted(set(int(n) for n in servers)))
    if not out:
        raise IndexOutOfRange("server subset is empty")
    for n in out:
        if not 1 <= n <= params.N:
            raise IndexOutOfRange(f"server {n} outside [1,{params.N}]")
    return out


def audit_t_privacy(
    params: SchemeParams,
    m: int,
    servers: Sequence[int],
    budget: int = DEFAULT_BUDGET,
    t_level: Optional[int] = None,
) -> TPrivacyReport:
    """Enumerate user m's noise space and compare, across every candidate
    index, the exact distribution of the queries the given servers see.

    PASS means the tables are identical, i.e. the coalition learns nothing.
    Coalitions larger than the masking degree are expected to FAIL; passing
    t_level=0 audits the unmasked scheme (plain basis-vector queries).
    """
    t0 = time.perf_counter()
    servers = _check_servers(params, servers)
    if not 1 <= m <= params.M:
        raise IndexOutOfRange(f"user {m} outside [1,{params.M}]")
    Tm = params.T[m - 1] if t_level is None else int(t_level)
    if Tm < 0:
        raise InfeasibleParams("t_level must be >= 0")
    Km, L, q = params.K[m - 1], params.L, params.q
    digits = Km * Tm * L
    states = q**digits
    if states > budget:
        raise BudgetExceeded(f"noise space {q}^{digits} exceeds budget {budget}")
    spec = params.field_spec()

    tables: List[Dict[tuple, int]] = []
    for theta in range(1, Km + 1):
        counts: Dict[tuple, int] = {}
        for assign in itertools.product(range(q), repeat=digits):
            noise = tuple(
                tuple(
                    FieldVector(
                        assign[(l * Tm + t) * Km : (l * Tm + t) * Km + Km], spec
                    )
                    for t in range(Tm)
                )
                for l in range(L)
            )
            secret = UserSecret(m=m, theta=theta, noise=noise)
            view = tuple(
                tuple(query_at_point(params, secret, l, params.alpha[n - 1]).residues())
                for n in servers
                for l in range(1, L + 1)
            )
            counts[view] = counts.get(view, 0) + 1
        tables.append(counts)

    verdict = "PASS" if all(t == tables[0] for t in tables[1:]) else "FAIL"
    dists = tuple(
        ViewDistribution(
            label=f"user-{m} queries at servers {servers}, index {theta}",
            table={k: Fraction(v, states) for k, v in tbl.items()},
            base=q,
        )
        for theta, tbl in enumerate(tables, start=1)
    )
    return TPrivacyReport(
        m=m,
        servers=servers,
        t_level=Tm,
        verdict=verdict,
        states=Km * states,
        elapsed=time.perf_counter() - t0,
        distributions=dists,
    )


# ---------------------------------------------------------------------------
# storage X-security


@dataclass(frozen=True)
class XSecurityReport:
    servers: Tuple[int, ...]
    verdict: str
    states: int
    elapsed: float
    distributions: Tuple[ViewDistribution, ...]

    def as_dict(self) -> dict:
        return {
            "audit": "x-security",
            "servers": list(self.servers),
            "verdict": self.verdict,
            "states": self.states,
            "elapsed_s": round(self.elapsed, 6),
        }


def _default_database_pair(params: SchemeParams) -> Tuple[MessageDatabase, MessageDatabase]:
    spec = params.field_spec()
    size = 1
    for k in params.K:
        size *= k
    zeros = MessageDatabase.zeros(params)
    tensors = tuple(
        Tensor(params.K, [(1 + i + l) % params.q for i in range(size)], spec)
        for l in range(params.L)
    )
    return zeros, MessageDatabase(params, tensors)


def audit_x_security(
    params: SchemeParams,
    servers: Sequence[int],
    budget: int = DEFAULT_BUDGET,
    databases: Optional[Tuple[MessageDatabase, MessageDatabase]] = None,
) -> XSecurityReport:
    """Enumerate the storage masking space and compare the exact share
    distribution the given servers hold for two fixed distinct databases.

    PASS means the coalition's shares reveal nothing about the data.
    Coalitions of more than X servers (and any coalition when X=0) are
    expected to FAIL.
    """
    t0 = time.perf_counter()
    servers = _check_servers(params, servers)
    q, L, X = params.q, params.L, params.X
    spec = params.field_spec()
    size = 1
    for k in params.K:
        size *= k
    digits = X * L * size
    states = q**digits
    if states > budget:
        raise BudgetExceeded(f"mask space {q}^{digits} exceeds budget {budget}")
    dbs = databases if databases is not None else _default_database_pair(params)

    tables: List[Dict[tuple, int]] = []
    for db in dbs:
        counts: Dict[tuple, int] = {}
        for assign in itertools.product(range(q), repeat=digits):
            masks = [
                [
                    Tensor(
                        params.K,
                        assign[(l * X + x) * size : (l * X + x) * size + size],
                        spec,
                    )
                    for x in range(X)
                ]
                for l in range(L)
            ]
            view = tuple(
                tuple(storage_at_point(db, masks, l, params.alpha[n - 1]).residues())
                for n in servers
                for l in range(1, L + 1)
            )
            counts[view] = counts.get(view, 0) + 1
        tables.append(counts)

    verdict = "PASS" if all(t == tables[0] for t in tables[1:]) else "FAIL"
    dists = tuple(
        ViewDistribution(
            label=f"shares at servers {servers}, database {i}",
            table={k: Fraction(v, states) for k, v in tbl.items()},
            base=q,
        )
        for i, tbl in enumerate(tables)
    )
    return XSecurityReport(
        servers=servers,
        verdict=verdict,
        states=len(tables) * states,
        elapsed=time.perf_counter() - t0,
        distributions=dists,
    )


# ---------------------------------------------------------------------------
# inter-user privacy


@dataclass(frozen=True)
class LeakageReport:
    """MI of (other users' indices ; observer's download) given what the
    observer already knows, against the analytic cap where one applies."""

    empirical_mi: float
    analytic_bound: Optional[float]
    q: int
    K: Tuple[int, ...]
    samples: Union[int, str]
    raw_plugin: Optional[float] = None
    null_mean: Optional[float] = None
    null_sd: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "empirical_mi": self.empirical_mi,
            "analytic_bound": self.analytic_bound,
            "q": self.q,
            "K": list(self.K),
            "samples": self.samples,
            "raw_plugin": self.raw_plugin,
            "null_mean": self.null_mean,
            "null_sd": self.null_sd,
        }


@dataclass(frozen=True)
class InterUserReport:
    observer: int
    with_common_randomness: bool
    exact: bool
    verdict: str
    mi_exact_zero: Optional[bool]
    leakage: LeakageReport
    states: int
    elapsed: float
    note: str

    def as_dict(self) -> dict:
        return {
            "audit": "inter-user",
            "observer": self.observer,
            "with_common_randomness": self.with_common_randomness,
            "exact": self.exact,
            "verdict": self.verdict,
            "mi_exact_zero": self.mi_exact_zero,
            "leakage": self.leakage.as_dict(),
            "states": self.states,
            "elapsed_s": round(self.elapsed, 6),
            "note": self.note,
        }


_PRIOR_NOTE = "latent data entries drawn uniformly over the field (audit prior)"


def _exact_regime(params: SchemeParams) -> bool:
    return (
        params.M == 2
        and params.L == 1
        and params.X == 0
        and params.T == (1, 1)
        and params.K[0] == params.K[1]
    )


def _exact_feasible(params: SchemeParams) -> bool:
    # hard implementation limits, separate from the user budget: the count
    # array must fit in memory and the latent space must enumerate in
    # minutes, not hours
    K, q = params.K[0], params.q
    entries = K * K * q**K * q * q**params.N
    states = K * K * q ** (2 * K + K * K)
    return entries <= 2**28 and states <= 2**35


def _budget_metric(params: SchemeParams, observer: int, with_cr: bool) -> int:
    q = params.q
    noise = q ** sum(k * t * params.L for k, t in zip(params.K, params.T))
    cr = q**params.interference_dims if with_cr else 1
    others = 1
    for m, k in enumerate(params.K, start=1):
        if m != observer:
            others *= k
    return noise * cr * others


def _plugin_mi(s_ids: np.ndarray, v_ids: np.ndarray, n_s: int, n_v: int, base: int) -> float:
    joint = np.bincount(s_ids * n_v + v_ids, minlength=n_s * n_v).reshape(n_s, n_v)
    n = joint.sum()
    ps = joint.sum(axis=1, keepdims=True)
    pv = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    terms = joint[nz] / n * (
        np.log(joint[nz].astype(np.float64) * n)
        - np.log((ps * pv)[nz].astype(np.float64))
    )
    return float(terms.sum() / np.log(base))


def _debiased_mi(
    s_ids: np.ndarray, v_keys: np.ndarray, n_s: int, base: int, rng, permutations: int = 20
) -> Tuple[float, float, float, float]:
    """Plug-in MI minus a permutation-null estimate of its bias.

    Shuffling the secret column destroys any true dependence, so the mean
    plug-in MI over shuffles estimates the bias of the estimator at this
    sample size and view sparsity.
    """
    _, v_ids = np.unique(v_keys, return_inverse=True)
    n_v = int(v_ids.max()) + 1 if v_ids.size else 1
    plug = _plugin_mi(s_ids, v_ids, n_s, n_v, base)
    nulls = []
    for _ in range(permutations):
        perm = rng.permutation(s_ids.shape[0])
        nulls.append(_plugin_mi(s_ids[perm], v_ids, n_s, n_v, base))
    null_mean = float(np.mean(nulls))
    null_sd = float(np.std(nulls))
    return plug, plug - null_mean, null_mean, null_sd


def _exact_inter_user(
    params: SchemeParams, observer: int, with_cr: bool
) -> Tuple[bool, float, int]:
    """Full enumeration over every latent variable; returns whether the
    conditional distributions are exactly independent, the MI in q-ary
    units, and the number of joint states counted.

    The two observers are covered by one enumeration: transposing the data
    tensor swaps the users' roles and is a bijection on the latent space,
    so the count array is the same for both.
    """
    q, K = params.q, params.K[0]
    counts = pair_view_counts(q, K, params.f[0], list(params.alpha))
    if with_cr:
        counts = cr_convolve(counts, q, list(params.alpha), params.interference_dims)
    states = int(counts.sum())
    # axes: secret index, conditioning index, conditioning noise, joint cell
    # value, answer tuple -> put the conditioning axes first
    arr = counts.transpose(1, 2, 3, 0, 4)
    rs = arr.sum(axis=-1, keepdims=True)
    cs = arr.sum(axis=-2, keepdims=True)
    tot = arr.sum(axis=(-1, -2), keepdims=True)
    lhs = arr * tot
    rhs = rs * cs
    exact_zero = bool(np.array_equal(lhs, rhs))
    if exact_zero:
        mi = 0.0
    else:
        nz = arr > 0
        g = float(arr.sum())
        mi = float(
            (
                arr[nz] / g
                * (np.log(lhs[nz].astype(np.float64)) - np.log(rhs[nz].astype(np.float64)))
            ).sum()
            / np.log(q)
        )
        mi = max(0.0, mi)
    return exact_zero, mi, states


def _sample_pair_regime(
    params: SchemeParams, with_cr: bool, samples: int, rng
) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized sampler for the two-user single-tensor regime with the
    conditioning cell fixed (observer index 1, observer noise 0, joint data
    entry 0).  Returns (secret ids, packed answer keys)."""
    q, K, N = params.q, params.K[0], params.N
    spec = params.field_spec()
    d = np.array([(params.f[0] - a) % q for a in params.alpha], dtype=np.int64)
    inv_d = np.array([pow(int(v), q - 2, q) for v in d], dtype=np.int64)
    alphas = np.array(params.alpha, dtype=np.int64)

    tsec = rng.integers(0, K, size=samples).astype(np.int64)
    z = np.asarray(sample_residues(spec, rng, samples * K), dtype=np.int64).reshape(samples, K)
    W = np.asarray(sample_residues(spec, rng, samples * K * K), dtype=np.int64).reshape(
        samples, K, K
    )
    W[np.arange(samples), tsec, 0] = 0  # conditioning: requested cell holds 0
    # observer's query vector is the plain first basis vector, so only the
    # first data column enters the answers
    col = W[:, :, 0]
    onehot = np.equal(np.arange(K)[None, :], tsec[:, None]).astype(np.int64)
    keys = np.zeros(samples, dtype=np.int64)
    for n in range(N):
        u = (onehot + d[n] * z) % q
        a_n = (col * u).sum(axis=1) % q * inv_d[n] % q
        keys = keys * q + a_n
    if with_cr:
        D = params.interference_dims
        cr = np.asarray(sample_residues(spec, rng, samples * D), dtype=np.int64).reshape(
            samples, D
        )
        digits = []
        rem = keys.copy()
        for _ in range(N):
            digits.append(rem % q)
            rem //= q
        digits = digits[::-1]
        keys = np.zeros(samples, dtype=np.int64)
        for n in range(N):
            off = np.zeros(samples, dtype=np.int64)
            p = 1
            for i in range(D):
                off = (off + p * cr[:, i]) % q
                p = p * int(alphas[n]) % q
            keys = keys * q + (digits[n] + off) % q
    return tsec, keys


def _sample_generic(
    params: SchemeParams, observer: int, with_cr: bool, samples: int, rng
) -> Tuple[np.ndarray, np.ndarray, int]:
    """Protocol-driven sampler for arbitrary parameters: observer index and
    noise pinned, other users' indices drawn uniformly, data cell at the
    requested tuple zeroed.  Slow (one protocol run per sample) but general.
    Returns (secret ids, packed answer keys, secret space size)."""
    q = params.q
    spec = params.field_spec()
    if q**params.N >= 2**62:
        raise BudgetExceeded("answer tuple does not fit a packed 64-bit key")
    others = [m for m in range(1, params.M + 1) if m != observer]
    n_s = 1
    for m in others:
        n_s *= params.K[m - 1]
    obs_secret = UserSecret(
        m=observer,
        theta=1,
        noise=tuple(
            tuple(
                FieldVector([0] * params.K[observer - 1], spec)
                for _ in range(params.T[observer - 1])
            )
            for _ in range(params.L)
        ),
    )
    size = 1
    for k in params.K:
        size *= k
    s_ids = np.zeros(samples, dtype=np.int64)
    keys = np.zeros(samples, dtype=np.int64)
    for i in range(samples):
        thetas = [0] * params.M
        thetas[observer - 1] = 1
        sid = 0
        for m in others:
            t = int(rng.integers(0, params.K[m - 1])) + 1
            thetas[m - 1] = t
            sid = sid * params.K[m - 1] + (t - 1)
        secrets = [
            obs_secret if m == observer else gen_user_secret(params, m, thetas[m - 1], rng)
            for m in range(1, params.M + 1)
        ]
        flat = list(sample_residues(spec, rng, size * params.L))
        idx = 0
        for t, k in zip(thetas, params.K):
            idx = idx * k + (t - 1)
        tensors = []
        for l in range(params.L):
            block = flat[l * size : (l + 1) * size]
            block[idx] = 0  # conditioning: requested cell holds 0
            tensors.append(Tensor(params.K, block, spec))
        db = MessageDatabase(params, tuple(tensors))
        masks = [
            [
                Tensor(params.K, sample_residues(spec, rng, size), spec)
                for _ in range(params.X)
            ]
            for _ in range(params.L)
        ]
        if with_cr:
            cr = CommonRandomness(
                values=tuple(
                    spec.element(v)
                    for v in sample_residues(spec, rng, params.interference_dims)
                )
            )
        else:
            cr = CommonRandomness(values=tuple([spec.zero()] * params.interference_dims))
        key = 0
        for n in range(1, params.N + 1):
            key = key * q + answer_at_point(db, masks, secrets, cr, params.alpha[n - 1])
        s_ids[i] = sid
        keys[i] = key
    return s_ids, keys, n_s


def audit_inter_user_privacy(
    params: SchemeParams,
    observer: int,
    with_common_randomness: bool = True,
    budget: int = DEFAULT_BUDGET,
    samples: int = 10**5,
    seed: int = 2026,
    method: str = "auto",
) -> InterUserReport:
    """Audit what the observer user's download reveals about the other
    users' indices, given the observer's own index, noise, and the
    retrieved cell value.

    Exact enumeration runs when the parameters are in the two-user,
    single-tensor, replicated-storage regime with equal index ranges and
    the randomness space fits the budget; otherwise Monte-Carlo sampling
    with a permutation-null bias correction.  method forces a path:
    "auto", "exact", or "sample".
    """
    t0 = time.perf_counter()
    if params.M < 2:
        raise InfeasibleParams("inter-user audit needs at least two users")
    if not 1 <= observer <= params.M:
        raise IndexOutOfRange(f"observer {observer} outside [1,{params.M}]")
    if method not in ("auto", "exact", "sample"):
        raise ValueError(f"unknown method {method!r}")
    q = params.q
    bound = None
    if params.M == 2 and params.T == (1, 1) and params.K[0] == params.K[1] and params.K[0] >= 2:
        bound = float(leakage_bound(q, params.K[0]))

    can_exact = (
        _exact_regime(params)
        and _exact_feasible(params)
        and _budget_metric(params, observer, with_common_randomness) <= budget
    )
    if method == "exact" and not can_exact:
        raise BudgetExceeded(
            "exact enumeration not available for these parameters within budget"
        )
    use_exact = can_exact if method == "auto" else method == "exact"

    if use_exact:
        exact_zero, mi, states = _exact_inter_user(params, observer, with_common_randomness)
        if with_common_randomness:
            verdict = "PASS" if exact_zero else "FAIL"
        else:
            verdict = "PASS" if exact_zero or (bound is not None and mi <= bound) else "FAIL"
        leak = LeakageReport(
            empirical_mi=mi,
            analytic_bound=bound,
            q=q,
            K=params.K,
            samples="exact",
        )
        return InterUserReport(
            observer=observer,
            with_common_randomness=with_common_randomness,
            exact=True,
            verdict=verdict,
            mi_exact_zero=exact_zero,
            leakage=leak,
            states=states,
            elapsed=time.perf_counter() - t0,
            note=_PRIOR_NOTE,
        )

    if samples < 2:
        raise BudgetExceeded(
            "enumeration exceeds budget and sampling is disabled (samples < 2)"
        )
    rng = Streams(seed).generator(f"audit:interuser:{observer}")
    if _exact_regime(params):
        s_ids, keys = _sample_pair_regime(params, with_common_randomness, samples, rng)
        n_s = params.K[0]
    else:
        s_ids, keys, n_s = _sample_generic(
            params, observer, with_common_randomness, samples, rng
        )
    plug, debiased, null_mean, null_sd = _debiased_mi(s_ids, keys, n_s, q, rng)
    leak = LeakageReport(
        empirical_mi=max(0.0, debiased),
        analytic_bound=bound,
        q=q,
        K=params.K,
        samples=samples,
        raw_plugin=plug,
        null_mean=null_mean,
        null_sd=null_sd,
    )
    return InterUserReport(
        observer=observer,
        with_common_randomness=with_common_randomness,
        exact=False,
        verdict="ESTIMATE",
        mi_exact_zero=None,
        leakage=leak,
        states=samples,
        elapsed=time.perf_counter() - t0,
        note=_PRIOR_NOTE,
    )
