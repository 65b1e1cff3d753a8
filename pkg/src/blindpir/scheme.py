"""Scheme parameters, feasibility checks, and exact rate calculators.

All rates and bounds are :class:`fractions.Fraction`, never floats, so
comparisons in tests and reports are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from .errors import (
    DuplicatePoints,
    FieldTooSmall,
    InfeasibleParams,
    NonPrimeModulus,
    NotPerfectSquare,
)
from .field import FieldSpec, is_prime


@dataclass(frozen=True)
class SchemeParams:
    """Validated parameter set for one retrieval instance.

    N servers each hold an X-secure share of the full K_1 x ... x K_M
    database.  User m keeps its index theta_m private against any T_m
    colluding servers.  L = N - X - sum(T) symbols are decoded per answer
    vector, so the rate is L/N.
    """

    N: int
    M: int
    T: Tuple[int, ...]
    X: int
    K: Tuple[int, ...]
    q: int
    f: Tuple[int, ...] = field(default=None)  # type: ignore[assignment]
    alpha: Tuple[int, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "T", tuple(int(t) for t in self.T))
        object.__setattr__(self, "K", tuple(int(k) for k in self.K))
        if self.M < 1:
            raise InfeasibleParams(f"M={self.M} must be >= 1")
        if len(self.T) != self.M or len(self.K) != self.M:
            raise InfeasibleParams("T and K must have one entry per user")
        if any(t < 1 for t in self.T):
            raise InfeasibleParams("every T_m must be >= 1")
        if any(k < 1 for k in self.K):
            raise InfeasibleParams("every K_m must be >= 1")
        if self.X < 0:
            raise InfeasibleParams(f"X={self.X} must be >= 0")
        L = self.N - self.X - sum(self.T)
        if L < 1:
            raise InfeasibleParams(
                f"N={self.N} leaves L={L}; need N > X + sum(T) = {self.X + sum(self.T)}"
            )
        if not is_prime(self.q):
            raise NonPrimeModulus(f"q={self.q} is not prime")
        if self.q < L + self.N:
            raise FieldTooSmall(
                f"q={self.q} < L+N={L + self.N}: not enough distinct evaluation points"
            )
        f = self.f if self.f is not None else tuple(range(L))
        alpha = self.alpha if self.alpha is not None else tuple(range(L, L + self.N))
        f = tuple(v % self.q for v in f)
        alpha = tuple(v % self.q for v in alpha)
        if len(f) != L or len(alpha) != self.N:
            raise InfeasibleParams(
                f"need {L} f-points and {self.N} alpha-points, got {len(f)} and {len(alpha)}"
            )
        if len(set(f + alpha)) != L + self.N:
            raise DuplicatePoints("evaluation points collide mod q")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "alpha", alpha)

    @property
    def L(self) -> int:
        return self.N - self.X - sum(self.T)

    @property
    def interference_dims(self) -> int:
        return sum(self.T) + self.X

    def field_spec(self) -> FieldSpec:
        return FieldSpec(self.q)


def validate(
    N: int,
    M: int,
    T: Sequence[int],
    X: int,
    K: Sequence[int],
    q: int,
    f: Optional[Sequence[int]] = None,
    alpha: Optional[Sequence[int]] = None,
) -> SchemeParams:
    """Construct a validated SchemeParams, filling default evaluation
    points f_l = l-1 and a_n = L+n-1 when none are given."""
    return SchemeParams(
        N=N,
        M=M,
        T=tuple(T),
        X=X,
        K=tuple(K),
        q=q,
        f=tuple(f) if f is not None else None,
        alpha=tuple(alpha) if alpha is not None else None,
    )


def achievable_rate(params: SchemeParams) -> Fraction:
    """Symbols decoded per downloaded symbol: L/N = 1 - (X + sum(T))/N."""
    return Fraction(params.L, params.N)


def db_asymptotic_capacity(N: int, T1: int, T2: int) -> Fraction:
    """Two-user capacity limit as both K_m grow: max(0, 1 - (T1+T2)/N)."""
    if N < 1 or T1 < 1 or T2 < 1:
        raise InfeasibleParams("need N >= 1 and T1, T2 >= 1")
    return max(Fraction(0), 1 - Fraction(T1 + T2, N))


def mbxs_capacity_bounds(
    N, T: Sequence[int] = None, X: int = None, K: Sequence[int] = None
) -> Tuple[Fraction, Fraction]:
    """Lower and upper capacity bounds for finite K.

    Lower bound is the achieved rate 1 - (X + sum(T))/N.  Upper bound is
    min over users of (1 - (T_m + X)/N) / (1 - (T_m / (N - X))^K_m),
    which needs N > X to be defined.  Accepts either a SchemeParams or the
    four values (N, T, X, K) directly.
    """
    if isinstance(N, SchemeParams):
        N, T, X, K = N.N, N.T, N.X, N.K
    T = tuple(int(t) for t in T)
    K = tuple(int(k) for k in K)
    if len(T) != len(K) or not T:
        raise InfeasibleParams("T and K must be same nonempty length")
    if any(t < 1 for t in T) or any(k < 1 for k in K):
        raise InfeasibleParams("every T_m and K_m must be >= 1")
    if X < 0:
        raise InfeasibleParams(f"X={X} must be >= 0")
    if N <= X:
        raise InfeasibleParams(f"upper bound undefined for N={N} <= X={X}")
    lower = max(Fraction(0), 1 - Fraction(X + sum(T), N))
    upper = None
    for Tm, Km in zip(T, K):
        num = 1 - Fraction(Tm + X, N)
        den = 1 - Fraction(Tm, N - X) ** Km
        if den == 0:
            # T_m = N - X: no download helps; capacity is 0
            return Fraction(0), Fraction(0)
        cand = num / den
        upper = cand if upper is None else min(upper, cand)
    return lower, upper


def baseline_partition_rate(N: int) -> Fraction:
    """Rate of the single-user-scheme baseline that splits servers sqrt(N)/sqrt(N).

    Defined only when N is a perfect square; equals (1 - 1/sqrt(N))^2.
    """
    if N < 1:
        raise InfeasibleParams(f"N={N} must be >= 1")
    r = int(N**0.5)
    while r * r < N:
        r += 1
    if r * r != N:
        raise NotPerfectSquare(f"N={N} is not a perfect square")
    return (1 - Fraction(1, r)) ** 2


@dataclass(frozen=True)
class RateReport:
    """Side-by-side rates for one parameter point.  All fields live in
    [0, 1]; optional ones are None where the comparison does not apply
    (asymptotic capacity needs M=2 and X=0, baseline needs square N)."""

    N: int
    T: Tuple[int, ...]
    X: int
    K: Tuple[int, ...]
    achievable_rate: Fraction
    lower_bound: Fraction
    upper_bound: Fraction
    asymptotic_capacity: Optional[Fraction] = None
    baseline_rate: Optional[Fraction] = None

    def as_dict(self) -> dict:
        def enc(v):
            if v is None:
                return None
            return {"num": v.numerator, "den": v.denominator, "float": float(v)}

        return {
            "N": self.N,
            "T": list(self.T),
            "X": self.X,
            "K": list(self.K),
            "achievable_rate": enc(self.achievable_rate),
            "lower_bound": enc(self.lower_bound),
            "upper_bound": enc(self.upper_bound),
            "asymptotic_capacity": enc(self.asymptotic_capacity),
            "baseline_rate": enc(self.baseline_rate),
        }


def rate_report(params: SchemeParams) -> RateReport:
    lower, upper = mbxs_capacity_bounds(params)
    asym = None
    if params.M == 2 and params.X == 0:
        asym = db_asymptotic_capacity(params.N, params.T[0], params.T[1])
    base = None
    r = int(params.N**0.5)
    if r * r == params.N:
        base = baseline_partition_rate(params.N)
    return RateReport(
        N=params.N,
        T=params.T,
        X=params.X,
        K=params.K,
        achievable_rate=achievable_rate(params),
        lower_bound=lower,
        upper_bound=upper,
        asymptotic_capacity=asym,
        baseline_rate=base,
    )
