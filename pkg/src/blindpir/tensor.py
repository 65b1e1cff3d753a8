"""Dense tensors over F_q, mode-m tensor-vector products, and exact linear solving.

Containers are immutable after construction and hold canonical residues
wrapped as :class:`~blindpir.field.FieldElement`.  Mode and entry indices are
1-based at the API boundary; storage is flat row-major.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateEvaluationPoints,
    DimensionMismatch,
    FieldMismatch,
    IndexOutOfRange,
    SingularMatrix,
)
from .field import FieldElement, FieldSpec


def _coerce(data: Iterable, spec: FieldSpec) -> tuple:
    out = []
    for v in data:
        if isinstance(v, FieldElement):
            if v.spec.q != spec.q:
                raise FieldMismatch("mixed field specs in one container")
            out.append(v)
        else:
            out.append(FieldElement(int(v), spec))
    return tuple(out)


class FieldVector:
    __slots__ = ("data", "spec")

    def __init__(self, data: Iterable, spec: FieldSpec):
        self.spec = spec
        self.data = _coerce(data, spec)

    @property
    def len(self) -> int:
        return len(self.data)

    def __len__(self) -> int:
        return len(self.data)

    def __getitem__(self, i: int) -> FieldElement:
        return self.data[i]

    def __add__(self, other: "FieldVector") -> "FieldVector":
        if len(self) != len(other):
            raise DimensionMismatch("vector lengths differ")
        return FieldVector([a + b for a, b in zip(self.data, other.data)], self.spec)

    def scaled(self, c: FieldElement) -> "FieldVector":
        return FieldVector([c * a for a in self.data], self.spec)

    def residues(self) -> list:
        return [e.value for e in self.data]

    def __eq__(self, other):
        return (
            isinstance(other, FieldVector)
            and self.spec == other.spec
            and self.data == other.data
        )

    def __repr__(self):
        return f"FieldVector({self.residues()} mod {self.spec.q})"


class FieldMatrix:
    __slots__ = ("rows", "cols", "data", "spec")

    def __init__(self, rows: int, cols: int, data: Iterable, spec: FieldSpec):
        self.rows = rows
        self.cols = cols
        self.spec = spec
        self.data = _coerce(data, spec)
        if len(self.data) != rows * cols:
            raise DimensionMismatch(
                f"matrix data length {len(self.data)} != {rows}x{cols}"
            )

    def at(self, r: int, c: int) -> FieldElement:
        """Entry in row r, column c (1-based)."""
        if not (1 <= r <= self.rows and 1 <= c <= self.cols):
            raise IndexOutOfRange(f"({r},{c}) outside {self.rows}x{self.cols}")
        return self.data[(r - 1) * self.cols + (c - 1)]

    def row(self, r: int) -> FieldVector:
        i = (r - 1) * self.cols
        return FieldVector(self.data[i : i + self.cols], self.spec)

    def mul_vec(self, x: FieldVector) -> FieldVector:
        if x.len != self.cols:
            raise DimensionMismatch("matrix-vector size mismatch")
        out = []
        for r in range(self.rows):
            acc = 0
            for c in range(self.cols):
                acc += self.data[r * self.cols + c].value * x.data[c].value
            out.append(acc % self.spec.q)
        return FieldVector(out, self.spec)

    def residues(self) -> list:
        return [e.value for e in self.data]

    def __repr__(self):
        return f"FieldMatrix({self.rows}x{self.cols} mod {self.spec.q})"


class Tensor:
    """Dense M-dimensional tensor with row-major flat storage."""

    __slots__ = ("dims", "data", "spec")

    def __init__(self, dims: Sequence[int], data: Iterable, spec: FieldSpec):
        self.dims = tuple(int(d) for d in dims)
        if any(d < 1 for d in self.dims):
            raise DimensionMismatch(f"nonpositive extent in {self.dims}")
        self.spec = spec
        self.data = _coerce(data, spec)
        size = 1
        for d in self.dims:
            size *= d
        if len(self.data) != size:
            raise DimensionMismatch(
                f"tensor data length {len(self.data)} != prod{self.dims}"
            )

    @classmethod
    def zeros(cls, dims: Sequence[int], spec: FieldSpec) -> "Tensor":
        size = 1
        for d in dims:
            size *= d
        return cls(dims, [0] * size, spec)

    def entry(self, *indices: int) -> FieldElement:
        """Entry at 1-based index tuple (k_1, ..., k_M)."""
        if len(indices) != len(self.dims):
            raise DimensionMismatch(
                f"expected {len(self.dims)} indices, got {len(indices)}"
            )
        flat = 0
        for k, d in zip(indices, self.dims):
            if not 1 <= k <= d:
                raise IndexOutOfRange(f"index {k} outside [1,{d}]")
            flat = flat * d + (k - 1)
        return self.data[flat]

    def __add__(self, other: "Tensor") -> "Tensor":
        if self.dims != other.dims:
            raise DimensionMismatch("tensor dims differ")
        return Tensor(self.dims, [a + b for a, b in zip(self.data, other.data)], self.spec)

    def scaled(self, c: FieldElement) -> "Tensor":
        return Tensor(self.dims, [c * a for a in self.data], self.spec)

    def residues(self) -> list:
        return [e.value for e in self.data]

    def residue_array(self) -> np.ndarray:
        return np.asarray(self.residues(), dtype=np.int64).reshape(self.dims)

    def __eq__(self, other):
        return (
            isinstance(other, Tensor)
            and self.spec == other.spec
            and self.dims == other.dims
            and self.data == other.data
        )

    def __repr__(self):
        return f"Tensor(dims={self.dims} mod {self.spec.q})"


def basis_vector(K: int, theta: int, spec: FieldSpec) -> FieldVector:
    """The theta-th column of the KxK identity (theta is 1-based)."""
    if not 1 <= theta <= K:
        raise IndexOutOfRange(f"theta={theta} outside [1,{K}]")
    return FieldVector([1 if i == theta - 1 else 0 for i in range(K)], spec)


def mode_m_mul(A: Tensor, m: int, b: FieldVector) -> Tensor:
    """Mode-m product of A with column vector b.

    The m-th extent collapses to 1; entry (k_1,..,1,..,k_M) is the sum over
    k_m of A(k_1,..,k_M) * b(k_m).  Multilinear, so sums of vectors
    distribute through it.
    """
    M = len(A.dims)
    if not 1 <= m <= M:
        raise IndexOutOfRange(f"mode {m} outside [1,{M}]")
    Km = A.dims[m - 1]
    if b.len != Km:
        raise DimensionMismatch(f"vector length {b.len} != extent {Km} of mode {m}")
    q = A.spec.q
    inner = 1
    for d in A.dims[m:]:
        inner *= d
    outer = 1
    for d in A.dims[: m - 1]:
        outer *= d
    bvals = [e.value for e in b.data]
    avals = [e.value for e in A.data]
    out = []
    for o in range(outer):
        base = o * Km * inner
        for i in range(inner):
            acc = 0
            for k in range(Km):
                acc += avals[base + k * inner + i] * bvals[k]
            out.append(acc % q)
    new_dims = list(A.dims)
    new_dims[m - 1] = 1
    return Tensor(new_dims, out, A.spec)


def collapse(A: Tensor, vectors: Sequence[FieldVector]) -> FieldElement:
    """Chain mode-1..mode-M products, reducing A to a scalar."""
    if len(vectors) != len(A.dims):
        raise DimensionMismatch("need one vector per mode")
    cur = A
    for m, v in enumerate(vectors, start=1):
        cur = mode_m_mul(cur, m, v)
    return cur.data[0]


def cv_matrix(f: FieldVector, alpha: FieldVector, interference_dims: int) -> FieldMatrix:
    """Square Cauchy-Vandermonde matrix for decoding.

    Row n is (1/(f_1-a_n), ..., 1/(f_L-a_n), 1, a_n, ..., a_n^(D-1)) where
    D = interference_dims and L + D = N.  All L+N points must be pairwise
    distinct, which makes the matrix invertible over F_q.
    """
    L, N, D = f.len, alpha.len, interference_dims
    if L + D != N:
        raise DimensionMismatch(f"L + D = {L}+{D} != N = {N}")
    pts = f.residues() + alpha.residues()
    if len(set(pts)) != len(pts):
        raise DegenerateEvaluationPoints("evaluation points are not pairwise distinct")
    spec = f.spec
    rows = []
    for a in alpha.data:
        for fl in f.data:
            rows.append((fl - a).inv())
        p = spec.one()
        for _ in range(D):
            rows.append(p)
            p = p * a
    return FieldMatrix(N, N, rows, spec)


def solve(Mtx: FieldMatrix, y: FieldVector) -> FieldVector:
    """Solve Mtx x = y by Gaussian elimination with nonzero pivots."""
    if Mtx.rows != Mtx.cols:
        raise DimensionMismatch("matrix is not square")
    n = Mtx.rows
    if y.len != n:
        raise DimensionMismatch("rhs length != matrix size")
    q = Mtx.spec.q
    a = [list(Mtx.residues()[r * n : (r + 1) * n]) for r in range(n)]
    b = list(y.residues())
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise SingularMatrix(f"no pivot in column {col + 1}")
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            b[col], b[pivot] = b[pivot], b[col]
        pinv = pow(a[col][col], q - 2, q)
        a[col] = [v * pinv % q for v in a[col]]
        b[col] = b[col] * pinv % q
        for r in range(n):
            if r != col and a[r][col]:
                m = a[r][col]
                a[r] = [(v - m * w) % q for v, w in zip(a[r], a[col])]
                b[r] = (b[r] - m * b[col]) % q
    return FieldVector(b, Mtx.spec)
