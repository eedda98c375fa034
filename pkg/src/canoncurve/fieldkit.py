"""Field contexts and small dense linear algebra.

Three kinds of scalars are supported:

* ``prime``    integers modulo a prime p < 2**62
* ``rational`` :class:`fractions.Fraction`
* ``complex``  numpy complex128 with a tolerance used for every rank decision

Exact matrices are stored as numpy object arrays of Python ints or Fractions,
approximate ones as complex128 arrays.  Everything here is a pure function of
its inputs.
"""
from __future__ import annotations

import math

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

# largest prime below 2**62 that is 3 mod 4 (square roots are a single power)
DEFAULT_PRIME = 2**62 - 57


class SingularMatrixError(ArithmeticError):
    """Raised when an inverse is requested for a (numerically) singular matrix."""

    def __init__(self, message, pivot=0.0):
        super().__init__(message)
        self.pivot = pivot


def _is_probable_prime(p):
    if p < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for q in small:
        if p % q == 0:
            return p == q
    d, s = p - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    # deterministic for p < 3.3e24 with these witnesses
    for a in small:
        x = pow(a, d, p)
        if x in (1, p - 1):
            continue
        for _ in range(s - 1):
            x = x * x % p
            if x == p - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class FieldContext:
    kind: str
    p: int | None = None
    tol: float = 1e-8

    def __post_init__(self):
        if self.kind == "prime":
            if self.p is None or not (2 <= self.p < 2**62) or not _is_probable_prime(self.p):
                raise ValueError(f"modulus must be a prime below 2**62, got {self.p}")
        elif self.kind == "complex":
            if not self.tol > 0:
                raise ValueError("complex context needs a positive tolerance")
        elif self.kind != "rational":
            raise ValueError(f"unknown field kind {self.kind!r}")

    @classmethod
    def prime_field(cls, p=DEFAULT_PRIME):
        return cls("prime", p)

    @classmethod
    def rational(cls):
        return cls("rational")

    @classmethod
    def complex_approx(cls, tol=1e-8):
        return cls("complex", tol=tol)

    @property
    def exact(self):
        return self.kind != "complex"

    @property
    def dtype(self):
        return np.complex128 if self.kind == "complex" else object

    def describe(self):
        if self.kind == "prime":
            return {"kind": "prime", "p": self.p}
        if self.kind == "complex":
            return {"kind": "complex", "tol": self.tol}
        return {"kind": "rational"}

    # scalar helpers -------------------------------------------------------
    def coerce(self, x):
        if self.kind == "prime":
            if isinstance(x, Fraction):
                return x.numerator * pow(x.denominator, -1, self.p) % self.p
            return int(x) % self.p
        if self.kind == "rational":
            return Fraction(x)
        return complex(x)

    def zero(self):
        return self.coerce(0)

    def one(self):
        return self.coerce(1)

    def inv(self, x):
        if self.kind == "prime":
            if x % self.p == 0:
                raise ZeroDivisionError("inverse of zero in prime field")
            return pow(int(x), -1, self.p)
        if self.kind == "rational":
            return 1 / Fraction(x)
        return 1.0 / x

    def is_zero(self, x, scale=1.0):
        if self.kind == "prime":
            return x % self.p == 0
        if self.kind == "rational":
            return x == 0
        return abs(x) <= self.tol * scale

    def array(self, rows):
        """Coerce a nested sequence (or array) into this context's storage."""
        if self.kind == "complex":
            return np.asarray(rows, dtype=np.complex128)
        src = np.asarray(rows, dtype=object)
        out = np.empty(src.shape, dtype=object)
        flat_in, flat_out = src.reshape(-1), out.reshape(-1)
        for k, v in enumerate(flat_in):
            flat_out[k] = self.coerce(v)
        return out

    def reduce(self, arr):
        """Bring an object array back into canonical representatives."""
        if self.kind == "prime":
            return arr % self.p
        return arr

    def random_array(self, rng, shape):
        if self.kind == "prime":
            vals = [int(v) for v in rng.integers(0, 2**62, size=int(np.prod(shape)))]
            out = np.empty(len(vals), dtype=object)
            out[:] = [v % self.p for v in vals]
            return out.reshape(shape)
        if self.kind == "rational":
            num = rng.integers(-20, 21, size=shape)
            den = rng.integers(1, 8, size=shape)
            return self.array([[Fraction(int(a), int(b)) for a, b in zip(r1, r2)]
                               for r1, r2 in zip(np.atleast_2d(num), np.atleast_2d(den))]).reshape(shape)
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    def matmul(self, a, b):
        if self.kind == "complex":
            return np.asarray(a) @ np.asarray(b)
        return self.reduce(np.dot(a, b))


@dataclass(frozen=True)
class SampleMatrix:
    """Values f_i(x_j) of a family of functions on a finite sample set."""

    entries: np.ndarray
    context: FieldContext

    def __post_init__(self):
        if self.entries.ndim != 2 or 0 in self.entries.shape:
            raise ValueError("sample matrix must be 2-d with positive dimensions")

    @classmethod
    def from_rows(cls, rows, context):
        return cls(context.array(rows), context)

    @property
    def rows(self):
        return self.entries.shape[0]

    @property
    def cols(self):
        return self.entries.shape[1]


def _entries(m):
    return (m.entries, m.context) if isinstance(m, SampleMatrix) else (m, None)


def _bareiss_det(a, p=None):
    """Fraction-free elimination on an integer matrix (exact division only).

    With ``p`` given the same recurrence runs modulo p, where the exact
    division becomes multiplication by an inverse.
    """
    a = [list(r) for r in a]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        piv = a[k][k]
        inv_prev = pow(prev, -1, p) if p else None
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                t = a[i][j] * piv - a[i][k] * a[k][j]
                a[i][j] = t * inv_prev % p if p else t // prev
        prev = piv
    d = sign * a[n - 1][n - 1]
    return d % p if p else d


def det(m, context=None):
    """Determinant of a square matrix in the given (or attached) context."""
    a, ctx = _entries(m)
    ctx = context or ctx
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"det needs a square matrix, got shape {a.shape}")
    if ctx is None or ctx.kind == "complex":
        return complex(np.linalg.det(a.astype(np.complex128)))
    if a.shape[0] == 0:
        return ctx.one()
    if ctx.kind == "prime":
        return _bareiss_det([[int(x) % ctx.p for x in r] for r in a], ctx.p)
    # rational: clear denominators row by row, then integer Bareiss
    scale = Fraction(1)
    rows = []
    for r in a:
        den = 1
        for x in r:
            den = math.lcm(den, Fraction(x).denominator)
        rows.append([int(Fraction(x) * den) for x in r])
        scale /= den
    return Fraction(_bareiss_det(rows)) * scale


def _exact_rref(a, ctx):
    """Reduced row echelon form over an exact field; returns (rref, pivot columns)."""
    a = [list(r) for r in a]
    rows, cols = len(a), len(a[0]) if a else 0
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if not ctx.is_zero(a[i][c])), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = ctx.inv(a[r][c])
        a[r] = [ctx.coerce(x * inv) for x in a[r]]
        for i in range(rows):
            if i != r and not ctx.is_zero(a[i][c]):
                f = a[i][c]
                a[i] = [ctx.coerce(x - f * y) for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return a, pivots


def rank_nullspace(m, tol=None, context=None):
    """Rank and a nullspace basis (list of column-coefficient vectors).

    Approximate rule: singular values below ``tol * sigma_max`` count as zero;
    the nullspace is spanned by the matching right singular vectors.
    """
    a, ctx = _entries(m)
    ctx = context or ctx
    a = np.asarray(a)
    cols = a.shape[1]
    if ctx is None or ctx.kind == "complex":
        tol = tol if tol is not None else (ctx.tol if ctx else 1e-8)
        a = a.astype(np.complex128)
        if not np.any(a):
            return 0, [v for v in np.eye(cols, dtype=np.complex128)]
        _, s, vh = np.linalg.svd(a)
        rank = int(np.sum(s > tol * s[0]))
        return rank, [vh[k].conj() for k in range(rank, cols)]
    red, pivots = _exact_rref(a, ctx)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        v = [ctx.zero()] * cols
        v[f] = ctx.one()
        for row, pc in enumerate(pivots):
            v[pc] = ctx.coerce(-red[row][f])
        basis.append(np.array(v, dtype=object))
    return len(pivots), basis


def inverse(m, context=None):
    """Matrix inverse; raises SingularMatrixError with the failing pivot size.

    Approximate matrices count as singular when the smallest singular value is
    below 1e-14 of the largest.
    """
    a, ctx = _entries(m)
    wrap = isinstance(m, SampleMatrix)
    ctx = context or ctx
    a = np.asarray(a)
    n = a.shape[0]
    if a.ndim != 2 or n != a.shape[1]:
        raise ValueError(f"inverse needs a square matrix, got shape {a.shape}")
    if ctx is None or ctx.kind == "complex":
        a = a.astype(np.complex128)
        s = np.linalg.svd(a, compute_uv=False)
        if s[0] == 0 or s[-1] <= 1e-14 * s[0]:
            raise SingularMatrixError("matrix is numerically singular", float(s[-1]))
        out = np.linalg.inv(a)
    else:
        aug = np.concatenate([a, ctx.array(np.eye(n, dtype=int))], axis=1)
        red, pivots = _exact_rref(aug, ctx)
        if pivots[:n] != list(range(n)):
            raise SingularMatrixError("matrix is singular", 0)
        out = np.array([r[n:] for r in red], dtype=object)
    return SampleMatrix(out, ctx) if wrap else out
