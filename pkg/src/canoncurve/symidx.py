"""Symmetric multi-index tables and symmetrized matrix powers.

Flat indices are 0-based in code; multi-index entries use 1-based labels
(so entry ``(1, 2)`` means the pair of the first and second basis elements),
which keeps tables readable next to the mathematics.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .fieldkit import FieldContext, det, inverse

DIAG_FIRST = "DiagFirst"
ROW_MAJOR = "RowMajor"


def count_sym(g, n):
    """M_n, the number of nondecreasing n-tuples over 1..g."""
    return math.comb(g + n - 1, n)


def count_diff(g, n):
    """N_n, the dimension of weight-n differentials for genus g."""
    return (2 * n - 1) * (g - 1) + (1 if n == 1 else 0)


def _diag_first_2(g):
    out = [(i, i) for i in range(1, g + 1)]
    out += [(i, j) for i in range(1, g + 1) for j in range(i + 1, g + 1)]
    return out


def _diag_first_3(g):
    # the first 6g-8 entries follow the fixed prefix pattern; the rest are
    # the remaining triples in lexicographic order
    if g == 1:
        return [(1, 1, 1)]
    head = [(i, i, i) for i in range(1, g + 1)]
    head += [(1, 1, k) for k in range(3, g + 1)]
    head += [(2, 2, k) for k in range(3, g + 1)]
    head += [tuple(sorted((1, 2, k))) for k in range(1, g + 1)]
    head += [(1, k, k) for k in range(3, g + 1)]
    head += [(2, k, k) for k in range(3, g + 1)]
    seen = set(head)
    rest = [t for t in itertools.combinations_with_replacement(range(1, g + 1), 3) if t not in seen]
    return head + rest


def _row_major_2(g):
    # pairs (j, i) with j <= i grouped by the smaller label: all pairs with
    # smaller label <= n' come first
    return [(j, i) for j in range(1, g + 1) for i in range(j, g + 1)]


def _chi(entry):
    out = 1
    for k in set(entry):
        out *= math.factorial(entry.count(k))
    return out


@dataclass(frozen=True)
class SymIndexTable:
    g: int
    n: int
    order: str
    entries: tuple
    chi: tuple

    def index(self, entry):
        """Flat (0-based) position of a multi-index given in any order."""
        return self._lookup()[tuple(sorted(entry))]

    def _lookup(self):
        cache = self.__dict__.get("_lk")
        if cache is None:
            cache = {e: k for k, e in enumerate(self.entries)}
            object.__setattr__(self, "_lk", cache)
        return cache

    def __len__(self):
        return len(self.entries)

    def to_json(self):
        return {"g": self.g, "n": self.n, "order": self.order,
                "entries": [list(e) for e in self.entries], "chi": list(self.chi)}


def build(g, n, order=DIAG_FIRST):
    if g < 1:
        raise ValueError("g must be positive")
    if order == DIAG_FIRST and n == 1:
        entries = [(i,) for i in range(1, g + 1)]
    elif order == DIAG_FIRST and n == 2:
        entries = _diag_first_2(g)
    elif order == DIAG_FIRST and n == 3:
        entries = _diag_first_3(g)
    elif order == ROW_MAJOR and n == 2:
        entries = _row_major_2(g)
    else:
        raise ValueError(f"unsupported table (g={g}, n={n}, order={order})")
    assert len(entries) == count_sym(g, n)
    return SymIndexTable(g, n, order, tuple(entries), tuple(_chi(e) for e in entries))


def sym_power(B, table, context=None):
    """(B...B)_{ij} = sum over s in S_n of prod_m B[entry_i[m], s(entry_j)[m]]."""
    B = np.asarray(B)
    g, n = table.g, table.n
    if B.shape != (g, g):
        raise ValueError(f"expected a {g}x{g} matrix, got {B.shape}")
    perms = list(itertools.permutations(range(n)))
    ent = np.array(table.entries) - 1
    size = len(ent)
    if B.dtype != object:
        out = np.zeros((size, size), dtype=np.result_type(B.dtype, float))
        for s in perms:
            term = np.ones((size, size), dtype=out.dtype)
            for m in range(n):
                term = term * B[np.ix_(ent[:, m], ent[:, s[m]])]
            out += term
        return out
    out = np.zeros((size, size), dtype=object)
    for s in perms:
        term = np.ones((size, size), dtype=object)
        for m in range(n):
            term = term * B[np.ix_(ent[:, m], ent[:, s[m]])]
        out = out + term
    return context.reduce(out) if context is not None else out


def chi_weight(table, context=None):
    """Vector of chi^{-1} in the requested context (floats when none given)."""
    if context is None or context.kind == "complex":
        return 1.0 / np.array(table.chi, dtype=float)
    return np.array([context.inv(context.coerce(c)) for c in table.chi], dtype=object)


def index_sum_check(f, table, context=None):
    """Check the reduction of a full I_g^n sum to the flat index range.

    ``f`` is an array of shape (g,)*n.  Returns ``(general, symmetric)``:
    ``general`` is whether sum_{I_g^n} f = sum_i chi_i^{-1} sum_{s in P_n}
    f(s(entry_i)); ``symmetric`` whether the shortcut n! sum_i chi_i^{-1}
    f(entry_i) agrees as well (it must when f is completely symmetric).
    """
    f = np.asarray(f)
    n = table.n
    perms = list(itertools.permutations(range(n)))
    conv = (lambda x: context.coerce(x)) if context is not None and context.exact else (
        (lambda x: Fraction(x)) if f.dtype == object else (lambda x: x))
    full = conv(sum(f.reshape(-1).tolist()))
    gen, sym = conv(0), conv(0)
    for e, c in zip(table.entries, table.chi):
        idx = tuple(k - 1 for k in e)
        w = context.inv(context.coerce(c)) if context is not None and context.exact else Fraction(1, c)
        gen += w * sum(f[tuple(idx[s[m]] for m in range(n))] for s in perms)
        sym += w * math.factorial(n) * f[idx]
    if context is not None and context.kind == "prime":
        full, gen, sym = full % context.p, gen % context.p, sym % context.p
    return full == gen, full == sym


def weighted_power(B, table, context):
    """The matrix (B...B)_{ij} chi_j^{-1}."""
    P = sym_power(B, table, context)
    w = chi_weight(table, context)
    out = P * w[None, :]
    return context.reduce(out) if context is not None and context.exact else out


def det_power_identity_check(B, table, context):
    """Verify the determinant identities for the symmetrized power of B.

    Returns a dict with ``inverse_product`` (det of the chi-weighted power of B
    times that of B^{-1} equals 1) and ``exponent`` (det of the weighted power
    equals det(B)^{n M_n / g}).
    """
    B = context.array(B)
    dB = det(B, context)
    if context.is_zero(dB):
        raise ValueError("B must be invertible")
    Binv = inverse(B, context)
    d1 = det(weighted_power(B, table, context), context)
    d2 = det(weighted_power(Binv, table, context), context)
    expo = table.n * len(table) // table.g
    target = dB ** expo
    if context.kind == "prime":
        ok1 = d1 * d2 % context.p == 1
        ok2 = d1 == pow(dB, expo, context.p)
    elif context.kind == "rational":
        ok1 = d1 * d2 == 1
        ok2 = d1 == target
    else:
        ok1 = abs(d1 * d2 - 1) <= 1e-10
        ok2 = abs(d1 - target) <= 1e-10 * max(1.0, abs(target))
    return {"inverse_product": bool(ok1), "exponent": bool(ok2), "power": expo}
