"""Permutation sums of products of determinants.

A family f_1..f_g of functions is sampled at points x_1..x_P.  The pair
products ff_m = f_i f_j are indexed by the row-major surjection m, so that
pairs whose smaller label is <= n fill the first L flat indices.  Each flat
index sits in exactly two of the g+1 "d-tuples"; summing over all ways of
distributing the points over the flat indices turns a product of g+1
determinants of f into a multiple of one determinant of ff.

Code indices are 0-based.  ``m_index`` and the tuple helpers keep the 1-based
convention of the mathematics at the API boundary.
"""
from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fieldkit import FieldContext, det

FULL = "Full"
REDUCED = "ReducedPrimeM"
CHUNKED = "ChunkedParallel"


class BudgetExceeded(RuntimeError):
    def __init__(self, what, count, budget):
        super().__init__(f"{what}: enumeration size {count} exceeds budget {budget}")
        self.count = count
        self.budget = budget


class ConditionViolated(ValueError):
    def __init__(self, deviation):
        super().__init__(f"conditioning points violate f_i(p_j) = delta_ij (max deviation {deviation})")
        self.deviation = deviation


# --------------------------------------------------------------------------
# index bookkeeping

def m_index(g, i, j):
    """Flat position (1-based) of the unordered pair {i, j} in row-major order."""
    if not (1 <= i <= g and 1 <= j <= g):
        raise IndexError(f"pair ({i},{j}) out of range for g={g}")
    i, j = min(i, j), max(i, j)
    M = g * (g + 1) // 2
    return M - (g - i + 1) * (g - i + 2) // 2 + (j - i + 1)


@dataclass(frozen=True)
class TupleScheme:
    g: int
    n: int

    def __post_init__(self):
        if not (1 <= self.n <= self.g):
            raise ValueError("need 1 <= n <= g")

    @property
    def M(self):
        return self.g * (self.g + 1) // 2

    @property
    def L(self):
        k = self.g - self.n
        return self.M - k * (k + 1) // 2

    @property
    def m_table(self):
        """g x g array of 1-based flat indices."""
        g = self.g
        return np.array([[m_index(g, i, j) for j in range(1, g + 1)] for i in range(1, g + 1)])

    def slot(self, k, pos):
        """1-based flat index found at position ``pos`` of tuple ``k`` (both 1-based)."""
        return m_index(self.g, pos, k - 1) if pos <= k - 1 else m_index(self.g, k, pos)

    def tuple_slots(self, k, positions=None):
        positions = range(1, self.g + 1) if positions is None else positions
        return [self.slot(k, pos) for pos in positions]


def d_tuples(scheme, s, tuples=None):
    """The tuples d^k(s); ``s`` maps 1-based flat indices to point labels.

    ``s`` may be a dict or a sequence (position l-1 holds s_l).  Only the
    tuples listed in ``tuples`` (default all g+1) are built.
    """
    get = s.get if isinstance(s, dict) else (lambda l: s[l - 1] if l - 1 < len(s) else None)
    out = []
    for k in (tuples or range(1, scheme.g + 2)):
        row = []
        for l in scheme.tuple_slots(k):
            v = get(l)
            if v is None:
                raise KeyError(f"assignment missing flat index {l}")
            row.append(v)
        out.append(tuple(row))
    return out


def perm_sign(p):
    p = list(p)
    inv = sum(1 for a in range(len(p)) for b in range(a + 1, len(p)) if p[a] > p[b])
    return -1 if inv % 2 else 1


def _inversion_parity(arr):
    """Row-wise sign (+1/-1 int8) of the ordering of distinct values in each row."""
    B, r = arr.shape
    par = np.zeros(B, dtype=np.int8)
    for a in range(r):
        for b in range(a + 1, r):
            par ^= (arr[:, a] > arr[:, b]).astype(np.int8)
    return (1 - 2 * par).astype(np.int8)


# --------------------------------------------------------------------------
# combinatorial constants

@dataclass(frozen=True)
class CombinatorialConstant:
    g: int
    n: int
    kind: str
    value: int
    enumeration_size: int
    pair: tuple | None = None


def _constant_layout(g, n, kind, pair):
    """Per-tuple (positions, labels) and the ordered source/target pair sets."""
    scheme = TupleScheme(g, n)
    L = scheme.L
    layout = []
    for k in range(1, g + 2):
        if k <= n:
            pos = list(range(1, g + 1))
            lab = list(range(1, g + 1))
        elif kind == "c_prime_gn" and k in (n + 1, n + 2):
            pos = list(range(1, n + 2))
            extra = pair[0] if k == n + 1 else pair[1]
            lab = list(range(1, n + 1)) + [extra]
        else:
            pos = list(range(1, n + 1))
            lab = list(range(1, n + 1))
        layout.append((pos, lab))
    source = list(range(1, L + 1))
    target = list(range(1, L + 1))
    if kind == "c_prime_gn":
        source.append(L + 1)
        target.append(m_index(g, *pair))
    return scheme, layout, source, sorted(target)


def constant_enumeration_size(g, n, kind="c_gn"):
    if kind == "c_g":
        n = g
    if kind == "c_prime_gn":
        return math.factorial(g) ** n * math.factorial(n + 1) ** 2 * math.factorial(n) ** (g - n - 1)
    return math.factorial(g) ** n * math.factorial(n) ** (g - n + 1)


def constant(g, n=None, kind="c_gn", pair=None, max_tuples=5 * 10**7):
    """Exact value of c_{g,n}, c_g or the extended constant c'_{g,n}.

    The sum runs over one permutation per d-tuple (positions to labels) of the
    product of the signs and the sign of the induced reshuffling kappa of
    pair indices (zero when kappa is not a bijection onto the target set).

    For ``c_prime_gn`` the tuples n+1 and n+2 also carry the extra position
    n+1, mapped to labels ``pair[0]`` and ``pair[1]``.  The returned value
    includes the factor (-1)^(i+j) produced by dropping p_i and p_j from the
    conditioned determinants, so that the extended identity holds with it as
    printed.
    """
    if kind == "c_g":
        n = g
    if kind == "c_prime_gn":
        if n is None or n + 2 > g:
            raise ValueError("extended constant needs n + 2 <= g")
        pair = tuple(pair) if pair is not None else (n + 1, n + 2)
        if not all(n < x <= g for x in pair):
            raise ValueError("extra pair must satisfy n < i, j <= g")
    size = constant_enumeration_size(g, n, kind)
    if size > max_tuples:
        raise BudgetExceeded(f"constant {kind}(g={g}, n={n})", size, max_tuples)
    scheme, layout, source, target = _constant_layout(g, n, kind, pair)
    mt = scheme.m_table

    # per tuple: array of label permutations (rows) and their signs
    perm_sets = []
    for pos, lab in layout:
        perms = np.array(list(itertools.permutations(range(len(pos)))), dtype=np.int64)
        labels = np.array(lab)[perms]
        signs = _inversion_parity(perms)
        perm_sets.append((labels, signs))

    # for each source pair l = m(i, j), i <= j: tuple i position j, tuple j+1 position i
    where = {}
    for k, (pos, _) in enumerate(layout, start=1):
        for c, p in enumerate(pos):
            where.setdefault(scheme.slot(k, p), []).append((k - 1, c))
    sources = [where[l] for l in source]

    # target rank lookup over all flat indices (−1 outside the target set)
    rank = -np.ones(scheme.M + 1, dtype=np.int64)
    for r, t in enumerate(target):
        rank[t] = r
    T = len(target)

    # loop over the leading tuples, vectorize the trailing ones
    sizes = [len(ps[0]) for ps in perm_sets]
    split = len(sizes)
    inner = 1
    while split > 0 and inner * sizes[split - 1] <= 400_000:
        split -= 1
        inner *= sizes[split]
    grids = np.indices(sizes[split:]).reshape(len(sizes) - split, -1) if split < len(sizes) else None

    total = 0
    for outer in itertools.product(*[range(s) for s in sizes[:split]]):
        chosen = []
        sgn = np.ones(inner, dtype=np.int8)
        for t in range(len(sizes)):
            labels, signs = perm_sets[t]
            if t < split:
                chosen.append(np.broadcast_to(labels[outer[t]], (inner, labels.shape[1])))
                sgn = sgn * signs[outer[t]]
            else:
                idx = grids[t - split]
                chosen.append(labels[idx])
                sgn = sgn * signs[idx]
        kappa = np.empty((inner, T), dtype=np.int64)
        for c, ((ta, ca), (tb, cb)) in enumerate(sources):
            kappa[:, c] = rank[mt[chosen[ta][:, ca] - 1, chosen[tb][:, cb] - 1]]
        ok = np.all(kappa >= 0, axis=1)
        ok &= np.all(np.sort(kappa, axis=1) == np.arange(T), axis=1)
        if not ok.any():
            continue
        ks = _inversion_parity(kappa[ok])
        total += int(np.sum(sgn[ok].astype(np.int64) * ks))
    if kind == "c_prime_gn":
        total *= (-1) ** (pair[0] + pair[1])
    return CombinatorialConstant(g, n, kind, total, size, pair)


# --------------------------------------------------------------------------
# determinant cache

def _colex_rank(sorted_rows):
    r = sorted_rows.shape[1]
    out = np.zeros(sorted_rows.shape[0], dtype=np.int64)
    for k in range(r):
        out += _COMB[sorted_rows[:, k], k + 1]
    return out


_COMB = np.array([[math.comb(a, b) for b in range(24)] for a in range(64)], dtype=np.int64)


class DetCache:
    """det f(x_{a_1}, ..., x_{a_r}, fixed columns) for every ordered r-tuple.

    Values are stored once per sorted subset (insert-once) and an ordered
    lookup multiplies by the sign of the sorting permutation, which is what
    the alternating property requires.
    """

    def __init__(self, f, fixed, r, context):
        self.f = f
        self.fixed = fixed
        self.r = r
        self.context = context
        P = f.shape[1]
        subsets = list(itertools.combinations(range(P), r))
        self.size = len(subsets)
        ranks = _colex_rank(np.array(subsets, dtype=np.int64).reshape(len(subsets), r))
        if context.exact:
            table = np.empty(self.size, dtype=object)
            for sub, rk in zip(subsets, ranks):
                table[rk] = self._fresh_sorted(sub)
        else:
            mats = np.stack([self._matrix(sub) for sub in subsets])
            vals = np.linalg.det(mats)
            table = np.empty(self.size, dtype=np.complex128)
            table[ranks] = vals
        self.table = table

    def _matrix(self, cols):
        m = self.f[:, list(cols)]
        if self.fixed is not None and self.fixed.shape[1]:
            m = np.concatenate([m, self.fixed], axis=1)
        return m

    def _fresh_sorted(self, cols):
        return det(self._matrix(cols), self.context)

    def fresh(self, cols):
        """Recompute the determinant for an ordered tuple without the cache."""
        return self._fresh_sorted(cols)

    def lookup(self, cols):
        cols = np.asarray(cols, dtype=np.int64).reshape(1, -1)
        if len(set(cols[0].tolist())) < cols.shape[1]:
            return self.context.zero()
        sign = int(_inversion_parity(cols)[0])
        v = self.table[_colex_rank(np.sort(cols, axis=1))[0]]
        if self.context.exact:
            return self.context.coerce(sign * v)
        return sign * v

    def lookup_rows(self, pts):
        """Vectorized ordered lookup: (values, signs) for rows of distinct points."""
        signs = _inversion_parity(pts)
        vals = self.table[_colex_rank(np.sort(pts, axis=1))]
        return vals, signs


# --------------------------------------------------------------------------
# permutation enumeration

@dataclass(frozen=True)
class SumPlan:
    mode: str = FULL
    det_cache_enabled: bool = True
    block_size: int = 40320
    workers: int = 1
    max_perms: int = 5 * 10**6
    force: bool = False


@dataclass
class SumResult:
    value: object
    abs_sum: float | None
    max_term: float | None
    enumeration_size: int
    elapsed: float
    extra: dict = field(default_factory=dict)


def _suffix_table(t):
    perms = np.array(list(itertools.permutations(range(t))), dtype=np.int64).reshape(-1, t)
    return perms, _inversion_parity(perms)


def _perm_blocks(L, block_size, first=None):
    """Lexicographic blocks of S_L as (perm array, sign array).

    Permutations share a prefix inside a block; ``first`` pins s_1.
    """
    t = L
    while t > 1 and math.factorial(t) > block_size:
        t -= 1
    suf, suf_sign = _suffix_table(t)
    pre_len = L - t
    for prefix in itertools.permutations(range(L), pre_len):
        if first is not None and pre_len and prefix[0] != first:
            continue
        rest = np.array(sorted(set(range(L)) - set(prefix)), dtype=np.int64)
        block = np.empty((len(suf), L), dtype=np.int64)
        block[:, :pre_len] = prefix
        block[:, pre_len:] = rest[suf]
        cross = sum(int(np.sum(rest < p)) for p in prefix)
        sign = suf_sign * np.int8(perm_sign(prefix) * (-1 if cross % 2 else 1))
        if first is not None and not pre_len:
            keep = block[:, 0] == first
            block, sign = block[keep], sign[keep]
        yield block, sign


def reduced_mask(block, g):
    """Rows of a permutation block lying in the reduced set P'_M."""
    ok = block[:, 0] == 0
    for a in range(1, g - 1):
        ok &= block[:, a] < block[:, a + 1]
    for i in range(g, 2 * g - 1):
        ok &= block[:, 1] < block[:, i]
    return ok


def _block_sum(block, sign, factors, context):
    """Contribution of one block: factors are (slot index array, DetCache)."""
    total_sign = sign.copy()
    vals = None
    for slots, cache in factors:
        v, sg = cache.lookup_rows(block[:, slots])
        total_sign = total_sign * sg
        vals = v if vals is None else vals * v
        if context.kind == "prime":
            vals = vals % context.p
    if context.exact:
        pos = vals[total_sign > 0].sum() if np.any(total_sign > 0) else 0
        neg = vals[total_sign < 0].sum() if np.any(total_sign < 0) else 0
        s = pos - neg
        if context.kind == "prime":
            s %= context.p
        return s, None, None
    terms = vals * total_sign
    return np.sum(terms), float(np.sum(np.abs(terms))), float(np.max(np.abs(terms)))


def _run_blocks(args):
    blocks, factors, context, g, reduced = args
    out = []
    for block, sign in blocks:
        if reduced:
            keep = reduced_mask(block, g)
            block, sign = block[keep], sign[keep]
            if len(block) == 0:
                continue
        out.append(_block_sum(block, sign, factors, context))
    return out


def _pairwise(xs):
    xs = list(xs)
    if not xs:
        return 0.0
    while len(xs) > 1:
        nxt = [xs[k] + xs[k + 1] for k in range(0, len(xs) - 1, 2)]
        if len(xs) % 2:
            nxt.append(xs[-1])
        xs = nxt
    return xs[0]


def permutation_sum(L, factors, context, plan=SumPlan(), reduced_g=None, what="permutation sum"):
    """sum over s in S_L of sgn(s) prod_k cache_k(x at s[slots_k])."""
    size = math.factorial(L)
    if size > plan.max_perms and not plan.force:
        raise BudgetExceeded(what, size, plan.max_perms)
    t0 = time.perf_counter()
    reduced = reduced_g is not None
    blocks = _perm_blocks(L, plan.block_size, first=0 if reduced else None)
    if plan.workers > 1:
        chunks = [[b] for b in blocks]
        with ProcessPoolExecutor(plan.workers) as ex:
            results = [r for part in ex.map(_run_blocks, [(c, factors, context, reduced_g, reduced)
                                                           for c in chunks]) for r in part]
    else:
        results = _run_blocks((blocks, factors, context, reduced_g, reduced))
    if context.exact:
        value = sum(r[0] for r in results)
        value = context.coerce(value)
        abs_sum = max_term = None
    else:
        value = complex(_pairwise([r[0] for r in results]))
        abs_sum = float(_pairwise([r[1] for r in results]))
        max_term = max((r[2] for r in results), default=0.0)
    n_terms = size if not reduced else size // math.factorial(reduced_g + 1)
    return SumResult(value, abs_sum, max_term, n_terms, time.perf_counter() - t0)


# --------------------------------------------------------------------------
# the identities

def ff_products(f, context=None):
    """Rows ff_m = f_i f_j in row-major pair order (M x P)."""
    f = np.asarray(f)
    g = f.shape[0]
    rows = [f[i] * f[j] for i in range(g) for j in range(i, g)]
    out = np.array(rows, dtype=f.dtype)
    if context is not None and context.kind == "prime":
        out = out % context.p
    return out


def lhs_det(ff, index_set, context):
    """det(ff_m(x_i)) over the (1-based) flat indices in ``index_set``."""
    ff = np.asarray(ff)
    rows = [l - 1 for l in index_set]
    if len(rows) != ff.shape[1]:
        raise ValueError(f"index set of size {len(rows)} needs as many points, got {ff.shape[1]}")
    return det(ff[rows], context)


def _factor(scheme, k, positions, cache):
    return (np.array([l - 1 for l in scheme.tuple_slots(k, positions)], dtype=np.int64), cache)


def check_conditioning(p_vals, n, context):
    """Max deviation of f_i(p_j) from delta_ij over 1 <= i <= j, j = n+1..g.

    Entries with i > j are free: the p-block enters the conditioned
    determinants only through its upper triangle.
    """
    p_vals = np.asarray(p_vals)
    g = p_vals.shape[0]
    pairs = [(i, j) for j in range(n, g) for i in range(j + 1)]
    if context.exact:
        ok = all(context.is_zero(context.coerce(p_vals[i, j] - int(i == j))) for i, j in pairs)
        return 0.0 if ok else 1.0
    return max((float(abs(p_vals[i, j] - (i == j))) for i, j in pairs), default=0.0)


def rhs_unconditioned(f, context, plan=SumPlan()):
    """sum over s in S_M of sgn(s) prod_{k=1}^{g+1} det f(x_{d^k(s)}).

    In the reduced mode only orbit representatives of the (g+1)! symmetry that
    permutes the determinants are summed, and the result is scaled back.
    """
    f = context.array(f)
    g, P = f.shape
    scheme = TupleScheme(g, g)
    if P != scheme.M:
        raise ValueError(f"need M = {scheme.M} points, got {P}")
    cache = DetCache(f, None, g, context)
    factors = [_factor(scheme, k, None, cache) for k in range(1, g + 2)]
    if plan.mode == REDUCED:
        res = permutation_sum(P, factors, context, plan, reduced_g=g, what="reduced unconditioned sum")
        res.value = context.coerce(res.value * math.factorial(g + 1)) if context.exact else res.value * math.factorial(g + 1)
        if res.abs_sum is not None:
            res.abs_sum *= math.factorial(g + 1)
    else:
        res = permutation_sum(P, factors, context, plan, what="unconditioned sum")
    res.extra["cache_size"] = cache.size
    return res


def _conditioned_factors(f, p_vals, n, context, extra_pair=None):
    g, P = f.shape
    scheme = TupleScheme(g, n)
    full = DetCache(f, None, g, context)
    cond = DetCache(f, p_vals[:, n:], n, context) if n < g else None
    factors = [_factor(scheme, k, None, full) for k in range(1, n + 1)]
    ks = range(n + 1, g + 2)
    if extra_pair is not None:
        i, j = extra_pair
        drop_i = DetCache(f, np.delete(p_vals[:, n:], i - n - 1, axis=1), n + 1, context)
        drop_j = DetCache(f, np.delete(p_vals[:, n:], j - n - 1, axis=1), n + 1, context)
        factors.append(_factor(scheme, n + 1, range(1, n + 2), drop_i))
        factors.append(_factor(scheme, n + 2, range(1, n + 2), drop_j))
        ks = range(n + 3, g + 2)
    factors += [_factor(scheme, k, range(1, n + 1), cond) for k in ks]
    return scheme, factors


def rhs_conditioned(f, p_vals, n, context, plan=SumPlan(), c_value=None):
    """Right side of the conditioned lemma, already divided by c_{g,n}.

    ``f`` holds f_i(x_l) for the L points, ``p_vals`` holds f_i(p_j) for all
    j in I_g (columns 1..n are ignored).
    """
    f = context.array(f)
    p_vals = context.array(p_vals)
    g, P = f.shape
    scheme = TupleScheme(g, n)
    if P != scheme.L:
        raise ValueError(f"need L = {scheme.L} points, got {P}")
    if n == g:
        res = rhs_unconditioned(f, context, plan)
    else:
        dev = check_conditioning(p_vals, n, context)
        if dev > (0 if context.exact else context.tol):
            raise ConditionViolated(dev)
        _, factors = _conditioned_factors(f, p_vals, n, context)
        res = permutation_sum(P, factors, context, plan, what="conditioned sum")
    c = c_value if c_value is not None else constant(g, n).value
    res.extra["raw"] = res.value
    res.extra["constant"] = c
    res.value = _divide(res.value, c, context)
    return res


def rhs_extended(f, p_vals, n, pair, context, plan=SumPlan(), c_value=None):
    """Right side of the extended lemma, divided by c'_{g,n}; equals det over
    I_L plus the extra pair index of ff at the L+1 points."""
    f = context.array(f)
    p_vals = context.array(p_vals)
    g, P = f.shape
    scheme = TupleScheme(g, n)
    if P != scheme.L + 1:
        raise ValueError(f"need L+1 = {scheme.L + 1} points, got {P}")
    if n + 2 > g:
        raise ValueError("extended lemma needs n + 2 <= g")
    dev = check_conditioning(p_vals, n, context)
    if dev > (0 if context.exact else context.tol):
        raise ConditionViolated(dev)
    _, factors = _conditioned_factors(f, p_vals, n, context, extra_pair=tuple(pair))
    res = permutation_sum(P, factors, context, plan, what="extended sum")
    c = c_value if c_value is not None else constant(g, n, "c_prime_gn", pair).value
    res.extra["raw"] = res.value
    res.extra["constant"] = c
    res.value = _divide(res.value, c, context)
    return res


def extended_index_set(g, n, pair):
    L = TupleScheme(g, n).L
    return list(range(1, L + 1)) + [m_index(g, *pair)]


def _divide(v, c, context):
    if context.kind == "prime":
        return v * pow(c % context.p, -1, context.p) % context.p
    if context.kind == "rational":
        return v / c
    return v / c


def theorem_main_sum(omega, p_vals, pair, context, plan=SumPlan()):
    """The alternating sum over S_{2g} whose vanishing expresses that the
    quadric relations hold on the curve.

    ``omega`` is g x 2g (the x-points), ``p_vals`` is g x (g-2) holding the
    columns p_3..p_g, ``pair`` = (i, j) with 3 <= i < j <= g.
    """
    omega = context.array(omega)
    p_vals = context.array(p_vals)
    g, P = omega.shape
    if P != 2 * g:
        raise ValueError(f"need 2g = {2 * g} points, got {P}")
    if p_vals.shape != (g, g - 2):
        raise ValueError("need the g-2 conditioning points p_3..p_g")
    i, j = pair
    if not (3 <= i < j <= g):
        raise ValueError("pair must satisfy 3 <= i < j <= g")
    full = DetCache(omega, None, g, context)
    drop_i = DetCache(omega, np.delete(p_vals, i - 3, axis=1), 3, context)
    drop_j = DetCache(omega, np.delete(p_vals, j - 3, axis=1), 3, context)
    factors = [
        (np.arange(0, g), full),
        (np.arange(g - 1, 2 * g - 1), full),
        (np.array([0, g, 2 * g - 1]), drop_i),
        (np.array([1, g + 1, 2 * g - 1]), drop_j),
    ]
    if g > 3:
        small = DetCache(omega, p_vals, 2, context)
        factors += [(np.array([k - 1, k + g - 1]), small) for k in range(3, g)]
    return permutation_sum(P, factors, context, plan, what="main theorem sum")
