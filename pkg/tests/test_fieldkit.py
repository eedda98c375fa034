import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from canoncurve.fieldkit import (DEFAULT_PRIME, FieldContext, SampleMatrix, SingularMatrixError,
                                 det, inverse, rank_nullspace)

F7 = FieldContext.prime_field(7)


def cofactor_det(a, p):
    n = len(a)
    if n == 1:
        return a[0][0] % p
    return sum((-1) ** c * a[0][c] * cofactor_det([r[:c] + r[c + 1:] for r in a[1:]], p)
               for c in range(n)) % p


def test_default_prime():
    assert DEFAULT_PRIME < 2**62
    assert FieldContext.prime_field().p == DEFAULT_PRIME


def test_rejects_composite_and_oversized_moduli():
    with pytest.raises(ValueError):
        FieldContext.prime_field(15)
    with pytest.raises(ValueError):
        FieldContext.prime_field(2**64 + 13)


def test_complex_tolerance_must_be_positive():
    with pytest.raises(ValueError):
        FieldContext.complex_approx(0.0)


@pytest.mark.parametrize("ctx", [FieldContext.prime_field(), FieldContext.rational(), FieldContext.complex_approx()])
def test_det_identity(ctx):
    assert det(ctx.array(np.eye(3, dtype=int)), ctx) == ctx.one()


def test_det_small_prime_example():
    assert det(F7.array([[2, 1], [1, 1]]), F7) == 1


@pytest.mark.parametrize("ctx", [FieldContext.prime_field(), FieldContext.rational()])
def test_det_repeated_column_is_zero(ctx, rng):
    a = ctx.random_array(rng, (4, 4))
    a[:, 2] = a[:, 0]
    assert det(a, ctx) == 0


def test_rational_det_matches_fraction_arithmetic():
    q = FieldContext.rational()
    a = q.array([[Fraction(1, 2), 3], [Fraction(2, 3), Fraction(-1, 5)]])
    assert det(a, q) == Fraction(1, 2) * Fraction(-1, 5) - 3 * Fraction(2, 3)


def test_rank_nullspace_examples(rng):
    r, ns = rank_nullspace(np.zeros((2, 3)), 1e-8)
    assert (r, len(ns)) == (0, 3)
    r, ns = rank_nullspace(np.eye(4), 1e-8)
    assert (r, len(ns)) == (4, 0)
    a = rng.standard_normal((9, 40))
    stack = np.vstack([a, rng.standard_normal(9) @ a])
    r, ns = rank_nullspace(stack.T, 1e-8)
    assert (r, len(ns)) == (9, 1)
    assert np.max(np.abs(stack.T @ ns[0])) < 1e-10


def test_exact_nullspace_vectors_annihilate(fp, rng):
    a = fp.random_array(rng, (3, 5))
    a[2] = (a[0] * 3 + a[1] * 5) % fp.p
    r, ns = rank_nullspace(a, context=fp)
    assert r == 2 and len(ns) == 3
    for v in ns:
        assert all(x == 0 for x in fp.matmul(a, v))


def test_inverse_examples():
    assert np.array_equal(inverse(F7.array(np.diag([2, 3])), F7), F7.array(np.diag([4, 5])))
    assert np.array_equal(inverse(F7.array(np.eye(3, dtype=int)), F7), F7.array(np.eye(3, dtype=int)))
    H = np.array([[1 / (i + j + 1) for j in range(3)] for i in range(3)])
    assert np.max(np.abs(inverse(H) @ H - np.eye(3))) < 1e-10


def test_inverse_singular_raises(fp):
    with pytest.raises(SingularMatrixError):
        inverse(fp.array([[1, 2], [2, 4]]), fp)
    with pytest.raises(SingularMatrixError):
        inverse(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_sample_matrix_wrapping(fp):
    m = SampleMatrix.from_rows([[1, 2], [3, 4]], fp)
    assert (m.rows, m.cols) == (2, 2)
    inv = inverse(m)
    assert isinstance(inv, SampleMatrix)
    assert det(m) == fp.coerce(-2)


entries = st.integers(min_value=0, max_value=DEFAULT_PRIME - 1)


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(
    st.lists(st.lists(entries, min_size=n, max_size=n), min_size=n, max_size=n),
    st.lists(st.lists(entries, min_size=n, max_size=n), min_size=n, max_size=n))))
def test_det_multiplicative_exact(ab):
    fp = FieldContext.prime_field()
    A, B = fp.array(ab[0]), fp.array(ab[1])
    assert det(fp.matmul(A, B), fp) == det(A, fp) * det(B, fp) % fp.p


@given(st.integers(1, 4).flatmap(lambda n: st.lists(st.lists(entries, min_size=n, max_size=n),
                                                   min_size=n, max_size=n)))
def test_elimination_matches_cofactor(a):
    fp = FieldContext.prime_field()
    assert det(fp.array(a), fp) == cofactor_det(a, fp.p)


@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_det_multiplicative_complex(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    lhs, rhs = det(A @ B), det(A) * det(B)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 6), st.integers(0, 2**32 - 1))
def test_rank_plus_nullity(rows, cols, rk, seed):
    rng = np.random.default_rng(seed)
    rk = min(rk, rows, cols)
    a = rng.standard_normal((rows, rk)) @ rng.standard_normal((rk, cols))
    r, ns = rank_nullspace(a, 1e-9)
    assert r + len(ns) == cols
    assert r == rk


@given(st.integers(0, 2**32 - 1))
def test_rank_plus_nullity_exact(seed):
    fp = FieldContext.prime_field(101)
    rng = np.random.default_rng(seed)
    a = fp.random_array(rng, (3, 4))
    for i, j in itertools.product(range(3), range(4)):
        if rng.random() < 0.3:
            a[i, j] = 0
    r, ns = rank_nullspace(a, context=fp)
    assert r + len(ns) == 4
