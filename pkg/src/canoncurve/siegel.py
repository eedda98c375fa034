"""Theta functions with characteristics and the Siegel metric on H_g."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import symidx


class TruncationError(RuntimeError):
    pass


@dataclass(frozen=True)
class PeriodPoint:
    Z: np.ndarray

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=np.complex128)
        if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
            raise ValueError("period matrix must be square")
        if np.max(np.abs(Z - Z.T)) > 1e-14 * max(1.0, np.max(np.abs(Z))):
            raise ValueError("period matrix must be symmetric")
        if np.min(np.linalg.eigvalsh(Z.imag)) <= 0:
            raise ValueError("imaginary part must be positive definite")
        object.__setattr__(self, "Z", Z)

    @property
    def Y(self):
        return self.Z.imag

    @property
    def g(self):
        return self.Z.shape[0]


@dataclass(frozen=True)
class Characteristic:
    a: tuple
    b: tuple

    @property
    def half_integer(self):
        return all(x in (0, 0.5) for x in self.a + self.b)

    @classmethod
    def half(cls, a_bits, b_bits):
        return cls(tuple(x / 2 for x in a_bits), tuple(x / 2 for x in b_bits))

    def parity(self):
        """e(delta) = exp(4 pi i a.b), +1 for even and -1 for odd characteristics."""
        return int(round(math.cos(4 * math.pi * float(np.dot(self.a, self.b)))))


@dataclass(frozen=True)
class TruncationPolicy:
    target_tol: float = 1e-14
    margin: float = 1.0
    max_points: int = 2_000_000
    radius_factor: float = 1.0

    def radius(self, Y):
        lam = float(np.min(np.linalg.eigvalsh(Y)))
        return self.radius_factor * math.sqrt(-math.log(self.target_tol) / (math.pi * lam) + self.margin)


def random_period_point(rng, g, spread=0.5):
    A = rng.standard_normal((g, g))
    Y = A @ A.T / g + np.eye(g) * 0.6
    X = rng.uniform(-spread, spread, (g, g))
    return PeriodPoint((X + X.T) / 2 + 1j * Y)


def theta(z, Zp, ch=None, policy=TruncationPolicy(), with_scale=False):
    """Truncated lattice sum of exp(pi i (k+a)Z(k+a) + 2 pi i (k+a)(z+b)).

    Lattice points are those of the integer bounding box of a Euclidean ball
    of the policy radius around the maximum of the summand, -a - Y^{-1} Im z.
    With ``with_scale`` the sum of |terms| is returned too (used to normalize
    residuals near zeros of theta).
    """
    Z = Zp.Z
    g = Zp.g
    z = np.asarray(z, dtype=np.complex128).reshape(g)
    a = np.zeros(g) if ch is None else np.asarray(ch.a, dtype=float)
    b = np.zeros(g) if ch is None else np.asarray(ch.b, dtype=float)
    Y = Zp.Y
    center = -a - np.linalg.solve(Y, z.imag)
    R = policy.radius(Y)
    lo = np.floor(center - R).astype(int)
    hi = np.ceil(center + R).astype(int)
    count = int(np.prod(hi - lo + 1))
    if count > policy.max_points:
        raise TruncationError(f"lattice box has {count} points, budget {policy.max_points}")
    axes = [np.arange(l, h + 1) for l, h in zip(lo, hi)]
    K = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, g).astype(float)
    K = K[np.sum((K - center) ** 2, axis=1) <= R * R]
    ka = K + a
    expo = 1j * np.pi * np.einsum("pi,ij,pj->p", ka, Z, ka) + 2j * np.pi * ka @ (z + b)
    terms = np.exp(expo)
    val = np.sum(terms)
    return (val, float(np.sum(np.abs(terms)))) if with_scale else val


def quasi_periodicity_factor(z, Zp, ch, n, m):
    Z = Zp.Z
    a = np.asarray(ch.a, dtype=float)
    b = np.asarray(ch.b, dtype=float)
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    return np.exp(-1j * np.pi * m @ Z @ m - 2j * np.pi * m @ z + 2j * np.pi * (a @ n - b @ m))


def reduction_factor(z, Zp, ch):
    a = np.asarray(ch.a, dtype=float)
    b = np.asarray(ch.b, dtype=float)
    return np.exp(1j * np.pi * a @ Zp.Z @ a + 2j * np.pi * a @ (z + b))


def spin_census(g):
    if g > 8:
        raise ValueError("census enumerates 2^(2g) characteristics; g <= 8")
    even = odd = 0
    for bits in itertools.product((0, 1), repeat=2 * g):
        e = Characteristic.half(bits[:g], bits[g:]).parity()
        even += e == 1
        odd += e == -1
    return even, odd


# --------------------------------------------------------------------------
# Siegel metric

def _check_pd(Y):
    Y = np.asarray(Y, dtype=float)
    if np.max(np.abs(Y - Y.T)) > 1e-12 * max(1.0, np.max(np.abs(Y))) or np.min(np.linalg.eigvalsh(Y)) <= 0:
        raise ValueError("Y must be symmetric positive definite")
    return Y


def siegel_gS(Y, table=None):
    """g^S_{ij} = 2 chi_i^{-1} chi_j^{-1} (Y^{-1} Y^{-1})_{ij} on pair indices."""
    Y = _check_pd(Y)
    table = table or symidx.build(Y.shape[0], 2)
    W = symidx.sym_power(np.linalg.inv(Y), table)
    chi = np.array(table.chi, dtype=float)
    return 2 * W / np.outer(chi, chi)


def trace_form(Y, dZ):
    Yi = np.linalg.inv(Y)
    return np.trace(Yi @ dZ @ Yi @ dZ.conj())


def pair_vector(dZ, table):
    return np.array([dZ[a - 1, b - 1] for a, b in table.entries])


def g_tau(tau):
    Zp = tau if isinstance(tau, PeriodPoint) else PeriodPoint(tau)
    return siegel_gS(Zp.Y)


def g_Xi(B, tau):
    """g^Xi = B g^tau B^H for the N x M matrix B (dtau_i = sum_j B_ji Xi_j)."""
    B = np.asarray(B)
    G = g_tau(tau)
    if B.shape[1] != G.shape[0]:
        raise ValueError(f"B has {B.shape[1]} columns, expected {G.shape[0]}")
    out = B @ G @ B.conj().T
    return out, complex(np.linalg.det(out))


def dw_minors(X, N, tol=1e-12, max_minors=100_000):
    """Minors of X with columns 1..N and rows i_1 < ... < i_N; only those above
    ``tol`` (relative to the largest) are returned, keyed by 1-based rows."""
    X = np.asarray(X)
    M = X.shape[0]
    count = math.comb(M, N)
    if count > max_minors:
        raise ValueError(f"{count} minors exceed the budget {max_minors}")
    out = {}
    for rows in itertools.combinations(range(M), N):
        out[tuple(r + 1 for r in rows)] = np.linalg.det(X[np.ix_(rows, range(N))])
    big = max((abs(v) for v in out.values()), default=0.0)
    return {k: v for k, v in out.items() if abs(v) > tol * max(big, 1e-300)}
