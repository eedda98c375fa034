"""Distinguished bases of 1-, 2- and 3-differentials and the linear relations
among their products, evaluated on sampled curve data.

All matrices are "rows = functions, columns = sample points".  Index
conventions follow the DiagFirst tables of :mod:`symidx`; code indices are
0-based.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import symidx
from .fieldkit import SingularMatrixError

TOL = 1e-7


class BasisError(RuntimeError):
    pass


@dataclass(frozen=True)
class BasisEvals:
    n: int
    matrix: np.ndarray
    defining_points: tuple = ()

    @property
    def size(self):
        return self.matrix.shape[0]


@dataclass
class RelationSet:
    weight: int
    vectors: np.ndarray  # rows are relations, columns DiagFirst entries
    labels: list = field(default_factory=list)

    def residual(self, products):
        """max |c . p(x)| over relations and samples, relative to the largest
        sum of absolute contributions sum_j |c_j p_j(x)| of the same relation."""
        num = np.abs(self.vectors @ products)
        den = np.abs(self.vectors) @ np.abs(products)
        return float(np.max(np.max(num, axis=1) / np.maximum(np.max(den, axis=1), 1e-300)))


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


def pivot_columns(rows, count, exclude=()):
    """Well-conditioned sample columns by QR with column pivoting."""
    cand = [c for c in range(rows.shape[1]) if c not in set(exclude)]
    _, _, piv = scipy.linalg.qr(rows[:, cand], pivoting=True, mode="economic")
    return [cand[k] for k in sorted(piv[:count])]


# --------------------------------------------------------------------------
# bases

def gamma_basis(evals, points):
    """gamma_i = sum_j [phi]^{-1}_{ij} phi_j with [phi]_{ij} = phi_i(p_j)."""
    Phi = evals.matrix if isinstance(evals, BasisEvals) else np.asarray(evals)
    n = evals.n if isinstance(evals, BasisEvals) else 1
    block = Phi[:, list(points)]
    s = np.linalg.svd(block, compute_uv=False)
    if s[-1] <= 1e-12 * s[0]:
        raise SingularMatrixError("normalization block is singular", float(s[-1]))
    gamma = np.linalg.solve(block, Phi)
    return BasisEvals(n, gamma, tuple(points))


def v_basis(sigma):
    """All M products sigma_a sigma_b in DiagFirst order, with the checks that
    make the first N of them the distinguished quadratic basis."""
    g = sigma.size
    table = symidx.build(g, 2)
    rows = np.array([sigma.matrix[a - 1] * sigma.matrix[b - 1] for a, b in table.entries])
    N = symidx.count_diff(g, 2)
    pts = list(sigma.defining_points)
    pattern = rows[:, pts]
    target = np.zeros_like(pattern)
    target[:g, :g] = np.eye(g)
    pattern_err = float(np.max(np.abs(pattern - target)))
    s = np.linalg.svd(rows[:N], compute_uv=False)
    rank = int(np.sum(s > 1e-8 * s[0]))
    return BasisEvals(2, rows, sigma.defining_points), {
        "pattern_residual": pattern_err, "rank_first_N": rank, "N": N, "basis_ok": rank == N}


def ratio_R(reference, replacement, cols, cols2=None, tol=1e-8):
    """det(replacement at cols) / det(reference at cols), checked at cols2."""
    ref = np.linalg.det(reference[:, cols])
    if abs(ref) <= 1e-300:
        raise SingularMatrixError("reference determinant vanishes", abs(ref))
    val = np.linalg.det(replacement[:, cols]) / ref
    if cols2 is not None:
        val2 = np.linalg.det(replacement[:, cols2]) / np.linalg.det(reference[:, cols2])
        if abs(val - val2) > tol * max(1.0, abs(val)):
            raise ArithmeticError(f"ratio not constant across columns: {val} vs {val2}")
    return val


@dataclass
class PetriData:
    """Everything derived from omega samples and the choice of p_1..p_g."""

    omega: np.ndarray
    p_points: tuple
    sigma: BasisEvals
    v: BasisEvals
    v_checks: dict
    cols: list
    cols2: list

    @property
    def g(self):
        return self.omega.shape[0]

    @property
    def N(self):
        return symidx.count_diff(self.g, 2)

    @property
    def M(self):
        return symidx.count_sym(self.g, 2)


def prepare(omega, p_points=None):
    """Normalize at p_1..p_g, build v and pick two disjoint column sets.

    Without explicit p_points the conditioning points come from pivoted column
    selection on omega (points on one hyperplane slice are coplanar, so the
    first g samples are a poor default).
    """
    omega = np.asarray(omega, dtype=np.complex128)
    if p_points is None:
        p_points = tuple(pivot_columns(omega, omega.shape[0]))
    if len(set(p_points)) != len(p_points):
        raise BasisError("conditioning points must be distinct")
    sigma = gamma_basis(BasisEvals(1, omega), p_points)
    v, checks = v_basis(sigma)
    if not checks["basis_ok"]:
        raise BasisError("distinguished basis failed: reselect p points")
    N = checks["N"]
    cols = pivot_columns(v.matrix[:N], N, exclude=p_points)
    cols2 = pivot_columns(v.matrix[:N], N, exclude=tuple(p_points) + tuple(cols))
    return PetriData(omega, tuple(p_points), sigma, v, checks, cols, cols2)


def psi_tilde(data):
    """psi~_{ij} = R_v[v_1..v_{i-1}, v_j, v_{i+1}..v_N] (N x M) by row replacement."""
    N, M = data.N, data.M
    V = data.v.matrix
    out = np.zeros((N, M), dtype=np.complex128)
    for i in range(N):
        for j in range(M):
            rep = V[:N].copy()
            rep[i] = V[j]
            out[i, j] = ratio_R(V[:N], rep, data.cols, data.cols2)
    return out


def psi_checks(data, psi):
    N, g = data.N, data.g
    V = data.v.matrix
    recon = psi[g:, N:].T @ V[g:N]  # v_i = sum_{j>g} psi_{ji} v_j, i > N
    return {
        "identity_block": rel_err(psi[:, :N], np.eye(N)),
        "zero_block": float(np.max(np.abs(psi[:g, N:]))),
        "lemma_residual": rel_err(recon, V[N:]),
    }


def kernel_vectors(psi):
    """u~_i = e_i - sum_{j<=N} e_j psi_{ji}, i > N (rows, length M)."""
    N, M = psi.shape
    out = np.zeros((M - N, M), dtype=psi.dtype)
    for r, i in enumerate(range(N, M)):
        out[r, i] = 1
        out[r, :N] -= psi[:, i]
    return out


# --------------------------------------------------------------------------
# change of basis matrices

def X_matrix(eta_at_p):
    """X_{ji} = chi_j^{-1} (A A)_{ij} with A = [eta]^{-1}, [eta]_{ij} = eta_i(p_j)."""
    eta_at_p = np.asarray(eta_at_p)
    g = eta_at_p.shape[0]
    A = np.linalg.inv(eta_at_p)
    table = symidx.build(g, 2)
    P = symidx.sym_power(A, table)
    return P.T / np.array(table.chi, dtype=float)[:, None]


def Y_matrix(eta_at_p):
    """Y_{kj} = chi_k^{-1} (A A A)_{jk} on the cubic table."""
    eta_at_p = np.asarray(eta_at_p)
    g = eta_at_p.shape[0]
    A = np.linalg.inv(eta_at_p)
    table = symidx.build(g, 3)
    P = symidx.sym_power(A, table)
    return P.T / np.array(table.chi, dtype=float)[:, None]


def products(eta, n):
    g = eta.shape[0]
    table = symidx.build(g, n)
    return np.array([np.prod(eta[[k - 1 for k in e]], axis=0) for e in table.entries])


# --------------------------------------------------------------------------
# relations by a Cauchy-Binet contraction

def cauchy_binet_relation(Xm, basis_rows, extra_rows, vals, literal_scale=True, context=None):
    """Coefficients C_{ij} of the relations sum_j C_ij prod_j = 0.

    ``Xm`` expresses the functions in the product basis (function c is
    sum_k Xm[k, c] prod_k); ``basis_rows`` index the functions forming a
    basis, ``vals`` are the functions (all rows) at len(basis_rows) sample
    points.  For each extra row i the entry C_ij is the determinant with rows
    basis_rows + [i], columns the sample values and a last column Xm[j, .],
    divided by the determinant of the basis at the points.

    The multi-index sum over k_1..k_n of a minor of Xm times a ratio of
    determinants counts every permutation of the k's, so it equals n! times
    this contraction; ``literal_scale`` includes that factor.
    """
    b = list(basis_rows)
    n = len(b)
    det = _det_fn(context)
    den = det(vals[b])
    Mtot = Xm.shape[0]
    dtype = object if context is not None else np.result_type(Xm, vals, complex)
    out = np.zeros((len(extra_rows), Mtot), dtype=dtype)
    for r, i in enumerate(extra_rows):
        rows = b + [i]
        base = vals[rows]
        for j in range(Mtot):
            col = Xm[j, rows].reshape(-1, 1)
            out[r, j] = _div(det(np.concatenate([base, col], axis=1)), den, context)
    if literal_scale:
        out = out * math.factorial(n)
        if context is not None:
            out = context.reduce(out)
    return out


def C_relations(data, eta):
    """Quadric relations among eta eta_j from the distinguished basis v."""
    eta = np.asarray(eta)
    N, M = data.N, data.M
    Xm = X_matrix(eta[:, list(data.p_points)])
    ee = products(eta, 2)
    vals = (Xm.T @ ee)[:, data.cols]  # v_c(x^) with v_c = sum_k X_kc eta eta_k
    C = cauchy_binet_relation(Xm, range(N), range(N, M), vals)
    return RelationSet(2, C, [f"C[{i + 1}]" for i in range(N, M)]), Xm


def B_matrix(data, eta):
    """B[j, i] = R_v[v_1..v_{j-1}, eta eta_i, v_{j+1}..v_N]: the coefficient of
    v_j in eta eta_i, so eta eta_i = sum_j v_j B[j, i] (an N x M matrix)."""
    N, M = data.N, data.M
    V = data.v.matrix
    ee = products(np.asarray(eta), 2)
    out = np.zeros((N, M), dtype=np.complex128)
    for j in range(N):
        for i in range(M):
            rep = V[:N].copy()
            rep[j] = ee[i]
            out[j, i] = ratio_R(V[:N], rep, data.cols, data.cols2)
    return out


# --------------------------------------------------------------------------
# cubic basis and its relations

def cubic_basis(data, i=3):
    """N_3 triple products of sigma: the first N_3 - 1 DiagFirst triples plus
    the entry at position i + 5g - 8 (1-based).  If that family is rank
    deficient the rows are chosen by pivoting over all triples instead."""
    g = data.g
    N3 = symidx.count_diff(g, 3)
    trip = products(data.sigma.matrix, 3)
    idx = list(range(N3 - 1)) + [i + 5 * g - 8 - 1]
    s = np.linalg.svd(trip[idx], compute_uv=False)
    fallback = False
    if int(np.sum(s > 1e-8 * s[0])) < N3:
        _, _, piv = scipy.linalg.qr(trip.T, pivoting=True)
        idx = sorted(piv[:N3].tolist())
        s = np.linalg.svd(trip[idx], compute_uv=False)
        fallback = True
        if int(np.sum(s > 1e-8 * s[0])) < N3:
            raise BasisError("no N_3 independent triple products")
    return BasisEvals(3, trip[idx], data.sigma.defining_points), idx, {"fallback": fallback}


def D_relations(data, eta, cubic_idx, extra=None):
    """Cubic relations among eta eta eta_j beyond the quadric multiples."""
    eta = np.asarray(eta)
    g = data.g
    N3 = symidx.count_diff(g, 3)
    M3 = symidx.count_sym(g, 3)
    Ym = Y_matrix(eta[:, list(data.p_points)])
    eee = products(eta, 3)
    phi_all = Ym.T @ eee
    cols = pivot_columns(phi_all[cubic_idx], N3, exclude=data.p_points)
    if extra is None:
        extra = [k for k in range(N3 - 1, N3 + g - 3) if k not in cubic_idx]
    D = cauchy_binet_relation(Ym, cubic_idx, extra, phi_all[:, cols])
    return RelationSet(3, D, [f"D[{k + 1}]" for k in extra]), Ym


# --------------------------------------------------------------------------
# naive multi-index sums (reference implementations for small shapes)

def naive_C(Xm, ee_at_pts, N, context=None):
    """Literal sum over k_1..k_N of minors of X times ratios R_v[ee_k...]."""
    M = Xm.shape[0]
    det = _det_fn(context)
    v_at = _mat(context, Xm.T, ee_at_pts)
    den = det(v_at[:N])
    out = {}
    for i in range(N, M):
        for j in range(M):
            total = 0
            for ks in itertools.product(range(M), repeat=N):
                minor = det(_sub(Xm, list(ks) + [j], list(range(N)) + [i]))
                if _zero(minor, context):
                    continue
                total = total + minor * det(ee_at_pts[list(ks)])
            out[(i, j)] = _div(total, den, context)
    return out


def naive_B(Xm, ee_at_pts, N, context=None):
    """Literal minor expansion of the B coefficients, out[(i, j)], i in I_M, j in I_N."""
    M = Xm.shape[0]
    det = _det_fn(context)
    v_at = _mat(context, Xm.T, ee_at_pts)
    den = det(v_at[:N])
    out = {}
    for i in range(M):
        for j in range(N):
            total = 0
            cols = [c for c in range(N) if c != j]
            for ks in itertools.product(range(M), repeat=N - 1):
                minor = det(_sub(Xm, list(ks), cols))
                if _zero(minor, context):
                    continue
                total = total + (-1) ** j * minor * det(ee_at_pts[[i] + list(ks)])
            out[(i, j)] = _div(total, den, context)
    return out


def _sub(A, rows, cols):
    return A[np.ix_(rows, cols)]


def _det_fn(context):
    if context is None:
        return lambda m: np.linalg.det(np.asarray(m, dtype=np.complex128))
    from .fieldkit import det
    return lambda m: det(m, context)


def _mat(context, A, B):
    return A @ B if context is None else context.matmul(A, B)


def _zero(x, context):
    return (x == 0) if context is None else context.is_zero(x)


def _div(a, b, context):
    if context is None:
        return a / b
    return context.coerce(context.coerce(a) * context.inv(b)) if context.kind == "prime" else a / b


# --------------------------------------------------------------------------
# structure constants

@dataclass
class StructureConstants:
    p: int
    q: int
    B: np.ndarray  # N_p x N_q x N_{p+q}
    D: np.ndarray  # N_{p+q} x N_p x N_q
    C: np.ndarray  # R x N_p x N_q
    expansion_residual: float


def _pair_products(Fp, Fq):
    return (Fp[:, None, :] * Fq[None, :, :])  # Np x Nq x K


def structure_constants(p, q, bases):
    """B by least squares, D as the minimum-norm expansion, C as the kernel."""
    Fp, Fq, Fs = bases[p], bases[q], bases[p + q]
    Np, Nq, Ns = Fp.shape[0], Fq.shape[0], Fs.shape[0]
    prod = _pair_products(Fp, Fq)
    flat = prod.reshape(Np * Nq, -1)
    Bflat, *_ = np.linalg.lstsq(Fs.T, flat.T, rcond=None)
    B = Bflat.T.reshape(Np, Nq, Ns)
    exp_res = rel_err(np.einsum("ijk,kx->ijx", B, Fs), prod)
    Dflat, *_ = np.linalg.lstsq(flat.T, Fs.T, rcond=1e-10)
    D = Dflat.T.reshape(Ns, Np, Nq)
    exp_res = max(exp_res, rel_err(np.einsum("ijk,jkx->ix", D, prod), Fs))
    if p == q:
        pairs = [(j, k) for j in range(Np) for k in range(j, Np)]
        sym = np.array([prod[j, k] for j, k in pairs])
        u, s, vh = np.linalg.svd(sym.T)
        rank = int(np.sum(s > 1e-9 * s[0]))
        ker = vh[rank:].conj()
        C = np.zeros((ker.shape[0], Np, Nq), dtype=ker.dtype)
        for r in range(ker.shape[0]):
            for c, (j, k) in enumerate(pairs):
                if j == k:
                    C[r, j, k] = ker[r, c]
                else:
                    C[r, j, k] = C[r, k, j] = ker[r, c] / 2
    else:
        u, s, vh = np.linalg.svd(flat.T)
        rank = int(np.sum(s > 1e-9 * s[0]))
        C = vh[rank:].conj().reshape(-1, Np, Nq)
    return StructureConstants(p, q, B, D, C, exp_res)


def identity_residuals(sc11, sc12):
    """Relative residuals of the structure-constant identities."""
    out = {}
    for name, sc in (("11", sc11), ("12", sc12)):
        Ns = sc.B.shape[2]
        Np, Nq = sc.B.shape[:2]
        out[f"DB_delta_{name}"] = rel_err(np.einsum("ikl,klj->ij", sc.D, sc.B), np.eye(Ns))
        out[f"CB_zero_{name}"] = float(np.max(np.abs(np.einsum("kij,ijl->kl", sc.C, sc.B)))
                                       / max(np.max(np.abs(sc.C)) * np.max(np.abs(sc.B)), 1e-300))
        # B D = delta delta + A C, with A solved by least squares
        BD = np.einsum("ijk,klm->ijlm", sc.B, sc.D)
        dd = np.einsum("il,jm->ijlm", np.eye(Np), np.eye(Nq))
        if sc.p == sc.q:
            dd = (dd + np.einsum("im,jl->ijlm", np.eye(Np), np.eye(Nq))) / 2
        E = (BD - dd).reshape(Np * Nq, Np * Nq)
        Cf = sc.C.reshape(sc.C.shape[0], Np * Nq)
        A, *_ = np.linalg.lstsq(Cf.T, E.T, rcond=None)
        out[f"BD_AC_{name}"] = float(np.max(np.abs(A.T @ Cf - E)) / max(np.max(np.abs(BD)), 1.0))
    B11, B12, C11 = sc11.B, sc12.B, sc11.C
    lhs = np.einsum("jki,lim->jklm", B11, B12)
    rhs = np.einsum("kli,jim->jklm", B11, B12)
    out["associativity_111"] = rel_err(lhs, rhs)
    trip = np.einsum("lij,mik,jkn->lmn", C11, B11, B12)
    scale = np.einsum("lij,mik,jkn->lmn", np.abs(C11), np.abs(B11), np.abs(B12))
    out["triple_111"] = float(np.max(np.abs(trip)) / max(np.max(scale), 1e-300))
    return out
