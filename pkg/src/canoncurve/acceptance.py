"""The acceptance suite as plain functions, shared by the CLI and the tests.

Each ``criterion_k`` returns a :class:`CriterionResult` whose checks record the
measured value, the tolerance it was compared with, and the verdict.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import combdet, curvemodel, petri, siegel, symidx
from .fieldkit import DEFAULT_PRIME, FieldContext, inverse


@dataclass
class Check:
    name: str
    value: object
    tol: object
    passed: bool

    def to_json(self):
        return {"name": self.name, "value": _plain(self.value), "tol": _plain(self.tol),
                "passed": bool(self.passed)}


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list = field(default_factory=list)
    elapsed: float = 0.0
    time_limit: float | None = None
    info: dict = field(default_factory=dict)

    @property
    def passed(self):
        in_time = self.time_limit is None or self.elapsed <= self.time_limit
        return in_time and all(c.passed for c in self.checks)

    def add(self, name, value, tol, passed):
        self.checks.append(Check(name, value, tol, bool(passed)))

    def le(self, name, value, tol):
        self.add(name, float(value), tol, value <= tol)

    def eq(self, name, value, expected):
        self.add(name, value, expected, value == expected)

    def line(self):
        worst = [c.name for c in self.checks if not c.passed]
        tail = f" failing: {', '.join(worst)}" if worst else ""
        limit = f"/{self.time_limit:.0f}s" if self.time_limit else ""
        return (f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number:2d} "
                f"{self.title} ({len(self.checks)} checks, {self.elapsed:.1f}s{limit}){tail}")

    def to_json(self):
        return {"criterion": self.number, "title": self.title, "passed": self.passed,
                "time_limit_s": self.time_limit, "elapsed_s": round(self.elapsed, 3),
                "info": _plain(self.info), "checks": [c.to_json() for c in self.checks]}


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    return x


class _timed:
    def __init__(self, res):
        self.res = res

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self.res

    def __exit__(self, *exc):
        self.res.elapsed = time.perf_counter() - self.t0
        return False


# --------------------------------------------------------------------------
# synthetic exact data

def conditioned_data(ctx, rng, g, n, points):
    """f (g x points) and p-values (g x g) with f_i(p_j) = delta_ij for all j.

    Random values are pushed through the inverse of the p-block, which makes
    the conditioning hold for every j, not only j > n.
    """
    while True:
        f = ctx.random_array(rng, (g, points))
        pv = ctx.random_array(rng, (g, g))
        try:
            A = inverse(pv, ctx)
        except ArithmeticError:
            continue
        return ctx.matmul(A, f), ctx.matmul(A, pv)


def _plan(plan, **kw):
    plan = plan or combdet.SumPlan()
    return combdet.SumPlan(**{**plan.__dict__, **kw})


# --------------------------------------------------------------------------
# 1-4: exact combinatorics

def criterion_1(seed=0, quick=True, plan=None, prime=DEFAULT_PRIME):
    res = CriterionResult(1, "combinatorial constants", time_limit=60.0 + 5.0)
    with _timed(res):
        slowest = 0.0

        def timed_constant(*a, **kw):
            nonlocal slowest
            t0 = time.perf_counter()
            c = combdet.constant(*a, **kw)
            slowest = max(slowest, time.perf_counter() - t0)
            return c

        for g in range(2, 7):
            res.eq(f"c_{g},1", timed_constant(g, 1).value, math.factorial(g))
        for g in range(2, 6):
            res.eq(f"c_{g},2", timed_constant(g, 2).value,
                   math.factorial(g) * math.factorial(g - 1) * (2 * g - 1))
        for g, want in ((2, 6), (3, 360)):
            res.eq(f"c_{g}", timed_constant(g, kind="c_g").value, want)
        res.le("slowest small constant seconds", slowest, 1.0)
        t0 = time.perf_counter()
        c4 = combdet.constant(4, kind="c_g")
        res.info["c_4_enumeration"] = c4.enumeration_size
        res.info["c_4_elapsed_s"] = round(time.perf_counter() - t0, 3)
        res.eq("c_4", c4.value, 302400)
        res.le("c_4 seconds", time.perf_counter() - t0, 60.0)
    return res


def criterion_2(seed=0, quick=True, plan=None, prime=DEFAULT_PRIME):
    ctx = FieldContext.prime_field(prime)
    rng = np.random.default_rng(seed)
    res = CriterionResult(2, "unconditioned lemma over F_p", time_limit=600.0)
    with _timed(res):
        for g, trials in ((2, 20), (3, 20), (4, 3)):
            c = combdet.constant(g, kind="c_g").value
            M = g * (g + 1) // 2
            ok = okr = 0
            for _ in range(trials):
                f = ctx.random_array(rng, (g, M))
                lhs = combdet.lhs_det(combdet.ff_products(f, ctx), range(1, M + 1), ctx)
                full = combdet.rhs_unconditioned(f, ctx, _plan(plan, mode=combdet.FULL)).value
                red = combdet.rhs_unconditioned(f, ctx, _plan(plan, mode=combdet.REDUCED)).value
                ok += full == c * lhs % ctx.p
                okr += red == full
            res.eq(f"g={g} exact passes", ok, trials)
            res.eq(f"g={g} reduced == full", okr, trials)
    return res


def criterion_3(seed=0, quick=True, plan=None, prime=DEFAULT_PRIME):
    ctx = FieldContext.prime_field(prime)
    rng = np.random.default_rng(seed + 3)
    res = CriterionResult(3, "conditioned lemma n=2 over F_p", time_limit=120.0)
    with _timed(res):
        for g in (4, 5):
            L = combdet.TupleScheme(g, 2).L
            c = combdet.constant(g, 2).value
            ok = 0
            for _ in range(10):
                f, pv = conditioned_data(ctx, rng, g, 2, L)
                lhs = combdet.lhs_det(combdet.ff_products(f, ctx), range(1, L + 1), ctx)
                ok += combdet.rhs_conditioned(f, pv, 2, ctx, _plan(plan), c_value=c).value == lhs
            res.eq(f"g={g} ({L}! perms) exact passes", ok, 10)
    return res


def criterion_4(seed=0, quick=True, plan=None, prime=DEFAULT_PRIME):
    ctx = FieldContext.prime_field(prime)
    rng = np.random.default_rng(seed + 4)
    g, n = 4, 2
    L = combdet.TupleScheme(g, n).L
    res = CriterionResult(4, "extended lemma n=2 over F_p", time_limit=120.0)
    with _timed(res):
        consts = {}
        for pair in ((3, 3), (3, 4), (4, 3), (4, 4)):
            consts[pair] = combdet.constant(g, n, "c_prime_gn", pair).value
        res.info["c_prime_4_2"] = {f"{i}{j}": v for (i, j), v in consts.items()}
        ok = 0
        ratios = {pair: set() for pair in consts}
        for _ in range(5):
            f, pv = conditioned_data(ctx, rng, g, n, L + 1)
            ff = combdet.ff_products(f, ctx)
            for pair, c in consts.items():
                r = combdet.rhs_extended(f, pv, n, pair, ctx, _plan(plan), c_value=c)
                lhs = combdet.lhs_det(ff, combdet.extended_index_set(g, n, pair), ctx)
                ok += r.value == lhs
                if lhs:
                    # the constant implied by this trial, as a signed residue
                    implied = r.extra["raw"] * pow(lhs, -1, ctx.p) % ctx.p
                    ratios[pair].add(implied if implied <= ctx.p // 2 else implied - ctx.p)
        res.eq("exact passes (5 trials x 4 pairs)", ok, 20)
        consistent = all(s == {consts[p]} for p, s in ratios.items())
        res.add("enumerated c' equals the trial-implied constant", consistent, True, consistent)
    return res


# --------------------------------------------------------------------------
# 5-7: curve data

def curve_models(quick=True):
    return [curvemodel.random_model(42)] if quick else [curvemodel.fermat_model(), curvemodel.random_model(42)]


def criterion_5(seed=0, quick=True, plan=None, prime=None):
    res = CriterionResult(5, "genus-4 curve structure", time_limit=30.0)
    with _timed(res):
        from .fieldkit import rank_nullspace
        for model in curve_models(quick):
            tag = model.name
            S = curvemodel.sample_curve(model, 30, seed=seed)
            res.eq(f"{tag} sample count", len(S), 30)
            res.le(f"{tag} max point residual", max(max(p.residual_Q, p.residual_F) for p in S.points), 1e-12)
            r2, ns2 = rank_nullspace(curvemodel.product_evals(S, 2).T, 1e-8)
            res.eq(f"{tag} rank(ww)", r2, 9)
            q = model.q
            if ns2:
                cos = abs(np.vdot(ns2[0], q)) / np.linalg.norm(ns2[0]) / np.linalg.norm(q)
                res.add(f"{tag} quadric cosine", float(cos), 1 - 1e-8, cos >= 1 - 1e-8)
            r3, ns3 = rank_nullspace(curvemodel.product_evals(S, 3).T, 1e-8)
            res.eq(f"{tag} rank(www)", r3, 15)
            res.eq(f"{tag} nullity(www)", len(ns3), 5)
            f = model.f
            Nb, _ = np.linalg.qr(np.array(ns3).T)
            res.le(f"{tag} cubic distance to nullspace", np.linalg.norm(f - Nb @ (Nb.conj().T @ f)) / np.linalg.norm(f), 1e-8)
            Wb, _ = np.linalg.qr(curvemodel.quadric_times_linear(model).T)
            d = float(np.linalg.norm(f - Wb @ (Wb.conj().T @ f)) / np.linalg.norm(f))
            res.add(f"{tag} cubic distance to quadric x linear", d, 1e-3, d >= 1e-3)
    return res


def criterion_6(seed=0, quick=True, plan=None, prime=None):
    ctx = FieldContext.complex_approx()
    res = CriterionResult(6, "main quadric theorem over S_8", time_limit=60.0)
    with _timed(res):
        for model in curve_models(quick):
            om = curvemodel.sample_curve(model, 30, seed=seed).omega_evals
            x, p = om[:, :8], om[:, 8:10]
            r = combdet.theorem_main_sum(x, p, (3, 4), ctx, _plan(plan))
            res.le(f"{model.name} |sum|/sum|terms|", abs(r.value) / r.abs_sum, 1e-6)
            rng = np.random.default_rng(seed + 6)
            x2 = x.copy()
            x2[0] = rng.standard_normal(8) + 1j * rng.standard_normal(8)
            r2 = combdet.theorem_main_sum(x2, p, (3, 4), ctx, _plan(plan))
            ratio = abs(r2.value) / r2.abs_sum
            res.add(f"{model.name} negative control ratio", float(ratio), 1e-3, ratio >= 1e-3)
            res.info[f"{model.name}_terms"] = r.enumeration_size
    return res


def petri_checks(om, model=None):
    """All Petri-machinery residuals on one omega sample matrix, as a dict."""
    out = {}
    d = petri.prepare(om)
    out["v_pattern"] = d.v_checks["pattern_residual"]
    psi = petri.psi_tilde(d)
    out.update({f"psi_{k}": v for k, v in petri.psi_checks(d, psi).items()})
    C, X = petri.C_relations(d, om)
    ee = petri.products(om, 2)
    out["C_annihilation"] = C.residual(ee)
    out["C_rank"] = int(np.linalg.matrix_rank(C.vectors, tol=1e-8 * np.max(np.abs(C.vectors))))
    B = petri.B_matrix(d, om)
    out["B_reconstruction"] = petri.rel_err(B.T @ d.v.matrix[:d.N], ee)
    out["X_reconstruction"] = petri.rel_err(X.T @ ee, d.v.matrix)
    cb, idx, info = petri.cubic_basis(d)
    D, Y = petri.D_relations(d, om, idx)
    eee = petri.products(om, 3)
    out["Y_reconstruction"] = petri.rel_err(Y.T @ eee, petri.products(d.sigma.matrix, 3))
    out["D_annihilation"] = D.residual(eee)
    bases = {1: d.sigma.matrix, 2: d.v.matrix[:d.N], 3: cb.matrix}
    s11 = petri.structure_constants(1, 1, bases)
    s12 = petri.structure_constants(1, 2, bases)
    out["expansion_11"] = s11.expansion_residual
    out["expansion_12"] = s12.expansion_residual
    out.update(petri.identity_residuals(s11, s12))
    if model is not None:
        q = model.q
        c = C.vectors[0]
        out["C_quadric_cosine"] = float(abs(np.vdot(c, q)) / np.linalg.norm(c) / np.linalg.norm(q))
    return out, {"p_points": list(d.p_points), "cubic_basis": [int(i) for i in idx], **info}


def criterion_7(seed=0, quick=True, plan=None, prime=None):
    res = CriterionResult(7, "Petri machinery on curve data", time_limit=120.0)
    with _timed(res):
        for model in curve_models(quick):
            om = curvemodel.sample_curve(model, 30, seed=seed).omega_evals
            vals, info = petri_checks(om, model)
            res.info[model.name] = info
            for k, v in vals.items():
                if k == "C_rank":
                    res.eq(f"{model.name} {k}", v, 1)
                elif k == "C_quadric_cosine":
                    res.add(f"{model.name} {k}", v, 1 - 1e-7, v >= 1 - 1e-7)
                else:
                    res.le(f"{model.name} {k}", v, petri.TOL)
    return res


def criterion_8(seed=0, quick=True, plan=None, prime=DEFAULT_PRIME):
    ctx = FieldContext.prime_field(prime)
    rng = np.random.default_rng(seed + 8)
    res = CriterionResult(8, "Cauchy-Binet contraction vs naive C-sum", time_limit=10.0)
    with _timed(res):
        for M, N in ((3, 2), (4, 2), (4, 3)):
            ok = 0
            for _ in range(20):
                X = ctx.random_array(rng, (M, M))
                ee = ctx.random_array(rng, (M, N))
                vals = ctx.matmul(X.T, ee)
                C = petri.cauchy_binet_relation(X, range(N), range(N, M), vals, context=ctx)
                nv = petri.naive_C(X, ee, N, ctx)
                ok += all(C[i - N, j] == v for (i, j), v in nv.items())
            res.eq(f"(M,N)=({M},{N}) exact matches", ok, 20)
    return res


# --------------------------------------------------------------------------
# 9-10: theta and Siegel

def theta_residuals(rng, trials=50):
    worst = {"quasi_periodicity": 0.0, "reduction": 0.0, "parity": 0.0, "odd_zero": 0.0}
    for t in range(trials):
        g = 1 + t % 3
        Zp = siegel.random_period_point(rng, g)
        z = rng.uniform(-1, 1, g) + 1j * rng.uniform(-0.5, 0.5, g)
        ch = siegel.Characteristic(tuple(rng.uniform(-1, 1, g)), tuple(rng.uniform(-1, 1, g)))
        m = rng.integers(-1, 2, g)
        n = rng.integers(-2, 3, g)
        lhs, s = siegel.theta(z + n + Zp.Z @ m, Zp, ch, with_scale=True)
        rhs = siegel.quasi_periodicity_factor(z, Zp, ch, n, m) * siegel.theta(z, Zp, ch)
        worst["quasi_periodicity"] = max(worst["quasi_periodicity"], abs(lhs - rhs) / s)
        v, sv = siegel.theta(z, Zp, ch, with_scale=True)
        red = siegel.reduction_factor(z, Zp, ch) * siegel.theta(z + np.asarray(ch.b) + Zp.Z @ np.asarray(ch.a), Zp)
        worst["reduction"] = max(worst["reduction"], abs(red - v) / sv)
        d = siegel.Characteristic.half(tuple(rng.integers(0, 2, g)), tuple(rng.integers(0, 2, g)))
        a1, sa = siegel.theta(-z, Zp, d, with_scale=True)
        worst["parity"] = max(worst["parity"], abs(a1 - d.parity() * siegel.theta(z, Zp, d)) / sa)
        odd = siegel.Characteristic.half((1,) + (0,) * (g - 1), (1,) + (0,) * (g - 1))
        worst["odd_zero"] = max(worst["odd_zero"], abs(siegel.theta(np.zeros(g), Zp, odd)))
    return worst


def criterion_9(seed=0, quick=True, plan=None, prime=None):
    res = CriterionResult(9, "theta suite", time_limit=60.0)
    with _timed(res):
        w = theta_residuals(np.random.default_rng(seed + 9))
        for k in ("quasi_periodicity", "reduction", "parity"):
            res.le(k, w[k], 1e-10)
        res.le("odd_zero", w["odd_zero"], 1e-12)
        for g, want in ((1, (3, 1)), (2, (10, 6)), (3, (36, 28))):
            res.eq(f"spin census g={g}", list(siegel.spin_census(g)), list(want))
    return res


def siegel_residuals(rng, g, perturbations=100):
    A = rng.standard_normal((g, g))
    Y = A @ A.T + np.eye(g)
    table = symidx.build(g, 2)
    G = siegel.siegel_gS(Y, table)
    M = len(table)
    tr = 0.0
    for _ in range(perturbations):
        W = rng.standard_normal((g, g)) + 1j * rng.standard_normal((g, g))
        dZ = W + W.T
        u = siegel.pair_vector(dZ, table)
        t = siegel.trace_form(Y, dZ)
        tr = max(tr, abs(t - u @ G @ u.conj()) / abs(t))
    want = 2.0 ** (M - g) * np.linalg.det(Y) ** (-(g + 1))
    lam = 2.7
    return {
        "trace_form": tr,
        "det": abs(np.linalg.det(G) / want - 1),
        "scaling": float(np.max(np.abs(siegel.siegel_gS(lam * Y, table) - G / lam**2)) / np.max(np.abs(G))),
        "min_eig": float(np.min(np.linalg.eigvalsh(G))),
    }


def criterion_10(seed=0, quick=True, plan=None, prime=None):
    res = CriterionResult(10, "Siegel metric suite", time_limit=30.0)
    with _timed(res):
        rng = np.random.default_rng(seed + 10)
        for g in (2, 3, 4):
            r = siegel_residuals(rng, g)
            res.le(f"g={g} trace form", r["trace_form"], 1e-12)
            res.le(f"g={g} det(g^S)", r["det"], 1e-10)
            res.le(f"g={g} scaling", r["scaling"], 1e-13)
            res.add(f"g={g} positive definite", r["min_eig"], 0.0, r["min_eig"] > 0)
    return res


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def run_all(seed=0, quick=True, plan=None, prime=DEFAULT_PRIME, only=None):
    out = []
    for k, fn in enumerate(CRITERIA, start=1):
        if only and k not in only:
            continue
        kw = {"prime": prime} if "prime" in fn.__code__.co_varnames else {}
        out.append(fn(seed=seed, quick=quick, plan=plan, **kw))
    return out
