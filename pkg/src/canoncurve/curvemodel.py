"""Sampled points of a genus-4 canonical curve, a quadric meeting a cubic in P^3.

The holomorphic differentials omega_1..omega_4 are represented by the
coordinate functions X_1..X_4 in a per-point chart where the largest
coordinate equals 1.  A true trivialization of the canonical bundle differs
from this by a nonzero factor per point, and every rank, kernel and
normalized vanishing test used downstream is invariant under such factors.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import symidx

log = logging.getLogger(__name__)

G = 4
RESIDUAL_TOL = 1e-12
MAX_NEWTON = 30


class SamplingError(RuntimeError):
    pass


class ModelRejected(SamplingError):
    pass


def _exponents(table):
    E = np.zeros((len(table), G), dtype=np.int64)
    for k, e in enumerate(table.entries):
        for lab in e:
            E[k, lab - 1] += 1
    return E


QUAD_TABLE = symidx.build(G, 2)
CUBIC_TABLE = symidx.build(G, 3)
QUAD_EXP = _exponents(QUAD_TABLE)
CUBIC_EXP = _exponents(CUBIC_TABLE)


def _poly_eval(coeffs, E, X):
    """Evaluate sum_k c_k X^E_k at the columns of X (4 x K) or a single point."""
    X = np.asarray(X, dtype=np.complex128)
    if X.ndim == 1:
        return np.sum(coeffs * np.prod(X[None, :] ** E, axis=1))
    return np.einsum("k,kp->p", coeffs, np.prod(X.T[None, :, :] ** E[:, None, :], axis=2))


def _poly_grad(coeffs, E, X):
    X = np.asarray(X, dtype=np.complex128)
    out = np.zeros(G, dtype=np.complex128)
    for v in range(G):
        Ev = E.copy()
        mult = Ev[:, v].astype(float)
        Ev[:, v] = np.maximum(Ev[:, v] - 1, 0)
        out[v] = np.sum(coeffs * mult * np.prod(X[None, :] ** Ev, axis=1))
    return out


@dataclass(frozen=True)
class CurveModel:
    """Coefficients in the monomial basis, ordered by the DiagFirst tables."""

    quadric: tuple
    cubic: tuple
    seed: int | None = None
    name: str = "random"
    g: int = G

    @property
    def q(self):
        return np.array(self.quadric, dtype=np.complex128)

    @property
    def f(self):
        return np.array(self.cubic, dtype=np.complex128)

    def Q(self, X):
        return _poly_eval(self.q, QUAD_EXP, X)

    def F(self, X):
        return _poly_eval(self.f, CUBIC_EXP, X)

    def jacobian(self, X):
        return np.stack([_poly_grad(self.q, QUAD_EXP, X), _poly_grad(self.f, CUBIC_EXP, X)])

    def to_json(self):
        return {"name": self.name, "seed": self.seed,
                "quadric": [float(np.real(c)) for c in self.quadric],
                "cubic": [float(np.real(c)) for c in self.cubic]}


def quadric_times_linear(model):
    """The four vectors X_l * Q written in the cubic monomial table (4 x 20)."""
    out = np.zeros((G, len(CUBIC_TABLE)), dtype=np.complex128)
    for l in range(1, G + 1):
        for c, e in zip(model.q, QUAD_TABLE.entries):
            out[l - 1, CUBIC_TABLE.index(e + (l,))] += c
    return out


@dataclass(frozen=True)
class SampledPoint:
    coords: np.ndarray
    chart_scale: complex
    residual_Q: float
    residual_F: float

    def to_json(self):
        return {"coords": [[float(c.real), float(c.imag)] for c in self.coords],
                "chart_scale": [float(np.real(self.chart_scale)), float(np.imag(self.chart_scale))],
                "residual_Q": self.residual_Q, "residual_F": self.residual_F}

    @classmethod
    def from_json(cls, d):
        coords = np.array([complex(a, b) for a, b in d["coords"]])
        return cls(coords, complex(*d["chart_scale"]), d["residual_Q"], d["residual_F"])


@dataclass
class SampleSet:
    model: CurveModel
    points: list
    seed: int | None = None
    warnings: list = field(default_factory=list)

    @property
    def omega_evals(self):
        return np.stack([p.coords for p in self.points], axis=1)

    def __len__(self):
        return len(self.points)

    def to_json(self):
        om = self.omega_evals
        return {"model": self.model.to_json(), "seed": self.seed,
                "points": [p.to_json() for p in self.points],
                "omega_evals": [[[float(v.real), float(v.imag)] for v in row] for row in om]}

    def dumps(self):
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, d):
        m = d["model"]
        model = CurveModel(tuple(m["quadric"]), tuple(m["cubic"]), m.get("seed"), m.get("name", "random"))
        return cls(model, [SampledPoint.from_json(p) for p in d["points"]], d.get("seed"))


def fermat_model():
    q = np.zeros(len(QUAD_TABLE))
    f = np.zeros(len(CUBIC_TABLE))
    for i in range(1, G + 1):
        q[QUAD_TABLE.index((i, i))] = 1
        f[CUBIC_TABLE.index((i, i, i))] = 1
    return CurveModel(tuple(q), tuple(f), None, "fermat")


def _plane_basis(h):
    h = np.asarray(h, dtype=np.complex128).reshape(1, G)
    _, _, vh = np.linalg.svd(h)
    return vh[1:].conj().T  # 4 x 3, columns span {X : h.X = 0}


def _grid_coeffs(vals):
    """Coefficients c[a, b] of x^a y^b from values on the grid of n-th roots of
    unity: vals[a', b'] = sum c[a, b] w^(a a' + b b'), inverted by an FFT."""
    return np.fft.fft2(vals) / vals.size


def _resultant_poly(qc, fc):
    """Res_y(q, f) as a polynomial in x (highest degree first, numpy.roots order)."""
    n = 8
    w = np.exp(2j * np.pi * np.arange(n) / n)
    vals = []
    for x in w:
        qy = np.array([np.polyval(qc[::-1, b], x) for b in range(3)])  # coefficients of y^b
        fy = np.array([np.polyval(fc[::-1, b], x) for b in range(4)])
        syl = np.zeros((5, 5), dtype=np.complex128)
        for r in range(2):
            syl[r, r:r + 4] = fy[::-1]
        for r in range(3):
            syl[2 + r, r:r + 3] = qy[::-1]
        vals.append(np.linalg.det(syl))
    coeffs = np.fft.fft(np.array(vals)) / n  # c_a for x^a
    return coeffs[::-1]


def _newton(model, h, X0):
    k = int(np.argmax(np.abs(X0)))
    X = X0 / X0[k]
    e = np.zeros(G)
    e[k] = 1

    def system(Y):
        return np.array([model.Q(Y), model.F(Y), h @ Y, Y[k] - 1])

    r = system(X)
    for _ in range(MAX_NEWTON):
        if np.max(np.abs(r[:2])) <= RESIDUAL_TOL * 1e-2 and abs(r[2]) <= 1e-13:
            break
        J = np.vstack([model.jacobian(X), h, e])
        try:
            step = np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            return None
        t = 1.0
        for _ in range(12):
            Y = X - t * step
            rY = system(Y)
            if np.linalg.norm(rY) < np.linalg.norm(r) or t < 1e-3:
                break
            t /= 2
        X, r = Y, rY
    j = int(np.argmax(np.abs(X)))
    scale = X[j]
    X = X / scale
    rq, rf = float(abs(model.Q(X))), float(abs(model.F(X)))
    if max(rq, rf) > RESIDUAL_TOL:
        return None
    return SampledPoint(X, complex(scale), rq, rf)


def is_smooth_at(model, X, tol=1e-8):
    s = np.linalg.svd(model.jacobian(X), compute_uv=False)
    return s[0] > 0 and s[1] > tol * s[0]


def projective_distance(X, Y):
    c = abs(np.vdot(X, Y)) / (np.linalg.norm(X) * np.linalg.norm(Y))
    return float(np.sqrt(max(0.0, 1 - c * c)))


def slice_sample(model, hyperplane, warnings=None):
    """Intersect the curve with a hyperplane; returns up to 6 refined points."""
    h = np.asarray(hyperplane, dtype=np.complex128)
    P = _plane_basis(h)

    def point(x, y):
        return P @ np.array([x, y, 1.0])

    qc = _grid_coeffs(np.array([[model.Q(point(x, y)) for y in _unit(3)] for x in _unit(3)]))
    fc = _grid_coeffs(np.array([[model.F(point(x, y)) for y in _unit(4)] for x in _unit(4)]))
    res = _resultant_poly(qc, fc)
    scale = np.max(np.abs(res))
    if scale <= 1e-12 * (1 + np.max(np.abs(qc)) * np.max(np.abs(fc))) ** 3:
        raise ModelRejected("resultant vanishes identically: quadric and cubic share a component")
    res = np.trim_zeros(np.where(np.abs(res) > 1e-13 * scale, res, 0), "f")
    roots = np.roots(res)
    pts = []
    for x in roots:
        qy = np.array([np.polyval(qc[::-1, b], x) for b in range(3)])
        cands = np.roots(qy[::-1]) if abs(qy[2]) > 1e-14 else np.array([-qy[0] / qy[1]])
        fvals = [abs(sum(np.polyval(fc[::-1, b], x) * y**b for b in range(4))) for y in cands]
        y = cands[int(np.argmin(fvals))]
        sp = _newton(model, h, point(x, y))
        if sp is None:
            log.info("refinement diverged for a slice root; point dropped")
            continue
        if any(projective_distance(sp.coords, o.coords) < 1e-8 for o in pts):
            if warnings is not None:
                warnings.append("clustered roots (near-tangent hyperplane)")
            continue
        pts.append(sp)
    if len(pts) < 6 and warnings is not None:
        warnings.append(f"slice returned {len(pts)} < 6 points")
    return pts


def _unit(deg):
    n = deg + 1
    return np.exp(2j * np.pi * np.arange(n) / n)


def sample_curve(model, K=30, seed=0, max_slices=None):
    """K refined points from random hyperplane slices, ordered by (slice, root)."""
    rng = np.random.default_rng(seed)
    pts, warnings = [], []
    max_slices = max_slices or 4 * (K // 6 + 2)
    for _ in range(max_slices):
        h = rng.standard_normal(G) + 1j * rng.standard_normal(G)
        for sp in slice_sample(model, h, warnings):
            if not is_smooth_at(model, sp.coords):
                raise ModelRejected("Jacobian of (Q, F) drops rank at a sampled point")
            if any(projective_distance(sp.coords, o.coords) < 1e-8 for o in pts):
                continue
            pts.append(sp)
            if len(pts) == K:
                return SampleSet(model, pts, seed, warnings)
    raise SamplingError(f"only {len(pts)} of {K} points after {max_slices} slices")


def validate_model(model, seed=0):
    """Sample one generic slice and spot-check smoothness; raises ModelRejected."""
    rng = np.random.default_rng(seed)
    h = rng.standard_normal(G) + 1j * rng.standard_normal(G)
    pts = slice_sample(model, h)
    if len(pts) != 6:
        raise ModelRejected(f"generic slice gave {len(pts)} points instead of 6")
    for sp in pts:
        if not is_smooth_at(model, sp.coords):
            raise ModelRejected("Jacobian of (Q, F) drops rank at a sampled point")
    return True


def random_model(seed, max_retries=20, coeff_range=3):
    """Random small-integer quadric and cubic, retried until the model validates."""
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        q = rng.integers(-coeff_range, coeff_range + 1, size=len(QUAD_TABLE))
        f = rng.integers(-coeff_range, coeff_range + 1, size=len(CUBIC_TABLE))
        model = CurveModel(tuple(float(x) for x in q), tuple(float(x) for x in f), seed)
        try:
            validate_model(model, seed)
            return model
        except SamplingError:
            continue
    raise SamplingError(f"no valid model after {max_retries} retries")


def product_evals(samples, n):
    """M_n x K matrix of products of the omega values along DiagFirst entries."""
    om = samples.omega_evals if isinstance(samples, SampleSet) else np.asarray(samples)
    table = symidx.build(om.shape[0], n)
    return np.array([np.prod(om[[k - 1 for k in e]], axis=0) for e in table.entries])
