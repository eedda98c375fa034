"""Sample the genus-4 model curve, save the SampleSet and report the product ranks."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from _config import parse

from canoncurve import curvemodel
from canoncurve.fieldkit import rank_nullspace


@dataclass
class Config:
    model: str = "random"
    model_seed: int = 42
    K: int = 30
    seed: int = 0
    out: str = "results/samples.json"


def main(cfg: Config):
    model = curvemodel.fermat_model() if cfg.model == "fermat" else curvemodel.random_model(cfg.model_seed)
    S = curvemodel.sample_curve(model, cfg.K, seed=cfg.seed)
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(S.dumps())
    worst = max(max(p.residual_Q, p.residual_F) for p in S.points)
    print(f"{len(S)} points, worst residual {worst:.1e}, warnings: {S.warnings or 'none'}")
    for n in (2, 3):
        P = curvemodel.product_evals(S, n)
        s = np.linalg.svd(P, compute_uv=False)
        r, ns = rank_nullspace(P.T, 1e-8)
        gap = s[r - 1] / s[r] if r < len(s) else float("inf")
        print(f"weight {n}: {P.shape[0]} products, rank {r}, nullity {len(ns)}, singular gap {gap:.1e}")
    print(f"saved {out}")


if __name__ == "__main__":
    main(parse(Config))
