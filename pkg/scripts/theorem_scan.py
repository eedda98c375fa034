"""Scan the main alternating sum over seeds and corruption levels.

For each sampling seed the normalized value |sum| / sum|terms| is printed for
the clean curve points and with the first k sample points replaced by random
vectors.  A clean run sits at rounding level; the sum stays at rounding level
with one corrupted point and jumps to O(1e-2) from two on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from _config import parse

from canoncurve import combdet, curvemodel
from canoncurve.fieldkit import FieldContext


@dataclass
class Config:
    seeds: int = 5
    model_seed: int = 42
    max_corrupt: int = 3


def main(cfg: Config):
    ctx = FieldContext.complex_approx()
    model = curvemodel.random_model(cfg.model_seed)
    print("seed " + " ".join(f"k={k:<8d}" for k in range(cfg.max_corrupt + 1)))
    for seed in range(cfg.seeds):
        om = curvemodel.sample_curve(model, 10, seed=seed).omega_evals
        rng = np.random.default_rng(seed)
        vals = []
        for k in range(cfg.max_corrupt + 1):
            z = om.copy()
            z[:, :k] = rng.standard_normal((4, k)) + 1j * rng.standard_normal((4, k))
            r = combdet.theorem_main_sum(z[:, :8], z[:, 8:10], (3, 4), ctx)
            vals.append(abs(r.value) / r.abs_sum)
        print(f"{seed:4d} " + " ".join(f"{v:<10.1e}" for v in vals))


if __name__ == "__main__":
    main(parse(Config))
