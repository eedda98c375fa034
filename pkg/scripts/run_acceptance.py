"""Run the ten acceptance criteria and write a JSON summary."""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path

from _config import parse

from canoncurve import acceptance
from canoncurve.combdet import SumPlan


@dataclass
class Config:
    seed: int = 0
    quick: bool = False
    workers: int = 1
    out: str = "results/acceptance.json"
    only: tuple[int, ...] = ()


def main(cfg: Config):
    plan = SumPlan(workers=cfg.workers)
    results = []
    for res in acceptance.run_all(cfg.seed, cfg.quick, plan, only=set(cfg.only) or None):
        print(res.line(), flush=True)
        results.append(res)
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps({"seed": cfg.seed, "quick": cfg.quick,
                               "criteria": [r.to_json() for r in results]}, indent=1))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria pass; details in {out}")
    return 0 if passed == len(results) else 1


if __name__ == "__main__":
    sys.exit(main(parse(Config)))
