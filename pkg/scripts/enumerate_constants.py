"""Tabulate the combinatorial constants with enumeration sizes and timings."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

from _config import parse

from canoncurve.combdet import BudgetExceeded, constant


@dataclass
class Config:
    max_g: int = 6
    include_c4: bool = False
    max_tuples: float = 5e7


def row(label, fn, closed=None):
    t0 = time.perf_counter()
    try:
        c = fn()
    except BudgetExceeded as e:
        print(f"{label:<22} {'budget':>14} {e.count:>16.3e}")
        return
    dt = time.perf_counter() - t0
    mark = "" if closed is None else ("  ok" if closed == c.value else f"  MISMATCH (closed form {closed})")
    print(f"{label:<22} {c.value:>14} {c.enumeration_size:>16} {dt:8.2f}s{mark}")


def main(cfg: Config):
    print(f"{'constant':<22} {'value':>14} {'tuples':>16} {'time':>9}")
    for g in range(2, cfg.max_g + 1):
        row(f"c_{{{g},1}}", lambda: constant(g, 1, max_tuples=cfg.max_tuples), math.factorial(g))
    for g in range(2, cfg.max_g + 1):
        row(f"c_{{{g},2}}", lambda: constant(g, 2, max_tuples=cfg.max_tuples),
            math.factorial(g) * math.factorial(g - 1) * (2 * g - 1))
    for g in range(3, cfg.max_g + 1):
        row(f"c_{{{g},3}}", lambda: constant(g, 3, max_tuples=cfg.max_tuples))
    for g in (2, 3) + ((4,) if cfg.include_c4 else ()):
        row(f"c_{g}", lambda: constant(g, kind="c_g", max_tuples=cfg.max_tuples),
            {2: 6, 3: 360, 4: 302400}[g])
    for g, n in ((4, 1), (4, 2), (5, 2), (5, 3)):
        for i in range(n + 1, g + 1):
            for j in range(n + 1, g + 1):
                row(f"c'_{{{g},{n}}} ({i},{j})",
                    lambda: constant(g, n, "c_prime_gn", (i, j), max_tuples=cfg.max_tuples))


if __name__ == "__main__":
    main(parse(Config))
