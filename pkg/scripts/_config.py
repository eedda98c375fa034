"""Tiny helper: expose a dataclass as command-line flags."""
import argparse
import dataclasses


def parse(cls, argv=None, description=None):
    ap = argparse.ArgumentParser(description=description or cls.__doc__)
    for f in dataclasses.fields(cls):
        flag = "--" + f.name.replace("_", "-")
        if f.type in (bool, "bool"):
            ap.add_argument(flag, action="store_true", default=f.default)
        elif f.type in ("tuple[int, ...]", "list[int]"):
            ap.add_argument(flag, type=int, nargs="+", default=list(f.default))
        else:
            conv = {"int": int, "float": float, "str": str}.get(f.type if isinstance(f.type, str) else f.type.__name__, str)
            ap.add_argument(flag, type=conv, default=f.default)
    return cls(**vars(ap.parse_args(argv)))
