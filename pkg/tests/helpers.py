"""Shared generators for randomized test corpora."""
from __future__ import annotations

import numpy as np

from fifdim import expr


def random_tree(rng: np.random.Generator, depth: int,
                allow_abs: bool = True) -> expr.Node:
    """Random expression tree of at most the given depth.

    Emitted constants are nonnegative, matching what the parser produces, so
    print/parse round trips are structural.  log and sqrt are wrapped so the
    generated functions stay real on most of [0, 1].
    """
    if depth <= 0 or rng.random() < 0.25:
        if rng.random() < 0.5:
            return expr.X
        return expr.Const(round(float(rng.uniform(0.0, 3.0)), 4))
    kind = rng.integers(0, 4)
    if kind == 0:
        op = str(rng.choice(["+", "-", "*", "/"]))
        left = random_tree(rng, depth - 1, allow_abs)
        right = random_tree(rng, depth - 1, allow_abs)
        if op == "/":
            # keep denominators away from zero on [0, 1]
            right = expr.Binary("+", expr.Unary("abs", right), expr.Const(1.0))
        return expr.Binary(op, left, right)
    if kind == 1:
        funcs = ["sin", "cos", "exp"] + (["abs"] if allow_abs else [])
        op = str(rng.choice(funcs))
        return expr.Unary(op, random_tree(rng, depth - 1, allow_abs))
    if kind == 2:
        return expr.Unary("neg", random_tree(rng, depth - 1, allow_abs))
    e = float(rng.choice([0.5, 2.0, 3.0, 1.5]))
    base = random_tree(rng, depth - 1, allow_abs)
    if e != round(e):
        base = expr.Unary("abs", base)
    return expr.Pow(base, e)


def random_values(rng: np.random.Generator, n: int, smooth: bool = False) -> np.ndarray:
    v = rng.uniform(-1.0, 1.0, n)
    if smooth:
        v = np.cumsum(v) / np.sqrt(n)
    return v
