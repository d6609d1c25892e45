"""Seeded test-function families for the inversion checks.

All members vary on unit scales in s = ln x and decay exponentially as x -> inf.
"""

from dataclasses import dataclass

import numpy as np

from .grid import LD, GridFunction


@dataclass(frozen=True)
class Member:
    label: str
    offset: float
    rel: object

    def sample(self, grid):
        with np.errstate(all="ignore"):
            return GridFunction(grid, self.rel(grid.x.copy()), self.offset)


def right_family(seed=0, count=10):
    """Right-hand sides v = x^a e^{-c x} (1 + eps sin(w x)); the first member is x e^{-x}."""
    rng = np.random.default_rng(seed)
    out = [Member("x*exp(-x)", 0.0, lambda x: x * np.exp(-x))]
    while len(out) < count:
        a, c = rng.uniform(0.2, 1.5), rng.uniform(0.5, 2.0)
        eps, w = rng.uniform(0.0, 0.5), rng.uniform(0.5, 2.0)
        f = (lambda a, c, eps, w: lambda x: x ** LD(a) * np.exp(-LD(c) * x) * (1 + LD(eps) * np.sin(LD(w) * x)))(a, c, eps, w)
        out.append(Member(f"x^{a:.4f}*exp(-{c:.4f}x)*(1+{eps:.4f}sin({w:.4f}x))", 0.0, f))
    return out


def left_family(params, seed=0, count=10):
    """Solutions w = A0 e^{-c x} + A1 x^beta e^{-c x} + A2 x e^{-d x}, held as A0 + rel.

    The first member is e^{-x}, for which u0 = 1 and u_beta = 0."""
    b = LD(params.beta)
    rng = np.random.default_rng(seed)
    out = [Member("exp(-x)", 1.0, lambda x: np.expm1(-x))]
    while len(out) < count:
        A0, A1, A2 = rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)
        c, d = rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)

        def rel(x, A0=LD(A0), A1=LD(A1), A2=LD(A2), c=LD(c), d=LD(d)):
            return A0 * np.expm1(-c * x) + A1 * x ** b * np.exp(-c * x) + A2 * x * np.exp(-d * x)

        out.append(Member(f"{A0:.4f}e^(-{c:.4f}x)+{A1:.4f}x^b e^(-{c:.4f}x)+{A2:.4f}x e^(-{d:.4f}x)", A0, rel))
    return out
