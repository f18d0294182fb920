"""Seeded random data for the coframe and solution test families."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kundtkit import expr as ex
from kundtkit.expr import Chart, Expr
from kundtkit.lorentz3 import LOCAL_COORDS, Coframe3, FormField, local_coframe, local_kappa

LOCAL_BOX = [(0.5, 1.5), (-1.0, 1.0), (0.1, 1.0)]


@dataclass(frozen=True)
class LocalFamily:
    chart: Chart
    F: Expr
    H: Expr
    f: Expr
    coframe: Coframe3
    kappa: FormField


def _coef(rng: np.random.Generator, lo: int = -3, hi: int = 3) -> int:
    return int(rng.integers(lo, hi + 1))


def random_F_H(rng: np.random.Generator) -> tuple[str, str]:
    """Polynomial and exponential data in (x_u, z)."""
    F = (f"{_coef(rng)}*z + {_coef(rng)}*z^2/2 + {_coef(rng)}*x_u*z/3"
         f" + {_coef(rng)}*exp(z/2) + {_coef(rng)}*sin(x_u)")
    H = (f"{_coef(rng)} + {_coef(rng)}*x_u*z + {_coef(rng)}*z^3"
         f" + {_coef(rng)}*exp({_coef(rng, 1, 2)}*z) + {_coef(rng)}*x_u^2*z")
    return F, H


def local_family(F: str | Expr, H: str | Expr, box=LOCAL_BOX) -> LocalFamily:
    chart = Chart(LOCAL_COORDS, box)
    F = ex.parse(F) if isinstance(F, str) else F
    H = ex.parse(H) if isinstance(H, str) else H
    f = ex.Num(ex.Fraction(1, 2)) * ex.differentiate(F, "z")
    return LocalFamily(chart, F, H, f, local_coframe(chart, F, H), local_kappa(chart, F, H, f))


def random_local_family(rng: np.random.Generator) -> LocalFamily:
    return local_family(*random_F_H(rng))


def random_solution_data(rng: np.random.Generator) -> tuple[str, str]:
    """(a, l) with a' > 0 and 2z + a > 0 on SOLUTION_BOX."""
    p0, p2, p3 = (int(rng.integers(0, 4)) for _ in range(3))
    p1 = int(rng.integers(1, 4))
    a = f"{p0} + {p1}*x_u + {p2}*x_u^2 + {p3}*x_u^3/3"
    q = [int(rng.integers(-3, 4)) for _ in range(3)]
    if not any(q):
        q[0] = 1
    l = f"{q[0]} + {q[1]}*x_u + {q[2]}*sin(x_u)"
    return a, l


SOLUTION_BOX = [(0.5, 1.5), (0.0, 1.0), (0.0, 1.0)]
