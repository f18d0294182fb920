"""Null coframes on three-dimensional Lorentzian charts.

Forms carry coordinate components as expressions.  Directional derivatives
such as ``df(v)`` pair with metric duals (``v♯`` with ``g(v♯, ·) = v``),
which for a null coframe means frame vectors are swapped: ``u♯ = E_v``,
``v♯ = E_u`` and ``n♯ = E_n``.  Orientation is fixed by ``ν = u∧v∧n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations, permutations
from typing import Iterable, Sequence

import numpy as np

from . import expr as ex
from .checks import Report, check_exprs
from .expr import Chart, Expr, as_expr, differentiate, total

PAIRS = ((0, 1), (0, 2), (1, 2))
BASIS = {0: ((),), 1: ((0,), (1,), (2,)), 2: PAIRS, 3: ((0, 1, 2),)}


class PreconditionError(ValueError):
    """Input violates the stated precondition of an operation."""


class InconsistencyError(ValueError):
    """The data cannot satisfy the requested differential system."""


def _perm_sign(seq: Sequence[int]) -> int:
    sign = 1
    seq = list(seq)
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
            elif seq[i] == seq[j]:
                return 0
    return sign


@dataclass(frozen=True, eq=False)
class FormField:
    """A k-form with components on the basis dx^I, I increasing."""

    degree: int
    comps: tuple[Expr, ...]
    chart: Chart

    def __post_init__(self):
        if self.degree not in BASIS:
            raise ValueError("degree must be 0..3")
        comps = tuple(as_expr(c) for c in self.comps)
        if len(comps) != len(BASIS[self.degree]):
            raise ValueError(f"a {self.degree}-form has {len(BASIS[self.degree])} components")
        if len(self.chart.coords) != 3:
            raise ValueError("charts must be three-dimensional")
        object.__setattr__(self, "comps", comps)

    @classmethod
    def zero(cls, degree: int, chart: Chart) -> "FormField":
        return cls(degree, (ex.ZERO,) * len(BASIS[degree]), chart)

    @classmethod
    def function(cls, f, chart: Chart) -> "FormField":
        return cls(0, (as_expr(f),), chart)

    @classmethod
    def from_strings(cls, degree: int, texts: Iterable[str], chart: Chart) -> "FormField":
        return cls(degree, tuple(ex.parse(t) for t in texts), chart)

    def component(self, idx: Sequence[int]) -> Expr:
        """Antisymmetric component at an arbitrary index tuple."""
        s = _perm_sign(idx)
        if s == 0:
            return ex.ZERO
        c = self.comps[BASIS[self.degree].index(tuple(sorted(idx)))]
        return c if s > 0 else ex.neg(c)

    def _same(self, other: "FormField") -> None:
        if other.degree != self.degree:
            raise ValueError("degree mismatch")
        if other.chart.coords != self.chart.coords:
            raise ValueError("chart mismatch")

    def __add__(self, other: "FormField") -> "FormField":
        self._same(other)
        return FormField(self.degree, tuple(a + b for a, b in zip(self.comps, other.comps)), self.chart)

    def __sub__(self, other: "FormField") -> "FormField":
        self._same(other)
        return FormField(self.degree, tuple(a - b for a, b in zip(self.comps, other.comps)), self.chart)

    def __neg__(self) -> "FormField":
        return FormField(self.degree, tuple(ex.neg(a) for a in self.comps), self.chart)

    def scale(self, f) -> "FormField":
        f = as_expr(f)
        return FormField(self.degree, tuple(f * a for a in self.comps), self.chart)

    def __rmul__(self, f) -> "FormField":
        return self.scale(f)

    def __mul__(self, f) -> "FormField":
        return self.scale(f)

    def wedge(self, other: "FormField") -> "FormField":
        return wedge(self, other)

    def __xor__(self, other: "FormField") -> "FormField":
        return wedge(self, other)

    def d(self) -> "FormField":
        return exterior_d(self)

    def __call__(self, *vectors: Sequence[Expr]) -> Expr:
        """Evaluate on vector fields given by coordinate components."""
        if len(vectors) != self.degree:
            raise ValueError("wrong number of vector arguments")
        if self.degree == 0:
            return self.comps[0]
        terms = []
        for idx in permutations(range(3), self.degree):
            if len(set(idx)) < self.degree:
                continue
            coeff = self.component(idx)
            if coeff is ex.ZERO:
                continue
            prod: Expr = ex.ONE
            for vec, i in zip(vectors, idx):
                prod = prod * as_expr(vec[i])
            terms.append(coeff * prod)
        return total(terms)

    def text(self) -> list[str]:
        return [ex.to_text(c) for c in self.comps]


def wedge(a: FormField, b: FormField) -> FormField:
    if a.chart.coords != b.chart.coords:
        raise ValueError("chart mismatch")
    k = a.degree + b.degree
    if k > 3:
        raise ValueError("wedge degree exceeds 3")
    comps = []
    for idx in BASIS[k]:
        terms = []
        for sub_a in combinations(idx, a.degree):
            rest = tuple(i for i in idx if i not in sub_a)
            s = _perm_sign(sub_a + rest)
            ca = a.comps[BASIS[a.degree].index(sub_a)] if a.degree else a.comps[0]
            cb = b.comps[BASIS[b.degree].index(rest)] if b.degree else b.comps[0]
            t = ca * cb
            terms.append(t if s > 0 else ex.neg(t))
        comps.append(total(terms))
    return FormField(k, tuple(comps), a.chart)


def exterior_d(f: FormField) -> FormField:
    """Coordinate exterior derivative."""
    if f.degree == 3:
        raise ValueError("exterior derivative of a top form")
    coords = f.chart.coords
    k = f.degree + 1
    comps = []
    for idx in BASIS[k]:
        terms = []
        for pos, i in enumerate(idx):
            rest = idx[:pos] + idx[pos + 1:]
            c = f.comps[BASIS[f.degree].index(rest)] if f.degree else f.comps[0]
            t = differentiate(c, coords[i])
            terms.append(t if pos % 2 == 0 else ex.neg(t))
        comps.append(total(terms))
    return FormField(k, tuple(comps), f.chart)


# ---------------------------------------------------------------------------
# symbolic 3x3 linear algebra
# ---------------------------------------------------------------------------

Matrix3 = tuple[tuple[Expr, Expr, Expr], tuple[Expr, Expr, Expr], tuple[Expr, Expr, Expr]]


def det3(m) -> Expr:
    return total(
        _perm_sign(p) * (m[0][p[0]] * m[1][p[1]] * m[2][p[2]]) for p in permutations(range(3))
    )


def inverse3(m) -> tuple[Matrix3, Expr]:
    """Inverse via cofactors; returns (inverse, determinant)."""
    det = det3(m)
    if det is ex.ZERO:
        raise ex.DomainError("singular matrix: determinant is identically zero", det)

    def cof(i, j):
        rows = [r for r in range(3) if r != i]
        cols = [c for c in range(3) if c != j]
        minor = m[rows[0]][cols[0]] * m[rows[1]][cols[1]] - m[rows[0]][cols[1]] * m[rows[1]][cols[0]]
        return minor if (i + j) % 2 == 0 else ex.neg(minor)

    inv = tuple(tuple(ex.div(cof(j, i), det) for j in range(3)) for i in range(3))
    return inv, det


@dataclass(frozen=True, eq=False)
class BilinearField:
    """Coordinate components T_ij of a (0,2)-tensor."""

    comps: Matrix3
    chart: Chart

    def __post_init__(self):
        object.__setattr__(self, "comps", tuple(tuple(as_expr(c) for c in row) for row in self.comps))

    def __getitem__(self, ij) -> Expr:
        i, j = ij
        return self.comps[i][j]

    def __add__(self, other: "BilinearField") -> "BilinearField":
        return BilinearField(tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.comps, other.comps)), self.chart)

    def __sub__(self, other: "BilinearField") -> "BilinearField":
        return BilinearField(tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.comps, other.comps)), self.chart)

    def scale(self, f) -> "BilinearField":
        f = as_expr(f)
        return BilinearField(tuple(tuple(f * a for a in r) for r in self.comps), self.chart)

    def row(self, i: int) -> FormField:
        """The one-form T(∂_i, ·)."""
        return FormField(1, self.comps[i], self.chart)

    def flat(self) -> list[Expr]:
        return [c for r in self.comps for c in r]

    def transpose(self) -> "BilinearField":
        return BilinearField(tuple(tuple(self.comps[j][i] for j in range(3)) for i in range(3)), self.chart)


def tensor(a: FormField, b: FormField) -> BilinearField:
    """a ⊗ b."""
    return BilinearField(tuple(tuple(a.comps[i] * b.comps[j] for j in range(3)) for i in range(3)), a.chart)


def odot(a: FormField, b: FormField) -> BilinearField:
    """a ⊙ b = a ⊗ b + b ⊗ a."""
    return tensor(a, b) + tensor(b, a)


def skew(a: FormField, b: FormField) -> BilinearField:
    """a ∧ b viewed as the tensor a ⊗ b - b ⊗ a."""
    return tensor(a, b) - tensor(b, a)


@dataclass(frozen=True, eq=False)
class MetricField:
    """Symmetric metric with an optional volume coefficient ν = vol dx^0∧dx^1∧dx^2."""

    comps: Matrix3
    chart: Chart
    volume: Expr | None = None

    def __post_init__(self):
        object.__setattr__(self, "comps", tuple(tuple(as_expr(c) for c in row) for row in self.comps))

    def __getitem__(self, ij) -> Expr:
        i, j = ij
        return self.comps[i][j]

    @cached_property
    def _inverse(self) -> tuple[Matrix3, Expr]:
        return inverse3(self.comps)

    @property
    def inverse(self) -> Matrix3:
        return self._inverse[0]

    @property
    def det(self) -> Expr:
        return self._inverse[1]

    def as_bilinear(self) -> BilinearField:
        return BilinearField(self.comps, self.chart)

    def pair(self, a: FormField, b: FormField) -> Expr:
        """g⁻¹(a, b) for one-forms."""
        gi = self.inverse
        return total(gi[i][j] * a.comps[i] * b.comps[j] for i in range(3) for j in range(3))

    def lower(self, vec: Sequence[Expr]) -> FormField:
        return FormField(1, tuple(total(self.comps[i][j] * vec[j] for j in range(3)) for i in range(3)), self.chart)

    @cached_property
    def christoffel(self) -> tuple:
        """Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il - ∂_l g_ij)."""
        coords = self.chart.coords
        g, gi = self.comps, self.inverse
        dg = [[[differentiate(g[i][j], coords[k]) for k in range(3)] for j in range(3)] for i in range(3)]
        first = [[[ex.mul(ex.Num(ex.Fraction(1, 2)), dg[j][l][i] + dg[i][l][j] - dg[i][j][l]) for l in range(3)]
                  for j in range(3)] for i in range(3)]
        return tuple(
            tuple(tuple(total(gi[k][l] * first[i][j][l] for l in range(3)) for j in range(3)) for i in range(3))
            for k in range(3)
        )

    def check(self, n_points: int = 20, seed: int = 0) -> None:
        """Raise if the metric is degenerate or not Lorentzian at sampled points."""
        env = self.chart.sample(n_points, seed)
        vals = ex.evaluate_batch([c for r in self.comps for c in r], env)
        mats = np.stack(vals, axis=-1).reshape(-1, 3, 3)
        for m in mats:
            eig = np.linalg.eigvalsh(m)
            if np.min(np.abs(eig)) < 1e-12 * max(1.0, np.max(np.abs(eig))):
                raise ex.DomainError("degenerate metric at a sample point")
            if np.sum(eig < 0) != 1:
                raise ex.DomainError("metric is not of signature (2,1) at a sample point")


def sharp(g: MetricField, f: FormField) -> tuple[Expr, Expr, Expr]:
    """Vector components of g⁻¹f."""
    if f.degree != 1:
        raise ValueError("sharp expects a one-form")
    gi = g.inverse
    return tuple(total(gi[i][j] * f.comps[j] for j in range(3)) for i in range(3))


def derivative_along(chart: Chart, vec: Sequence[Expr], f) -> Expr:
    f = as_expr(f)
    return total(as_expr(vec[i]) * differentiate(f, chart.coords[i]) for i in range(3))


def _raise2(g: MetricField, w: FormField):
    gi = g.inverse
    up = {}
    for i in range(3):
        for j in range(3):
            up[i, j] = total(
                gi[i][a] * gi[j][b] * w.component((a, b)) for a in range(3) for b in range(3) if a != b
            )
    return up


def hodge3(g: MetricField, f: FormField) -> FormField:
    """Lorentzian Hodge star with α∧∗β = g⁻¹(α,β) ν and ν = g.volume dx⁰∧dx¹∧dx²."""
    if g.volume is None:
        raise PreconditionError("hodge3 needs an oriented metric (volume coefficient)")
    vol = g.volume
    chart = f.chart
    if f.degree == 0:
        return FormField(3, (f.comps[0] * vol,), chart)
    if f.degree == 1:
        up = sharp(g, f)
        comps = []
        for j, k in PAIRS:
            comps.append(total(_perm_sign((i, j, k)) * up[i] for i in range(3) if i not in (j, k)) * vol)
        return FormField(2, tuple(comps), chart)
    if f.degree == 2:
        up = _raise2(g, f)
        comps = []
        for k in range(3):
            comps.append(total(_perm_sign(ij + (k,)) * up[ij] for ij in PAIRS if k not in ij) * vol)
        return FormField(1, tuple(comps), chart)
    return FormField(0, (f.comps[0] * vol / g.det,), chart)


# ---------------------------------------------------------------------------
# coframes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Coframe3:
    u: FormField
    v: FormField
    n: FormField

    def __post_init__(self):
        for w in (self.u, self.v, self.n):
            if w.degree != 1:
                raise ValueError("coframe entries must be one-forms")
        if not (self.u.chart.coords == self.v.chart.coords == self.n.chart.coords):
            raise ValueError("coframe entries live on different charts")

    @classmethod
    def from_strings(cls, chart: Chart, u, v, n) -> "Coframe3":
        return cls(*(FormField.from_strings(1, w, chart) for w in (u, v, n)))

    @property
    def chart(self) -> Chart:
        return self.u.chart

    @property
    def forms(self) -> tuple[FormField, FormField, FormField]:
        return (self.u, self.v, self.n)

    @cached_property
    def matrix(self) -> Matrix3:
        return tuple(w.comps for w in self.forms)

    @cached_property
    def _frame(self) -> tuple[Matrix3, Expr]:
        return inverse3(self.matrix)

    @property
    def frame(self) -> tuple[tuple[Expr, Expr, Expr], ...]:
        """(E_u, E_v, E_n) as coordinate vectors, dual to (u, v, n)."""
        inv = self._frame[0]
        return tuple(tuple(inv[i][a] for i in range(3)) for a in range(3))

    @property
    def det(self) -> Expr:
        return self._frame[1]

    @cached_property
    def metric(self) -> MetricField:
        return metric_from_coframe(self)

    @property
    def volume_form(self) -> FormField:
        return FormField(3, (self.det,), self.chart)

    # metric duals: u♯ = E_v, v♯ = E_u, n♯ = E_n
    @property
    def u_sharp(self):
        return self.frame[1]

    @property
    def v_sharp(self):
        return self.frame[0]

    @property
    def n_sharp(self):
        return self.frame[2]

    def along(self, which: str, f) -> Expr:
        """df(w♯) for w in {'u','v','n'}."""
        vec = {"u": self.u_sharp, "v": self.v_sharp, "n": self.n_sharp}[which]
        return derivative_along(self.chart, vec, f)

    def pair_sharp(self, which: str, kappa: FormField) -> Expr:
        """κ(w♯), i.e. the metric pairing of κ with the coframe form w."""
        vec = {"u": self.u_sharp, "v": self.v_sharp, "n": self.n_sharp}[which]
        return kappa(vec)

    def coeffs1(self, a: FormField) -> tuple[Expr, Expr, Expr]:
        """Coefficients of a on (u, v, n)."""
        return tuple(a(E) for E in self.frame)

    def coeffs2(self, w: FormField) -> dict[str, Expr]:
        """Coefficients of w on u∧v, u∧n, v∧n."""
        E = self.frame
        return {"uv": w(E[0], E[1]), "un": w(E[0], E[2]), "vn": w(E[1], E[2])}

    def coeffs3(self, w: FormField) -> Expr:
        """Coefficient of w on u∧v∧n."""
        return w.comps[0] / self.det

    def combine(self, cu, cv, cn) -> FormField:
        return self.u.scale(cu) + self.v.scale(cv) + self.n.scale(cn)


def metric_from_coframe(c: Coframe3) -> MetricField:
    """g = u⊙v + n⊗n, oriented by ν = u∧v∧n."""
    b = odot(c.u, c.v) + tensor(c.n, c.n)
    return MetricField(b.comps, c.chart, volume=c.det)


def constant_coframe(chart: Chart) -> Coframe3:
    one, zero = ex.ONE, ex.ZERO
    return Coframe3(
        FormField(1, (one, zero, zero), chart),
        FormField(1, (zero, one, zero), chart),
        FormField(1, (zero, zero, one), chart),
    )


@dataclass(frozen=True)
class Sampling:
    n_points: int = 100
    tol: float = 1e-8
    seed: int = 0


DEFAULT = Sampling()


def _forms_flat(forms: Iterable[FormField]) -> list[Expr]:
    return [c for f in forms for c in f.comps]


def coframe_validity(c: Coframe3, s: Sampling = DEFAULT) -> Report:
    """Metric duals have the null-coframe inner products; the metric is Lorentzian."""
    g = c.metric
    c.metric.check(min(s.n_points, 50), s.seed)
    rep = Report("coframe")
    u, v, n = c.forms
    rep.add(check_exprs("g(u,u)=0, g(v,v)=0, g(u,n)=0, g(v,n)=0",
                        [g.pair(u, u), g.pair(v, v), g.pair(u, n), g.pair(v, n)], c.chart, s))
    rep.add(check_exprs("g(u,v)=1, g(n,n)=1", [g.pair(u, v) - 1, g.pair(n, n) - 1], c.chart, s))
    return rep


def dual_hodge_report(c: Coframe3, s: Sampling = DEFAULT) -> Report:
    g = c.metric
    u, v, n = c.forms
    rep = Report("hodge identities")
    rep.add(check_exprs("*u = -u^n", (hodge3(g, u) + wedge(u, n)).comps, c.chart, s))
    rep.add(check_exprs("*v = v^n", (hodge3(g, v) - wedge(v, n)).comps, c.chart, s))
    rep.add(check_exprs("*n = u^v", (hodge3(g, n) - wedge(u, v)).comps, c.chart, s))
    vol = wedge(wedge(u, v), n)
    rep.add(check_exprs("*nu = -1", [hodge3(g, vol).comps[0] + 1], c.chart, s))
    return rep


# ---------------------------------------------------------------------------
# the skew-torsion systems
# ---------------------------------------------------------------------------


def exterior_residuals(c: Coframe3, f, kappa: FormField) -> dict[str, FormField]:
    f = as_expr(f)
    u, v, n = c.forms
    w = v.scale(f) + kappa
    return {
        "du/2 - f*u": u.d().scale(ex.Num(ex.Fraction(1, 2))) - hodge3(c.metric, u).scale(f),
        "dv - (fv+kappa)^n": v.d() - wedge(w, n),
        "dn - u^(fv+kappa)": n.d() - wedge(u, w),
    }


def check_exterior_system(c: Coframe3, f, kappa: FormField, s: Sampling = DEFAULT) -> Report:
    """½du = f∗u, dv = (fv+κ)∧n, dn = u∧(fv+κ)."""
    rep = Report("exterior system")
    for name, res in exterior_residuals(c, f, kappa).items():
        rep.add(check_exprs(name, res.comps, c.chart, s))
    return rep


def covariant_derivative(g: MetricField, a: FormField) -> BilinearField:
    """(∇_i a)_j = ∂_i a_j - Γ^k_ij a_k."""
    coords = g.chart.coords
    G = g.christoffel
    comps = tuple(
        tuple(
            differentiate(a.comps[j], coords[i]) - total(G[k][i][j] * a.comps[k] for k in range(3))
            for j in range(3)
        )
        for i in range(3)
    )
    return BilinearField(comps, g.chart)


def check_covariant_system(c: Coframe3, f, kappa: FormField, s: Sampling = DEFAULT) -> Report:
    """∇u = f n∧u, ∇v = κ⊗n - f n⊗v, ∇n = f u⊗v - κ⊗u (first slot = direction)."""
    f = as_expr(f)
    g = c.metric
    u, v, n = c.forms
    rep = Report("covariant system")
    targets = {
        "nabla u - f n^u": (u, skew(n, u).scale(f)),
        "nabla v - (kappa(x)n - f n(x)v)": (v, tensor(kappa, n) - tensor(n, v).scale(f)),
        "nabla n - (f u(x)v - kappa(x)u)": (n, tensor(u, v).scale(f) - tensor(kappa, u)),
    }
    for name, (form, target) in targets.items():
        rep.add(check_exprs(name, (covariant_derivative(g, form) - target).flat(), c.chart, s))
    return rep


@dataclass(frozen=True, eq=False)
class KappaSolution:
    kappa: FormField
    coeffs: tuple[Expr, Expr, Expr]  # coefficients on (u, v, n)
    report: Report


def solve_kappa(c: Coframe3, f, free_v: Expr | str | None = None, s: Sampling = DEFAULT) -> KappaSolution:
    """Solve the exterior system for κ.

    ``dn = u∧(fv+κ)`` fixes the coefficients of κ on v and n.  The coefficient
    on u, which is κ(v♯), is ``free_v`` when given; otherwise it is read from
    the u∧n coefficient of dv, the only value the dv equation allows.  The dv
    equation is always checked as a residual.
    """
    f = as_expr(f)
    u, v, n = c.forms
    half_du = u.d().scale(ex.Num(ex.Fraction(1, 2))) - hodge3(c.metric, u).scale(f)
    pre = check_exprs("du/2 - f*u", half_du.comps, c.chart, s)
    if not pre.passed:
        raise PreconditionError(f"½du = f∗u fails (max residual {pre.max_abs:.3g})")
    dn = c.coeffs2(n.d())
    shape = check_exprs("v^n coefficient of dn", [dn["vn"]], c.chart, s)
    if not shape.passed:
        raise InconsistencyError("dn has a v∧n component; no κ solves dn = u∧(fv+κ)")
    dv = c.coeffs2(v.d())
    k_v = dn["uv"] - f
    k_n = dn["un"]
    k_u = as_expr(free_v) if free_v is not None else dv["un"]
    kappa = c.combine(k_u, k_v, k_n)
    rep = Report("kappa")
    rep.add(pre)
    rep.add(shape)
    rep.add(check_exprs("dv - (fv+kappa)^n", (v.d() - wedge(v.scale(f) + kappa, n)).comps, c.chart, s))
    return KappaSolution(kappa, (k_u, k_v, k_n), rep)


def integrability_check(c: Coframe3, f, kappa: FormField, s: Sampling = DEFAULT) -> Report:
    f = as_expr(f)
    u, v, n = c.forms
    df = exterior_d(FormField.function(f, c.chart))
    dk = kappa.d()
    vol = wedge(wedge(u, v), n)
    coeff = c.along("n", f) + f * f + c.pair_sharp("u", kappa) * f
    rep = Report("integrability")
    rep.add(check_exprs("df^u^n", wedge(wedge(df, u), n).comps, c.chart, s))
    rep.add(check_exprs("n^(df^v + dkappa)", wedge(n, wedge(df, v) + dk).comps, c.chart, s))
    rep.add(check_exprs("(df(n)+f^2+kappa(u)f) u^v^n - u^dkappa", (vol.scale(coeff) - wedge(u, dk)).comps, c.chart, s))
    return rep


def dkappa_l(c: Coframe3, f, kappa: FormField) -> Expr:
    """The u∧n coefficient of dκ."""
    return c.coeffs2(kappa.d())["un"]


def dkappa_expansion(c: Coframe3, f, kappa: FormField) -> FormField:
    """df(v) v∧u + (df(n) + f² + κ(u)f) v∧n + 𝔩 u∧n."""
    f = as_expr(f)
    u, v, n = c.forms
    a = c.along("v", f)
    b = c.along("n", f) + f * f + c.pair_sharp("u", kappa) * f
    ell = dkappa_l(c, f, kappa)
    return wedge(v, u).scale(a) + wedge(v, n).scale(b) + wedge(u, n).scale(ell)


def ricci_from_formula(c: Coframe3, f, kappa: FormField) -> BilinearField:
    """−df(v) u⊙n − (2f² + df(n)) g − df(n) n⊗n + (fκ(v) − 𝔩) u⊗u."""
    f = as_expr(f)
    u, v, n = c.forms
    dfv, dfn = c.along("v", f), c.along("n", f)
    ell = dkappa_l(c, f, kappa)
    g = c.metric.as_bilinear()
    return (
        odot(u, n).scale(ex.neg(dfv))
        - g.scale(2 * f * f + dfn)
        - tensor(n, n).scale(dfn)
        + tensor(u, u).scale(f * c.pair_sharp("v", kappa) - ell)
    )


def scalar_curvature_formula(c: Coframe3, f) -> Expr:
    f = as_expr(f)
    return ex.neg(6 * f * f + 4 * c.along("n", f))


def trace(g: MetricField, b: BilinearField) -> Expr:
    gi = g.inverse
    return total(gi[i][j] * b[i, j] for i in range(3) for j in range(3))


@dataclass(frozen=True, eq=False)
class Curvature:
    christoffel: tuple
    riemann: dict
    ricci: BilinearField
    scalar: Expr


def christoffel_curvature(g: MetricField) -> Curvature:
    """Riemann, Ricci and scalar curvature from coordinate formulas.

    R^ρ_{σμν} = ∂_μ Γ^ρ_{νσ} − ∂_ν Γ^ρ_{μσ} + Γ^ρ_{μλ}Γ^λ_{νσ} − Γ^ρ_{νλ}Γ^λ_{μσ},
    Ric_{σν} = R^ρ_{σρν}.
    """
    coords = g.chart.coords
    G = g.christoffel
    dG = {(r, a, b, m): differentiate(G[r][a][b], coords[m])
          for r in range(3) for a in range(3) for b in range(3) for m in range(3)}
    riem = {}
    for r in range(3):
        for s_ in range(3):
            for m in range(3):
                for n_ in range(3):
                    if m == n_:
                        riem[r, s_, m, n_] = ex.ZERO
                        continue
                    if (r, s_, n_, m) in riem:
                        riem[r, s_, m, n_] = ex.neg(riem[r, s_, n_, m])
                        continue
                    quad = total(G[r][m][k] * G[k][n_][s_] - G[r][n_][k] * G[k][m][s_] for k in range(3))
                    riem[r, s_, m, n_] = dG[r, n_, s_, m] - dG[r, m, s_, n_] + quad
    ric = tuple(tuple(total(riem[r, s_, r, n_] for r in range(3)) for n_ in range(3)) for s_ in range(3))
    ricci = BilinearField(ric, g.chart)
    return Curvature(G, riem, ricci, trace(g, ricci))


# ---------------------------------------------------------------------------
# gauge freedom and secondary quantities
# ---------------------------------------------------------------------------


def torsor_act(F, c: Coframe3, kappa: FormField, f) -> tuple[Coframe3, FormField]:
    """F·(u,v,n) = (u, v − F²/2 u + F n, n − F u) and κ' = κ + dF + fFn − fF²/2 u."""
    F, f = as_expr(F), as_expr(f)
    u, v, n = c.forms
    half = ex.Num(ex.Fraction(1, 2))
    v2 = v - u.scale(half * F * F) + n.scale(F)
    n2 = n - u.scale(F)
    dF = exterior_d(FormField.function(F, c.chart))
    k2 = kappa + dF + n.scale(f * F) - u.scale(half * f * F * F)
    return Coframe3(u, v2, n2), k2


def differential_spinor_residual(g: MetricField, u: FormField, theta: FormField, chi: BilinearField) -> BilinearField:
    """R(∂_i) = ∇_i u − θ_i u − ∗(u ∧ χ(∂_i, ·))."""
    nab = covariant_derivative(g, u)
    rows = []
    for i in range(3):
        star = hodge3(g, wedge(u, chi.row(i)))
        rows.append(tuple(nab[i, j] - theta.comps[i] * u.comps[j] - star.comps[j] for j in range(3)))
    return BilinearField(tuple(rows), g.chart)


def differential_spinor_check(g: MetricField, u: FormField, theta: FormField, chi: BilinearField,
                              s: Sampling = DEFAULT) -> Report:
    iso = check_exprs("g(u,u)", [g.pair(u, u)], g.chart, s)
    if not iso.passed:
        raise PreconditionError("u is not isotropic")
    rep = Report("differential spinor")
    rep.add(iso)
    rep.add(check_exprs("nabla u - theta u - *(u^chi)", differential_spinor_residual(g, u, theta, chi).flat(), g.chart, s))
    return rep


def skew_torsion_chi(g: MetricField, f) -> BilinearField:
    """χ whose corollary form reproduces ∇_w u = f ∗(u ∧ w♭)."""
    return g.as_bilinear().scale(f)


def godbillon_vey_rep(c: Coframe3, f, kappa: FormField) -> FormField:
    """4 f² n∧u∧(fv + κ)."""
    f = as_expr(f)
    u, v, n = c.forms
    return wedge(wedge(n, u), v.scale(f) + kappa).scale(4 * f * f)


def godbillon_vey_definition(c: Coframe3, f) -> FormField:
    """4 f n∧d(f n)."""
    f = as_expr(f)
    fn = c.n.scale(f)
    return wedge(c.n, fn.d()).scale(4 * f)


def equicontinuity_residual(c: Coframe3, f, kappa: FormField, F) -> Expr:
    """κ(u) + dF(u) + f."""
    return c.pair_sharp("u", kappa) + c.along("u", F) + as_expr(f)


def leaf_curvature_coeff(c: Coframe3, f) -> Expr:
    """df(n) + f²; vanishes iff the leaves carry the induced affine structure."""
    f = as_expr(f)
    return c.along("n", f) + f * f


def tracefree(g: MetricField, b: BilinearField) -> BilinearField:
    return b - g.as_bilinear().scale(trace(g, b) / 3)


# ---------------------------------------------------------------------------
# model families
# ---------------------------------------------------------------------------

LOCAL_COORDS = ("x_u", "x_v", "z")


def local_coframe(chart: Chart, F, H) -> Coframe3:
    """u = e^F dx_u, v = ½ H e^{-F} dx_u + dx_v, n = dz with F, H functions of (x_u, z)."""
    F, H = as_expr(F), as_expr(H)
    zero, one = ex.ZERO, ex.ONE
    eF = ex.exp(F)
    u = FormField(1, (eF, zero, zero), chart)
    v = FormField(1, (ex.Num(ex.Fraction(1, 2)) * H * ex.exp(ex.neg(F)), one, zero), chart)
    n = FormField(1, (zero, zero, one), chart)
    return Coframe3(u, v, n)


def local_kappa(chart: Chart, F, H, f) -> FormField:
    """κ = ½e^{-F}(fH − ∂_z H) dx_u − f dx_v."""
    F, H, f = as_expr(F), as_expr(H), as_expr(f)
    ku = ex.Num(ex.Fraction(1, 2)) * ex.exp(ex.neg(F)) * (f * H - differentiate(H, chart.coords[2]))
    return FormField(1, (ku, ex.neg(f), ex.ZERO), chart)


def sl2_coframe(chart: Chart, f: Fraction | int) -> Coframe3:
    """Left-invariant coframe on SL(2,R) with ½du = f n∧u, ½dv = f v∧n, ½dn = f u∧v.

    Coordinates (x, t, y) parametrise g = exp(xE) exp(tH) exp(yF); the
    Maurer-Cartan forms are ω_E = e^{-2t}dx, ω_H = y e^{-2t}dx + dt,
    ω_F = -y²e^{-2t}dx - 2y dt + dy, and n = -ω_H/f, u = ω_E/f,
    v = ω_F/(2f).
    """
    f = Fraction(f)
    if f == 0:
        raise ValueError("f must be non-zero")
    x, t, y = (ex.Var(cname) for cname in chart.coords)
    e2 = ex.exp(ex.neg(2 * t))
    wE = (e2, ex.ZERO, ex.ZERO)
    wH = (y * e2, ex.ONE, ex.ZERO)
    wF = (ex.neg(y * y * e2), ex.neg(2 * y), ex.ONE)
    # coordinate order is (x, t, y)
    u = FormField(1, tuple(ex.Num(1 / f) * c for c in wE), chart)
    v = FormField(1, tuple(ex.Num(1 / (2 * f)) * c for c in wF), chart)
    n = FormField(1, tuple(ex.Num(-1 / f) * c for c in wH), chart)
    return Coframe3(u, v, n)
