"""Three-dimensional NS-NS supergravity: residuals, supersymmetry and local solutions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .checks import Check, Report, check_exprs
from .expr import Chart, Expr, as_expr, differentiate
from .lorentz3 import (
    BilinearField,
    Coframe3,
    FormField,
    LOCAL_COORDS,
    Sampling,
    DEFAULT,
    christoffel_curvature,
    covariant_derivative,
    dkappa_l,
    differential_spinor_check,
    exterior_d,
    odot,
    skew_torsion_chi,
    solve_kappa,
    tensor,
    trace,
    wedge,
)

GLOBAL_NOTE = "global exactness and integrality of c u + 2 f_b n assumed; only chart-level closedness is checked"


class InvariantViolation(ValueError):
    """Configuration breaks an invariant of its declared mode."""


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class NSNSConfig:
    coframe: Coframe3
    f_b: Expr
    phi: Expr

    def __post_init__(self):
        object.__setattr__(self, "f_b", as_expr(self.f_b))
        object.__setattr__(self, "phi", as_expr(self.phi))

    @property
    def chart(self) -> Chart:
        return self.coframe.chart

    @property
    def metric(self):
        return self.coframe.metric

    @property
    def dphi(self) -> FormField:
        return exterior_d(FormField.function(self.phi, self.chart))

    def is_flux(self, s: Sampling = DEFAULT) -> bool:
        return not check_exprs("f_b", [self.f_b], self.chart, s).passed


@dataclass(frozen=True, eq=False)
class SusyData:
    config: NSNSConfig
    K: Expr
    kappa_v_free: Expr | None = None
    b_field: FormField | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "K", as_expr(self.K))


@dataclass(frozen=True, eq=False)
class NSNSResiduals:
    einstein: BilinearField
    maxwell: FormField
    dilaton: Expr


def hessian(g, phi: Expr) -> BilinearField:
    return covariant_derivative(g, exterior_d(FormField.function(phi, g.chart)))


def codifferential(g, a: FormField) -> Expr:
    """δa = −∇^i a_i."""
    return ex.neg(trace(g, covariant_derivative(g, a)))


def nsns_residuals(cfg: NSNSConfig) -> NSNSResiduals:
    """Ric + ∇dφ + 2f_b² g, d f_b − f_b dφ, δdφ + |dφ|² + 4f_b²."""
    g = cfg.metric
    f = cfg.f_b
    dphi = cfg.dphi
    ric = christoffel_curvature(g).ricci
    einstein = ric + hessian(g, cfg.phi) + g.as_bilinear().scale(2 * f * f)
    maxwell = exterior_d(FormField.function(f, cfg.chart)) - dphi.scale(f)
    dilaton = codifferential(g, dphi) + g.pair(dphi, dphi) + 4 * f * f
    return NSNSResiduals(einstein, maxwell, dilaton)


def maxwell_norm(res: NSNSResiduals, chart: Chart, s: Sampling = DEFAULT) -> float:
    """Max-norm over samples of the components of d f_b − f_b dφ."""
    env = chart.sample(s.n_points, s.seed)
    vals = ex.evaluate_batch(list(res.maxwell.comps), env)
    return float(max(np.abs(v).max() for v in vals))


def check_nsns(cfg: NSNSConfig, s: Sampling = DEFAULT) -> Report:
    cfg.metric.check(min(s.n_points, 50), s.seed)
    res = nsns_residuals(cfg)
    rep = Report("nsns system")
    rep.add(check_exprs("einstein", res.einstein.flat(), cfg.chart, s))
    rep.add(check_exprs("maxwell", res.maxwell.comps, cfg.chart, s))
    rep.add(check_exprs("dilaton", [res.dilaton], cfg.chart, s))
    return rep


def _require_nonzero(f: Expr, chart: Chart, s: Sampling, err) -> None:
    env = chart.sample(s.n_points, s.seed)
    (vals,) = ex.evaluate_batch([f], env)
    if np.any(np.abs(vals) <= s.tol):
        raise err("f_b vanishes at a sample point")
    # a sign change on a connected box forces a zero in between
    if np.any(vals > 0) and np.any(vals < 0):
        raise err("f_b changes sign on the box")


def c_function(cfg: NSNSConfig) -> Expr:
    """𝔠 = dφ(v♯)."""
    return cfg.coframe.pair_sharp("v", cfg.dphi)


def c_b_function(cfg: NSNSConfig) -> Expr:
    """𝔠_b^v = v♯(log f_b) = v♯(f_b)/f_b (sign of f_b irrelevant)."""
    return cfg.coframe.along("v", cfg.f_b) / cfg.f_b


def susy_config_residuals(cfg: NSNSConfig, s: Sampling = DEFAULT) -> Report:
    """∇u = f_b ∗u and dφ = 𝔠u + 2f_b n with 𝔠 = dφ(v♯)."""
    c = cfg.coframe
    if cfg.is_flux(s):
        _require_nonzero(cfg.f_b, cfg.chart, s, InvariantViolation)
    g = cfg.metric
    rep = Report("susy configuration")
    theta = FormField.zero(1, cfg.chart)
    rep.add(differential_spinor_check(g, c.u, theta, skew_torsion_chi(g, cfg.f_b), s))
    target = c.u.scale(c_function(cfg)) + c.n.scale(2 * cfg.f_b)
    rep.add(check_exprs("dphi - (c u + 2 f_b n)", (cfg.dphi - target).comps, cfg.chart, s))
    return rep


def susy_solution_residuals(sd: SusyData, s: Sampling = DEFAULT) -> Report:
    """The six equations characterising supersymmetric flux solutions."""
    cfg = sd.config
    c = cfg.coframe
    f, K = cfg.f_b, sd.K
    _require_nonzero(f, cfg.chart, s, PreconditionError)
    u, v, n = c.forms
    cb = c_b_function(cfg)
    uc, vc, nc = c.along("u", cb), c.along("v", cb), c.along("n", cb)
    two_f = 2 * f
    rep = Report("susy solution system")
    rep.add(check_exprs("du - 2 f_b n^u", (u.d() - wedge(n, u).scale(two_f)).comps, cfg.chart, s))
    rep.add(check_exprs("2 f_b dv - (K u + u(c) v)^n",
                        (v.d().scale(two_f) - wedge(u.scale(K) + v.scale(uc), n)).comps, cfg.chart, s))
    rep.add(check_exprs("2 f_b dn - u^(u(c) v + n(c) n)",
                        (n.d().scale(two_f) - wedge(u, v.scale(uc) + n.scale(nc))).comps, cfg.chart, s))
    lhs = c.along("n", K) / two_f
    rhs = uc * K / (4 * f * f) + c.along("v", nc / two_f) + nc * nc / (4 * f * f) - vc
    rep.add(check_exprs("K equation", [lhs - rhs], cfg.chart, s))
    rep.add(check_exprs("df_b(n) - 2 f_b^2", [c.along("n", f) - 2 * f * f], cfg.chart, s))
    closed = (u.scale(cb) + n.scale(two_f)).d()
    rep.add(check_exprs("d(c u + 2 f_b n)", closed.comps, cfg.chart, s))
    rep.notes.append(GLOBAL_NOTE)
    return rep


def susy_kappa(sd: SusyData, s: Sampling = DEFAULT):
    free = sd.kappa_v_free if sd.kappa_v_free is not None else sd.K / (2 * sd.config.f_b)
    return solve_kappa(sd.config.coframe, sd.config.f_b, free, s)


def ddf_scalars(sd: SusyData, s: Sampling = DEFAULT) -> dict[str, Expr]:
    """df_b(v) − 𝔠f_b, df_b(n) − 2f_b², d𝔠(v) − 𝔩 − f_b κ(v)."""
    cfg = sd.config
    c = cfg.coframe
    f = cfg.f_b
    cc = c_function(cfg)
    kappa = susy_kappa(sd, s).kappa
    ell = dkappa_l(c, f, kappa)
    return {
        "df_b(v) - c f_b": c.along("v", f) - cc * f,
        "df_b(n) - 2 f_b^2": c.along("n", f) - 2 * f * f,
        "dc(v) - l - f_b kappa(v)": c.along("v", cc) - ell - f * c.pair_sharp("v", kappa),
    }


def ddf_check(sd: SusyData, s: Sampling = DEFAULT) -> Report:
    rep = Report("ddf relations")
    sol = susy_kappa(sd, s)
    rep.add(sol.report)
    for name, e in ddf_scalars(sd, s).items():
        rep.add(check_exprs(name, [e], sd.config.chart, s))
    rep.add(check_exprs("c - c_b", [c_function(sd.config) - c_b_function(sd.config)], sd.config.chart, s))
    return rep


def einstein_from_ddf(sd: SusyData, s: Sampling = DEFAULT) -> BilinearField:
    """(df_b(v) − 𝔠f_b) u⊙n + (2f_b² − df_b(n)) u⊙v + (d𝔠(v) − 𝔩 − f_bκ(v)) u⊗u."""
    c = sd.config.coframe
    sc = ddf_scalars(sd, s)
    a, b, e = sc["df_b(v) - c f_b"], sc["df_b(n) - 2 f_b^2"], sc["dc(v) - l - f_b kappa(v)"]
    return odot(c.u, c.n).scale(a) + odot(c.u, c.v).scale(ex.neg(b)) + tensor(c.u, c.u).scale(e)


def flux_dichotomy_check(cfg: NSNSConfig, s: Sampling = DEFAULT) -> Report:
    """f_b is either identically zero or nowhere zero with f_b e^{-φ} constant."""
    env = cfg.chart.sample(s.n_points, s.seed)
    (vals,) = ex.evaluate_batch([cfg.f_b], env)
    small = np.abs(vals) <= s.tol
    sign_change = bool(np.any(vals > s.tol) and np.any(vals < -s.tol))
    rep = Report("flux dichotomy")
    status = "pass"
    note = "flux-less branch" if small.all() else "flux branch"
    if (small.any() or sign_change) and not small.all():
        status, note = "fail", "f_b vanishes somewhere but not everywhere"
    rep.add(Check("dichotomy", status, float(np.abs(vals).min()), 0.0, s.n_points, s.seed, note))
    if status == "pass" and not small.all():
        ratio = FormField.function(cfg.f_b * ex.exp(ex.neg(cfg.phi)), cfg.chart).d()
        rep.add(check_exprs("d(f_b exp(-phi))", ratio.comps, cfg.chart, s))
    return rep


# ---------------------------------------------------------------------------
# closed-form local solutions
# ---------------------------------------------------------------------------


def local_solution_chart(box, a: Expr) -> Chart:
    return Chart(LOCAL_COORDS, box, predicate=ex.parse("2*z") + as_expr(a))


def generate_local_solution(a, l, box, s: Sampling = DEFAULT, H=None) -> SusyData:
    """Supersymmetric flux solution attached to functions a(x_u), l(x_u).

    g = l/(2z+a) dx_u² + a'/(2z+a) dx_u⊙dx_v + dz², f_b = −1/(2z+a),
    φ = −log(2z+a).  ``H`` overrides ℋ = l/(2z+a) (used for negative controls).
    """
    a, l = as_expr(a), as_expr(l)
    for name, e in (("a", a), ("l", l)):
        if not free_vars_ok(e):
            raise ValueError(f"{name} may depend on x_u only")
    chart = Chart(LOCAL_COORDS, box)
    xu, xv, z = (ex.Var(c) for c in LOCAL_COORDS)
    w = 2 * z + a
    da = differentiate(a, "x_u")
    env = chart.sample(max(s.n_points, 200), s.seed)
    (wv, dav) = ex.evaluate_batch([w, da], env)
    if np.any(dav <= 0):
        raise ex.DomainError("a'(x_u) must be positive on the box", da)
    if np.any(wv <= 0):
        raise ex.DomainError("2z + a(x_u) must be positive on the box", w)
    chart = local_solution_chart(box, a)
    Hx = as_expr(H) if H is not None else l / w
    Hw = l if H is None else Hx * w
    zero, one = ex.ZERO, ex.ONE
    u = FormField(1, (da / w, zero, zero), chart)
    v = FormField(1, (Hw / (2 * da), one, zero), chart)
    n = FormField(1, (zero, zero, one), chart)
    f_b = ex.neg(one / w)
    phi = ex.neg(ex.log(w))
    K = differentiate(Hw, "z") / (da * da)
    # potential with db = -2 f_b u^v^n
    b = FormField(2, (zero, zero, ex.Num(-2) / w), chart)
    cfg = NSNSConfig(Coframe3(u, v, n), f_b, phi)
    extras = {"a": a, "l": l, "H": Hx}
    return SusyData(cfg, K, None, b, extras)


def free_vars_ok(e: Expr) -> bool:
    return ex.free_vars(e) <= {"x_u"}


def b_field_check(sd: SusyData, s: Sampling = DEFAULT) -> Check:
    """db = H_b = −2 f_b ν_g."""
    cfg = sd.config
    c = cfg.coframe
    H_b = c.volume_form.scale(-2 * cfg.f_b)
    return check_exprs("db - H_b", (sd.b_field.d() - H_b).comps, cfg.chart, s)


def full_solution_report(sd: SusyData, s: Sampling = DEFAULT) -> Report:
    """Every residual suite applicable to a supersymmetric flux solution."""
    from .lorentz3 import check_exterior_system

    cfg = sd.config
    rep = Report("nsns susy solution")
    sol = susy_kappa(sd, s)
    ext = check_exterior_system(cfg.coframe, cfg.f_b, sol.kappa, s)
    rep.add(ext)
    rep.add(ddf_check(sd, s))
    rep.add(susy_solution_residuals(sd, s))
    rep.add(susy_config_residuals(cfg, s))
    rep.add(check_nsns(cfg, s))
    if sd.b_field is not None:
        rep.add(b_field_check(sd, s))
    l = sd.extras.get("l")
    if l is not None and check_exprs("l", [l], cfg.chart, s).passed:
        rep.notes.append("l(x_u) vanishes: degenerate H = 0 boundary case")
    return rep
