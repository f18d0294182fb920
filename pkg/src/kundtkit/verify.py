"""Randomised verification suites for the algebra and the spinor squares."""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import islice
from typing import Callable, Iterable

import numpy as np

from .algebra import (
    Polyform,
    Signature,
    RandomPolyforms,
    geometric_product,
    hodge_star,
    metric_pairing,
    project_half,
    tau_antiaut,
    trace_S,
    vee_product,
)
from .checks import Check, Report
from .spinors import (
    ContractError,
    PairedModule,
    Spinor,
    paired_module,
    random_spinor,
    reconstruct_spinor,
    spin_invariance_check,
    square_condition_report,
    square_spinor,
    square_spinor_bilinears,
)


def parse_signature(text: str) -> Signature:
    """'P,Q' -> Signature(P, Q)."""
    try:
        p, q = (int(x) for x in text.split(","))
    except ValueError as exc:
        raise ValueError(f"signature must look like P,Q, got {text!r}") from exc
    return Signature(p, q)


def _count(name: str, outcomes: Iterable[bool], seed: int, note: str = "") -> Check:
    total = bad = 0
    for ok in outcomes:
        total += 1
        bad += not ok
    msg = f"{bad}/{total} counterexamples" + (f"; {note}" if note else "")
    return Check(name, "fail" if bad else "pass", float(bad), 0.0, total, seed, msg)


def _worst(name: str, residuals: Iterable[float], tol: float, seed: int) -> Check:
    vals = list(residuals)
    worst = max(vals, default=0.0)
    return Check(name, "pass" if worst <= tol else "fail", worst, worst, len(vals), seed)


def _trace_oracle(a: Polyform, m: PairedModule) -> Fraction:
    """Tr Ψ(a) from integer traces of the monomial matrices."""
    return sum((Fraction(c) * int(round(np.trace(m.rep.gamma(mask)))) for mask, c in a.coeffs.items()), Fraction(0))


def algebra_suite(sig: Signature, trials: int = 1000, seed: int = 0) -> Report:
    """Exact identities of the geometric and truncated products on random rational inputs."""
    full = RandomPolyforms(sig, terms=4, seed=seed).stream()
    trunc = RandomPolyforms(sig, terms=4, max_grade=sig.half, seed=seed + 1).stream()
    triples = [tuple(islice(full, 3)) for _ in range(trials)]
    ttriples = [tuple(islice(trunc, 3)) for _ in range(trials)]
    nu = Polyform.volume(sig)
    gp = geometric_product
    rep = Report(f"algebra {sig.p},{sig.q}")
    rep.add(_count("associativity of the geometric product",
                   (gp(gp(a, b), c) == gp(a, gp(b, c)) for a, b, c in triples), seed))
    rep.add(_count("centrality of the volume form", (gp(nu, a) == gp(a, nu) for a, _, _ in triples), seed))
    blades = [Polyform(sig, {mask: 1}) for mask in range(sig.size)]
    rep.add(_count("a * nu = hodge(tau(a)) on blades",
                   (gp(b, nu) == hodge_star(tau_antiaut(b)) == gp(nu, b) for b in blades), seed))
    for l in (1, -1):
        P = lambda x, l=l: project_half(l, x)  # noqa: E731
        rep.add(_count(f"P_{l:+d} is multiplicative",
                       (P(gp(a, b)) == gp(P(a), P(b)) for a, b, _ in triples), seed))
        v = lambda x, y, l=l: vee_product(x, y, l)  # noqa: E731
        rep.add(_count(f"associativity of the truncated product (l={l:+d})",
                       (v(v(a, b), c) == v(a, v(b, c)) for a, b, c in ttriples), seed))
        rep.add(_count(f"P_{l:+d}(a v b) = P(a) P(b)",
                       (P(v(a, b)) == gp(P(a), P(b)) for a, b, _ in ttriples), seed))
        rep.add(_count(f"trace cyclicity (l={l:+d})",
                       (trace_S(v(a, b)) == trace_S(v(b, a)) for a, b, _ in ttriples), seed))
    scale = 2 ** sig.half
    rep.add(_count("trace formula S(a) = 2^k a0", (trace_S(a) == scale * Fraction(a.scalar_part) for a, _, _ in ttriples), seed))
    m = paired_module(sig)
    rep.add(_count("S(a) = Tr(Psi(a))", (trace_S(a) == _trace_oracle(a, m) for a, _, _ in ttriples), seed))
    rep.add(_count("trace vanishes on nonscalar blades",
                   (trace_S(Polyform(sig, {mask: 1})) == 0 for mask in m.truncated_masks if mask), seed))
    return rep


def _perturb(alpha: Polyform, m: PairedModule, rng: np.random.Generator, eps: float) -> Polyform:
    masks = m.truncated_masks
    scale = max(alpha.norm_inf(), 1.0)
    noise = {mask: eps * scale * rng.normal() for mask in masks}
    return alpha + Polyform(alpha.sig, noise)


def _spinor_error(a: np.ndarray, b: np.ndarray) -> float:
    """min ‖a ∓ b‖ / ‖b‖."""
    nb = np.linalg.norm(b)
    return float(min(np.linalg.norm(a - b), np.linalg.norm(a + b)) / nb)


def reconstruction_suite(sig: Signature, trials: int = 500, seed: int = 0, tol: float = 1e-10) -> Report:
    """Squares satisfy the characterising conditions, perturbed ones do not, and squares invert."""
    m = paired_module(sig)
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(trials):
        xi = random_spinor(m, rng)
        mu = 1 if rng.random() < 0.5 else -1
        samples.append((xi, mu, square_spinor(xi, mu)))
    rep = Report(f"reconstruction {sig.p},{sig.q}")

    def cond(mode: str) -> Callable[[Polyform], bool]:
        return lambda a: square_condition_report(a, m, mode, tol=tol).passed

    rep.add(_worst("trace expansion = bilinear expansion",
                   ((a - square_spinor_bilinears(xi, mu)).norm_inf() / (1 + a.norm_inf()) for xi, mu, a in samples),
                   tol, seed))
    rep.add(_count("squares pass (all beta)", (cond("all_beta")(a) for _, _, a in samples), seed))
    rep.add(_count("squares pass (fixed beta)", (cond("fixed_beta")(a) for _, _, a in samples), seed))
    perturbed = [_perturb(a, m, rng, 0.05) for _, _, a in samples]
    rep.add(_count("perturbed polyforms fail (all beta)", (not cond("all_beta")(a) for a in perturbed), seed))
    rep.add(_count("perturbed polyforms fail (fixed beta)", (not cond("fixed_beta")(a) for a in perturbed), seed))
    errors = []
    sign_ok = []
    for xi, mu, a in samples:
        try:
            xi2, mu2 = reconstruct_spinor(a, m, tol)
        except ContractError:
            errors.append(math.inf)
            continue
        errors.append(_spinor_error(xi2.components, xi.components))
        sign_ok.append(mu2 == mu)
    rep.add(_worst("reconstruct then square is the identity up to sign", errors, tol, seed))
    rep.add(_count("reconstructed sign of the square", sign_ok, seed))
    rep.add(Check("spin invariance of the pairing", "pass" if spin_invariance_check(m, 20, seed) else "fail",
                  0.0, 0.0, 20, seed))
    return rep


def _isotropic(sig: Signature, rng: np.random.Generator) -> Polyform:
    x, y = rng.normal(size=2)
    t = math.hypot(x, y) * (1 if rng.random() < 0.5 else -1)
    return Polyform.vector(sig, (x, y, t))


def isotropy_suite(trials: int = 1000, seed: int = 0, tol: float = 1e-12) -> Report:
    """In signature (2,1) squares are exactly the nonzero isotropic one-forms."""
    sig = Signature(2, 1)
    m = paired_module(sig)
    rng = np.random.default_rng(seed)
    rep = Report("isotropy 2,1")
    ratios, grades = [], []
    for _ in range(trials):
        a = square_spinor(random_spinor(m, rng), 1 if rng.random() < 0.5 else -1)
        one = a.grade(1)
        grades.append((a - one).norm_inf() <= tol * (1 + a.norm_inf()) and one.norm_inf() > 0)
        size = sum(float(c) ** 2 for c in one.coeffs.values())
        ratios.append(abs(float(metric_pairing(one, one))) / size)
    rep.add(_count("squares are nonzero one-forms", grades, seed))
    rep.add(_worst("|h(u,u)| / |u|^2", ratios, tol, seed))
    ok = []
    for _ in range(trials):
        u = _isotropic(sig, rng)
        try:
            xi, mu = reconstruct_spinor(u, m, 1e-10)
        except ContractError:
            ok.append(False)
            continue
        back = square_spinor(xi, mu)
        ok.append((back - u).norm_inf() <= 1e-10 * (1 + u.norm_inf()))
    rep.add(_count("isotropic one-forms are squares", ok, seed))
    return rep

