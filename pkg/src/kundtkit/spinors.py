"""Real irreducible Clifford modules with admissible pairings.

Matrices are integer-valued signed permutation matrices, so products of
generators are exact in floating point as well.  Square maps, the trace
expansion and spinor reconstruction work in float64.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import product
from typing import Iterator

import numpy as np
from scipy.linalg import expm

from .algebra import (
    Polyform,
    Signature,
    StructuralError,
    allclose,
    expand_clifford,
    grade_of,
    monomials,
    trace_S,
    transpose,
    vee_product,
)


class PreconditionError(ValueError):
    """An operation was called outside its stated precondition."""


class ContractError(ValueError):
    """Input does not satisfy the conditions required by the operation."""


_I2 = np.eye(2, dtype=np.int64)
_X = np.array([[0, 1], [1, 0]], dtype=np.int64)
_Z = np.array([[1, 0], [0, -1]], dtype=np.int64)
_J = np.array([[0, 1], [-1, 0]], dtype=np.int64)  # squares to -1


@dataclass(frozen=True, eq=False)
class GammaRep:
    signature: Signature
    matrices: tuple[np.ndarray, ...]
    l: int

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]

    def gamma(self, mask: int) -> np.ndarray:
        """Image of the blade ``mask`` (generators multiplied in increasing order)."""
        return self._products[mask]

    def gamma_inverse(self, mask: int) -> np.ndarray:
        return self._inverses[mask]

    @cached_property
    def _products(self) -> dict[int, np.ndarray]:
        out = {}
        for mask in range(self.signature.size):
            m = np.eye(self.dim, dtype=np.int64)
            for i in range(self.signature.d):
                if mask >> i & 1:
                    m = m @ self.matrices[i]
            out[mask] = m
        return out

    @cached_property
    def _inverses(self) -> dict[int, np.ndarray]:
        h = self.signature.metric
        out = {}
        for mask in range(self.signature.size):
            m = np.eye(self.dim, dtype=np.int64)
            for i in reversed(range(self.signature.d)):
                if mask >> i & 1:
                    m = m @ (h[i] * self.matrices[i])
            out[mask] = m
        return out

    def opposite(self) -> "GammaRep":
        """The module with γ(ν) = -l, obtained by negating every generator."""
        return GammaRep(self.signature, tuple(-g for g in self.matrices), -self.l)

    def clifford_residual(self) -> int:
        """Max entry of γ_iγ_j + γ_jγ_i - 2h_ij Id (exact integers)."""
        h = self.signature.metric
        worst = 0
        eye = np.eye(self.dim, dtype=np.int64)
        for i, gi in enumerate(self.matrices):
            for j, gj in enumerate(self.matrices):
                target = 2 * h[i] * eye if i == j else 0 * eye
                worst = max(worst, int(np.abs(gi @ gj + gj @ gi - target).max()))
        return worst


def _double(sig: Signature, mats: list[np.ndarray]) -> tuple[Signature, list[np.ndarray]]:
    """From (p,q) of size N to (p+1,q+1) of size 2N."""
    n = mats[0].shape[0] if mats else 1
    eye = np.eye(n, dtype=np.int64)
    pos = [np.kron(_X, eye)] + [np.kron(_Z, g) for g in mats[: sig.p]]
    negs = [np.kron(_Z, g) for g in mats[sig.p:]] + [np.kron(_J, eye)]
    return Signature(sig.p + 1, sig.q + 1), pos + negs


def _pauli_search(sig: Signature) -> list[np.ndarray]:
    """Find d mutually anticommuting real Pauli strings with the right squares."""
    k = sig.half
    letters = [_I2, _X, _Z, _J]
    strings = []
    for word in product(range(4), repeat=k):
        if all(w == 0 for w in word):
            continue
        m = np.array([[1]], dtype=np.int64)
        for w in word:
            m = np.kron(m, letters[w])
        square = -1 if word.count(3) % 2 else 1
        strings.append((word, square, m))

    def anticommute(w1, w2) -> bool:
        # single-letter pairs anticommute iff both are non-identity and differ
        flips = sum(1 for a, b in zip(w1, w2) if a and b and a != b)
        return flips % 2 == 1

    want = list(sig.metric)
    chosen: list[int] = []

    def search(pos: int) -> bool:
        if pos == len(want):
            return True
        start = chosen[-1] + 1 if chosen and want[pos] == want[pos - 1] else 0
        for idx in range(start, len(strings)):
            w, sq, _ = strings[idx]
            if sq != want[pos] or idx in chosen:
                continue
            if all(anticommute(w, strings[c][0]) for c in chosen):
                chosen.append(idx)
                if search(pos + 1):
                    return True
                chosen.pop()
        return False

    if not search(0):
        raise StructuralError(f"no real Pauli-string realization found for {sig}")
    return [strings[i][2] for i in chosen]


@lru_cache(maxsize=None)
def build_gamma(sig: Signature) -> GammaRep:
    """Real irreducible module of Cl(p,q) for p - q = 1 mod 8 and d <= 9."""
    if sig.d > 9:
        raise StructuralError(f"signature {sig} has d > 9")
    if sig.q == sig.p - 1:
        cur, mats = Signature(1, 0), [np.array([[1]], dtype=np.int64)]
        while cur != sig:
            cur, mats = _double(cur, mats)
    elif sig == Signature(1, 8):
        _, base = Signature(0, 7), _pauli_search(Signature(0, 7))
        _, mats = _double(Signature(0, 7), base)
    else:
        mats = _pauli_search(sig)
    vol = np.eye(mats[0].shape[0], dtype=np.int64)
    for g in mats:
        vol = vol @ g
    eye = np.eye(vol.shape[0], dtype=np.int64)
    if np.array_equal(vol, eye):
        l = 1
    elif np.array_equal(vol, -eye):
        l = -1
    else:
        raise StructuralError("volume element does not act as ±Id")
    rep = GammaRep(sig, tuple(mats), l)
    if rep.clifford_residual() != 0:
        raise StructuralError("Clifford relations failed")
    return rep


def expected_pairing_type(d: int) -> tuple[int, int]:
    """(symmetry, adjoint) by k = (d-1)/2 mod 4."""
    return {0: (1, 1), 1: (-1, -1), 2: (-1, 1), 3: (1, -1)}[((d - 1) // 2) % 4]


@dataclass(frozen=True, eq=False)
class PairedModule:
    rep: GammaRep
    B: np.ndarray
    s: int
    sigma: int

    @property
    def signature(self) -> Signature:
        return self.rep.signature

    @property
    def dim(self) -> int:
        return self.rep.dim

    @property
    def l(self) -> int:
        return self.rep.l

    def pair(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(x @ self.B @ y)

    def b_transpose(self, X: np.ndarray) -> np.ndarray:
        """Adjoint with respect to the pairing, B⁻¹XᵀB."""
        return np.linalg.solve(self.B, X.T @ self.B)

    @cached_property
    def truncated_masks(self) -> list[int]:
        return monomials(self.signature, self.signature.half)


def build_pairing(rep: GammaRep) -> PairedModule:
    """Admissible pairing by group averaging followed by γ(ν₊)."""
    sig = rep.signature
    group = [rep.gamma(m) for m in range(sig.size)]  # ±γ_I give the same Gram term
    gram = sum(g.T @ g for g in group)
    if np.linalg.matrix_rank(gram) < rep.dim:
        raise StructuralError("degenerate averaged inner product")
    nu_plus = rep.gamma((1 << sig.p) - 1)
    B = nu_plus.T @ (gram / len(group))
    if np.array_equal(B, np.round(B)):
        B = np.round(B).astype(np.int64)
    if np.array_equal(B.T, B):
        s = 1
    elif np.array_equal(B.T, -B):
        s = -1
    else:
        raise StructuralError("pairing is neither symmetric nor skew")
    signs = set()
    for g in rep.matrices:
        lhs = g.T @ B
        rhs = B @ g
        if np.array_equal(lhs, rhs):
            signs.add(1)
        elif np.array_equal(lhs, -rhs):
            signs.add(-1)
        else:
            signs.add(0)
    if len(signs) != 1 or 0 in signs:
        raise StructuralError("pairing has no consistent adjoint type")
    sigma = signs.pop()
    if (s, sigma) != expected_pairing_type(sig.d):
        raise StructuralError(f"pairing type {(s, sigma)} disagrees with the table for d={sig.d}")
    return PairedModule(rep, B, s, sigma)


@lru_cache(maxsize=None)
def paired_module(sig: Signature, l: int | None = None) -> PairedModule:
    rep = build_gamma(sig)
    if l is not None and l != rep.l:
        rep = rep.opposite()
    return build_pairing(rep)


@dataclass(frozen=True, eq=False)
class Spinor:
    components: np.ndarray
    module: PairedModule

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        if comps.shape != (self.module.dim,):
            raise StructuralError("spinor has the wrong dimension")
        object.__setattr__(self, "components", comps)


# ---------------------------------------------------------------------------
# Ψ and its inverse
# ---------------------------------------------------------------------------


def psi_less(a: Polyform, m: PairedModule) -> np.ndarray:
    """Endomorphism of a truncated polyform under the module."""
    if a.sig != m.signature:
        raise StructuralError("signature mismatch")
    if not a.is_truncated():
        raise StructuralError("psi_less expects a truncated polyform; use clifford_action")
    out = np.zeros((m.dim, m.dim))
    for mask, c in a.coeffs.items():
        out += float(c) * m.rep.gamma(mask)
    return out


def clifford_action(a: Polyform, m: PairedModule) -> np.ndarray:
    """Endomorphism of a general polyform, reduced to its truncated image first."""
    return psi_less(expand_clifford(a, m.l), m)


def direct_action(a: Polyform, m: PairedModule) -> np.ndarray:
    """Σ a_I γ_I over all blades, without reduction (oracle for clifford_action)."""
    out = np.zeros((m.dim, m.dim))
    for mask, c in a.coeffs.items():
        out += float(c) * m.rep.gamma(mask)
    return out


def psi_less_inv(E: np.ndarray, m: PairedModule) -> Polyform:
    """Truncated polyform with coefficients Tr(γ_I⁻¹ E) / N."""
    E = np.asarray(E, dtype=float)
    n = m.dim
    coeffs = {}
    for mask in m.truncated_masks:
        c = float(np.einsum("ij,ji->", m.rep.gamma_inverse(mask), E)) / n
        if c != 0.0:
            coeffs[mask] = c
    return Polyform(m.signature, coeffs)


# ---------------------------------------------------------------------------
# squares
# ---------------------------------------------------------------------------


def _check_mu(mu: int) -> None:
    if mu not in (1, -1):
        raise StructuralError("mu must be +1 or -1")


def square_matrix(xi: Spinor, mu: int) -> np.ndarray:
    """E = μ ξ ⊗ ξ*, with ξ*(η) = ℬ(η, ξ)."""
    _check_mu(mu)
    x = xi.components
    return mu * np.outer(x, xi.module.B @ x)


def square_spinor(xi: Spinor, mu: int) -> Polyform:
    """Square of a spinor as a truncated polyform, via the trace expansion of E."""
    return psi_less_inv(square_matrix(xi, mu), xi.module)


def square_spinor_bilinears(xi: Spinor, mu: int) -> Polyform:
    """Same square from the coefficients μ/N · ℬ(γ_I⁻¹ ξ, ξ)."""
    _check_mu(mu)
    m = xi.module
    x = xi.components
    coeffs = {}
    for mask in m.truncated_masks:
        c = mu * m.pair(m.rep.gamma_inverse(mask) @ x, x) / m.dim
        if c != 0.0:
            coeffs[mask] = c
    return Polyform(m.signature, coeffs)


@dataclass(frozen=True)
class SquareCheck:
    passed: bool
    square_residual: float
    symmetry_residual: float
    beta_residual: float
    failures: tuple[str, ...] = ()


def _resid(lhs: Polyform, rhs: Polyform) -> float:
    diff = (lhs - rhs).norm_inf()
    return diff / (1.0 + max(lhs.norm_inf(), rhs.norm_inf()))


def best_beta(alpha: Polyform, m: PairedModule) -> Polyform:
    """Monomial β maximising |S(α ∨ β)|."""
    best, best_val = None, -1.0
    for mask in m.truncated_masks:
        beta = Polyform(m.signature, {mask: 1})
        val = abs(float(trace_S(vee_product(alpha, beta, m.l))))
        if val > best_val:
            best, best_val = beta, val
    return best


def square_condition_report(
    alpha: Polyform,
    m: PairedModule,
    mode: str = "all_beta",
    beta: Polyform | None = None,
    tol: float = 1e-10,
) -> SquareCheck:
    """Evaluate the three conditions characterising spinor squares."""
    if not alpha.is_truncated():
        raise StructuralError("alpha must be truncated")
    l = m.l
    aa = vee_product(alpha, alpha, l)
    r_square = _resid(aa, trace_S(alpha) * alpha)
    r_sym = _resid(transpose(alpha, m.sigma), m.s * alpha)
    if mode == "fixed_beta":
        if beta is None:
            beta = best_beta(alpha, m)
        ab = vee_product(alpha, beta, l)
        s_ab = trace_S(ab)
        if abs(float(s_ab)) <= tol * (1.0 + alpha.norm_inf() * beta.norm_inf()):
            raise PreconditionError("fixed_beta mode needs β such that S(α∨β) ≠ 0")
        r_beta = _resid(vee_product(ab, alpha, l), s_ab * alpha)
    elif mode == "all_beta":
        r_beta = 0.0
        for mask in m.truncated_masks:
            b = Polyform(m.signature, {mask: 1})
            ab = vee_product(alpha, b, l)
            r_beta = max(r_beta, _resid(vee_product(ab, alpha, l), trace_S(ab) * alpha))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    failures = tuple(
        name for name, r in (("square", r_square), ("symmetry", r_sym), ("beta", r_beta)) if r > tol
    )
    return SquareCheck(not failures, r_square, r_sym, r_beta, failures)


def check_square_conditions(
    alpha: Polyform,
    m: PairedModule,
    mode: str = "all_beta",
    beta: Polyform | None = None,
    tol: float = 1e-10,
) -> bool:
    return square_condition_report(alpha, m, mode, beta, tol).passed


def reconstruct_spinor(alpha: Polyform, m: PairedModule, tol: float = 1e-10) -> tuple[Spinor, int]:
    """Recover (ξ, μ) with square_spinor(ξ, μ) = α; ξ is fixed up to sign."""
    if not alpha.coeffs:
        return Spinor(np.zeros(m.dim), m), 1
    if not check_square_conditions(alpha, m, "all_beta", tol=tol):
        raise ContractError("polyform is not the square of a spinor")
    E = psi_less(alpha, m)
    # E = μ ξ (Bξ)ᵀ: every column is a multiple of ξ
    col = int(np.argmax(np.linalg.norm(E, axis=0)))
    c = E[:, col]
    C = np.outer(c, m.B @ c)
    lam = float(np.sum(E * C) / np.sum(C * C))
    mu = 1 if lam > 0 else -1
    xi = np.sqrt(abs(lam)) * c
    lead = int(np.argmax(np.abs(xi)))
    if xi[lead] < 0:
        xi = -xi
    out = Spinor(xi, m)
    if not allclose(square_spinor(out, mu), alpha, 1e-8):
        raise ContractError("rank-one factorisation failed")
    return out, mu


# ---------------------------------------------------------------------------
# spin invariance
# ---------------------------------------------------------------------------


def random_orthonormal_frame(sig: Signature, rng: np.random.Generator, scale: float = 0.7) -> np.ndarray:
    """Rows form an h-orthonormal basis: exp of a random element of so(p,q) applied to the standard basis."""
    d = sig.d
    eta = np.diag(sig.metric).astype(float)
    W = rng.normal(scale=scale, size=(d, d))
    W = W - W.T
    X = W @ eta  # X^T eta + eta X = 0
    L = expm(X)
    return L.T  # rows L e_i


def spin_generators(m: PairedModule, rng: np.random.Generator, count: int) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Yield (v1, v2, G) with G = γ(v1)γ(v2) for orthonormal equal-type v1, v2."""
    sig = m.signature
    h = sig.metric
    pairs = [(i, j) for i in range(sig.d) for j in range(sig.d) if i < j and h[i] == h[j]]
    if not pairs:
        return
    for _ in range(count):
        frame = random_orthonormal_frame(sig, rng)
        i, j = pairs[int(rng.integers(len(pairs)))]
        v1, v2 = frame[i], frame[j]
        g1 = sum(c * g for c, g in zip(v1, m.rep.matrices))
        g2 = sum(c * g for c, g in zip(v2, m.rep.matrices))
        yield v1, v2, g1 @ g2


def spin_invariance_check(m: PairedModule, trials: int = 20, seed: int = 0, tol: float = 1e-12) -> bool:
    """ℬ(Gξ₁,ξ₂) + ℬ(ξ₁,Gξ₂) = 0 and exp(tG) preserves ℬ."""
    rng = np.random.default_rng(seed)
    B = m.B.astype(float)
    for _, _, G in spin_generators(m, rng, trials):
        scale = 1.0 + np.abs(G).max()
        if np.abs(G.T @ B + B @ G).max() > tol * scale * np.abs(B).max():
            return False
        for t in (0.1, 0.5, 1.0):
            S = expm(t * G)
            if np.abs(S.T @ B @ S - B).max() > tol * max(1.0, np.abs(S).max() ** 2):
                return False
    return True


def induced_rotation(S: np.ndarray, m: PairedModule) -> np.ndarray:
    """Λ with S γ(e^j) S⁻¹ = Σ_i Λ_ij γ(e^i), read off by traces."""
    sig = m.signature
    Sinv = np.linalg.inv(S)
    d = sig.d
    L = np.zeros((d, d))
    for j in range(d):
        conj = S @ m.rep.matrices[j] @ Sinv
        for i in range(d):
            L[i, j] = np.trace(m.rep.gamma_inverse(1 << i) @ conj) / m.dim
    return L


def rotate_polyform(a: Polyform, L: np.ndarray) -> Polyform:
    """Extend the linear map e^j ↦ Σ_i L_ij e^i to all grades by wedge products."""
    from .algebra import wedge

    sig = a.sig
    images = [Polyform.vector(sig, L[:, j]) for j in range(sig.d)]
    out = Polyform.zero(sig)
    for mask, c in a.coeffs.items():
        term = Polyform.scalar(sig, float(c))
        for j in range(sig.d):
            if mask >> j & 1:
                term = wedge(term, images[j])
        out = out + term
    return out


def random_spinor(m: PairedModule, rng: np.random.Generator) -> Spinor:
    return Spinor(rng.normal(size=m.dim), m)


def grade_profile(a: Polyform) -> dict[int, int]:
    out: dict[int, int] = {}
    for mask in a.coeffs:
        out[grade_of(mask)] = out.get(grade_of(mask), 0) + 1
    return out
