"""Kähler-Atiyah algebra of an odd-dimensional quadratic space.

A polyform is a sparse map from basis blades (bitmasks over the generators)
to coefficients.  Coefficients may be exact (int / Fraction) or floats; the
exact path is a plain sparse loop, the float path uses precomputed sign
tables with numpy.

Conventions: generators ``e^1..e^p`` square to +1, ``e^{p+1}..e^d`` to -1,
bit ``i-1`` of a mask stands for ``e^i`` and ``nu = e^1 ^ ... ^ e^d``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import combinations
from typing import Iterable, Iterator, Mapping

import numpy as np

Scalar = int | Fraction | float


class StructuralError(ValueError):
    """Operands that do not fit together (signature, grade support)."""


@dataclass(frozen=True, order=True)
class Signature:
    p: int
    q: int

    def __post_init__(self):
        if self.p < 0 or self.q < 0:
            raise StructuralError("signature entries must be non-negative")
        if (self.p - self.q) % 8 != 1:
            raise StructuralError(f"signature ({self.p},{self.q}) has p-q != 1 mod 8")

    @property
    def d(self) -> int:
        return self.p + self.q

    @property
    def half(self) -> int:
        """(d-1)/2, the top grade kept by truncation."""
        return (self.d - 1) // 2

    @property
    def size(self) -> int:
        return 1 << self.d

    @property
    def metric(self) -> tuple[int, ...]:
        return (1,) * self.p + (-1,) * self.q

    @property
    def volume_mask(self) -> int:
        return self.size - 1

    def __str__(self) -> str:
        return f"({self.p},{self.q})"


def grade_of(mask: int) -> int:
    return mask.bit_count()


def reorder_sign(a: int, b: int) -> int:
    """Sign of sorting the concatenated index list of blades ``a`` and ``b``."""
    swaps = 0
    a >>= 1
    while a:
        swaps += (a & b).bit_count()
        a >>= 1
    return -1 if swaps & 1 else 1


def blade_product(sig: Signature, a: int, b: int) -> tuple[int, int]:
    """(sign, mask) with e_a ◇ e_b = sign * e_mask."""
    sign = reorder_sign(a, b)
    common = a & b
    neg = (common >> sig.p).bit_count()
    if neg & 1:
        sign = -sign
    return sign, a ^ b


@lru_cache(maxsize=None)
def _tables(sig: Signature) -> tuple[np.ndarray, np.ndarray, tuple[tuple[int, ...], ...]]:
    n = sig.size
    idx = np.arange(n)
    popcount = np.array([grade_of(i) for i in range(n)])
    swaps = np.zeros((n, n), dtype=np.int64)
    for j in range(sig.d):
        bj = ((idx >> j) & 1)[None, :]
        swaps += bj * popcount[(idx >> (j + 1))][:, None]
    neg_common = popcount[((idx[:, None] & idx[None, :]) >> sig.p)]
    sign = np.where((swaps + neg_common) % 2 == 0, 1, -1).astype(np.int64)
    xor = idx[:, None] ^ idx[None, :]
    rows = tuple(tuple(int(s) for s in row) for row in sign)
    return sign, xor, rows


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


class Polyform:
    """Element of the exterior algebra with the geometric product."""

    __slots__ = ("sig", "coeffs")

    def __init__(self, sig: Signature, coeffs: Mapping[int, Scalar] | None = None):
        self.sig = sig
        clean: dict[int, Scalar] = {}
        for mask, c in (coeffs or {}).items():
            if not 0 <= mask < sig.size:
                raise StructuralError(f"blade {mask} outside the algebra of {sig}")
            if c != 0:
                clean[int(mask)] = c
        self.coeffs = clean

    # construction -------------------------------------------------------
    @classmethod
    def scalar(cls, sig: Signature, c: Scalar = 1) -> "Polyform":
        return cls(sig, {0: c})

    @classmethod
    def zero(cls, sig: Signature) -> "Polyform":
        return cls(sig, {})

    @classmethod
    def blade(cls, sig: Signature, *indices: int, coeff: Scalar = 1) -> "Polyform":
        """``coeff * e^{i1} ∧ ... ∧ e^{ik}`` with 1-based, distinct indices."""
        mask, sign = 0, 1
        for i in indices:
            if not 1 <= i <= sig.d:
                raise StructuralError(f"generator index {i} out of range")
            bit = 1 << (i - 1)
            if mask & bit:
                return cls.zero(sig)
            sign *= reorder_sign(mask, bit)
            mask |= bit
        return cls(sig, {mask: sign * coeff})

    @classmethod
    def volume(cls, sig: Signature) -> "Polyform":
        return cls(sig, {sig.volume_mask: 1})

    @classmethod
    def vector(cls, sig: Signature, comps: Iterable[Scalar]) -> "Polyform":
        comps = list(comps)
        if len(comps) != sig.d:
            raise StructuralError("wrong number of vector components")
        return cls(sig, {1 << i: c for i, c in enumerate(comps)})

    @classmethod
    def from_dense(cls, sig: Signature, arr) -> "Polyform":
        return cls(sig, {i: float(c) for i, c in enumerate(arr) if c != 0})

    # views -------------------------------------------------------------
    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.sig.size)
        for m, c in self.coeffs.items():
            out[m] = float(c)
        return out

    @property
    def is_exact(self) -> bool:
        return all(_is_exact(c) for c in self.coeffs.values())

    def __getitem__(self, mask: int) -> Scalar:
        return self.coeffs.get(mask, 0)

    def terms(self) -> Iterator[tuple[int, Scalar]]:
        return iter(sorted(self.coeffs.items()))

    def grade(self, k: int) -> "Polyform":
        return Polyform(self.sig, {m: c for m, c in self.coeffs.items() if grade_of(m) == k})

    @property
    def scalar_part(self) -> Scalar:
        return self.coeffs.get(0, 0)

    @property
    def max_grade(self) -> int:
        return max((grade_of(m) for m in self.coeffs), default=0)

    def is_truncated(self) -> bool:
        return self.max_grade <= self.sig.half

    def norm_inf(self) -> float:
        return max((abs(float(c)) for c in self.coeffs.values()), default=0.0)

    # linear structure ---------------------------------------------------
    def _check(self, other: "Polyform") -> None:
        if not isinstance(other, Polyform):
            raise TypeError("expected a Polyform")
        if other.sig != self.sig:
            raise StructuralError(f"signature mismatch {self.sig} vs {other.sig}")

    def __add__(self, other: "Polyform") -> "Polyform":
        self._check(other)
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0) + c
        return Polyform(self.sig, out)

    def __sub__(self, other: "Polyform") -> "Polyform":
        return self + (-other)

    def __neg__(self) -> "Polyform":
        return Polyform(self.sig, {m: -c for m, c in self.coeffs.items()})

    def __mul__(self, c: Scalar) -> "Polyform":
        if isinstance(c, Polyform):
            raise TypeError("use geometric_product or vee_product for polyforms")
        return Polyform(self.sig, {m: v * c for m, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, Polyform) and self.sig == other.sig and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.sig, frozenset(self.coeffs.items())))

    def __repr__(self) -> str:
        if not self.coeffs:
            return f"Polyform{self.sig}(0)"
        parts = []
        for m, c in self.terms():
            name = "1" if m == 0 else "e" + "".join(str(i + 1) for i in range(self.sig.d) if m >> i & 1)
            parts.append(f"{c}*{name}")
        return f"Polyform{self.sig}(" + " + ".join(parts) + ")"


def monomials(sig: Signature, max_grade: int | None = None) -> list[int]:
    """Blade masks ordered by grade, then lexicographically."""
    top = sig.d if max_grade is None else max_grade
    out = []
    for k in range(top + 1):
        for idx in combinations(range(sig.d), k):
            out.append(sum(1 << i for i in idx))
    return out


# ---------------------------------------------------------------------------
# products
# ---------------------------------------------------------------------------


def geometric_product(a: Polyform, b: Polyform) -> Polyform:
    """Kähler-Atiyah (Clifford) product a ◇ b."""
    a._check(b)
    sig = a.sig
    if a.is_exact and b.is_exact:
        _, _, rows = _tables(sig)
        out: dict[int, Scalar] = {}
        for ma, ca in a.coeffs.items():
            row = rows[ma]
            for mb, cb in b.coeffs.items():
                m = ma ^ mb
                out[m] = out.get(m, 0) + row[mb] * ca * cb
        return Polyform(sig, out)
    return Polyform(sig, _dense_product(sig, a, b))


def _dense_product(sig: Signature, a: Polyform, b: Polyform) -> dict[int, float]:
    sign, xor, _ = _tables(sig)
    ia = np.fromiter(a.coeffs.keys(), dtype=np.int64, count=len(a.coeffs))
    ib = np.fromiter(b.coeffs.keys(), dtype=np.int64, count=len(b.coeffs))
    if len(ia) == 0 or len(ib) == 0:
        return {}
    va = np.array([float(c) for c in a.coeffs.values()])
    vb = np.array([float(c) for c in b.coeffs.values()])
    block = np.outer(va, vb) * sign[np.ix_(ia, ib)]
    res = np.bincount(xor[np.ix_(ia, ib)].ravel(), weights=block.ravel(), minlength=sig.size)
    nz = np.flatnonzero(res)
    return {int(m): float(res[m]) for m in nz}


def wedge(a: Polyform, b: Polyform) -> Polyform:
    """Exterior product a ∧ b."""
    a._check(b)
    out: dict[int, Scalar] = {}
    for ma, ca in a.coeffs.items():
        for mb, cb in b.coeffs.items():
            if ma & mb:
                continue
            m = ma | mb
            out[m] = out.get(m, 0) + reorder_sign(ma, mb) * ca * cb
    return Polyform(a.sig, out)


def metric_pairing(a: Polyform, b: Polyform) -> Scalar:
    """h*(a, b) for one-forms."""
    a._check(b)
    if a.max_grade > 1 or b.max_grade > 1 or a.scalar_part or b.scalar_part:
        raise StructuralError("metric_pairing expects one-forms")
    h = a.sig.metric
    return sum(h[i] * a[1 << i] * b[1 << i] for i in range(a.sig.d))


# ---------------------------------------------------------------------------
# grade involutions and Hodge star
# ---------------------------------------------------------------------------


def _grade_map(a: Polyform, sign_of_grade) -> Polyform:
    return Polyform(a.sig, {m: c * sign_of_grade(grade_of(m)) for m, c in a.coeffs.items()})


def pi_aut(a: Polyform) -> Polyform:
    """Standard automorphism: (-1)^k on grade k."""
    return _grade_map(a, lambda k: -1 if k % 2 else 1)


def tau_antiaut(a: Polyform) -> Polyform:
    """Reversion: (-1)^{k(k-1)/2} on grade k."""
    return _grade_map(a, lambda k: -1 if (k * (k - 1) // 2) % 2 else 1)


def hodge_star(a: Polyform) -> Polyform:
    """Hodge dual fixed by a ◇ ν = ∗τ(a), i.e. ∗b = τ(b) ◇ ν."""
    return geometric_product(tau_antiaut(a), Polyform.volume(a.sig))


# ---------------------------------------------------------------------------
# half-algebras and the truncated model
# ---------------------------------------------------------------------------


def _check_label(l: int) -> int:
    if l not in (1, -1):
        raise StructuralError("sign label must be +1 or -1")
    return l


def unit_half(sig: Signature, l: int) -> Polyform:
    """e_l = ½(1 + l ν)."""
    _check_label(l)
    return Polyform(sig, {0: Fraction(1, 2), sig.volume_mask: Fraction(l, 2)})


def project_half(l: int, a: Polyform) -> Polyform:
    """P_l(a) = e_l ◇ a."""
    return geometric_product(unit_half(a.sig, l), a)


def truncate(a: Polyform) -> Polyform:
    """Keep grades 0..(d-1)/2."""
    top = a.sig.half
    return Polyform(a.sig, {m: c for m, c in a.coeffs.items() if grade_of(m) <= top})


def vee_product(a: Polyform, b: Polyform, l: int) -> Polyform:
    """Truncated product a ∨ b = 2 P_<(P_l(a ◇ b))."""
    _check_label(l)
    a._check(b)
    if not (a.is_truncated() and b.is_truncated()):
        raise StructuralError("vee_product needs truncated operands")
    if a.is_exact and b.is_exact:
        return 2 * truncate(project_half(l, geometric_product(a, b)))
    return Polyform(a.sig, _dense_vee(a, b, l))


@lru_cache(maxsize=None)
def _vee_tables(sig: Signature, l: int) -> tuple[np.ndarray, np.ndarray]:
    """Sign and target mask of the ∨-product of two truncated monomials.

    Built from the exact definition; each product is ± a single monomial.
    """
    n = sig.size
    sign = np.zeros((n, n), dtype=np.int64)
    target = np.zeros((n, n), dtype=np.int64)
    masks = monomials(sig, sig.half)
    for i in masks:
        for j in masks:
            prod = vee_product(Polyform(sig, {i: 1}), Polyform(sig, {j: 1}), l)
            ((k, c),) = prod.coeffs.items()
            sign[i, j], target[i, j] = int(c), k
    return sign, target


def _dense_vee(a: Polyform, b: Polyform, l: int) -> dict[int, float]:
    sign, target = _vee_tables(a.sig, l)
    if not a.coeffs or not b.coeffs:
        return {}
    ia = np.fromiter(a.coeffs.keys(), dtype=np.int64, count=len(a.coeffs))
    ib = np.fromiter(b.coeffs.keys(), dtype=np.int64, count=len(b.coeffs))
    va = np.array([float(c) for c in a.coeffs.values()])
    vb = np.array([float(c) for c in b.coeffs.values()])
    block = np.outer(va, vb) * sign[np.ix_(ia, ib)]
    res = np.bincount(target[np.ix_(ia, ib)].ravel(), weights=block.ravel(), minlength=a.sig.size)
    nz = np.flatnonzero(res)
    return {int(m): float(res[m]) for m in nz}


def vee_product_via_halves(a: Polyform, b: Polyform, l: int) -> Polyform:
    """Same product computed as 2 P_<(P_l(a) ◇ P_l(b)); used as a cross-check."""
    _check_label(l)
    if not (a.is_truncated() and b.is_truncated()):
        raise StructuralError("vee_product needs truncated operands")
    return 2 * truncate(geometric_product(project_half(l, a), project_half(l, b)))


def vee(l: int, *factors: Polyform) -> Polyform:
    """Left-nested ∨ of several truncated polyforms."""
    acc = factors[0]
    for f in factors[1:]:
        acc = vee_product(acc, f, l)
    return acc


def trace_S(a: Polyform) -> Scalar:
    """S(a) = 2^{(d-1)/2} times the scalar part."""
    if not a.is_truncated():
        raise StructuralError("trace_S expects a truncated polyform")
    return (1 << a.sig.half) * a.scalar_part


def transpose(a: Polyform, sigma: int) -> Polyform:
    """(π^{(1-σ)/2} ∘ τ)(a)."""
    if sigma not in (1, -1):
        raise StructuralError("adjoint type must be +1 or -1")
    t = tau_antiaut(a)
    return pi_aut(t) if sigma == -1 else t


def expand_clifford(a: Polyform, l: int) -> Polyform:
    """a^< + l ∗τ(a^>): the truncated polyform acting like ``a`` on Cl_l."""
    low = truncate(a)
    high = a - low
    return low + l * truncate(hodge_star(tau_antiaut(high)))


def allclose(a: Polyform, b: Polyform, tol: float) -> bool:
    """Coefficientwise |a - b| <= tol * (1 + max |coefficient|)."""
    diff = (a - b).norm_inf()
    scale = max(a.norm_inf(), b.norm_inf())
    return diff <= tol * (1.0 + scale)


@dataclass(frozen=True)
class RandomPolyforms:
    """Random exact polyforms with small rational coefficients."""

    sig: Signature
    terms: int = 4
    max_grade: int | None = None
    seed: int = 0

    @cached_property
    def _masks(self) -> list[int]:
        return monomials(self.sig, self.max_grade)

    def stream(self) -> Iterator[Polyform]:
        rng = np.random.default_rng(self.seed)
        masks = self._masks
        while True:
            k = min(self.terms, len(masks))
            chosen = rng.choice(len(masks), size=k, replace=False)
            coeffs = {}
            for j in chosen:
                num = int(rng.integers(-9, 10))
                den = int(rng.integers(1, 6))
                coeffs[masks[j]] = Fraction(num, den)
            yield Polyform(self.sig, coeffs)
