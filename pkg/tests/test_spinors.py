import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from kundtkit.algebra import Polyform, RandomPolyforms, Signature, StructuralError, metric_pairing, trace_S, transpose, vee_product
from kundtkit.spinors import (
    ContractError,
    PreconditionError,
    Spinor,
    build_gamma,
    build_pairing,
    check_square_conditions,
    clifford_action,
    direct_action,
    expected_pairing_type,
    induced_rotation,
    paired_module,
    psi_less,
    psi_less_inv,
    random_spinor,
    reconstruct_spinor,
    rotate_polyform,
    spin_generators,
    spin_invariance_check,
    square_condition_report,
    square_matrix,
    square_spinor,
    square_spinor_bilinears,
)

L21 = Signature(2, 1)
SMALL = [Signature(2, 1), Signature(3, 2), Signature(4, 3)]
ALL = [Signature(1, 0), Signature(2, 1), Signature(3, 2), Signature(4, 3), Signature(0, 7),
       Signature(5, 4), Signature(9, 0), Signature(1, 8)]

spinor_seeds = st.integers(0, 2**32 - 1)


def xi_of(m, comps):
    return Spinor(np.asarray(comps, dtype=float), m)


# ---------------------------------------------------------------------------
# gamma matrices
# ---------------------------------------------------------------------------


def test_lorentzian_three_gamma_matrices():
    rep = build_gamma(L21)
    g1, g2, g3 = rep.matrices
    assert g1.tolist() == [[0, 1], [1, 0]]
    assert g2.tolist() == [[1, 0], [0, -1]]
    assert g3.tolist() == [[0, 1], [-1, 0]]
    assert np.array_equal(g1 @ g2 @ g3, np.eye(2))
    assert rep.l == 1


def test_one_dimensional_module():
    rep = build_gamma(Signature(1, 0))
    assert [g.tolist() for g in rep.matrices] == [[[1]]]
    assert rep.l == 1


@pytest.mark.parametrize("sig", ALL, ids=str)
def test_clifford_relations_are_exact(sig):
    rep = build_gamma(sig)
    assert rep.dim == 2 ** sig.half
    assert rep.clifford_residual() == 0
    assert all(g.dtype.kind == "i" for g in rep.matrices)
    assert np.array_equal(rep.gamma(sig.volume_mask), rep.l * np.eye(rep.dim, dtype=int))


def test_opposite_module_flips_the_volume_sign():
    rep = build_gamma(Signature(3, 2))
    opp = rep.opposite()
    assert opp.l == -rep.l
    assert opp.clifford_residual() == 0
    assert np.array_equal(opp.gamma(opp.signature.volume_mask), opp.l * np.eye(4, dtype=int))


def test_large_signatures_are_unsupported():
    with pytest.raises(StructuralError):
        build_gamma(Signature(10, 1))


# ---------------------------------------------------------------------------
# admissible pairings
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "sig, s, sigma",
    [
        (Signature(2, 1), -1, -1),
        (Signature(3, 2), -1, 1),
        (Signature(4, 3), 1, -1),
        (Signature(0, 7), 1, -1),
        (Signature(5, 4), 1, 1),
        (Signature(9, 0), 1, 1),
    ],
    ids=str,
)
def test_pairing_type_table(sig, s, sigma):
    m = paired_module(sig)
    assert (m.s, m.sigma) == (s, sigma) == expected_pairing_type(sig.d)
    assert np.array_equal(m.B.T, s * m.B)
    for g in m.rep.matrices:
        assert np.array_equal(g.T @ m.B, sigma * m.B @ g)


@pytest.mark.parametrize("sig", ALL, ids=str)
def test_pairing_is_nondegenerate_and_integral(sig):
    m = paired_module(sig)
    assert m.B.dtype.kind == "i"
    assert round(abs(np.linalg.det(m.B.astype(float)))) >= 1


@pytest.mark.parametrize("sig", [Signature(4, 3), Signature(5, 4), Signature(1, 8)], ids=str)
def test_symmetric_pairings_are_split_when_mixed(sig):
    eig = np.linalg.eigvalsh(paired_module(sig).B.astype(float))
    assert (eig > 0).sum() == (eig < 0).sum()


@pytest.mark.parametrize("sig", [Signature(0, 7), Signature(9, 0)], ids=str)
def test_symmetric_pairings_are_definite_when_unmixed(sig):
    eig = np.linalg.eigvalsh(paired_module(sig).B.astype(float))
    assert np.all(eig > 0) or np.all(eig < 0)


@pytest.mark.parametrize("sig", SMALL, ids=str)
def test_both_module_signs_admit_the_same_pairing_type(sig):
    plus, minus = paired_module(sig, 1), paired_module(sig, -1)
    assert (plus.l, minus.l) == (1, -1)
    assert (plus.s, plus.sigma) == (minus.s, minus.sigma)


# ---------------------------------------------------------------------------
# Ψ and its inverse
# ---------------------------------------------------------------------------


def test_psi_examples():
    m = paired_module(L21)
    assert np.array_equal(psi_less(Polyform.scalar(L21), m), np.eye(2))
    assert np.array_equal(psi_less(Polyform.blade(L21, 1), m), m.rep.matrices[0])
    assert psi_less_inv(np.eye(2), m) == Polyform.scalar(L21, 1.0)
    assert psi_less_inv(m.rep.matrices[0], m) == Polyform.blade(L21, 1, coeff=1.0)


@pytest.mark.parametrize("sig", SMALL, ids=str)
def test_psi_is_an_algebra_morphism_on_monomials(sig):
    m = paired_module(sig)
    masks = m.truncated_masks
    for a in masks:
        A = Polyform(sig, {a: 1})
        for b in masks:
            B = Polyform(sig, {b: 1})
            lhs = psi_less(vee_product(A, B, m.l), m)
            assert np.array_equal(lhs, psi_less(A, m) @ psi_less(B, m))


@pytest.mark.parametrize("sig", SMALL, ids=str)
def test_trace_of_psi_is_the_algebraic_trace(sig):
    m = paired_module(sig)
    stream = RandomPolyforms(sig, max_grade=sig.half, seed=11).stream()
    for _ in range(50):
        a = next(stream)
        assert np.trace(psi_less(a, m)) == pytest.approx(float(trace_S(a)), abs=1e-12)


@pytest.mark.parametrize("sig", SMALL, ids=str)
@given(seed=spinor_seeds)
def test_psi_inverse_round_trips(sig, seed):
    m = paired_module(sig)
    E = np.random.default_rng(seed).normal(size=(m.dim, m.dim))
    assert np.allclose(psi_less(psi_less_inv(E, m), m), E, atol=1e-12)


@pytest.mark.parametrize("sig", SMALL, ids=str)
def test_full_polyforms_act_through_the_clifford_relation(sig):
    m = paired_module(sig)
    stream = RandomPolyforms(sig, terms=6, seed=2).stream()
    for _ in range(20):
        a = next(stream)
        assert np.allclose(clifford_action(a, m), direct_action(a, m), atol=1e-12)


@pytest.mark.parametrize("sig", SMALL, ids=str)
def test_pairing_transpose_corresponds_to_polyform_transpose(sig):
    m = paired_module(sig)
    for mask in m.truncated_masks:
        a = Polyform(sig, {mask: 1})
        assert np.allclose(m.b_transpose(psi_less(a, m)), psi_less(transpose(a, m.sigma), m), atol=1e-12)


# ---------------------------------------------------------------------------
# squares
# ---------------------------------------------------------------------------


def test_square_of_first_basis_spinor():
    m = paired_module(L21)
    xi = xi_of(m, [1, 0])
    # hand oracle: E = ξ (Bξ)ᵀ = [[0, -1], [0, 0]], coefficients Tr(γ_I⁻¹ E) / 2
    E = square_matrix(xi, 1)
    assert E.tolist() == [[0, -1], [0, 0]]
    u = square_spinor(xi, 1)
    assert u == Polyform(L21, {0b001: -0.5, 0b100: -0.5})
    assert metric_pairing(u, u) == 0
    assert square_spinor_bilinears(xi, 1) == u


def test_zero_spinor_squares_to_zero():
    m = paired_module(Signature(3, 2))
    assert square_spinor(xi_of(m, np.zeros(4)), -1) == Polyform.zero(m.signature)


@given(seed=spinor_seeds)
def test_lorentzian_squares_are_null_one_forms(seed):
    m = paired_module(L21)
    rng = np.random.default_rng(seed)
    a = square_spinor(random_spinor(m, rng), 1 if rng.random() < 0.5 else -1)
    u = a.grade(1)
    assert (a - u).norm_inf() <= 1e-14
    assert u.norm_inf() > 0
    assert abs(metric_pairing(u, u)) <= 1e-12 * max(float(c) ** 2 for c in u.coeffs.values())


@pytest.mark.parametrize("sig", SMALL, ids=str)
@given(seed=spinor_seeds)
def test_trace_and_bilinear_expansions_agree(sig, seed):
    m = paired_module(sig)
    xi = random_spinor(m, np.random.default_rng(seed))
    for mu in (1, -1):
        a, b = square_spinor(xi, mu), square_spinor_bilinears(xi, mu)
        assert (a - b).norm_inf() <= 1e-12 * (1 + a.norm_inf())


@pytest.mark.parametrize("sig", SMALL, ids=str)
@given(seed=spinor_seeds)
def test_square_matrix_obeys_rank_one_law(sig, seed):
    m = paired_module(sig)
    rng = np.random.default_rng(seed)
    E = square_matrix(random_spinor(m, rng), 1)
    T = rng.normal(size=E.shape)
    scale = 1 + np.abs(E).max() ** 2
    assert np.abs(E @ E - np.trace(E) * E).max() <= 1e-12 * scale
    assert np.abs(E @ T @ E - np.trace(E @ T) * E).max() <= 1e-12 * scale * (1 + np.abs(T).max())


@pytest.mark.parametrize("sig", SMALL, ids=str)
@given(seed=spinor_seeds)
def test_squares_satisfy_both_condition_modes(sig, seed):
    m = paired_module(sig)
    rng = np.random.default_rng(seed)
    a = square_spinor(random_spinor(m, rng), 1 if rng.random() < 0.5 else -1)
    assert check_square_conditions(a, m, "all_beta")
    assert check_square_conditions(a, m, "fixed_beta")


def test_null_plus_conjugate_is_not_a_square():
    m = paired_module(L21)
    u = Polyform.vector(L21, [1.0, 0.0, 1.0])
    v = Polyform.vector(L21, [0.5, 0.0, -0.5])
    for eps in (0.5, 1e-3):
        rep = square_condition_report(u + v * eps, m)
        assert not rep.passed
        assert "square" in rep.failures


def test_unit_is_not_a_square_when_the_pairing_is_skew():
    m = paired_module(L21)
    rep = square_condition_report(Polyform.scalar(L21, 1), m)
    assert not rep.passed and "symmetry" in rep.failures


def test_fixed_beta_mode_needs_a_nonzero_trace():
    m = paired_module(L21)
    u = square_spinor(xi_of(m, [1, 0]), 1)
    with pytest.raises(PreconditionError):
        square_condition_report(u, m, "fixed_beta", beta=Polyform.blade(L21, 2))
    assert square_condition_report(u, m, "fixed_beta", beta=Polyform.blade(L21, 1)).passed


def test_unknown_condition_mode():
    m = paired_module(L21)
    with pytest.raises(ValueError):
        square_condition_report(Polyform.zero(L21), m, "some_beta")


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------


def test_reconstruct_first_basis_spinor():
    m = paired_module(L21)
    xi, mu = reconstruct_spinor(Polyform(L21, {0b001: -0.5, 0b100: -0.5}), m)
    assert mu == 1
    assert np.allclose(np.abs(xi.components), [1, 0], atol=1e-14)


def test_reconstruct_zero():
    m = paired_module(L21)
    xi, mu = reconstruct_spinor(Polyform.zero(L21), m)
    assert mu == 1 and not xi.components.any()


def test_reconstruct_rejects_non_squares():
    m = paired_module(L21)
    with pytest.raises(ContractError):
        reconstruct_spinor(Polyform.vector(L21, [1.0, 0.0, 0.5]), m)


@pytest.mark.parametrize("sig", SMALL, ids=str)
@given(seed=spinor_seeds, mu=st.sampled_from([1, -1]))
def test_reconstruction_inverts_squaring_up_to_sign(sig, seed, mu):
    m = paired_module(sig)
    xi = random_spinor(m, np.random.default_rng(seed))
    back, mu2 = reconstruct_spinor(square_spinor(xi, mu), m)
    assert mu2 == mu
    x, y = xi.components, back.components
    err = min(np.linalg.norm(x - y), np.linalg.norm(x + y)) / np.linalg.norm(x)
    assert err <= 1e-10


@given(x=st.floats(-3, 3), y=st.floats(-3, 3), sign=st.sampled_from([1, -1]))
def test_isotropic_one_forms_are_squares(x, y, sign):
    r = float(np.hypot(x, y))
    if r < 1e-3:
        return
    m = paired_module(L21)
    u = Polyform.vector(L21, [x, y, sign * r])
    xi, mu = reconstruct_spinor(u, m)
    assert (square_spinor(xi, mu) - u).norm_inf() <= 1e-10 * (1 + u.norm_inf())


# ---------------------------------------------------------------------------
# spin invariance and equivariance
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("sig", SMALL + [Signature(0, 7)], ids=str)
def test_spin_generators_preserve_the_pairing(sig):
    assert spin_invariance_check(paired_module(sig), trials=10, seed=5)


def test_lorentzian_rotation_generator_is_antisymmetric_exactly():
    m = paired_module(L21)
    g1, g2, _ = m.rep.matrices
    G = g1 @ g2
    assert np.array_equal(G.T @ m.B + m.B @ G, np.zeros((2, 2), dtype=int))


@pytest.mark.parametrize("sig", SMALL, ids=str)
def test_squaring_is_spin_equivariant(sig):
    m = paired_module(sig)
    rng = np.random.default_rng(3)
    for _, _, G in spin_generators(m, rng, 5):
        for t in (0.1, 0.5, 1.0):
            S = expm(t * G)
            xi = random_spinor(m, rng)
            lhs = square_spinor(Spinor(S @ xi.components, m), 1)
            rhs = rotate_polyform(square_spinor(xi, 1), induced_rotation(S, m))
            assert (lhs - rhs).norm_inf() <= 1e-10 * (1 + lhs.norm_inf())


def test_spinor_dimension_is_checked():
    with pytest.raises(StructuralError):
        Spinor(np.zeros(3), paired_module(L21))


def test_mu_must_be_a_sign():
    m = paired_module(L21)
    with pytest.raises(StructuralError):
        square_spinor(xi_of(m, [1, 0]), 0)


def test_build_pairing_reproduces_cached_module():
    m = paired_module(Signature(3, 2))
    again = build_pairing(build_gamma(Signature(3, 2)))
    assert np.array_equal(m.B, again.B)
