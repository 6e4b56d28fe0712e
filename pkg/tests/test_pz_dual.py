"""Dual-space actions, compatibility, and the correspondence theorems."""

from fractions import Fraction

import pytest

from voacheck.formal import Window, X0, X1, X2, invert_variable, shift_oracle
from voacheck.intertwine import (
    PzMapCandidate, check_im_commutator, io_to_map, transpose_candidate,
)
from voacheck.pz_dual import (
    TauContext, check_compatibility, check_fvee_intertwines, check_pcorresp,
    compatible_subspace, f_vee, lam_apply, tau0_extended, tau_extended,
    tau_mode, tau_module, tau_o_restricted, tau_restricted,
    tensor_over_algebra, warning_space,
)
from voacheck.spaces import SlicedVec, Vec, ZERO, pair_name
from voacheck.voa import (
    CommAssocSpec, build_comm_assoc_va, build_virasoro_va, comm2_spec,
    comm_assoc_module, part_name, tensor_product_module, y_series,
)
from voacheck.lie_gv import LinearMap

OMEGA = part_name((2,))


@pytest.fixture(scope="module")
def comm2():
    return build_comm_assoc_va(comm2_spec())


@pytest.fixture(scope="module")
def ctx2(comm2):
    return TauContext(comm2.adjoint, comm2.adjoint, Fraction(1))


def dual_unit(*pairs):
    return Vec({pair_name(a, b): Fraction(c) for a, b, c in pairs})


# ---------------------------------------------------------------------------
# the restricted action in the commutative case
# ---------------------------------------------------------------------------

def test_tau_restricted_comm_assoc_formula(ctx2):
    lam = dual_unit(("1", "1", 1))
    orc = tau_restricted(ctx2, "a", lam)
    got = orc.coeff({X1: 0}, 0)
    # (tau(Y_t(a,x)) lam)(w1 (x) w2) = lam(w1 (x) a.w2)
    assert got == dual_unit(("1", "a", 1))
    for e in (-2, -1, 1, 2):
        assert orc.coeff({X1: e}, 0).is_zero()


def test_tau_restricted_unit_fixes_lambda(ctx2):
    for pairs in [(("1", "1", 1),), (("a", "1", 2), ("1", "a", 3))]:
        lam = dual_unit(*pairs)
        assert tau_mode(ctx2, "1", -1, lam) == lam
        orc = tau_restricted(ctx2, "1", lam)
        assert orc.coeff({X1: 1}, 0).is_zero()


def test_tau_z_independence_comm_assoc(comm2):
    lam = dual_unit(("a", "a", 1))
    got = {}
    for z in (Fraction(1), Fraction(2)):
        ctx = TauContext(comm2.adjoint, comm2.adjoint, z)
        orc = tau_restricted(ctx, "a", lam)
        got[z] = orc.coeff({X1: 0}, 0)
    assert got[Fraction(1)] == got[Fraction(2)]


def test_tau_extended_unit_reproduces_kernel(ctx2):
    # for v = 1 only the middle kernel survives and multiplies lam
    lam = dual_unit(("1", "a", 1))
    ext = tau_extended(ctx2, "1", lam)
    from voacheck.formal import DeltaKernelKind, delta_kernel
    pm = delta_kernel(DeltaKernelKind.PZ_MIDDLE, ctx2.z)
    for e0 in range(-2, 2):
        for e1 in range(-2, 2):
            got = ext.coeff({X0: e0, X1: e1}, 0)
            expect = lam * pm.scalar_coeff({X0: e0, X1: e1})
            assert got == expect, (e0, e1)


def test_residue_consistency(ctx2):
    # Res_x0 of the two-variable action is the one-variable Y^o action
    lam = dual_unit(("a", "1", 1))
    ext = tau_extended(ctx2, "a", lam)
    res = tau_o_restricted(ctx2, "a", lam)
    for e in range(-3, 3):
        full = ext.coeff({X0: -1, X1: e}, 0)
        assert full == res.coeff({X1: e}, 0)


def test_tau_form_equivalence_comm2(ctx2):
    # tau0 = (x1 -> 1/x1 then v -> conjugated v) applied to tau
    lam = dual_unit(("1", "1", 1), ("a", "a", -2))
    for vname in ("1", "a"):
        t0 = tau0_extended(ctx2, vname, lam)
        # weight zero: the conjugation is trivial and the substitution is a
        # pure inversion
        t = invert_variable(tau_extended(ctx2, vname, lam), X1)
        for e0 in range(-2, 2):
            for e1 in range(-2, 2):
                assert t0.coeff({X0: e0, X1: e1}, 0) == \
                    t.coeff({X0: e0, X1: e1}, 0), (vname, e0, e1)


def test_tau_form_equivalence_virasoro():
    vir = build_virasoro_va(Fraction(1), 6)
    m = vir.adjoint
    ctx = TauContext(m, m, Fraction(1))
    lam = Vec({pair_name("1", "1"): Fraction(1),
               pair_name(OMEGA, "1"): Fraction(2)})
    # conjugated expansion of omega: L(1) omega = 0 so it is just omega x^-4
    t0 = tau0_extended(ctx, OMEGA, lam)
    t = shift_oracle(invert_variable(tau_extended(ctx, OMEGA, lam), X1), X1, -4)
    for e0 in range(-2, 1):
        for e1 in range(-1, 2):
            for q in range(0, 3):
                assert t0.coeff({X0: e0, X1: e1}, q) == \
                    t.coeff({X0: e0, X1: e1}, q), (e0, e1, q)


# ---------------------------------------------------------------------------
# compatibility and the compatible subspace
# ---------------------------------------------------------------------------

WIN2 = Window(((X0, -3, 2), (X1, -3, 2)), (0, 0))


def test_compatibility_balanced_functional_passes(ctx2):
    lam = dual_unit(("1", "1", 1), ("a", "a", 1))
    rep = check_compatibility(ctx2, lam, WIN2)
    assert rep.passed, rep.witness


def test_compatibility_unbalanced_functional_fails(ctx2):
    lam = dual_unit(("1", "a", 1))
    rep = check_compatibility(ctx2, lam, WIN2)
    assert rep.failed


def test_compatible_subspace_comm2(ctx2):
    basis = compatible_subspace(ctx2)
    assert len(basis) == 2
    for sol in basis:
        lam = Vec(sol)
        # balance equations: lam((a.w1)(x)w2) = lam(w1(x)(a.w2))
        assert lam.get(pair_name("1", "a")) == lam.get(pair_name("a", "1"))
        assert lam.get(pair_name("1", "1")) == lam.get(pair_name("a", "a"))
        assert check_compatibility(ctx2, lam, WIN2).passed


def test_compatible_subspace_one_dim():
    spec = CommAssocSpec(basis=("1",), unit="1",
                         products={("1", "1"): Vec.unit("1")})
    alg = build_comm_assoc_va(spec)
    ctx = TauContext(alg.adjoint, alg.adjoint, Fraction(1))
    assert len(compatible_subspace(ctx)) == 1


def test_compatibility_stability(ctx2):
    # the compatible subspace is preserved by the restricted action
    from voacheck.exactla import EchelonBasis
    basis = compatible_subspace(ctx2)
    ech = EchelonBasis()
    for sol in basis:
        ech.add(sol)
    for sol in basis:
        lam = Vec(sol)
        for v in ("1", "a"):
            for n in (-2, -1, 0, 1):
                img = tau_mode(ctx2, v, n, lam)
                if not img.is_zero():
                    assert ech.contains(dict(img.items())), (v, n)


def test_tensor_over_algebra_comm2(ctx2):
    basis, project = tensor_over_algebra(ctx2)
    assert len(basis) == 2          # V (x)_V V = V
    # projection is the multiplication map in disguise: a(x)a ~ 1(x)1
    assert project(Vec.unit(pair_name("a", "a"))) == \
        project(Vec.unit(pair_name("1", "1")))
    # dual pairing with the compatible subspace is nondegenerate
    lams = [Vec(sol) for sol in compatible_subspace(ctx2)]
    from voacheck.exactla import rank_of
    rows = []
    for lam in lams:
        rows.append({b: sum((lam.get(k) * c for k, c in
                             project(Vec.unit(b)).items()), Fraction(0))
                     for b in basis})
    assert rank_of(rows) == 2


def test_tensor_with_unit_module(comm2):
    # W2 = V gives W1 (x)_V V = W1
    m = comm2.adjoint
    ctx = TauContext(m, m, Fraction(1))
    basis, _ = tensor_over_algebra(ctx)
    assert len(basis) == comm2.space.dim


# ---------------------------------------------------------------------------
# the dual map
# ---------------------------------------------------------------------------

def badim_identity_map(alg, z):
    m = alg.adjoint
    t = tensor_product_module(alg, m, m)
    values = {}
    for b1 in alg.space.order:
        for b2 in alg.space.order:
            q = alg.space.weight(b1) + alg.space.weight(b2)
            values[(b1, b2)] = SlicedVec(t.space, {q: Vec.unit(pair_name(b1, b2))})
    return PzMapCandidate(m, m, t, z, values, name="identity")


def test_f_vee_of_identity_is_identity(comm2, ctx2):
    f = badim_identity_map(comm2, Fraction(1))
    for b1 in ("1", "a"):
        for b2 in ("1", "a"):
            alpha = Vec.unit(pair_name(b1, b2) + "'")
            lam = f_vee(f, alpha)
            assert lam == Vec.unit(pair_name(b1, b2))


def test_f_vee_of_zero_map(comm2):
    m = comm2.adjoint
    f = PzMapCandidate(m, m, m, Fraction(1), {})
    assert f_vee(f, Vec.unit("1'")).is_zero()


def test_fvee_intertwines_for_quasi_map(comm2, ctx2):
    f = badim_identity_map(comm2, Fraction(1))
    win = Window(((X1, -3, 2),), (0, 0))
    rep = check_fvee_intertwines(f, ctx2, win)
    assert rep.passed, (rep.witness, rep.detail)


def test_fvee_intertwines_fails_for_non_quasi(comm2, ctx2):
    f = badim_identity_map(comm2, Fraction(1))
    # perturb one value so that the commutator condition breaks
    t3 = f.m3
    f.values[("a", "1")] = SlicedVec(t3.space, {0: Vec.unit(pair_name("a", "a"))})
    win_im = Window(((X0, -3, 2), (X1, -3, 2)), (0, 0))
    assert check_im_commutator(f, Vec.unit("a"), Vec.unit("a"), Vec.unit("1"),
                               win_im).failed
    win = Window(((X1, -3, 2),), (0, 0))
    rep = check_fvee_intertwines(f, ctx2, win)
    assert rep.failed


def test_fvee_intertwines_zero_map(comm2, ctx2):
    m = comm2.adjoint
    f = PzMapCandidate(m, m, m, Fraction(1), {})
    win = Window(((X1, -2, 2),), (0, 0))
    assert check_fvee_intertwines(f, ctx2, win).passed


# ---------------------------------------------------------------------------
# the correspondence and the warning space
# ---------------------------------------------------------------------------

WIN_IM = Window(((X0, -3, 2), (X1, -3, 2)), (0, 0))
WIN_COMP = Window(((X0, -2, 2), (X1, -2, 2)), (0, 0))


def test_pcorresp_identity_map_both_negative(comm2, ctx2):
    f = badim_identity_map(comm2, Fraction(1))
    rep = check_pcorresp(f, ctx2, WIN_IM, WIN_COMP)
    assert rep.commutator == "pass"
    assert rep.image_compatible == "fail" and rep.jacobi == "fail"
    assert rep.equivalent


def test_pcorresp_intertwining_map_both_positive(comm2, ctx2):
    c = transpose_candidate(comm2.adjoint)
    f = io_to_map(c, Fraction(1))
    rep = check_pcorresp(f, ctx2, WIN_IM, WIN_COMP)
    assert rep.image_compatible == "pass" and rep.jacobi == "pass"
    assert rep.equivalent


def test_pcorresp_one_dimensional_algebra():
    spec = CommAssocSpec(basis=("1",), unit="1",
                         products={("1", "1"): Vec.unit("1")})
    alg = build_comm_assoc_va(spec)
    ctx = TauContext(alg.adjoint, alg.adjoint, Fraction(2))
    f = badim_identity_map(alg, Fraction(2))
    rep = check_pcorresp(f, ctx, WIN_IM, WIN_COMP)
    assert rep.image_compatible == "pass" and rep.jacobi == "pass"
    assert rep.equivalent


def test_character_module_image_has_no_compatible_elements(comm2, ctx2):
    # sign character module: a acts as -1; the 1-dim image of the dual map
    # contains no nonzero compatible functional
    w3space = comm_assoc_module(
        comm2, __import__("voacheck.spaces", fromlist=["GradedSpace"]).GradedSpace(
            "Chi", {"w": 0}, ("w",)),
        {("a", "w"): Vec.unit("w") * -1}, name="Chi")
    m = comm2.adjoint
    values = {}
    for b1 in ("1", "a"):
        for b2 in ("1", "a"):
            sign = Fraction(-1) if b2 == "a" else Fraction(1)
            values[(b1, b2)] = SlicedVec(w3space.space, {0: Vec.unit("w") * sign})
    f = PzMapCandidate(m, m, w3space, Fraction(1), values)
    win = Window(((X0, -3, 2), (X1, -3, 2)), (0, 0))
    for b1 in ("1", "a"):
        for b2 in ("1", "a"):
            for v in ("1", "a"):
                assert check_im_commutator(f, Vec.unit(v), Vec.unit(b1),
                                           Vec.unit(b2), win).passed
    lam = f_vee(f, Vec.unit("w'"))
    for scale in (1, 2, Fraction(-1, 3)):
        rep = check_compatibility(ctx2, lam * scale, WIN_COMP)
        assert rep.failed


def test_warning_space_comm2(ctx2):
    win = Window(((X0, -2, 2), (X1, -2, 2), (X2, -2, 2)), (0, 0))
    rep = warning_space(ctx2, win)
    assert rep.verdict == "pass"
    assert rep.dim == 4 and rep.compatible_dim == 2
    assert rep.strictly_larger


def test_warning_space_one_dim():
    spec = CommAssocSpec(basis=("1",), unit="1",
                         products={("1", "1"): Vec.unit("1")})
    alg = build_comm_assoc_va(spec)
    ctx = TauContext(alg.adjoint, alg.adjoint, Fraction(1))
    win = Window(((X0, -2, 2), (X1, -2, 2), (X2, -2, 2)), (0, 0))
    rep = warning_space(ctx, win)
    assert rep.verdict == "pass"
    assert rep.dim == 1 and rep.compatible_dim == 1
    assert not rep.strictly_larger
