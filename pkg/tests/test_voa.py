"""Algebra builders, mode tables, and the module-level identity checkers."""

from fractions import Fraction

import pytest

from voacheck.formal import Window, X0, X1, X2
from voacheck.spaces import CutoffEscape, Vec, ZERO
from voacheck.voa import (
    CommAssocSpec, SpecValidationError, build_comm_assoc_va, build_virasoro_va,
    check_associativity_formula, check_ideal, check_module_commutator,
    check_module_jacobi, comm2_spec, comm_assoc_module, contragredient_series,
    part_name, quotient_module, tensor_product_module, trivial_module_killing,
    y_o_action, y_o_series, y_series,
)


@pytest.fixture(scope="module")
def comm2():
    return build_comm_assoc_va(comm2_spec())


@pytest.fixture(scope="module")
def vir0():
    return build_virasoro_va(Fraction(0), 6)


@pytest.fixture(scope="module")
def vir1():
    return build_virasoro_va(Fraction(1), 6)


# ---------------------------------------------------------------------------
# comm-assoc builder
# ---------------------------------------------------------------------------

def test_comm2_modes(comm2):
    a = Vec.unit("a")
    assert comm2.mode(a, -1, a) == Vec.unit("1")
    for n in (-3, -2, 0, 1, 2):
        assert comm2.mode(a, n, a).is_zero()
    # vacuum property
    for n in (-2, -1, 0, 1):
        expect = Vec.unit("a") if n == -1 else ZERO
        assert comm2.mode("1", n, "a") == expect


def test_idempotent_algebra_builds():
    spec = CommAssocSpec(basis=("1", "e"), unit="1",
                         products={("1", "1"): Vec.unit("1"),
                                   ("1", "e"): Vec.unit("e"),
                                   ("e", "e"): Vec.unit("e")})
    alg = build_comm_assoc_va(spec)
    assert alg.mode("e", -1, "e") == Vec.unit("e")


def test_one_dimensional_algebra_builds():
    spec = CommAssocSpec(basis=("1",), unit="1",
                         products={("1", "1"): Vec.unit("1")})
    alg = build_comm_assoc_va(spec)
    assert alg.mode("1", -1, "1") == Vec.unit("1")


def test_invalid_tables_rejected():
    bad_assoc = CommAssocSpec(
        basis=("1", "a"), unit="1",
        products={("1", "1"): Vec.unit("1"), ("1", "a"): Vec.unit("a"),
                  ("a", "a"): Vec.unit("a") + Vec.unit("1")})
    # this one is actually associative; break the unit instead
    bad_unit = CommAssocSpec(
        basis=("1", "a"), unit="1",
        products={("1", "1"): Vec.unit("1"), ("1", "a"): ZERO,
                  ("a", "a"): Vec.unit("1")})
    with pytest.raises(SpecValidationError) as err:
        build_comm_assoc_va(bad_unit)
    assert err.value.axiom == "unit"
    bad_comm = CommAssocSpec(
        basis=("1", "a"), unit="1",
        products={("1", "1"): Vec.unit("1"), ("1", "a"): Vec.unit("a"),
                  ("a", "1"): ZERO, ("a", "a"): Vec.unit("1")})
    with pytest.raises(SpecValidationError) as err:
        build_comm_assoc_va(bad_comm)
    assert err.value.axiom in ("commutativity", "unit")
    # non-associative: b*b = b with 1ab table making (ab)b != a(bb)
    bad = CommAssocSpec(
        basis=("1", "a", "b"), unit="1",
        products={("1", "1"): Vec.unit("1"), ("1", "a"): Vec.unit("a"),
                  ("1", "b"): Vec.unit("b"), ("a", "a"): Vec.unit("b"),
                  ("a", "b"): Vec.unit("1"), ("b", "b"): Vec.unit("b")})
    with pytest.raises(SpecValidationError) as err:
        build_comm_assoc_va(bad)
    assert err.value.axiom == "associativity"
    assert len(err.value.witness) == 3


def test_comm_assoc_skew_symmetry(comm2):
    # u_n v = v_n u for every mode of a commutative algebra
    for u in ("1", "a"):
        for v in ("1", "a"):
            for n in range(-3, 3):
                assert comm2.mode(u, n, v) == comm2.mode(v, n, u)


# ---------------------------------------------------------------------------
# Virasoro builder
# ---------------------------------------------------------------------------

def test_virasoro_graded_dimensions(vir0):
    dims = {}
    for b in vir0.space.order:
        w = vir0.space.weight(b)
        dims[w] = dims.get(w, 0) + 1
    assert dims == {0: 1, 2: 1, 3: 1, 4: 2, 5: 2, 6: 4}


def test_virasoro_low_slices(vir0):
    assert vir0.space.slice_basis(0) == ("1",)
    assert vir0.space.slice_basis(1) == ()
    assert vir0.space.slice_basis(2) == (part_name((2,)),)


@pytest.mark.parametrize("c", [Fraction(0), Fraction(1), Fraction(-13, 2)])
def test_l2_omega_is_half_central_charge(c):
    alg = build_virasoro_va(c, 4)
    got = alg.adjoint.L(2, alg.omega)
    assert got == Vec.unit("1") * (c / 2)
    # omega_3 omega is the same statement in mode form
    assert alg.mode(alg.omega, 3, alg.omega) == Vec.unit("1") * (c / 2)


def test_omega_lowest_weight_vector_at_c0(vir0):
    for n in range(1, 5):
        assert vir0.adjoint.L(n, vir0.omega).is_zero()


def test_virasoro_bracket_relations(vir1):
    # [L(m), L(n)] = (m-n) L(m+n) + (m^3-m)/12 delta_{m+n,0} c, on every basis
    eng = vir1.engine
    c = vir1.central_charge
    for b in vir1.space.order:
        for m in range(-2, 3):
            for n in range(-2, 3):
                try:
                    lhs = eng.L_vec(m, eng.L_basis(n, b)) - eng.L_vec(n, eng.L_basis(m, b))
                    rhs = eng.L_basis(m + n, b) * (m - n)
                    if m + n == 0:
                        rhs = rhs + Vec.unit(b) * (Fraction(m ** 3 - m, 12) * c)
                except CutoffEscape:
                    continue
                assert lhs == rhs, (b, m, n)


def test_virasoro_d_is_l_minus_one(vir1):
    # v_{-2} 1 computed through the mode table equals L(-1) v
    for b in vir1.space.order:
        if vir1.space.weight(b) >= 6:
            continue
        assert vir1.mode(b, -2, "1") == vir1.d(b)


def test_cutoff_escape_distinguished_from_zero(vir0):
    om = vir0.omega
    with pytest.raises(CutoffEscape):
        vir0.mode(om, -3, part_name((4,)))     # weight 4+2+2 = 8 > 6
    # in-cutoff negative weight result is a genuine zero
    assert vir0.mode(om, 5, om).is_zero()


def test_virasoro_cutoff_validation():
    with pytest.raises(ValueError):
        build_virasoro_va(Fraction(1), 3)


# ---------------------------------------------------------------------------
# appendix-style module candidates
# ---------------------------------------------------------------------------

def test_killing_module_commutator_passes_jacobi_fails(comm2):
    m = trivial_module_killing(comm2, {"a"})
    win = Window.cube((X0, X1, X2), -3, 3)
    a = Vec.unit("a")
    rep_c = check_module_commutator(m, a, a, Vec.unit("w"), win)
    assert rep_c.passed, rep_c.witness
    rep_j = check_module_jacobi(m, a, a, Vec.unit("w"), win)
    assert rep_j.failed
    # the iterate side produces w, the double-action side 0
    assert rep_j.witness.left == Vec.unit("w")
    assert rep_j.witness.right == ZERO


def test_adjoint_module_jacobi_passes(comm2, vir1):
    win = Window.cube((X0, X1, X2), -2, 2)
    a = Vec.unit("a")
    rep = check_module_jacobi(comm2.adjoint, a, a, Vec.unit("1"), win)
    assert rep.passed, rep.witness
    om = vir1.omega
    win_v = Window(((X0, -2, 2), (X1, -2, 2), (X2, -2, 2)), (0, 6))
    rep = check_module_jacobi(vir1.adjoint, om, om, Vec.unit("1"), win_v)
    assert rep.passed, rep.witness
    rep = check_module_commutator(vir1.adjoint, om, om, om, win_v)
    assert rep.passed, rep.witness


def test_jacobi_implies_commutator_on_window(vir0):
    om = vir0.omega
    win = Window(((X0, -2, 2), (X1, -2, 2), (X2, -2, 2)), (0, 6))
    jac = check_module_jacobi(vir0.adjoint, om, om, om, win)
    com = check_module_commutator(vir0.adjoint, om, om, om, win)
    assert jac.passed and com.passed


def test_tensor_product_module_action(comm2):
    m = comm2.adjoint
    t = tensor_product_module(comm2, m, m)
    a = Vec.unit("a")
    # a . (1 (x) 1) = 1 (x) a
    assert t.mode(a, -1, "1(x)1") == Vec.unit("1(x)a")
    # the right-factor action is a genuine module action (a sum of copies of
    # W2), so both module identities hold
    win = Window.cube((X0, X1, X2), -2, 2)
    rep = check_module_jacobi(t, a, a, Vec.unit("1(x)1"), win)
    assert rep.passed, rep.witness
    rep = check_module_commutator(t, a, a, Vec.unit("1(x)1"), win)
    assert rep.passed


# ---------------------------------------------------------------------------
# associativity formula
# ---------------------------------------------------------------------------

def test_associativity_comm_assoc(comm2):
    a = Vec.unit("a")
    one = Vec.unit("1")
    for p in range(-3, 3):
        for q in range(-3, 3):
            rep = check_associativity_formula(comm2.adjoint, a, a, a, p, q)
            assert rep.passed, (p, q, rep.witness)
    rep = check_associativity_formula(comm2.adjoint, one, a, a, -1, -1)
    assert rep.passed


def test_associativity_virasoro():
    alg = build_virasoro_va(Fraction(1), 8)
    om = alg.omega
    one = Vec.unit("1")
    for (p, q) in [(-1, -1), (0, -1), (1, 0), (-2, 0), (2, 1), (1, 1)]:
        rep = check_associativity_formula(alg.adjoint, om, om, one, p, q)
        assert rep.verdict == "pass", (p, q, rep)
    rep = check_associativity_formula(alg.adjoint, om, om, om, 3, 1)
    assert rep.verdict == "pass"


# ---------------------------------------------------------------------------
# ideals and quotients
# ---------------------------------------------------------------------------

def test_vplus_is_ideal_at_c0(vir0):
    vplus = [Vec.unit(b) for b in vir0.space.order if vir0.space.weight(b) >= 1]
    rep = check_ideal(vir0, vplus)
    assert rep.passed, rep.witness


def test_span_a_not_ideal(comm2):
    rep = check_ideal(comm2, [Vec.unit("a")])
    assert rep.failed          # a_{-1} a = 1 escapes the span
    assert rep.witness.exps == {"n": -1}


def test_zero_subspace_is_ideal(comm2):
    assert check_ideal(comm2, []).passed


def test_quotient_module_collapses_vplus(vir0):
    vplus = [Vec.unit(b) for b in vir0.space.order if vir0.space.weight(b) >= 1]
    q = quotient_module(vir0, vir0.adjoint, vplus, name="V/V+")
    assert q.space.order == ("1",)
    # omega acts as zero, the vacuum as identity
    assert q.mode(vir0.omega, -1, "1").is_zero()
    assert q.mode("1", -1, "1") == Vec.unit("1")
    assert q.L(0, "1").is_zero()


# ---------------------------------------------------------------------------
# Y^o and contragredient
# ---------------------------------------------------------------------------

def test_y_o_comm_assoc_is_multiplication(comm2):
    # omega = 0 so L(1) = L(0) = 0 and Y^o(v,x)w = v.w, constant in x
    lv = y_o_action(comm2.adjoint, Vec.unit("a"), Vec.unit("a"))
    assert lv.get((0,)) == Vec.unit("1")
    assert all(e == (0,) for e in lv.terms)


def test_y_o_unit_is_identity(vir1):
    lv = y_o_action(vir1.adjoint, Vec.unit("1"), vir1.omega)
    assert lv.get((0,)) == vir1.omega
    assert len(lv.terms) == 1


def test_y_o_matches_involution(vir1):
    # Y^o(e^{xL(1)}(-x^-2)^{L(0)} v, x^-1) recovers Y(v, x): check the
    # pairing form <a', Y^o(omega,x)1> against direct modes on a window.
    m = vir1.adjoint
    oracle = y_o_series(m, vir1.omega, Vec.unit("1"), "x")
    # Y^o(omega,x)1 = sum_k L(k) 1 x^{k-2+...}; only the x^{-4}, x^{-3}... tail
    # can be nonzero here by weight bookkeeping: wt = 0 - 2 - e
    for e in range(-6, 3):
        q = -2 - e
        if q < 0 or q > 6:
            continue
        coeff = oracle.coeff({"x": e}, q)
        # compare against the defining finite sum evaluated independently
        expect = ZERO
        wv = 2
        tower = [vir1.omega]  # L(1) omega = 0 so the tower stops immediately
        for mm, vm in enumerate(tower):
            k = e + 2 * wv - 1 - mm
            expect = expect + m.mode(vm, k, "1")
        assert coeff == expect * Fraction((-1) ** wv)


def test_contragredient_duality(comm2):
    # <Y'(v,x)alpha, w> = <alpha, Y^o(v,x)w> is definitional; check the
    # comm-assoc closed form (Y'(v,x)alpha)(w) = alpha(v.w), x-independent.
    m = comm2.adjoint
    alpha = Vec.unit("1'")
    orc = contragredient_series(m, Vec.unit("a"), alpha, "x")
    val = orc.coeff({"x": 0}, 0)
    # (Y'(a,x)1')(w) = 1'(a.w): picks out w = a
    assert val == Vec.unit("a'")
    assert orc.coeff({"x": 1}, 0).is_zero()
    assert orc.coeff({"x": -1}, 0).is_zero()


def test_y_series_weight_filter(vir1):
    orc = y_series(vir1.adjoint, vir1.omega, vir1.omega, "x")
    # coefficient of x^e lives in weight 4+e exactly
    v = orc.coeff({"x": -1}, 3)
    assert v == vir1.adjoint.L(-2 + 1 - 1 + 1, vir1.omega) * 0 + vir1.mode(vir1.omega, 0, vir1.omega)
    assert orc.coeff({"x": -1}, 4).is_zero()
