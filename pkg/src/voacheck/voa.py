"""Concrete vertex (operator) algebras, their modules, and module-level checks.

Two builder families:

* a vertex algebra on a finite-dimensional commutative associative algebra
  with identity (``Y(a,x)b = ab``, vacuum ``1``, ``omega = 0``), which is a
  complete space, and
* a weight-truncated vacuum Virasoro algebra of arbitrary central charge,
  with PBW monomial basis ``L(-m1)...L(-mk)1`` (``m1 >= ... >= mk >= 2``) and
  mode actions reconstructed from the Virasoro bracket.

Module-level identities (commutator formula, Jacobi identity, weak
associativity) are evaluated as coefficient oracles and delegated to
`formal.equal_on_window`; there are no identity-specific shortcuts.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

from .exactla import EchelonBasis, add_vec, contains_vec
from .formal import (
    X0, X1, X2, CheckReport, DeltaKernelKind, FuncOracle, LaurentVector,
    Window, Witness, binomial_coeff, delta_kernel, equal_on_window,
    kernel_times_series, residue, scale_and_add,
)
from .spaces import (
    CutoffEscape, GradedSpace, SlicedVec, Vec, ZERO, dual_space,
    neg_one_pow, pair_name,
)


class SpecValidationError(ValueError):
    """A structure-constant table violated an algebra axiom."""

    def __init__(self, axiom: str, witness: tuple, message: str):
        super().__init__(message)
        self.axiom = axiom
        self.witness = witness


@dataclass
class CommAssocSpec:
    """Commutative associative algebra with identity, by structure constants."""

    basis: tuple[str, ...]
    unit: str
    products: dict[tuple[str, str], Vec]

    def product(self, a: str, b: str) -> Vec:
        if (a, b) in self.products:
            return self.products[(a, b)]
        if (b, a) in self.products:
            return self.products[(b, a)]
        return ZERO

    def mult(self, u: Vec, v: Vec) -> Vec:
        out = ZERO
        for a, ca in u.items():
            for b, cb in v.items():
                out = out + self.product(a, b) * (ca * cb)
        return out

    def validate(self):
        if self.unit not in self.basis:
            raise SpecValidationError("unit", (self.unit,),
                                      f"unit {self.unit!r} is not a basis element")
        for (a, b) in self.products:
            for x in (a, b):
                if x not in self.basis:
                    raise SpecValidationError("basis", (x,),
                                              f"unknown basis element {x!r}")
        for a in self.basis:
            for b in self.basis:
                if (a, b) in self.products and (b, a) in self.products:
                    if self.products[(a, b)] != self.products[(b, a)]:
                        raise SpecValidationError(
                            "commutativity", (a, b),
                            f"mul {a} {b} != mul {b} {a}")
        for a in self.basis:
            got = self.product(self.unit, a)
            if got != Vec.unit(a):
                raise SpecValidationError("unit", (self.unit, a),
                                          f"unit*{a} = {got!r}, expected {a}")
        for a in self.basis:
            for b in self.basis:
                for c in self.basis:
                    left = self.mult(self.product(a, b), Vec.unit(c))
                    right = self.mult(Vec.unit(a), self.product(b, c))
                    if left != right:
                        raise SpecValidationError(
                            "associativity", (a, b, c),
                            f"({a}*{b})*{c} != {a}*({b}*{c}): {left!r} vs {right!r}")


class ModuleData:
    """Graded action of a vertex algebra on a named-basis space.

    `mode_fn(uname, n, wname)` supplies the raw basis action; the `mode`
    wrapper adds bilinearity, the weight bookkeeping
    ``wt(u_n w) = wt u + wt w - n - 1`` (used both as a zero filter and a
    running assertion), and cutoff escapes on truncated spaces.
    """

    def __init__(self, algebra: "VertexAlgebra", space: GradedSpace,
                 mode_fn: Callable[[str, int, str], Vec], name: str = ""):
        self.algebra = algebra
        self.space = space
        self._mode_fn = mode_fn
        self._memo: dict[tuple[str, int, str], Vec] = {}
        self.name = name or space.name

    def mode_basis(self, uname: str, n: int, wname: str) -> Vec:
        r = self.algebra.space.weight(uname) + self.space.weight(wname) - n - 1
        if r < self.space.min_weight:
            return ZERO
        if r > self.space.cutoff and not self.space.complete:
            # nothing at weight r is representable; degree-incomplete slices
            # within the stored range still go to the (exact, escaping) action
            raise CutoffEscape(f"weight {r} beyond cutoff {self.space.cutoff} "
                               f"of {self.space.name}",
                               space=self.space.name, weight=r)
        key = (uname, n, wname)
        if key not in self._memo:
            out = self._mode_fn(uname, n, wname)
            got = self.space.weight_of(out)
            assert got is None or got == r, \
                f"weight bookkeeping broken: {uname}_{n} {wname} has weight {got} != {r}"
            self._memo[key] = out
        return self._memo[key]

    def mode(self, u: Vec | str, n: int, w: Vec | str) -> Vec:
        u = Vec.unit(u) if isinstance(u, str) else u
        w = Vec.unit(w) if isinstance(w, str) else w
        out = ZERO
        for a, ca in u.items():
            for b, cb in w.items():
                out = out + self.mode_basis(a, n, b) * (ca * cb)
        return out

    def trunc_bound(self, u: Vec | str | None = None, w: Vec | str | None = None) -> int:
        """N with u_n w = 0 for all n >= N (from bounded-below grading)."""
        aw = self.algebra.space.weights
        mw = self.space.weights
        wu = max((aw[k] for k in (Vec.unit(u) if isinstance(u, str) else u).support()),
                 default=0) if u is not None else max(aw.values())
        ww = max((mw[k] for k in (Vec.unit(w) if isinstance(w, str) else w).support()),
                 default=0) if w is not None else max(mw.values())
        return wu + ww - self.space.min_weight

    def L(self, k: int, w: Vec | str) -> Vec:
        """Virasoro operator L(k) = omega_(k+1) acting through this module."""
        return self.mode(self.algebra.omega, k + 1, w)


class VertexAlgebra:
    """(V, Y, 1, omega) with an exact, possibly truncated, mode table."""

    def __init__(self, space: GradedSpace, unit: str, omega: Vec,
                 central_charge: Fraction, mode_fn, d_fn, truncated: bool,
                 name: str = "V"):
        self.space = space
        self.unit = unit
        self.omega = omega
        self.central_charge = Fraction(central_charge)
        self.truncated = truncated
        self.name = name
        self._d_fn = d_fn
        self.adjoint = ModuleData(self, space, mode_fn, name=f"{name}.adjoint")

    def mode(self, u, n, v) -> Vec:
        return self.adjoint.mode(u, n, v)

    def trunc_bound(self, u=None, v=None) -> int:
        return self.adjoint.trunc_bound(u, v)

    def d(self, v: Vec | str) -> Vec:
        """Canonical derivation D v = v_{-2} 1."""
        v = Vec.unit(v) if isinstance(v, str) else v
        out = ZERO
        for b, cb in v.items():
            out = out + self._d_fn(b) * cb
        return out

    def unit_vec(self) -> Vec:
        return Vec.unit(self.unit)

    def module(self, space, mode_fn, name="") -> ModuleData:
        return ModuleData(self, space, mode_fn, name=name)


# ---------------------------------------------------------------------------
# builder: commutative associative algebra with identity
# ---------------------------------------------------------------------------

def build_comm_assoc_va(spec: CommAssocSpec) -> VertexAlgebra:
    """All weights zero, u_n v = delta_{n,-1} uv, c = 0, D = 0, omega = 0."""
    spec.validate()
    space = GradedSpace("V", {b: 0 for b in spec.basis}, spec.basis, complete=True)

    def mode_fn(uname, n, wname):
        if n == -1:
            return spec.product(uname, wname)
        return ZERO

    alg = VertexAlgebra(space, spec.unit, ZERO, Fraction(0), mode_fn,
                        lambda b: ZERO, truncated=False, name="comm_assoc")
    alg.comm_spec = spec
    return alg


def comm2_spec() -> CommAssocSpec:
    """The 2-dimensional algebra with basis {1, a}, a*a = 1."""
    one, a = "1", "a"
    return CommAssocSpec(
        basis=(one, a), unit=one,
        products={(one, one): Vec.unit(one), (one, a): Vec.unit(a),
                  (a, a): Vec.unit(one)})


# ---------------------------------------------------------------------------
# builder: truncated vacuum Virasoro algebra
# ---------------------------------------------------------------------------

def _partitions_min2(n: int):
    """Partitions of n into parts >= 2, descending."""
    def rec(rest, maxpart):
        if rest == 0:
            yield ()
            return
        for p in range(min(rest, maxpart), 1, -1):
            for tail in rec(rest - p, p):
                yield (p,) + tail
    yield from rec(n, n)


def part_name(parts: tuple[int, ...]) -> str:
    if not parts:
        return "1"
    return "".join(f"L(-{m})" for m in parts) + "1"


class _VirasoroEngine:
    """PBW straightening of L(n)-words against the descending-order basis."""

    def __init__(self, c: Fraction, cutoff: int):
        self.c = Fraction(c)
        self.cutoff = cutoff
        self.parts_of: dict[str, tuple[int, ...]] = {}
        names, weights = [], {}
        for w in range(0, cutoff + 1):
            if w == 1:
                continue
            for p in _partitions_min2(w):
                nm = part_name(p)
                names.append(nm)
                weights[nm] = w
                self.parts_of[nm] = p
        self.space = GradedSpace("V_vir", weights, names, complete=False,
                                 cutoff=cutoff)
        self._L_memo: dict[tuple[int, str], Vec] = {}
        self._mode_memo: dict[tuple[str, int, str], Vec] = {}

    # -- straightening: L(n) on basis monomials ---------------------------

    def L_basis(self, n: int, wname: str) -> Vec:
        key = (n, wname)
        if key in self._L_memo:
            return self._L_memo[key]
        parts = self.parts_of[wname]
        target = self.space.weight(wname) - n
        if target < 0:
            out = self._L_raw(n, parts)
            assert out.is_zero()
        elif target > self.cutoff:
            raise CutoffEscape(f"L({n}) on {wname} leaves cutoff {self.cutoff}",
                               space="V_vir", weight=target)
        else:
            out = self._L_raw(n, parts)
        self._L_memo[key] = out
        return out

    def _L_raw(self, n: int, parts: tuple[int, ...]) -> Vec:
        if not parts:
            if n >= -1:
                return ZERO
            return Vec.unit(part_name((-n,)))
        m1, rest = parts[0], parts[1:]
        if n <= -m1:
            # sorted prepend
            return Vec.unit(part_name((-n,) + parts))
        rest_vec = Vec.unit(part_name(rest))
        # L(n) L(-m1) = L(-m1) L(n) + (n+m1) L(n-m1) + delta_{n,m1} (n^3-n)/12 c
        out = self.L_vec(-m1, self.L_vec(n, rest_vec))
        out = out + self.L_vec(n - m1, rest_vec) * (n + m1)
        if n == m1:
            out = out + rest_vec * (Fraction(n ** 3 - n, 12) * self.c)
        return out

    def L_vec(self, n: int, v: Vec) -> Vec:
        out = ZERO
        for b, cb in v.items():
            out = out + self.L_basis(n, b) * cb
        return out

    # -- general modes via the iterate formula ----------------------------

    def mode_basis(self, uname: str, n: int, wname: str, allow_skew=True) -> Vec:
        key = (uname, n, wname)
        if key in self._mode_memo:
            return self._mode_memo[key]
        try:
            out = self._mode_iterate(uname, n, wname)
        except CutoffEscape:
            # the iterate recursion can need L(-1) on a top-of-cutoff vector
            # even when the result fits; skew-symmetry avoids that
            if not allow_skew:
                raise
            out = self._mode_skew(uname, n, wname)
        self._mode_memo[key] = out
        return out

    def _mode_skew(self, uname: str, n: int, wname: str) -> Vec:
        # u_n w = sum_j (-1)^{n+j+1} (1/j!) L(-1)^j (w_{n+j} u)
        out = ZERO
        stop = self.space.weight(wname) + self.space.weight(uname)
        j = 0
        while n + j < stop:
            term = self.mode_basis(wname, n + j, uname, allow_skew=False)
            for _ in range(j):
                term = self.L_vec(-1, term)
            out = out + term * Fraction(neg_one_pow(n + j + 1), _factorial(j))
            j += 1
        return out

    def _mode_iterate(self, uname: str, n: int, wname: str) -> Vec:
        parts = self.parts_of[uname]
        if not parts:
            out = Vec.unit(wname) if n == -1 else ZERO
        else:
            m1, rest = parts[0], parts[1:]
            m = -m1 + 1                     # u = omega_m u' with u' the tail
            rest_name = part_name(rest)
            wt_rest = self.space.weight(rest_name)
            wt_w = self.space.weight(wname)
            out = ZERO
            # (omega_m u')_n w =
            #   sum_i (-1)^i C(m,i) [ omega_{m-i} (u'_{n+i} w)
            #                         - (-1)^m u'_{m+n-i} (omega_i w) ]
            i = 0
            n_stop = wt_rest + wt_w - self.space.min_weight   # u'_k w = 0, k >= stop
            while n + i < n_stop:
                coef = binomial_coeff(m, i) * (-1) ** i
                if coef:
                    inner = self.mode_basis_vec(rest_name, n + i, Vec.unit(wname))
                    if not inner.is_zero():
                        out = out + self.L_vec(m - i - 1, inner) * coef
                i += 1
            sign = Fraction(neg_one_pow(m))
            i = 0
            while i <= wt_w + 1:                              # omega_i w = 0 beyond
                coef = binomial_coeff(m, i) * (-1) ** i * sign
                if coef:
                    inner = self.L_basis(i - 1, wname)
                    if not inner.is_zero():
                        out = out - self.mode_vec(rest_name, m + n - i, inner) * coef
                i += 1
        return out

    def mode_basis_vec(self, uname: str, n: int, w: Vec) -> Vec:
        out = ZERO
        for b, cb in w.items():
            out = out + self.mode_basis(uname, n, b) * cb
        return out

    def mode_vec(self, uname: str, n: int, w: Vec) -> Vec:
        return self.mode_basis_vec(uname, n, w)


def build_virasoro_va(c: Fraction, cutoff: int) -> VertexAlgebra:
    """Weight-truncated vacuum Virasoro vertex operator algebra.

    Basis: PBW monomials of total weight <= cutoff.  Out-of-cutoff results
    raise CutoffEscape rather than silently vanishing.
    """
    if cutoff < 4:
        raise ValueError("cutoff too small to exercise the conformal vector")
    eng = _VirasoroEngine(Fraction(c), cutoff)
    omega = Vec.unit(part_name((2,)))

    def mode_fn(uname, n, wname):
        return eng.mode_basis(uname, n, wname)

    def d_fn(bname):
        return eng.L_basis(-1, bname)

    alg = VertexAlgebra(eng.space, "1", omega, Fraction(c), mode_fn, d_fn,
                        truncated=True, name=f"virasoro(c={c})")
    alg.engine = eng
    # vacuum / creation sanity at build time
    for nm in eng.space.order:
        assert alg.mode("1", -1, nm) == Vec.unit(nm)
        assert alg.mode("1", 0, nm).is_zero()
    for n in range(-1, cutoff + 2):
        assert eng.L_basis(n, "1").is_zero()
    assert eng.L_basis(-2, "1") == omega
    return alg


# ---------------------------------------------------------------------------
# module builders
# ---------------------------------------------------------------------------

def comm_assoc_module(alg: VertexAlgebra, space: GradedSpace,
                      action: Mapping[tuple[str, str], Vec], name="W") -> ModuleData:
    """Module over a comm-assoc vertex algebra: v_n w = delta_{n,-1} v.w."""
    def mode_fn(uname, n, wname):
        if n != -1:
            return ZERO
        if uname == alg.unit:
            return Vec.unit(wname)
        return action.get((uname, wname), ZERO)
    return ModuleData(alg, space, mode_fn, name=name)


def tensor_product_module(alg: VertexAlgebra, m1: ModuleData, m2: ModuleData,
                          name="W1xW2") -> ModuleData:
    """W1 (x) W2 with the right-factor action v.(w1 (x) w2) = w1 (x) (v.w2)."""
    names, order = {}, []
    for b1 in m1.space.order:
        for b2 in m2.space.order:
            nm = pair_name(b1, b2)
            names[nm] = m1.space.weight(b1) + m2.space.weight(b2)
            order.append(nm)
    space = GradedSpace(name, names, order,
                        complete=m1.space.complete and m2.space.complete,
                        cutoff=m1.space.cutoff + m2.space.cutoff)

    def mode_fn(uname, n, wname):
        b1, b2 = wname.split("(x)", 1)
        img = m2.mode_basis(uname, n, b2)
        return Vec({pair_name(b1, k): c for k, c in img.items()})

    return ModuleData(alg, space, mode_fn, name=name)


def trivial_module_killing(alg: VertexAlgebra, killed: set[str],
                           gen: str = "w", name="Cw") -> ModuleData:
    """One-dimensional candidate: Y(1,x)w = w and Y(v,x)w = 0 for v in `killed`.

    Deliberately *not* a module in general; it is the minimal commutator-only
    counterexample candidate.
    """
    space = GradedSpace(name, {gen: 0}, (gen,), complete=True)

    def mode_fn(uname, n, wname):
        if uname == alg.unit:
            return Vec.unit(wname) if n == -1 else ZERO
        return ZERO

    assert killed <= set(alg.space.order)
    return ModuleData(alg, space, mode_fn, name=name)


def quotient_module(alg: VertexAlgebra, m: ModuleData,
                    ideal_vectors: list[Vec], name="W/I") -> ModuleData:
    """Quotient of a module by a mode-closed homogeneous subspace.

    The caller is responsible for mode-closure (see `check_ideal`); the
    quotient basis is the complement of the echelon pivots.
    """
    order = {b: i for i, b in enumerate(m.space.order)}
    ech = EchelonBasis(key_order=lambda k: (order[k],))
    for v in ideal_vectors:
        m.space.weight_of(v)        # homogeneity check
        add_vec(ech, v)
    pivots = {p for p, _, _ in ech.rows}
    keep = [b for b in m.space.order if b not in pivots]
    space = GradedSpace(name, {b: m.space.weight(b) for b in keep}, keep,
                        complete=m.space.complete, cutoff=m.space.cutoff)

    def project(v: Vec) -> Vec:
        res, _ = ech.reduce(dict(v.items()))
        return Vec(res)

    def mode_fn(uname, n, wname):
        return project(m.mode_basis(uname, n, wname))

    md = ModuleData(alg, space, mode_fn, name=name)
    md.project = project
    return md


# ---------------------------------------------------------------------------
# mode series as coefficient oracles
# ---------------------------------------------------------------------------

def _homog(space: GradedSpace, v: Vec) -> list[tuple[int, Vec]]:
    return list(space.decompose(v).items())


def y_series(m: ModuleData, v: Vec | str, w: Vec | str, var: str) -> FuncOracle:
    """Y_M(v, var) w as a one-variable oracle."""
    v = Vec.unit(v) if isinstance(v, str) else v
    w = Vec.unit(w) if isinstance(w, str) else w
    vparts = _homog(m.algebra.space, v)
    wparts = _homog(m.space, w)
    lo = -m.trunc_bound(v, w)

    def fn(exps, q):
        e = exps[var]
        out = ZERO
        for wv, vp in vparts:
            for ww, wp in wparts:
                if wv + ww + e == q:
                    out = out + m.mode(vp, -e - 1, wp)
        return out

    def ranges(variable, q):
        pts = [q - wv - ww for wv, _ in vparts for ww, _ in wparts]
        if not pts:
            return (0, 0)
        return (max(lo, min(pts)), max(pts))

    return FuncOracle((var,), m.space, fn, ranges, name=f"Y({var})")


def y_series_on_completion(m: ModuleData, v: Vec | str, target: SlicedVec,
                           var: str) -> FuncOracle:
    """Y_M(v, var) applied to an element of the algebraic completion."""
    v = Vec.unit(v) if isinstance(v, str) else v
    vparts = _homog(m.algebra.space, v)
    glo = -m.trunc_bound(v, None)

    def fn(exps, q):
        e = exps[var]
        out = ZERO
        for wv, vp in vparts:
            p = q - wv - e
            sl = target.get_slice(p)
            if not sl.is_zero():
                out = out + m.mode(vp, -e - 1, sl)
        return out

    def ranges(variable, q):
        his = [q - wv - m.space.min_weight for wv, _ in vparts]
        lo = glo
        if m.space.complete:
            lows = [q - wv - m.space.max_stored for wv, _ in vparts]
            lo = max(lo, min(lows)) if lows else lo
        return (lo, max(his) if his else 0)

    return FuncOracle((var,), m.space, fn, ranges, name=f"Y({var})completion")


def y_series_nested(m: ModuleData, a: Vec | str, var_a: str, b: Vec | str,
                    var_b: str, w: Vec | str) -> FuncOracle:
    """Y_M(a, var_a) Y_M(b, var_b) w (a acts second)."""
    a = Vec.unit(a) if isinstance(a, str) else a
    b = Vec.unit(b) if isinstance(b, str) else b
    w = Vec.unit(w) if isinstance(w, str) else w
    aspace = m.algebra.space
    aparts, bparts = _homog(aspace, a), _homog(aspace, b)
    wparts = _homog(m.space, w)
    lo_b = -m.trunc_bound(b, w)
    glo_a = -m.trunc_bound(a, None)

    def fn(exps, q):
        ea, eb = exps[var_a], exps[var_b]
        out = ZERO
        for wa, ap in aparts:
            for wb, bp in bparts:
                for ww, wp in wparts:
                    if wa + wb + ww + ea + eb != q:
                        continue
                    inner = m.mode(bp, -eb - 1, wp)
                    if not inner.is_zero():
                        out = out + m.mode(ap, -ea - 1, inner)
        return out

    def ranges(variable, q):
        if variable == var_b:
            hi = None
            if m.space.complete:
                hi = max(m.space.max_stored - wb - ww
                         for wb, _ in bparts for ww, _ in wparts)
            return (lo_b, hi)
        his = [q - wa - m.space.min_weight for wa, _ in aparts]
        return (glo_a, max(his))

    return FuncOracle((var_a, var_b), m.space, fn, ranges, name="YY")


def y_series_iterate(m: ModuleData, u: Vec | str, var0: str, v: Vec | str,
                     var2: str, w: Vec | str) -> FuncOracle:
    """Y_M(Y(u, var0) v, var2) w: the iterate (associativity) side."""
    u = Vec.unit(u) if isinstance(u, str) else u
    v = Vec.unit(v) if isinstance(v, str) else v
    w = Vec.unit(w) if isinstance(w, str) else w
    aspace = m.algebra.space
    uparts, vparts = _homog(aspace, u), _homog(aspace, v)
    wparts = _homog(m.space, w)
    lo_0 = -m.algebra.trunc_bound(u, v)
    glo_2 = -m.trunc_bound(None, w)

    def fn(exps, q):
        e0, e2 = exps[var0], exps[var2]
        out = ZERO
        for wu, up in uparts:
            for wv, vp in vparts:
                for ww, wp in wparts:
                    if wu + wv + ww + e0 + e2 != q:
                        continue
                    t = m.algebra.mode(up, -e0 - 1, vp)
                    if not t.is_zero():
                        out = out + m.mode(t, -e2 - 1, wp)
        return out

    def ranges(variable, q):
        if variable == var0:
            hi = None
            if aspace.complete:
                hi = max(aspace.max_stored - wu - wv
                         for wu, _ in uparts for wv, _ in vparts)
            return (lo_0, hi)
        his = [q - aspace.min_weight - ww for ww, _ in wparts]
        return (glo_2, max(his))

    return FuncOracle((var0, var2), m.space, fn, ranges, name="Y(Y)")


# ---------------------------------------------------------------------------
# Y^o and the contragredient action
# ---------------------------------------------------------------------------

def _l1_tower(m: ModuleData, v: Vec) -> list[Vec]:
    """[v, L(1)v, L(1)^2 v / 2!, ...] until zero (weights drop each step)."""
    alg = m.algebra
    tower = [v]
    cur = v
    k = 1
    while True:
        cur = alg.adjoint.L(1, cur)
        if cur.is_zero():
            break
        tower.append(cur * Fraction(1, _factorial(k)))
        k += 1
    return tower


def _factorial(k: int) -> int:
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


def y_o_series(m: ModuleData, v: Vec | str, w: Vec | str, var: str) -> FuncOracle:
    """Y^o(v, var) w = Y(e^{x L(1)} (-x^-2)^{L(0)} v, x^-1) w, lazily.

    For homogeneous v the coefficient at x^e is the finite sum over m of
    (-1)^{wt v} (1/m!) (L(1)^m v)_k w with m + k = e + 2 wt v - 1; it is
    homogeneous of weight wt w - wt v - e.
    """
    v = Vec.unit(v) if isinstance(v, str) else v
    w = Vec.unit(w) if isinstance(w, str) else w
    vparts = _homog(m.algebra.space, v)
    wparts = _homog(m.space, w)
    towers = {wv: _l1_tower(m, vp) for wv, vp in vparts}

    def fn(exps, q):
        e = exps[var]
        out = ZERO
        for wv, vp in vparts:
            sign = Fraction(neg_one_pow(wv))
            for ww, wp in wparts:
                if ww - wv - e != q:
                    continue
                for mm, vm in enumerate(towers[wv]):
                    k = e + 2 * wv - 1 - mm
                    out = out + m.mode(vm, k, wp) * sign
        return out

    def ranges(variable, q):
        # e = wt w - wt v - q per homogeneous component
        pts = [ww - wv - q for wv, _ in vparts for ww, _ in wparts]
        if not pts:
            return (0, 0)
        return (min(pts), max(pts))

    return FuncOracle((var,), m.space, fn, ranges, name="Y^o")


def y_o_action(m: ModuleData, v: Vec | str, w: Vec | str) -> LaurentVector:
    """Materialized Y^o(v,x)w over every exponent whose slice is representable."""
    v = Vec.unit(v) if isinstance(v, str) else v
    w = Vec.unit(w) if isinstance(w, str) else w
    oracle = y_o_series(m, v, w, "x")
    aspace, mspace = m.algebra.space, m.space
    wv_max = max(aspace.weight(k) for k in v.support())
    wv_min = min(aspace.weight(k) for k in v.support())
    ww_max = max(mspace.weight(k) for k in w.support())
    ww_min = min(mspace.weight(k) for k in w.support())
    lo = ww_min - wv_max - mspace.cutoff
    hi = ww_max - wv_min - mspace.min_weight
    out = LaurentVector(("x",), mspace)
    for e in range(lo, hi + 1):
        total = ZERO
        for q in range(mspace.min_weight, mspace.cutoff + 1):
            total = total + oracle.coeff({"x": e}, q)
        out.add_term((e,), total)
    return out


def contragredient_series(m: ModuleData, v: Vec | str, alpha: Vec,
                          var: str) -> FuncOracle:
    """Y'(v, var) alpha on the restricted dual: <Y' a, w> = <a, Y^o w>.

    alpha is a functional written over the dual basis (names ``b'``).
    """
    v = Vec.unit(v) if isinstance(v, str) else v
    dspace = dual_space(m.space)
    yo = {b: y_o_series(m, v, b, var) for b in m.space.order}
    vparts = _homog(m.algebra.space, v)

    def pair(a: Vec, x: Vec) -> Fraction:
        return sum((a.get(k + "'") * c for k, c in x.items()), Fraction(0))

    def fn(exps, q):
        out = {}
        for b in m.space.order:
            if m.space.weight(b) != q:
                continue
            total = Fraction(0)
            for p in {m.space.weight(k[:-1]) for k in alpha.support()}:
                total += pair(alpha, yo[b].coeff(exps, p))
            if total:
                out[b + "'"] = total
        return Vec(out)

    def ranges(variable, q):
        # <a, Y^o(v,x)b> with wt b = q: exponent pinned per homogeneous piece
        pts = []
        for k in alpha.support():
            p = m.space.weight(k[:-1])
            for wv, _ in vparts:
                pts.append(q - wv - p)
        if not pts:
            return (0, 0)
        return (min(pts), max(pts))

    return FuncOracle((var,), dspace, fn, ranges, name="Y'")


# ---------------------------------------------------------------------------
# module identity checkers
# ---------------------------------------------------------------------------

def check_module_commutator(m: ModuleData, u, v, w, win: Window) -> CheckReport:
    """Commutator formula on a window.

    Left side of the report is the residue of the iterate term, right side is
    [Y(u,x1), Y(v,x2)] w.
    """
    sub = Window(tuple(t for t in win.exps if t[0] != X0), win.weights)
    jr = delta_kernel(DeltaKernelKind.JACOBI_RIGHT)
    left = residue(kernel_times_series(jr, y_series_iterate(m, u, X0, v, X2, w)), X0)
    right = scale_and_add(-1, y_series_nested(m, v, X2, u, X1, w),
                          y_series_nested(m, u, X1, v, X2, w))
    return equal_on_window(left, right, sub, name="module_commutator")


def check_module_jacobi(m: ModuleData, u, v, w, win: Window) -> CheckReport:
    """Module Jacobi identity on a window.

    Left side of the report is the iterate (associativity) term
    x2^-1 delta((x1-x0)/x2) Y(Y(u,x0)v,x2)w; right side is the pair of
    double-action terms.
    """
    jl = delta_kernel(DeltaKernelKind.JACOBI_LEFT)
    jm = delta_kernel(DeltaKernelKind.JACOBI_MIDDLE)
    jr = delta_kernel(DeltaKernelKind.JACOBI_RIGHT)
    left = kernel_times_series(jr, y_series_iterate(m, u, X0, v, X2, w))
    t1 = kernel_times_series(jl, y_series_nested(m, u, X1, v, X2, w))
    t2 = kernel_times_series(jm, y_series_nested(m, v, X2, u, X1, w))
    right = scale_and_add(-1, t2, t1)
    return equal_on_window(left, right, win, name="module_jacobi")


def check_associativity_formula(m: ModuleData, u, v, w, p: int, q: int) -> CheckReport:
    """Weak associativity: u_p v_q w against the double binomial sum."""
    u = Vec.unit(u) if isinstance(u, str) else u
    v = Vec.unit(v) if isinstance(v, str) else v
    w = Vec.unit(w) if isinstance(w, str) else w
    name = "associativity_formula"
    try:
        lhs = m.mode(u, p, m.mode(v, q, w))
        l = max(0, m.trunc_bound(u, w))
        mm = max(0, m.trunc_bound(v, w) - 1 - q)
        rhs = ZERO
        for i in range(mm + 1):
            for j in range(l + 1):
                coef = binomial_coeff(p - l, i) * binomial_coeff(l, j)
                if not coef:
                    continue
                t = m.algebra.mode(u, p - l - i + j, v)
                if not t.is_zero():
                    rhs = rhs + m.mode(t, q + l + i - j, w) * coef
    except CutoffEscape as esc:
        return CheckReport(name, "inconclusive", detail=f"cutoff escape: {esc.detail}")
    if lhs == rhs:
        return CheckReport(name, "pass", detail=f"p={p}, q={q}")
    return CheckReport(name, "fail",
                       witness=Witness({"p": p, "q": q}, 0, lhs, rhs))


def check_ideal(alg: VertexAlgebra, vectors: list[Vec]) -> CheckReport:
    """Closure of a homogeneous span under all in-cutoff modes and under D."""
    name = "ideal_closure"
    space = alg.space
    order = {b: i for i, b in enumerate(space.order)}
    ech = EchelonBasis(key_order=lambda k: (order[k],))
    gens = []
    for v in vectors:
        if v.is_zero():
            continue
        space.weight_of(v)
        if add_vec(ech, v):
            gens.append(v)
    skipped = 0
    for s in gens:
        ws = space.weight_of(s)
        for b in space.order:
            wu = space.weight(b)
            n_lo = wu + ws - 1 - space.cutoff
            n_hi = alg.trunc_bound(b, s)
            for n in range(n_lo, n_hi):
                try:
                    img = alg.mode(b, n, s)
                except CutoffEscape:
                    skipped += 1
                    continue
                if not img.is_zero() and not contains_vec(ech, img):
                    return CheckReport(
                        name, "fail",
                        witness=Witness({"n": n}, space.weight_of(img) or 0,
                                        Vec.unit(b), img),
                        detail=f"{b}_{n} on a generator leaves the span")
        try:
            dimg = alg.d(s)
        except CutoffEscape:
            skipped += 1
            continue
        if not dimg.is_zero() and not contains_vec(ech, dimg):
            return CheckReport(name, "fail",
                               witness=Witness({"D": 1}, 0, s, dimg),
                               detail="D image leaves the span")
    detail = f"rank {ech.rank}" + (f", {skipped} out-of-cutoff probes skipped"
                                   if skipped else "")
    return CheckReport(name, "pass", detail=detail)
