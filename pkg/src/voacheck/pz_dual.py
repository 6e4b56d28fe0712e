"""The point-z dual machinery on (W1 (x) W2)*.

Functionals are exact vectors over the tensor-pair basis.  The two-variable
action on a functional is evaluated through the same delta-kernel products as
every other identity in the engine; its x0-residue gives the one-variable
actions.  On top of that: the compatibility condition, the compatible
subspace and its identification with the dual of the tensor product over the
underlying commutative algebra, the dual map of a point-z intertwining map
and its intertwining property, and the "largest weak module inside the full
dual" computation that exhibits non-compatible elements.

Subspace-level computations require finite-dimensional (complete) module
spaces; coefficientwise actions also work on truncated ones, escaping the
cutoff honestly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .exactla import nullspace, EchelonBasis, add_vec
from .formal import (
    X0, X1, CheckReport, DeltaKernelKind, FuncOracle, Window, Witness,
    delta_kernel, equal_on_window, invert_variable, kernel_times_series,
    residue, shift_oracle,
)
from .intertwine import PzMapCandidate, check_im_commutator, check_im_jacobi
from .spaces import (
    CutoffEscape, GradedSpace, Vec, ZERO, neg_one_pow, pair_dual_space,
    pair_name, split_pair_name,
)
from .voa import (
    ModuleData, VertexAlgebra, _factorial, _homog, y_series,
    y_series_on_completion, y_o_series,
)


def lam_apply(lam: Vec, w1: Vec, w2: Vec) -> Fraction:
    """<lam, w1 (x) w2> over the pair basis."""
    total = Fraction(0)
    for b1, c1 in w1.items():
        for b2, c2 in w2.items():
            total += lam.get(pair_name(b1, b2)) * c1 * c2
    return total


class TauContext:
    """Shared data for the two-variable and residue actions on functionals."""

    def __init__(self, m1: ModuleData, m2: ModuleData, z: Fraction):
        assert m1.algebra is m2.algebra
        self.algebra = m1.algebra
        self.m1, self.m2 = m1, m2
        self.z = Fraction(z)
        if self.z == 0:
            raise ValueError("z must be nonzero")
        self.dual = pair_dual_space(m1.space, m2.space)


def tau_extended(ctx: TauContext, v: Vec | str, lam: Vec) -> FuncOracle:
    """Action of the x0^-1 delta((x1-z)/x0) Y^o-kernel on lam, in (x0, x1).

    The coefficient at (e0, e1) is the functional
    (b1, b2) -> <lam, [PzLeft . Y1(v,x0)b1](e0,e1) (x) b2>
              + <lam, b1 (x) [PzMiddle . Y2(v,x1)b2](e0,e1)>.
    """
    v = Vec.unit(v) if isinstance(v, str) else v
    m1, m2, z = ctx.m1, ctx.m2, ctx.z
    pl = delta_kernel(DeltaKernelKind.PZ_LEFT, z)
    pm = delta_kernel(DeltaKernelKind.PZ_MIDDLE, z)
    prod1 = {b1: kernel_times_series(pl, y_series(m1, v, b1, X0))
             for b1 in m1.space.order}
    prod2 = {b2: kernel_times_series(pm, y_series(m2, v, b2, X1))
             for b2 in m2.space.order}
    vws = [w for w, _ in _homog(ctx.algebra.space, v)]

    def fn(exps, q):
        out = {}
        for b1 in m1.space.order:
            w1 = m1.space.weight(b1)
            for b2 in m2.space.order:
                w2 = m2.space.weight(b2)
                if w1 + w2 != q:
                    continue
                total = Fraction(0)
                his1 = [wv + w1 + exps[X0] for wv in vws]
                for q1 in range(m1.space.min_weight, max(his1, default=0) + 1):
                    vec = prod1[b1].coeff(exps, q1)
                    if not vec.is_zero():
                        total += lam_apply(lam, vec, Vec.unit(b2))
                his2 = [wv + w2 + exps[X1] for wv in vws]
                for q2 in range(m2.space.min_weight, max(his2, default=0) + 1):
                    vec = prod2[b2].coeff(exps, q2)
                    if not vec.is_zero():
                        total += lam_apply(lam, Vec.unit(b1), vec)
                if total:
                    out[pair_name(b1, b2)] = total
        return Vec(out)

    return FuncOracle((X0, X1), ctx.dual, fn, name="tau_ext")


def _conjugated_tower(m: ModuleData, v: Vec):
    """Expansion e^{x L(1)} (-x^-2)^{L(0)} v = sum c_m u_m x^{s_m}."""
    alg = m.algebra
    out = []
    for wv, vp in _homog(alg.space, v):
        sign = Fraction(neg_one_pow(wv))
        cur = vp
        k = 0
        while not cur.is_zero():
            out.append((cur * (sign * Fraction(1, _factorial(k))), k - 2 * wv))
            cur = alg.adjoint.L(1, cur)
            k += 1
    return out


def tau0_extended(ctx: TauContext, v: Vec | str, lam: Vec) -> FuncOracle:
    """The inverse-variable form of the two-variable action.

    Kernels carry x1^-1: both right-hand terms are built by inverting x1 of
    the corresponding straight-variable products, with the conjugated algebra
    element expanded as a finite x1-family.
    """
    v = Vec.unit(v) if isinstance(v, str) else v
    m1, m2, z = ctx.m1, ctx.m2, ctx.z
    pl = delta_kernel(DeltaKernelKind.PZ_LEFT, z)
    pm = delta_kernel(DeltaKernelKind.PZ_MIDDLE, z)
    tower = _conjugated_tower(m1, v)

    prod1 = {}
    for b1 in m1.space.order:
        pieces = []
        for (u, s) in tower:
            base = kernel_times_series(pl, y_series(m1, u, b1, X0))
            pieces.append((shift_oracle(invert_variable(base, X1), X1, s), u))
        prod1[b1] = pieces
    prod2 = {b2: invert_variable(
        kernel_times_series(pm, invert_variable(y_o_series(m2, v, b2, X1), X1)), X1)
        for b2 in m2.space.order}
    vws = [w for w, _ in _homog(ctx.algebra.space, v)]

    def fn(exps, q):
        out = {}
        for b1 in m1.space.order:
            w1 = m1.space.weight(b1)
            for b2 in m2.space.order:
                w2 = m2.space.weight(b2)
                if w1 + w2 != q:
                    continue
                total = Fraction(0)
                for piece, u in prod1[b1]:
                    uws = [w for w, _ in _homog(ctx.algebra.space, u)]
                    hi = max((wu + w1 + exps[X0] for wu in uws), default=0)
                    for q1 in range(m1.space.min_weight, hi + 1):
                        vec = piece.coeff(exps, q1)
                        if not vec.is_zero():
                            total += lam_apply(lam, vec, Vec.unit(b2))
                # Y^o lowers weight as the exponent rises: slice range from
                # the full stored band
                for q2 in range(m2.space.min_weight, m2.space.cutoff + 1):
                    vec = prod2[b2].coeff(exps, q2)
                    if not vec.is_zero():
                        total += lam_apply(lam, Vec.unit(b1), vec)
                if total:
                    out[pair_name(b1, b2)] = total
        return Vec(out)

    return FuncOracle((X0, X1), ctx.dual, fn, name="tau0_ext")


def tau_o_restricted(ctx: TauContext, v: Vec | str, lam: Vec) -> FuncOracle:
    """Residue action in the Y^o form (one variable).

    Support certificates exist when the first-kernel residue term is empty
    (no nonnegative mode of v acts on W1, e.g. every commutative-associative
    case); otherwise the ranges stay uncertified and downstream products rely
    on cutoff escapes.
    """
    v = Vec.unit(v) if isinstance(v, str) else v
    ext = tau_extended(ctx, v, lam)
    base = residue(ext, X0)
    m1, m2 = ctx.m1, ctx.m2
    term1_zero = all(m1.trunc_bound(v, b1) <= 0 for b1 in m1.space.order)
    s2 = sorted({m2.space.weight(split_pair_name(k)[1]) for k in lam.support()})
    vws = [w for w, _ in _homog(ctx.algebra.space, v)]

    def ranges(var, q):
        if not term1_zero or not s2 or not vws:
            if not lam.support() or not vws:
                return (0, 0)
            return (None, None)
        # term 2 alone: f bounded by lam's W2-weight band
        los, his = [], []
        for b2 in m2.space.order:
            w2 = m2.space.weight(b2)
            for wv in vws:
                los.append(min(s2) - wv - w2)
                his.append(max(s2) - wv - w2)
        return (min(los), max(his))

    return FuncOracle((X1,), ctx.dual, base.coeff, ranges, name="tau_o_res")


def tau_restricted(ctx: TauContext, v: Vec | str, lam: Vec) -> FuncOracle:
    """Residue action in the plain form (one variable): the generating
    function of the monomial actions v(n)."""
    v = Vec.unit(v) if isinstance(v, str) else v
    ext = tau0_extended(ctx, v, lam)
    base = residue(ext, X0)
    m1, m2 = ctx.m1, ctx.m2
    term1_zero = all(m1.trunc_bound(v, b1) <= 0 for b1 in m1.space.order)
    s2 = sorted({m2.space.weight(split_pair_name(k)[1]) for k in lam.support()})
    vws = [w for w, _ in _homog(ctx.algebra.space, v)]

    def ranges(var, q):
        if not lam.support() or not vws:
            return (0, 0)
        if not term1_zero or not s2:
            return (None, None)
        los, his = [], []
        for b2 in m2.space.order:
            w2 = m2.space.weight(b2)
            for wv in vws:
                # the Y^o image at exponent f has weight w2 - wv - f, which
                # must land in lam's second-factor weight band
                los.append(w2 - wv - max(s2))
                his.append(w2 - wv - min(s2))
        return (min(los), max(his))

    return FuncOracle((X1,), ctx.dual, base.coeff, ranges, name="tau_res")


def tau_mode(ctx: TauContext, v: Vec | str, n: int, lam: Vec) -> Vec:
    """v(n) lam: the x^{-n-1} coefficient of the restricted action."""
    orc = tau_restricted(ctx, v, lam)
    out = ZERO
    for q in range(ctx.dual.min_weight, ctx.dual.max_stored + 1):
        out = out + orc.coeff({X1: -n - 1}, q)
    return out


def tau_module(ctx: TauContext, name="tau_dual") -> ModuleData:
    """(W1 (x) W2)* as a candidate module under the restricted action."""
    def mode_fn(uname, n, wname):
        return tau_mode(ctx, uname, n, Vec.unit(wname))
    return ModuleData(ctx.algebra, ctx.dual, mode_fn, name=name)


# ---------------------------------------------------------------------------
# compatibility
# ---------------------------------------------------------------------------

def check_lower_truncation(ctx: TauContext, lam: Vec, probe: int = 4) -> CheckReport:
    """Bounded probe that tau(Y_t(v,x))lam is lower truncated in x."""
    name = "tau_lower_truncation"
    for vname in ctx.algebra.space.order:
        orc = tau_restricted(ctx, vname, lam)
        lo_probe = -(ctx.algebra.space.max_stored + ctx.m2.space.max_stored
                     + probe + 1)
        for e in range(lo_probe, lo_probe + probe):
            for q in range(ctx.dual.min_weight, ctx.dual.max_stored + 1):
                try:
                    val = orc.coeff({X1: e}, q)
                except CutoffEscape as esc:
                    return CheckReport(name, "inconclusive", detail=esc.detail)
                if not val.is_zero():
                    return CheckReport(name, "fail",
                                       witness=Witness({X1: e}, q, val, ZERO))
    return CheckReport(name, "pass", detail=f"probed {probe} leading exponents")


def check_compatibility(ctx: TauContext, lam: Vec, win: Window) -> CheckReport:
    """The point-z compatibility condition on a window, for every algebra
    basis element, after the lower-truncation probe."""
    trunc = check_lower_truncation(ctx, lam)
    if trunc.verdict != "pass":
        trunc.detail = f"lower-truncation precondition: {trunc.detail}"
        return trunc
    pr = delta_kernel(DeltaKernelKind.PZ_RIGHT, ctx.z)
    for vname in ctx.algebra.space.order:
        left = tau_extended(ctx, vname, lam)
        right = kernel_times_series(pr, tau_o_restricted(ctx, vname, lam))
        rep = equal_on_window(left, right, win, name="compatibility")
        if rep.verdict != "pass":
            rep.detail = (rep.detail + f" (v={vname})").strip()
            return rep
    return CheckReport("compatibility", "pass", win)


def compatible_subspace(ctx: TauContext, win: Window | None = None):
    """Exact basis of the functionals satisfying the compatibility condition.

    Finite-dimensional (complete) module spaces only: solves the linear
    system collected from the compatibility defect over a window.
    """
    m1, m2 = ctx.m1, ctx.m2
    if not (m1.space.complete and m2.space.complete):
        raise ValueError("compatible subspace needs finite-dimensional modules")
    if win is None:
        win = Window(((X0, -2, 1), (X1, -2, 1)),
                     (ctx.dual.min_weight, ctx.dual.max_stored))
    keys = [pair_name(b1, b2) for b1 in m1.space.order for b2 in m2.space.order]
    pr = delta_kernel(DeltaKernelKind.PZ_RIGHT, ctx.z)
    rows = []
    for vname in ctx.algebra.space.order:
        defects = {}
        for k in keys:
            unit = Vec.unit(k)
            left = tau_extended(ctx, vname, unit)
            right = kernel_times_series(pr, tau_o_restricted(ctx, vname, unit))
            defects[k] = (left, right)
        for exps in win.points():
            for q in range(win.weights[0], win.weights[1] + 1):
                per_coord: dict[str, dict] = {}
                for k, (left, right) in defects.items():
                    diff = left.coeff(exps, q) - right.coeff(exps, q)
                    for coord, val in diff.items():
                        per_coord.setdefault(coord, {})[k] = val
                rows.extend(per_coord.values())
    return nullspace(rows, keys)


def tensor_over_algebra(ctx: TauContext):
    """W1 (x)_V W2: quotient by (v.w1)(x)w2 - w1(x)(v.w2); returns
    (basis names, projection)."""
    m1, m2 = ctx.m1, ctx.m2
    keys = [pair_name(b1, b2) for b1 in m1.space.order for b2 in m2.space.order]
    order = {k: i for i, k in enumerate(keys)}
    ech = EchelonBasis(key_order=lambda k: (order[k],))
    for vname in ctx.algebra.space.order:
        for b1 in m1.space.order:
            for b2 in m2.space.order:
                left = m1.mode(vname, -1, b1)
                right = m2.mode(vname, -1, b2)
                row: dict[str, Fraction] = {}
                for k, c in left.items():
                    row[pair_name(k, b2)] = row.get(pair_name(k, b2), Fraction(0)) + c
                for k, c in right.items():
                    row[pair_name(b1, k)] = row.get(pair_name(b1, k), Fraction(0)) - c
                row = {k: c for k, c in row.items() if c}
                if row:
                    ech.add(row)
    pivots = {p for p, _, _ in ech.rows}
    basis = [k for k in keys if k not in pivots]

    def project(vec: Vec) -> Vec:
        res, _ = ech.reduce(dict(vec.items()))
        return Vec(res)

    return basis, project


# ---------------------------------------------------------------------------
# the dual map of a point-z intertwining map
# ---------------------------------------------------------------------------

def f_vee(f: PzMapCandidate, alpha: Vec) -> Vec:
    """<F_dual(alpha), w1 (x) w2> = <alpha, F(w1 (x) w2)>.

    alpha is a functional over the graded dual basis (names ``b'``) of W3.
    """
    m3 = f.m3
    aw = {m3.space.weight(k[:-1]) for k in alpha.support()}
    out = {}
    for (b1, b2), sv in f.values.items():
        total = Fraction(0)
        for q in aw:
            sl = sv.get_slice(q)
            for k, c in sl.items():
                total += alpha.get(k + "'") * c
        if total:
            out[pair_name(b1, b2)] = total
    return Vec(out)


def check_fvee_intertwines(f: PzMapCandidate, ctx: TauContext,
                           win: Window) -> CheckReport:
    """F_dual intertwines the contragredient action on W3' with the residue
    action on the pair dual, for every algebra and dual basis element."""
    name = "fvee_intertwines"
    m1, m2, m3 = f.m1, f.m2, f.m3
    for vname in ctx.algebra.space.order:
        for a3 in m3.space.order:
            alpha = Vec.unit(a3 + "'")
            lam = f_vee(f, alpha)
            right = tau_o_restricted(ctx, vname, lam)

            def left_fn(exps, q, vname=vname, alpha=alpha, a3=a3):
                out = {}
                for b1 in m1.space.order:
                    for b2 in m2.space.order:
                        if m1.space.weight(b1) + m2.space.weight(b2) != q:
                            continue
                        orc = y_series_on_completion(m3, vname,
                                                     f.value(b1, b2), X1)
                        total = Fraction(0)
                        # <alpha, Y3(v,x1) F(b1 (x) b2)>
                        p = m3.space.weight(a3)
                        vec = orc.coeff(exps, p)
                        for k, c in vec.items():
                            total += alpha.get(k + "'") * c
                        if total:
                            out[pair_name(b1, b2)] = total
                return Vec(out)

            left = FuncOracle((X1,), ctx.dual, left_fn, name="fvee_lhs")
            rep = equal_on_window(left, right, win, name=name)
            if rep.verdict != "pass":
                rep.detail = (rep.detail + f" (v={vname}, alpha={a3}')").strip()
                return rep
    return CheckReport(name, "pass", win)


@dataclass
class PcorrespReport:
    """Both sides of the compatibility <-> Jacobi correspondence."""

    image_compatible: str
    jacobi: str
    commutator: str
    equivalent: bool
    details: dict

    @property
    def passed(self) -> bool:
        return self.equivalent

    def to_json(self) -> dict:
        return {"image_compatible": self.image_compatible,
                "jacobi": self.jacobi, "commutator": self.commutator,
                "equivalent": self.equivalent}


def check_pcorresp(f: PzMapCandidate, ctx: TauContext, win_im: Window,
                   win_comp: Window) -> PcorrespReport:
    """Image compatibility against the point-z Jacobi identity.

    Requires the commutator condition; reports the two sub-verdicts and
    whether they agree (negative-with-negative or positive-with-positive).
    """
    m1, m2, m3 = f.m1, f.m2, f.m3
    details: dict = {}
    com = "pass"
    jac = "pass"
    for vname in ctx.algebra.space.order:
        for b1 in m1.space.order:
            for b2 in m2.space.order:
                rep = check_im_commutator(f, Vec.unit(vname), Vec.unit(b1),
                                          Vec.unit(b2), win_im)
                if rep.verdict != "pass":
                    com = rep.verdict
                    details["commutator"] = rep
                rep = check_im_jacobi(f, Vec.unit(vname), Vec.unit(b1),
                                      Vec.unit(b2), win_im)
                if rep.verdict == "fail" and jac == "pass":
                    jac = "fail"
                    details["jacobi"] = rep
                elif rep.verdict == "inconclusive":
                    jac = "inconclusive"
    compat = "pass"
    for a3 in m3.space.order:
        alpha = Vec.unit(a3 + "'")
        lam = f_vee(f, alpha)
        rep = check_compatibility(ctx, lam, win_comp)
        if rep.verdict == "fail" and compat == "pass":
            compat = "fail"
            details["compatibility"] = rep
        elif rep.verdict == "inconclusive":
            compat = "inconclusive"
    ok = (compat == jac) and com == "pass" and "inconclusive" not in (compat, jac)
    return PcorrespReport(image_compatible=compat, jacobi=jac, commutator=com,
                          equivalent=ok, details=details)


# ---------------------------------------------------------------------------
# the warning space
# ---------------------------------------------------------------------------

@dataclass
class WarningSpaceReport:
    dim: int
    compatible_dim: int
    module_checks: list
    verdict: str

    @property
    def strictly_larger(self) -> bool:
        return self.dim > self.compatible_dim


def warning_space(ctx: TauContext, win: Window) -> WarningSpaceReport:
    """The largest weak module inside the full dual, in the
    finite-dimensional case: verifies that every dual-basis functional is
    lower truncated, satisfies the Jacobi identity under the residue action,
    and is fixed by the vacuum; compares with the compatible subspace."""
    m1, m2 = ctx.m1, ctx.m2
    if not (m1.space.complete and m2.space.complete):
        raise ValueError("warning space needs finite-dimensional modules")
    from .voa import check_module_jacobi
    tm = tau_module(ctx)
    checks = []
    verdict = "pass"
    for k in ctx.dual.order:
        lam = Vec.unit(k)
        rep = check_lower_truncation(ctx, lam)
        checks.append(rep)
        if rep.verdict != "pass":
            verdict = rep.verdict
        # vacuum acts as the identity
        if tau_mode(ctx, ctx.algebra.unit, -1, lam) != lam:
            checks.append(CheckReport("tau_unit", "fail",
                                      witness=Witness({}, 0, lam, ZERO)))
            verdict = "fail"
    for u in ctx.algebra.space.order:
        for v in ctx.algebra.space.order:
            for k in ctx.dual.order:
                rep = check_module_jacobi(tm, Vec.unit(u), Vec.unit(v),
                                          Vec.unit(k), win)
                if rep.verdict != "pass":
                    checks.append(rep)
                    verdict = rep.verdict
    compat = compatible_subspace(ctx)
    return WarningSpaceReport(dim=ctx.dual.dim, compatible_dim=len(compat),
                              module_checks=checks, verdict=verdict)
