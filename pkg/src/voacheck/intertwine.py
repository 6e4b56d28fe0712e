"""Intertwining-operator candidates, point-z intertwining maps, and their checks.

An `IntertwinerCandidate` is a mode family ``(w1)_n : W2 -> W3`` subject to
lower truncation and the weight bookkeeping
``wt((w1)_n w2) = wt w1 + wt w2 - n - 1``.  The candidate is *quasi* when it
satisfies the commutator formula, and a genuine intertwining operator when it
further satisfies the three-variable Jacobi identity; `classify` separates
the two, which is the point of this module.

A `PzMapCandidate` is the map-valued avatar ``F: W1 (x) W2 -> completion of
W3`` at a positive rational point z (branch fixed so that z-powers stay
rational).  `io_to_map` / `map_to_io` realize the exact correspondence
between the two pictures.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable

from .formal import (
    X0, X1, X2, CheckReport, DeltaKernelKind, FuncOracle, LaurentVector,
    Window, Witness, binomial_coeff, delta_kernel, derivative,
    equal_on_window, kernel_times_series, residue, scale_and_add,
    shift_oracle, sum_oracles, zero_oracle,
)
from .lie_gv import LinearMap, gv_ge0_orbit, unit_orbit_certificate
from .spaces import CutoffEscape, GradedSpace, SlicedVec, Vec, ZERO, neg_one_pow
from .voa import (
    ModuleData, VertexAlgebra, check_ideal, quotient_module, y_series,
    y_series_on_completion, _factorial, _homog,
)


class IntertwinerCandidate:
    """Mode family of type (W3; W1 W2) with exact, truncation-aware access."""

    def __init__(self, m1: ModuleData, m2: ModuleData, m3: ModuleData,
                 mode_fn: Callable[[str, int, str], Vec], name: str = "Y"):
        alg = m1.algebra
        assert m2.algebra is alg and m3.algebra is alg
        self.algebra = alg
        self.m1, self.m2, self.m3 = m1, m2, m3
        self._mode_fn = mode_fn
        self._memo: dict[tuple[str, int, str], Vec] = {}
        self.name = name

    def mode_basis(self, w1name: str, n: int, w2name: str) -> Vec:
        r = self.m1.space.weight(w1name) + self.m2.space.weight(w2name) - n - 1
        if r < self.m3.space.min_weight:
            return ZERO
        if r > self.m3.space.cutoff and not self.m3.space.complete:
            raise CutoffEscape(f"candidate mode at weight {r} beyond cutoff",
                               space=self.m3.space.name, weight=r)
        key = (w1name, n, w2name)
        if key not in self._memo:
            out = self._mode_fn(w1name, n, w2name)
            got = self.m3.space.weight_of(out)
            assert got is None or got == r, "candidate weight bookkeeping broken"
            self._memo[key] = out
        return self._memo[key]

    def mode(self, w1: Vec | str, n: int, w2: Vec | str) -> Vec:
        w1 = Vec.unit(w1) if isinstance(w1, str) else w1
        w2 = Vec.unit(w2) if isinstance(w2, str) else w2
        out = ZERO
        for a, ca in w1.items():
            for b, cb in w2.items():
                out = out + self.mode_basis(a, n, b) * (ca * cb)
        return out

    def trunc_bound(self, w1=None, w2=None) -> int:
        s1, s2 = self.m1.space, self.m2.space
        a = max((s1.weights[k] for k in (Vec.unit(w1) if isinstance(w1, str)
                                         else w1).support()), default=0) \
            if w1 is not None else max(s1.weights.values())
        b = max((s2.weights[k] for k in (Vec.unit(w2) if isinstance(w2, str)
                                         else w2).support()), default=0) \
            if w2 is not None else max(s2.weights.values())
        return a + b - self.m3.space.min_weight


def candidate_from_modes(m1, m2, m3, modes: dict[tuple[str, int, str], Vec],
                         name="table") -> IntertwinerCandidate:
    """Candidate backed by a finite mode table (absent entries are zero)."""
    def mode_fn(a, n, b):
        return modes.get((a, n, b), ZERO)
    return IntertwinerCandidate(m1, m2, m3, mode_fn, name=name)


def zero_candidate(m1, m2, m3) -> IntertwinerCandidate:
    return candidate_from_modes(m1, m2, m3, {}, name="0")


# ---------------------------------------------------------------------------
# transpose fields and the theta construction
# ---------------------------------------------------------------------------

def transpose_field(m: ModuleData, w: Vec | str, v: Vec | str) -> LaurentVector:
    """Y^t(w, x) v = e^{x L(-1)} Y(v, -x) w over the representable exponents."""
    w = Vec.unit(w) if isinstance(w, str) else w
    v = Vec.unit(v) if isinstance(v, str) else v
    space = m.space
    out = LaurentVector(("x",), space)
    for ww, wp in _homog(space, w):
        for wv, vp in _homog(m.algebra.space, v):
            lo = space.min_weight - wv - ww
            hi = space.cutoff - wv - ww
            stop = m.trunc_bound(vp, wp)
            for e in range(lo, hi + 1):
                # coefficient of x^e: sum_j (1/j!)(-1)^{k+1} L(-1)^j (v_k w),
                # k = j - e - 1, cut by the truncation k < stop
                total = ZERO
                for j in range(0, max(0, stop + e + 1)):
                    k = j - e - 1
                    term = m.mode(vp, k, wp)
                    for _ in range(j):
                        term = m.L(-1, term)
                    total = total + term * Fraction(neg_one_pow(k + 1), _factorial(j))
                out.add_term((e,), total)
    return out


def transpose_candidate(m: ModuleData) -> IntertwinerCandidate:
    """The transpose intertwining operator of type (W; W V)."""
    ident = LinearMap(m, m, {b: Vec.unit(b) for b in m.space.order}, name="id")
    return from_theta(ident)


def from_theta(theta: LinearMap) -> IntertwinerCandidate:
    """Candidate Y(w, x) v = e^{x L(-1)} Y_2(v, -x) theta(w) of type (W2; W1 V).

    theta must preserve weights (any nonnegative-part homomorphism does).
    """
    m1, m2 = theta.source, theta.target
    alg = m1.algebra
    for b, img in theta.matrix.items():
        got = m2.space.weight_of(img)
        assert got is None or got == m1.space.weight(b), \
            "theta must preserve weights"

    def mode_fn(w1name, n, vname):
        # coefficient of x^{-n-1} in e^{xL(-1)} Y_2(v, -x) theta(w1)
        tw = theta(w1name)
        if tw.is_zero():
            return ZERO
        e = -n - 1
        total = ZERO
        stop = m2.trunc_bound(Vec.unit(vname), tw)
        for j in range(0, max(0, stop + e + 1)):
            k = j - e - 1
            term = m2.mode(vname, k, tw)
            for _ in range(j):
                term = m2.L(-1, term)
            total = total + term * Fraction(neg_one_pow(k + 1), _factorial(j))
        return total

    return IntertwinerCandidate(m1, alg.adjoint, m2, mode_fn,
                                name=f"Y^t.{theta.name}")


def theta_f_builder(alg: VertexAlgebra, f: dict[str, Fraction] | None = None) -> LinearMap:
    """theta_f : V / (nonneg-orbit ideal) -> V, w -> f(w) 1.

    Errors out when the orbit reaches the vacuum (nonzero central charge
    regime), since the quotient is then zero.
    """
    cert = unit_orbit_certificate(alg)
    if cert is not None:
        raise ValueError(f"orbit covers the algebra; certificate {cert}")
    orbit = gv_ge0_orbit(alg.adjoint)
    span = [Vec(dict(row)) for _, row, _ in orbit.echelon.rows]
    ideal_rep = check_ideal(alg, span)
    if not ideal_rep.passed:
        raise ValueError("orbit span is not ideal-closed at this cutoff")
    quo = quotient_module(alg, alg.adjoint, span, name="V/orbit")
    if f is None:
        f = {alg.unit: Fraction(1)}
    unknown = set(f) - set(quo.space.order)
    if unknown:
        raise ValueError(f"functional uses non-quotient coordinates {unknown}")
    matrix = {b: Vec.unit(alg.unit) * f.get(b, Fraction(0))
              for b in quo.space.order}
    return LinearMap(quo, alg.adjoint, matrix, name="theta_f")


# ---------------------------------------------------------------------------
# candidate series
# ---------------------------------------------------------------------------

def candidate_series(c: IntertwinerCandidate, w1, w2, var: str) -> FuncOracle:
    """Y(w1, var) w2 as a one-variable oracle valued in W3."""
    w1 = Vec.unit(w1) if isinstance(w1, str) else w1
    w2 = Vec.unit(w2) if isinstance(w2, str) else w2
    p1 = _homog(c.m1.space, w1)
    p2 = _homog(c.m2.space, w2)
    lo = -c.trunc_bound(w1, w2)

    def fn(exps, q):
        e = exps[var]
        out = ZERO
        for a, u in p1:
            for b, v in p2:
                if a + b + e == q:
                    out = out + c.mode(u, -e - 1, v)
        return out

    def ranges(variable, q):
        pts = [q - a - b for a, _ in p1 for b, _ in p2]
        if not pts:
            return (0, 0)
        return (max(lo, min(pts)), max(pts))

    return FuncOracle((var,), c.m3.space, fn, ranges, name="cand")


def series_module_after_candidate(c, v, var_v, w1, var_c, w2) -> FuncOracle:
    """Y_3(v, var_v) Y(w1, var_c) w2."""
    v = Vec.unit(v) if isinstance(v, str) else v
    w1 = Vec.unit(w1) if isinstance(w1, str) else w1
    w2 = Vec.unit(w2) if isinstance(w2, str) else w2
    pv = _homog(c.algebra.space, v)
    p1 = _homog(c.m1.space, w1)
    p2 = _homog(c.m2.space, w2)
    lo_c = -c.trunc_bound(w1, w2)
    glo_v = -c.m3.trunc_bound(v, None)

    def fn(exps, q):
        ev, ec = exps[var_v], exps[var_c]
        out = ZERO
        for a, u in pv:
            for b1, x1 in p1:
                for b2, x2 in p2:
                    if a + b1 + b2 + ev + ec != q:
                        continue
                    inner = c.mode(x1, -ec - 1, x2)
                    if not inner.is_zero():
                        out = out + c.m3.mode(u, -ev - 1, inner)
        return out

    def ranges(variable, q):
        if variable == var_c:
            hi = None
            if c.m3.space.complete:
                hi = max(c.m3.space.max_stored - b1 - b2
                         for b1, _ in p1 for b2, _ in p2)
            return (lo_c, hi)
        return (glo_v, max(q - a - c.m3.space.min_weight for a, _ in pv))

    return FuncOracle((var_v, var_c), c.m3.space, fn, ranges, name="Y3.cand")


def series_candidate_after_module(c, v, var_v, w1, var_c, w2) -> FuncOracle:
    """Y(w1, var_c) Y_2(v, var_v) w2."""
    v = Vec.unit(v) if isinstance(v, str) else v
    w1 = Vec.unit(w1) if isinstance(w1, str) else w1
    w2 = Vec.unit(w2) if isinstance(w2, str) else w2
    pv = _homog(c.algebra.space, v)
    p1 = _homog(c.m1.space, w1)
    p2 = _homog(c.m2.space, w2)
    lo_v = -c.m2.trunc_bound(v, w2)
    glo_c = -c.trunc_bound(w1, None)

    def fn(exps, q):
        ev, ec = exps[var_v], exps[var_c]
        out = ZERO
        for a, u in pv:
            for b1, x1 in p1:
                for b2, x2 in p2:
                    if a + b1 + b2 + ev + ec != q:
                        continue
                    inner = c.m2.mode(u, -ev - 1, x2)
                    if not inner.is_zero():
                        out = out + c.mode(x1, -ec - 1, inner)
        return out

    def ranges(variable, q):
        if variable == var_v:
            hi = None
            if c.m2.space.complete:
                hi = max(c.m2.space.max_stored - a - b2
                         for a, _ in pv for b2, _ in p2)
            return (lo_v, hi)
        return (glo_c, max(q - b1 - c.m3.space.min_weight for b1, _ in p1))

    return FuncOracle((var_c, var_v), c.m3.space, fn, ranges, name="cand.Y2")


def series_candidate_of_image(c, v, var0, w1, var_c, w2) -> FuncOracle:
    """Y(Y_1(v, var0) w1, var_c) w2: the iterate side."""
    v = Vec.unit(v) if isinstance(v, str) else v
    w1 = Vec.unit(w1) if isinstance(w1, str) else w1
    w2 = Vec.unit(w2) if isinstance(w2, str) else w2
    pv = _homog(c.algebra.space, v)
    p1 = _homog(c.m1.space, w1)
    p2 = _homog(c.m2.space, w2)
    lo_0 = -c.m1.trunc_bound(v, w1)
    glo_c = -c.trunc_bound(None, w2)

    def fn(exps, q):
        e0, ec = exps[var0], exps[var_c]
        out = ZERO
        for a, u in pv:
            for b1, x1 in p1:
                for b2, x2 in p2:
                    if a + b1 + b2 + e0 + ec != q:
                        continue
                    t = c.m1.mode(u, -e0 - 1, x1)
                    if not t.is_zero():
                        out = out + c.mode(t, -ec - 1, x2)
        return out

    def ranges(variable, q):
        if variable == var0:
            hi = None
            if c.m1.space.complete:
                hi = max(c.m1.space.max_stored - a - b1
                         for a, _ in pv for b1, _ in p1)
            return (lo_0, hi)
        return (glo_c, max(q - c.m1.space.min_weight - b2 for b2, _ in p2))

    return FuncOracle((var0, var_c), c.m3.space, fn, ranges, name="cand(Y1)")


# ---------------------------------------------------------------------------
# candidate checks
# ---------------------------------------------------------------------------

def check_io_commutator(c: IntertwinerCandidate, v, w1, w2, win: Window) -> CheckReport:
    """Commutator formula for candidates; report left side is the residue of
    the iterate term."""
    sub = Window(tuple(t for t in win.exps if t[0] != X0), win.weights)
    jr = delta_kernel(DeltaKernelKind.JACOBI_RIGHT)
    left = residue(kernel_times_series(
        jr, series_candidate_of_image(c, v, X0, w1, X2, w2)), X0)
    right = scale_and_add(-1, series_candidate_after_module(c, v, X1, w1, X2, w2),
                          series_module_after_candidate(c, v, X1, w1, X2, w2))
    return equal_on_window(left, right, sub, name="io_commutator")


def check_io_jacobi(c: IntertwinerCandidate, v, w1, w2, win: Window) -> CheckReport:
    """Three-variable Jacobi identity for candidates; left side of the report
    is the iterate (associativity) term."""
    jl = delta_kernel(DeltaKernelKind.JACOBI_LEFT)
    jm = delta_kernel(DeltaKernelKind.JACOBI_MIDDLE)
    jr = delta_kernel(DeltaKernelKind.JACOBI_RIGHT)
    left = kernel_times_series(jr, series_candidate_of_image(c, v, X0, w1, X2, w2))
    t1 = kernel_times_series(jl, series_module_after_candidate(c, v, X1, w1, X2, w2))
    t2 = kernel_times_series(jm, series_candidate_after_module(c, v, X1, w1, X2, w2))
    right = scale_and_add(-1, t2, t1)
    return equal_on_window(left, right, win, name="io_jacobi")


def check_L_minus1(c: IntertwinerCandidate, w1, win: Window) -> CheckReport:
    """d/dx Y(w1, x) = Y(L(-1) w1, x), coefficientwise against every W2 basis
    vector."""
    name = "io_L(-1)"
    try:
        lw1 = c.m1.L(-1, w1)
    except CutoffEscape as esc:
        return CheckReport(name, "inconclusive", win, detail=esc.detail)
    skipped = 0
    checked = 0
    for b2 in c.m2.space.order:
        left = derivative(candidate_series(c, w1, b2, "x"), "x")
        right = candidate_series(c, lw1, b2, "x")
        rep = equal_on_window(left, right, win, name=name)
        if rep.failed:
            rep.detail = (rep.detail + f" (against {b2})").strip()
            return rep
        if rep.verdict == "inconclusive":
            skipped += 1
        else:
            checked += 1
    if not checked:
        return CheckReport(name, "inconclusive", win,
                           detail="every probe escaped the cutoff")
    detail = f"{checked} second arguments" + \
        (f", {skipped} skipped at cutoff" if skipped else "")
    return CheckReport(name, "pass", win, detail=detail)


def check_truncation(c: IntertwinerCandidate, probe: int = 6) -> CheckReport:
    """Modes vanish above the structural truncation bound (spot probe)."""
    for a in c.m1.space.order:
        for b in c.m2.space.order:
            n0 = c.trunc_bound(a, b)
            for n in range(n0, n0 + probe):
                if not c.mode_basis(a, n, b).is_zero():
                    return CheckReport("io_truncation", "fail",
                                       witness=Witness({"n": n}, 0,
                                                       c.mode_basis(a, n, b), ZERO))
    return CheckReport("io_truncation", "pass")


def safe_triples(c: IntertwinerCandidate, win: Window) -> tuple[list, int]:
    """Basis triples (v, w1, w2) whose inner series stay within every
    truncated cutoff over the window; the second component counts the
    triples dropped."""
    his = {v: hi for v, _, hi in win.exps}
    out, skipped = [], 0
    for v in c.algebra.space.order:
        wv = c.algebra.space.weight(v)
        for b1 in c.m1.space.order:
            w1 = c.m1.space.weight(b1)
            for b2 in c.m2.space.order:
                w2 = c.m2.space.weight(b2)
                ok = True
                if not c.m3.space.complete and \
                        w1 + w2 + his.get(X2, 0) > c.m3.space.cutoff:
                    ok = False
                if not c.m2.space.complete and \
                        wv + w2 + his.get(X1, 0) > c.m2.space.cutoff:
                    ok = False
                if not c.m1.space.complete and \
                        wv + w1 + his.get(X0, 0) > c.m1.space.cutoff:
                    ok = False
                if ok:
                    out.append((v, b1, b2))
                else:
                    skipped += 1
    return out, skipped


def classify(c: IntertwinerCandidate, win: Window,
             triples: list | None = None) -> tuple[str, dict]:
    """Run truncation, L(-1), commutator and Jacobi checks over a spanning set.

    Returns (verdict, reports): verdict is "intertwining", "quasi-only",
    "neither", or "inconclusive"; quasi-only requires every commutator check
    to pass together with a definite Jacobi failure witness.  With no
    explicit spanning set, all basis triples that fit the cutoffs are used.
    """
    reports: dict = {}
    if triples is None:
        triples, skipped = safe_triples(c, win)
        if skipped:
            reports["skipped_triples"] = skipped
    reports["truncation"] = check_truncation(c)
    if reports["truncation"].failed:
        return "neither", reports
    one_var = Window((("x", win.exps[0][1], win.exps[0][2]),), win.weights)
    for b1 in c.m1.space.order:
        rep = check_L_minus1(c, b1, one_var)
        reports[f"L(-1)@{b1}"] = rep
        if rep.failed:
            return "neither", reports
        if rep.verdict == "inconclusive":
            return "inconclusive", reports
    jac_witness = None
    for (v, b1, b2) in triples:
        com = check_io_commutator(c, v, b1, b2, win)
        reports[f"commutator@{v},{b1},{b2}"] = com
        if com.failed:
            return "neither", reports
        if com.verdict == "inconclusive":
            return "inconclusive", reports
        jac = check_io_jacobi(c, v, b1, b2, win)
        reports[f"jacobi@{v},{b1},{b2}"] = jac
        if jac.failed and jac_witness is None:
            jac_witness = (v, b1, b2, jac.witness)
        if jac.verdict == "inconclusive":
            return "inconclusive", reports
    if jac_witness is None:
        return "intertwining", reports
    reports["jacobi_witness"] = jac_witness
    return "quasi-only", reports


def apply_mode(m: ModuleData, v, k: int, oracle: FuncOracle) -> FuncOracle:
    """Compose a module mode with an oracle: coefficientwise v_k applied."""
    v = Vec.unit(v) if isinstance(v, str) else v
    pv = _homog(m.algebra.space, v)

    def fn(exps, q):
        out = ZERO
        for a, u in pv:
            inner = oracle.coeff(exps, q - a + k + 1)
            if not inner.is_zero():
                out = out + m.mode(u, k, inner)
        return out

    def ranges(var, q):
        los, his = [], []
        for a, _ in pv:
            lo, hi = oracle.exp_range(var, q - a + k + 1)
            los.append(lo)
            his.append(hi)
        lo = None if any(x is None for x in los) else min(los)
        hi = None if any(x is None for x in his) else max(his)
        return (lo, hi)

    return FuncOracle(oracle.variables, m.space, fn, ranges, name="mode.oracle")


def yh_action_check(c: IntertwinerCandidate, v, n: int, w1, win: Window) -> CheckReport:
    """Equivariance of the field-valued assignment w1 -> Y(w1, x).

    The mode action on a field phi(x) is
    v_n phi(x) = Res_{x1} ((x1-x)^n Y_3(v,x1) phi(x)
                           - (-x+x1)^n phi(x) Y_2(v,x1)),
    and the check compares it with Y(v_n w1, x) on the window, per W2 basis
    vector.
    """
    assert n >= 0
    name = "yh_action"
    v = Vec.unit(v) if isinstance(v, str) else v
    w1 = Vec.unit(w1) if isinstance(w1, str) else w1
    try:
        vnw1 = c.m1.mode(v, n, w1)
    except CutoffEscape as esc:
        return CheckReport(name, "inconclusive", win, detail=esc.detail)
    skipped = 0
    checked = 0
    for b2 in c.m2.space.order:
        phi = candidate_series(c, w1, b2, "x")
        terms = []
        escaped = False
        for i in range(0, n + 1):
            coef = binomial_coeff(n, i)
            # (x1-x)^n term: x^i picks v_{n-i} composed with phi
            t1 = shift_oracle(apply_mode(c.m3, v, n - i, phi), "x", i)
            terms.append(scale_and_add(coef * (-1) ** i, t1,
                                       zero_oracle(("x",), c.m3.space)))
            # (-x+x1)^n term: phi applied after v_i on w2
            try:
                viw2 = c.m2.mode(v, i, b2)
            except CutoffEscape:
                escaped = True
                break
            t2 = shift_oracle(candidate_series(c, w1, viw2, "x"), "x", n - i)
            terms.append(scale_and_add(-coef * (-1) ** (n + i), t2,
                                       zero_oracle(("x",), c.m3.space)))
        if escaped:
            skipped += 1
            continue
        left = sum_oracles(terms)
        right = candidate_series(c, vnw1, b2, "x")
        rep = equal_on_window(left, right, win, name=name)
        if rep.failed:
            rep.detail = (rep.detail + f" (against {b2})").strip()
            return rep
        if rep.verdict == "inconclusive":
            skipped += 1
        else:
            checked += 1
    if not checked:
        return CheckReport(name, "inconclusive", win,
                           detail="every probe escaped the cutoff")
    detail = f"{checked} second arguments" + \
        (f", {skipped} skipped at cutoff" if skipped else "")
    return CheckReport(name, "pass", win, detail=detail)


# ---------------------------------------------------------------------------
# point-z intertwining maps
# ---------------------------------------------------------------------------

class PzMapCandidate:
    """Linear map W1 (x) W2 -> completion of W3 at a positive rational z."""

    def __init__(self, m1: ModuleData, m2: ModuleData, m3: ModuleData,
                 z: Fraction, values: dict[tuple[str, str], SlicedVec],
                 name: str = "F"):
        self.m1, self.m2, self.m3 = m1, m2, m3
        self.algebra = m1.algebra
        self.z = Fraction(z)
        if self.z <= 0:
            raise ValueError("the point z must be a positive rational")
        self.values = values
        self.name = name

    def value(self, w1: Vec | str, w2: Vec | str) -> SlicedVec:
        w1 = Vec.unit(w1) if isinstance(w1, str) else w1
        w2 = Vec.unit(w2) if isinstance(w2, str) else w2
        out = None
        for a, ca in w1.items():
            for b, cb in w2.items():
                term = self.values.get((a, b))
                if term is None:
                    term = SlicedVec(self.m3.space, {},
                                     known=range(self.m3.space.min_weight,
                                                 self.m3.space.cutoff + 1))
                term = term * (ca * cb)
                out = term if out is None else out + term
        if out is None:
            out = SlicedVec(self.m3.space, {},
                            known=range(self.m3.space.min_weight,
                                        self.m3.space.cutoff + 1))
        return out


def io_to_map(c: IntertwinerCandidate, z: Fraction) -> PzMapCandidate:
    """F(w1 (x) w2) = sum_n (w1)_n w2 z^{-n-1} as weight-sliced data."""
    z = Fraction(z)
    if z <= 0:
        raise ValueError("the point z must be a positive rational")
    values: dict[tuple[str, str], SlicedVec] = {}
    s3 = c.m3.space
    for b1 in c.m1.space.order:
        for b2 in c.m2.space.order:
            tot = c.m1.space.weight(b1) + c.m2.space.weight(b2)
            slices, known = {}, set()
            for q in range(s3.min_weight, s3.cutoff + 1):
                n = tot - q - 1
                try:
                    vec = c.mode_basis(b1, n, b2) * z ** (-n - 1)
                except CutoffEscape:
                    continue
                known.add(q)
                if not vec.is_zero():
                    slices[q] = vec
            values[(b1, b2)] = SlicedVec(s3, slices, known=known)
    return PzMapCandidate(c.m1, c.m2, c.m3, z, values, name=f"F[{c.name}]")


def map_to_io(f: PzMapCandidate) -> IntertwinerCandidate:
    """Modes recovered by weight projection, scaled by z^{n+1}."""
    z = f.z

    def mode_fn(b1, n, b2):
        q = f.m1.space.weight(b1) + f.m2.space.weight(b2) - n - 1
        return f.value(b1, b2).get_slice(q) * z ** (n + 1)

    return IntertwinerCandidate(f.m1, f.m2, f.m3, mode_fn, name=f"Y[{f.name}]")


# -- series built from a map candidate --------------------------------------

def f_image_series(f: PzMapCandidate, v, w1, w2, var: str, side: int) -> FuncOracle:
    """F(Y_1(v,var)w1 (x) w2) for side=1, F(w1 (x) Y_2(v,var)w2) for side=2."""
    v = Vec.unit(v) if isinstance(v, str) else v
    w1 = Vec.unit(w1) if isinstance(w1, str) else w1
    w2 = Vec.unit(w2) if isinstance(w2, str) else w2
    acted = f.m1 if side == 1 else f.m2
    target = w1 if side == 1 else w2
    lo = -acted.trunc_bound(v, target)

    def fn(exps, q):
        e = exps[var]
        img = acted.mode(v, -e - 1, target)
        if img.is_zero():
            return ZERO
        val = f.value(img, w2) if side == 1 else f.value(w1, img)
        return val.get_slice(q)

    def ranges(variable, q):
        # acted-image weight is wt v + wt target + e, bounded by the space
        hi = None
        if acted.space.complete:
            wv = min((f.algebra.space.weights[k] for k in v.support()), default=0)
            wt = min((acted.space.weights[k] for k in target.support()), default=0)
            hi = acted.space.max_stored - wv - wt
        return (lo, hi)

    return FuncOracle((var,), f.m3.space, fn, ranges, name=f"F(Y{side})")


def check_im_commutator(f: PzMapCandidate, v, w1, w2, win: Window) -> CheckReport:
    """Point-z commutator condition; report left side is the residue term."""
    sub = Window(tuple(t for t in win.exps if t[0] == X1), win.weights)
    pl = delta_kernel(DeltaKernelKind.PZ_LEFT, f.z)
    left = residue(kernel_times_series(pl, f_image_series(f, v, w1, w2, X0, 1)), X0)
    t_target = y_series_on_completion(f.m3, v, f.value(w1, w2), X1)
    t_w2 = f_image_series(f, v, w1, w2, X1, 2)
    right = scale_and_add(-1, t_w2, t_target)
    return equal_on_window(left, right, sub, name="im_commutator")


def check_im_jacobi(f: PzMapCandidate, v, w1, w2, win: Window) -> CheckReport:
    """Point-z Jacobi identity; report left side is the single-kernel term."""
    pl = delta_kernel(DeltaKernelKind.PZ_LEFT, f.z)
    pm = delta_kernel(DeltaKernelKind.PZ_MIDDLE, f.z)
    pr = delta_kernel(DeltaKernelKind.PZ_RIGHT, f.z)
    left = kernel_times_series(pr, y_series_on_completion(f.m3, v, f.value(w1, w2), X1))
    t1 = kernel_times_series(pl, f_image_series(f, v, w1, w2, X0, 1))
    t2 = kernel_times_series(pm, f_image_series(f, v, w1, w2, X1, 2))
    right = scale_and_add(1, t1, t2)
    return equal_on_window(left, right, win, name="im_jacobi")
