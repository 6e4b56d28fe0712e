"""Formal-distribution calculus on finite windows.

A `CoefficientOracle` is a formal distribution in up to three formal
variables, valued in a graded space: a total, deterministic rule
``(exponent tuple, weight slice) -> Vec``.  Delta-function kernels, the
products of kernels with mode series, residues, and linear combinations are
all oracles; every identity checked by the engine is an equality of two
oracles on a finite window.

Expansion convention (fixed globally): a binomial ``(a - b)**n`` is always
expanded in nonnegative integral powers of the *second* displayed symbol.
When one slot holds the numeric point ``z``, the z-powers become exact
rational factors and the formal variable carries the series direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Mapping

from .spaces import SCALAR, CutoffEscape, GradedSpace, Vec, ZERO, neg_one_pow, scalar_vec

X0, X1, X2 = "x0", "x1", "x2"

# Guard for contractions that have no certified bound; genuine identities
# terminate far earlier (by truncation, grading, or an escape).
MAX_CONTRACTION_STEPS = 512


class NonConvergent(Exception):
    """A kernel/series product had no finite certified coefficient sum."""


def binomial_coeff(r, i: int) -> Fraction:
    """Generalized binomial r*(r-1)*...*(r-i+1)/i! for integer i >= 0."""
    if i < 0:
        raise ValueError("lower index must be nonnegative")
    num = Fraction(1)
    for k in range(i):
        num *= Fraction(r) - k
    den = 1
    for k in range(2, i + 1):
        den *= k
    return num / den


@dataclass(frozen=True)
class Window:
    """Finite verification window: exponent box per variable plus weight range."""

    exps: tuple[tuple[str, int, int], ...]
    weights: tuple[int, int]

    def __post_init__(self):
        for v, lo, hi in self.exps:
            if lo > hi:
                raise ValueError(f"empty exponent range for {v}")
        if self.weights[0] > self.weights[1]:
            raise ValueError("empty weight range")

    @staticmethod
    def cube(variables, lo: int, hi: int, wlo: int = 0, whi: int = 0) -> "Window":
        return Window(tuple((v, lo, hi) for v in variables), (wlo, whi))

    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _, _ in self.exps)

    def points(self):
        """Exponent dicts in lexicographic order of the declared variables."""
        def rec(i, acc):
            if i == len(self.exps):
                yield dict(acc)
                return
            v, lo, hi = self.exps[i]
            for e in range(lo, hi + 1):
                acc[v] = e
                yield from rec(i + 1, acc)
        yield from rec(0, {})

    def describe(self) -> str:
        box = ",".join(f"{v}:{lo}..{hi}" for v, lo, hi in self.exps)
        return f"[{box}; wt {self.weights[0]}..{self.weights[1]}]"


@dataclass
class Witness:
    exps: dict[str, int]
    weight: int
    left: Vec
    right: Vec

    def to_json(self) -> dict:
        return {"exps": dict(sorted(self.exps.items())), "weight": self.weight,
                "left": self.left.as_strings(), "right": self.right.as_strings()}


@dataclass
class CheckReport:
    """Outcome of one windowed check.

    verdict "pass" asserts equality on the whole window only; "fail" carries a
    reproducible first witness; "inconclusive" means a truncated computation
    escaped its cutoff before the window was decided.
    """

    name: str
    verdict: str                    # "pass" | "fail" | "inconclusive"
    window: Window | None = None
    witness: Witness | None = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def failed(self) -> bool:
        return self.verdict == "fail"

    def to_json(self) -> dict:
        out = {"name": self.name, "verdict": self.verdict}
        if self.window is not None:
            out["window"] = self.window.describe()
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        if self.detail:
            out["detail"] = self.detail
        return out


class CoefficientOracle:
    """Total evaluation rule (exponents, weight slice) -> exact vector."""

    variables: tuple[str, ...] = ()
    space: GradedSpace = SCALAR

    def coeff(self, exps: Mapping[str, int], weight: int) -> Vec:
        raise NotImplementedError

    def exp_range(self, var: str, weight: int) -> tuple[int | None, int | None]:
        """Certified support bounds (lo, hi) in one variable; None = no certificate.

        The coefficient is guaranteed zero outside any finite bound returned.
        """
        return (None, None)


class FuncOracle(CoefficientOracle):
    def __init__(self, variables, space, fn: Callable[[Mapping[str, int], int], Vec],
                 ranges: Callable[[str, int], tuple[int | None, int | None]] | None = None,
                 name: str = ""):
        self.variables = tuple(variables)
        self.space = space
        self._fn = fn
        self._ranges = ranges
        self.name = name

    def coeff(self, exps, weight):
        return self._fn(exps, weight)

    def exp_range(self, var, weight):
        if self._ranges is None:
            return (None, None)
        return self._ranges(var, weight)


def zero_oracle(variables, space) -> FuncOracle:
    return FuncOracle(variables, space, lambda e, q: ZERO,
                      ranges=lambda v, q: (0, 0), name="0")


def constant_oracle(variables, space, value: Vec) -> FuncOracle:
    """Oracle equal to `value` at exponent 0 in every variable, else 0."""
    def fn(exps, q):
        if any(exps[v] != 0 for v in variables):
            return ZERO
        return space.project(value, q) if space is not SCALAR else (
            value if q == 0 else ZERO)
    return FuncOracle(variables, space, fn, ranges=lambda v, q: (0, 0), name="const")


def scale_and_add(a, o1: CoefficientOracle, o2: CoefficientOracle) -> FuncOracle:
    """Pointwise a*o1 + o2."""
    if set(o1.variables) != set(o2.variables):
        raise ValueError("variable-set mismatch")
    if o1.space.name != o2.space.name:
        raise ValueError("value-space mismatch")
    a = Fraction(a)

    def fn(exps, q):
        return o1.coeff(exps, q) * a + o2.coeff(exps, q)

    def ranges(v, q):
        lo1, hi1 = o1.exp_range(v, q)
        lo2, hi2 = o2.exp_range(v, q)
        lo = None if (lo1 is None or lo2 is None) else min(lo1, lo2)
        hi = None if (hi1 is None or hi2 is None) else max(hi1, hi2)
        return (lo, hi)

    return FuncOracle(o1.variables, o1.space, fn, ranges, name="sum")


def sum_oracles(os: list[CoefficientOracle]) -> CoefficientOracle:
    acc = os[0]
    for o in os[1:]:
        acc = scale_and_add(1, acc, o)
    return acc


def residue(o: CoefficientOracle, var: str) -> FuncOracle:
    """Coefficient extraction at var**-1: the Res operator of the calculus."""
    if var not in o.variables:
        raise ValueError(f"{var} not among {o.variables}")
    rest = tuple(v for v in o.variables if v != var)

    def fn(exps, q):
        full = dict(exps)
        full[var] = -1
        return o.coeff(full, q)

    return FuncOracle(rest, o.space, fn,
                      ranges=lambda v, q: o.exp_range(v, q), name=f"Res_{var}")


def shift_oracle(o: CoefficientOracle, var: str, k: int) -> FuncOracle:
    """Multiplication by var**k."""
    def fn(exps, q):
        full = dict(exps)
        full[var] = exps[var] - k
        return o.coeff(full, q)

    def ranges(v, q):
        lo, hi = o.exp_range(v, q)
        if v != var:
            return (lo, hi)
        return (None if lo is None else lo + k, None if hi is None else hi + k)

    return FuncOracle(o.variables, o.space, fn, ranges, name=f"{var}^{k}*")


def invert_variable(o: CoefficientOracle, var: str) -> FuncOracle:
    """Substitution var -> var**-1 (exponent sign flip)."""
    def fn(exps, q):
        full = dict(exps)
        full[var] = -exps[var]
        return o.coeff(full, q)

    def ranges(v, q):
        lo, hi = o.exp_range(v, q)
        if v != var:
            return (lo, hi)
        return (None if hi is None else -hi, None if lo is None else -lo)

    return FuncOracle(o.variables, o.space, fn, ranges, name=f"{var}->1/{var}")


def derivative(o: CoefficientOracle, var: str) -> FuncOracle:
    """Formal d/d var."""
    def fn(exps, q):
        full = dict(exps)
        full[var] = exps[var] + 1
        return o.coeff(full, q) * (exps[var] + 1)

    def ranges(v, q):
        lo, hi = o.exp_range(v, q)
        if v != var:
            return (lo, hi)
        return (None if lo is None else lo - 1, None if hi is None else hi - 1)

    return FuncOracle(o.variables, o.space, fn, ranges, name=f"d/d{var}")


class DeltaKernelKind(Enum):
    """The delta-function kernels of the three-term and point-z identities."""

    JACOBI_LEFT = "jacobi_left"        # x0^-1 delta((x1-x2)/x0)
    JACOBI_MIDDLE = "jacobi_middle"    # x0^-1 delta((x2-x1)/(-x0))
    JACOBI_RIGHT = "jacobi_right"      # x2^-1 delta((x1-x0)/x2)
    PZ_LEFT = "pz_left"                # z^-1 delta((x1-x0)/z)
    PZ_MIDDLE = "pz_middle"            # x0^-1 delta((z-x1)/(-x0))
    PZ_RIGHT = "pz_right"              # x0^-1 delta((x1-z)/x0)
    PZ_INV = "pz_inv"                  # x0^-1 delta((x1^-1-z)/x0)


_JACOBI_KINDS = {DeltaKernelKind.JACOBI_LEFT, DeltaKernelKind.JACOBI_MIDDLE,
                 DeltaKernelKind.JACOBI_RIGHT}

# Support parametrization: every kernel exponent is affine in a free integer
# s and a nonnegative integer t, {var: (c0, cs, ct)}.
_PARAM = {
    DeltaKernelKind.JACOBI_LEFT:   {X0: (0, 1, 0), X1: (-1, -1, -1), X2: (0, 0, 1)},
    DeltaKernelKind.JACOBI_MIDDLE: {X0: (0, 1, 0), X1: (0, 0, 1), X2: (-1, -1, -1)},
    DeltaKernelKind.JACOBI_RIGHT:  {X0: (0, 0, 1), X1: (-1, -1, -1), X2: (0, 1, 0)},
    DeltaKernelKind.PZ_LEFT:       {X0: (0, 0, 1), X1: (0, 1, 0)},
    DeltaKernelKind.PZ_MIDDLE:     {X0: (0, 1, 0), X1: (0, 0, 1)},
    DeltaKernelKind.PZ_RIGHT:      {X0: (0, 1, 0), X1: (-1, -1, -1)},
    DeltaKernelKind.PZ_INV:        {X0: (0, 1, 0), X1: (1, 1, 1)},
}


class DeltaKernel(CoefficientOracle):
    """Scalar-valued delta kernel with closed-form coefficients.

    Coefficients follow the global expansion convention; for the point-z
    kinds the z-powers appear as exact rational factors.
    """

    def __init__(self, kind: DeltaKernelKind, z: Fraction | None = None):
        if kind in _JACOBI_KINDS:
            if z is not None:
                raise ValueError("z is only meaningful on the point-z kernels")
            self.variables = (X0, X1, X2)
        else:
            if z is None or Fraction(z) == 0:
                raise ValueError("point-z kernel needs a nonzero z")
            self.variables = (X0, X1)
        self.kind = kind
        self.z = None if z is None else Fraction(z)
        self.space = SCALAR

    def scalar_coeff(self, exps: Mapping[str, int]) -> Fraction:
        k = self.kind
        z = self.z
        if k in _JACOBI_KINDS:
            a, b, c = exps[X0], exps[X1], exps[X2]
            if a + b + c != -1:
                return Fraction(0)
            if k is DeltaKernelKind.JACOBI_LEFT:
                if c < 0:
                    return Fraction(0)
                return binomial_coeff(-a - 1, c) * (-1) ** c
            if k is DeltaKernelKind.JACOBI_MIDDLE:
                if b < 0:
                    return Fraction(0)
                return binomial_coeff(-a - 1, b) * neg_one_pow(a + b + 1)
            # JACOBI_RIGHT
            if a < 0:
                return Fraction(0)
            return binomial_coeff(-c - 1, a) * (-1) ** a
        a, b = exps[X0], exps[X1]
        if k is DeltaKernelKind.PZ_LEFT:
            if a < 0:
                return Fraction(0)
            return binomial_coeff(a + b, a) * (-1) ** a * z ** (-a - b - 1)
        if k is DeltaKernelKind.PZ_MIDDLE:
            if b < 0:
                return Fraction(0)
            return binomial_coeff(-a - 1, b) * neg_one_pow(a + b + 1) * z ** (-a - 1 - b)
        if k is DeltaKernelKind.PZ_RIGHT:
            i = -a - 1 - b
            if i < 0:
                return Fraction(0)
            return binomial_coeff(-a - 1, i) * (-1) ** i * z ** i
        # PZ_INV
        i = b - a - 1
        if i < 0:
            return Fraction(0)
        return binomial_coeff(-a - 1, i) * (-1) ** i * z ** i

    def coeff(self, exps, weight):
        if weight != 0:
            return ZERO
        v = self.scalar_coeff(exps)
        return scalar_vec(v) if v else ZERO


def delta_kernel(kind: DeltaKernelKind, z: Fraction | None = None) -> DeltaKernel:
    return DeltaKernel(kind, z)


def _solve_params(kind: DeltaKernelKind, fixed: Mapping[str, int]):
    """Solve the kernel parametrization against fixed exponents.

    Returns None for an inconsistent system, else (param, base):
    every kernel exponent equals base[var][0] + base[var][1]*u where u is the
    free parameter; param is "t" (u >= 0), "s" (u free) or None (single point,
    u fixed to 0 formally).
    """
    table = _PARAM[kind]
    s_expr = None        # (A, B): s = A + B*t
    t_val = None
    eqs = [(cs, ct, fixed[v] - c0) for v, (c0, cs, ct) in table.items() if v in fixed]
    # one pass suffices: coefficients are 0/+-1 and substitution happens inline
    for cs, ct, rhs in eqs:
        if s_expr is not None and cs:
            rhs -= cs * s_expr[0]
            ct += cs * s_expr[1]
            cs = 0
        if t_val is not None and ct:
            rhs -= ct * t_val
            ct = 0
        if cs == 0 and ct == 0:
            if rhs != 0:
                return None
            continue
        if cs != 0 and ct == 0:
            s_expr = (rhs // cs, 0)
        elif cs == 0:
            if rhs % ct:
                return None
            t_val = rhs // ct
        else:
            s_expr = (rhs // cs, -ct // cs)

    def expr(v):
        c0, cs, ct = table[v]
        # affine in the remaining free parameter
        if t_val is not None and s_expr is not None:
            s = s_expr[0] + s_expr[1] * t_val
            return (c0 + cs * s + ct * t_val, 0)
        if t_val is not None:      # s free
            return (c0 + ct * t_val, cs)
        if s_expr is not None:     # t free (t >= 0)
            return (c0 + cs * s_expr[0], ct + cs * s_expr[1])
        raise NonConvergent(f"kernel {kind} underdetermined with fixed {dict(fixed)}")

    base = {v: expr(v) for v in table}
    if t_val is not None and s_expr is not None:
        if t_val < 0:
            return None
        return (None, base)
    if t_val is not None:
        if t_val < 0:
            return None
        return ("s", base)
    return ("t", base)


def kernel_times_series(kernel: DeltaKernel, series: CoefficientOracle) -> FuncOracle:
    """Product (delta kernel) * (mode series in a subset of its variables).

    The coefficient at a full exponent tuple is the finite contraction over
    the kernel's one-parameter support family, bounded by the series'
    certified support ranges.  When a direction carries no certificate, the
    contraction walks it and relies on genuine zeros or a CutoffEscape,
    guarded by MAX_CONTRACTION_STEPS.
    """
    shared = tuple(series.variables)
    if not set(shared) <= set(kernel.variables):
        raise ValueError("series variables must lie inside the kernel's")

    def fn(exps, q):
        fixed = {v: exps[v] for v in kernel.variables if v not in shared}
        solved = _solve_params(kernel.kind, fixed)
        if solved is None:
            return ZERO
        param, base = solved
        if param is None:
            kexp = {v: base[v][0] for v in kernel.variables}
            kval = kernel.scalar_coeff(kexp)
            if not kval:
                return ZERO
            sexp = {v: exps[v] - kexp[v] for v in shared}
            return series.coeff(sexp, q) * kval
        ulo = 0 if param == "t" else None
        uhi = None

        def floor_div(x, y):
            return x // y

        def ceil_div(x, y):
            return -((-x) // y)

        for v in shared:
            a, b = base[v]
            lo, hi = series.exp_range(v, q)
            f = exps[v] - a
            if b == 0:
                if (lo is not None and f < lo) or (hi is not None and f > hi):
                    return ZERO
                continue
            # f - b*u within [lo, hi]:  b*u <= f-lo  and  b*u >= f-hi
            if lo is not None:
                if b > 0:
                    uhi = floor_div(f - lo, b) if uhi is None else min(uhi, floor_div(f - lo, b))
                else:
                    ulo = ceil_div(f - lo, b) if ulo is None else max(ulo, ceil_div(f - lo, b))
            if hi is not None:
                if b > 0:
                    ulo = ceil_div(f - hi, b) if ulo is None else max(ulo, ceil_div(f - hi, b))
                else:
                    uhi = floor_div(f - hi, b) if uhi is None else min(uhi, floor_div(f - hi, b))

        total = ZERO
        if ulo is None and uhi is None:
            raise NonConvergent(f"unbounded contraction for {kernel.kind.value}")
        # walk the free parameter; when one side is uncertified, rely on genuine
        # zeros / cutoff escapes under the step guard
        step = 1 if ulo is not None else -1
        u = ulo if ulo is not None else uhi
        steps = 0
        while True:
            if ulo is not None and uhi is not None:
                if u > uhi:
                    break
            elif steps > MAX_CONTRACTION_STEPS:
                raise NonConvergent(
                    f"contraction for {kernel.kind.value} exceeded "
                    f"{MAX_CONTRACTION_STEPS} steps without a certificate")
            kexp = {v: base[v][0] + base[v][1] * u for v in kernel.variables}
            kval = kernel.scalar_coeff(kexp)
            if kval:
                sexp = {v: exps[v] - kexp[v] for v in shared}
                total = total + series.coeff(sexp, q) * kval
            u += step
            steps += 1
        return total

    return FuncOracle(kernel.variables, series.space, fn,
                      name=f"{kernel.kind.value}*series")


def equal_on_window(o1: CoefficientOracle, o2: CoefficientOracle, w: Window,
                    name: str = "equal_on_window") -> CheckReport:
    """Coefficientwise equality on a window; fail carries the lexicographically
    first witness, a CutoffEscape yields an inconclusive verdict."""
    if set(o1.variables) != set(o2.variables):
        raise ValueError("variable-set mismatch")
    if set(w.variables()) != set(o1.variables):
        raise ValueError("window variables must match the oracles'")
    if o1.space.name != o2.space.name:
        raise ValueError("value-space mismatch")
    wlo, whi = w.weights
    try:
        for exps in w.points():
            for q in range(wlo, whi + 1):
                left = o1.coeff(exps, q)
                right = o2.coeff(exps, q)
                if left != right:
                    return CheckReport(name, "fail", w,
                                       Witness(dict(exps), q, left, right))
    except CutoffEscape as esc:
        return CheckReport(name, "inconclusive", w,
                           detail=f"cutoff escape: {esc.detail}")
    return CheckReport(name, "pass", w)


class LaurentVector:
    """Finite map exponent-tuple -> Vec over a declared graded space."""

    def __init__(self, variables, space: GradedSpace,
                 terms: Mapping[tuple, Vec] | None = None):
        self.variables = tuple(variables)
        self.space = space
        self.terms: dict[tuple, Vec] = {}
        if terms:
            for e, v in terms.items():
                if not v.is_zero():
                    self.terms[tuple(e)] = v

    def add_term(self, exps: tuple, vec: Vec):
        cur = self.terms.get(tuple(exps), ZERO) + vec
        if cur.is_zero():
            self.terms.pop(tuple(exps), None)
        else:
            self.terms[tuple(exps)] = cur

    def get(self, exps: tuple) -> Vec:
        return self.terms.get(tuple(exps), ZERO)

    def as_oracle(self) -> FuncOracle:
        space = self.space

        def fn(exps, q):
            key = tuple(exps[v] for v in self.variables)
            vec = self.terms.get(key, ZERO)
            return space.project(vec, q)

        def ranges(var, q):
            idx = self.variables.index(var)
            vals = [e[idx] for e in self.terms]
            if not vals:
                return (0, 0)
            return (min(vals), max(vals))

        return FuncOracle(self.variables, space, fn, ranges, name="laurent")

    def __eq__(self, other):
        if not isinstance(other, LaurentVector):
            return NotImplemented
        return (self.variables == other.variables and self.terms == other.terms)

    def __repr__(self):
        if not self.terms:
            return "0"
        monos = []
        for e in sorted(self.terms):
            mono = "".join(f"{v}^{k}" for v, k in zip(self.variables, e) if k)
            monos.append(f"({self.terms[e]!r}){mono}")
        return " + ".join(monos)
