"""The canonical Lie algebra of a vertex algebra and its induced modules.

Elements are finite sums of pairs ``v(n)`` (vector tensor t^n) taken modulo
the image of ``D (x) 1 + 1 (x) d/dt``; the quotient relation reads
``(Dv)(n) = -n v(n-1)``.  Normal forms are computed per (weight, mode) block
against a row-echelon basis of the representable relations, so equality and
membership are decidable.  The bracket is

    [u(m), v(n)] = sum_{i>=0} C(m, i) (u_i v)(m+n-i).

On top of that: the nonnegative subalgebra and its orbits, homomorphism
checkers, and the two induced level-one module constructions (from the
one-dimensional vacuum, and from the lowest weight slice).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .exactla import EchelonBasis, add_vec, contains_vec
from .formal import CheckReport, Window, Witness, binomial_coeff
from .spaces import CutoffEscape, GradedSpace, Vec, ZERO
from .voa import ModuleData, VertexAlgebra, check_ideal, check_module_commutator, \
    check_module_jacobi


class GvElement:
    """Element of the canonical Lie algebra, stored in normal form."""

    __slots__ = ("gv", "terms")

    def __init__(self, gv: "GvAlgebra", terms: dict[tuple[str, int], Fraction]):
        self.gv = gv
        self.terms = {k: v for k, v in terms.items() if v}

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "GvElement") -> "GvElement":
        out = dict(self.terms)
        for k, v in other.terms.items():
            s = out.get(k, Fraction(0)) + v
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return GvElement(self.gv, out)

    def __mul__(self, a) -> "GvElement":
        a = Fraction(a)
        return GvElement(self.gv, {k: v * a for k, v in self.terms.items()})

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + other * -1

    def __eq__(self, other):
        if not isinstance(other, GvElement):
            return NotImplemented
        return self.gv is other.gv and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def gweight_of(self, key) -> int:
        b, n = key
        return self.gv.alg.space.weight(b) - n - 1

    def gweights(self) -> set[int]:
        return {self.gweight_of(k) for k in self.terms}

    def modes(self) -> set[int]:
        return {n for _, n in self.terms}

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for (b, n) in sorted(self.terms, key=lambda k: (k[1], k[0])):
            c = self.terms[(b, n)]
            pre = "" if c == 1 else f"{c}*"
            bits.append(f"{pre}{b}({n})")
        return " + ".join(bits)


@dataclass(frozen=True)
class GvSubalgebra:
    """Membership tags for the standard subalgebras."""

    tag: str                  # nonneg | neg | graded_piece | plus | minus
    n: int | None = None

    def contains(self, x: GvElement) -> bool:
        if x.is_zero():
            return True
        if self.tag == "nonneg":
            return all(n >= 0 for _, n in x.terms)
        if self.tag == "neg":
            return all(n < 0 for _, n in x.terms)
        if self.tag == "graded_piece":
            return x.gweights() == {self.n}
        if self.tag == "plus":
            return all(w > 0 for w in x.gweights())
        if self.tag == "minus":
            return all(w < 0 for w in x.gweights())
        raise ValueError(self.tag)


NONNEG = GvSubalgebra("nonneg")
NEG = GvSubalgebra("neg")
PLUS = GvSubalgebra("plus")
MINUS = GvSubalgebra("minus")


def graded_piece(n: int) -> GvSubalgebra:
    return GvSubalgebra("graded_piece", n)


class GvAlgebra:
    """Normal-form context for the canonical Lie algebra of one vertex algebra."""

    def __init__(self, alg: VertexAlgebra):
        self.alg = alg
        self._idx = {b: i for i, b in enumerate(alg.space.order)}
        self._blocks: dict[int, EchelonBasis] = {}
        self._skipped_relations: dict[int, int] = {}

    # coordinate order: negative modes reduce toward -1, nonnegative modes
    # reduce D-images downward toward 0
    def _key(self, coord: tuple[str, int]):
        b, n = coord
        if n <= -1:
            return (0, n, self._idx[b])
        return (1, -n, self._idx[b])

    def _block(self, d: int) -> EchelonBasis:
        if d in self._blocks:
            return self._blocks[d]
        ech = EchelonBasis(key_order=self._key)
        skipped = 0
        space = self.alg.space
        for u in space.order:
            m = space.weight(u) - d          # relation (Du)(m) + m u(m-1)
            try:
                du = self.alg.d(u)
            except CutoffEscape:
                skipped += 1
                continue
            row: dict[tuple[str, int], Fraction] = {}
            for b, c in du.items():
                row[(b, m)] = row.get((b, m), Fraction(0)) + c
            if m != 0:
                row[(u, m - 1)] = row.get((u, m - 1), Fraction(0)) + m
            row = {k: v for k, v in row.items() if v}
            if row:
                ech.add(row)
        self._blocks[d] = ech
        self._skipped_relations[d] = skipped
        return ech

    def element(self, v: Vec | str, n: int) -> GvElement:
        """pi(v (x) t^n) in normal form."""
        v = Vec.unit(v) if isinstance(v, str) else v
        return self.normal_form({(b, n): c for b, c in v.items()})

    def normal_form(self, raw: dict[tuple[str, int], Fraction]) -> GvElement:
        space = self.alg.space
        by_block: dict[int, dict] = {}
        for (b, n), c in raw.items():
            if not c:
                continue
            d = space.weight(b) - n - 1
            by_block.setdefault(d, {})[(b, n)] = \
                by_block.get(d, {}).get((b, n), Fraction(0)) + c
        out: dict[tuple[str, int], Fraction] = {}
        for d, chunk in by_block.items():
            residual, _ = self._block(d).reduce(chunk)
            for k, v in residual.items():
                if v:
                    out[k] = out.get(k, Fraction(0)) + v
        return GvElement(self, out)

    def bracket(self, x: GvElement, y: GvElement) -> GvElement:
        assert x.gv is self and y.gv is self
        raw: dict[tuple[str, int], Fraction] = {}
        for (u, m), cu in x.terms.items():
            for (v, n), cv in y.terms.items():
                stop = self.alg.trunc_bound(u, v)
                for i in range(0, max(stop, 0)):
                    coef = binomial_coeff(m, i) * cu * cv
                    if not coef:
                        continue
                    img = self.alg.mode(u, i, v)
                    for b, c in img.items():
                        k = (b, m + n - i)
                        raw[k] = raw.get(k, Fraction(0)) + c * coef
        return self.normal_form(raw)

    def v_to_gvneg(self, v: Vec | str) -> GvElement:
        return self.element(v, -1)

    def unit_minus_one(self) -> GvElement:
        return self.element(self.alg.unit, -1)

    def split(self, x: GvElement) -> tuple[GvElement, GvElement]:
        """Unique decomposition into (negative-mode, nonnegative-mode) parts."""
        neg = {k: v for k, v in x.terms.items() if k[1] < 0}
        pos = {k: v for k, v in x.terms.items() if k[1] >= 0}
        return GvElement(self, neg), GvElement(self, pos)


# ---------------------------------------------------------------------------
# nonnegative-part orbits
# ---------------------------------------------------------------------------

@dataclass
class OrbitReport:
    """Span of { v(n) w : n >= 0 } over in-cutoff generators.

    `conclusive` is True only on complete spaces; on truncated ones every
    slice may receive contributions from beyond the cutoff, so negative
    membership claims must go through an ideal-containment argument instead.
    """

    module: ModuleData
    echelon: EchelonBasis
    slice_dims: dict[int, tuple[int, int]]
    conclusive: bool
    skipped: int
    generators: list[tuple[str, int, str]]

    def contains(self, v: Vec) -> bool | None:
        got = contains_vec(self.echelon, v)
        if got:
            return True
        return False if self.conclusive else None

    def certificate(self, v: Vec):
        """Combination of generators (v, n, w) reproducing the vector, or None."""
        return self.echelon.membership(dict(v.items()))


def gv_ge0_orbit(m: ModuleData) -> OrbitReport:
    alg = m.algebra
    space = m.space
    order = {b: i for i, b in enumerate(space.order)}
    ech = EchelonBasis(key_order=lambda k: (order[k],))
    skipped = 0
    gens: list[tuple[str, int, str]] = []
    for v in alg.space.order:
        for w in space.order:
            for n in range(0, m.trunc_bound(v, w)):
                try:
                    img = m.mode(v, n, w)
                except CutoffEscape:
                    skipped += 1
                    continue
                if img.is_zero():
                    continue
                if ech.add(dict(img.items()), tag=(v, n, w)):
                    gens.append((v, n, w))
    pivots = {p for p, _, _ in ech.rows}
    dims: dict[int, tuple[int, int]] = {}
    for q in range(space.min_weight, space.max_stored + 1):
        sl = space.slice_basis(q)
        if sl:
            dims[q] = (len([b for b in sl if b in pivots]), len(sl))
    return OrbitReport(m, ech, dims, conclusive=space.complete,
                       skipped=skipped, generators=gens)


def unit_orbit_certificate(alg: VertexAlgebra):
    """Single-generator certificate 1 = coeff * v(n) w, if one exists.

    Searched in deterministic basis order; falls back to a general
    combination from the orbit echelon.
    """
    one = alg.unit_vec()
    m = alg.adjoint
    for v in alg.space.order:
        for n in range(0, alg.space.weights[v] + alg.space.max_stored):
            for w in alg.space.order:
                try:
                    img = m.mode(v, n, w)
                except CutoffEscape:
                    continue
                if img.support() == {alg.unit}:
                    return {"v": v, "n": n, "w": w,
                            "coeff": Fraction(1) / img.get(alg.unit)}
    combo = gv_ge0_orbit(m).certificate(one)
    if combo is None:
        return None
    return {"combination": combo}


# ---------------------------------------------------------------------------
# homomorphism checks
# ---------------------------------------------------------------------------

class LinearMap:
    """Linear map between module underlying spaces, given on basis."""

    def __init__(self, source: ModuleData, target: ModuleData,
                 matrix: dict[str, Vec], name="theta"):
        self.source = source
        self.target = target
        self.matrix = dict(matrix)
        self.name = name

    def __call__(self, v: Vec | str) -> Vec:
        v = Vec.unit(v) if isinstance(v, str) else v
        out = ZERO
        for b, c in v.items():
            out = out + self.matrix.get(b, ZERO) * c
        return out


def _hom_check(theta: LinearMap, modes: str) -> CheckReport:
    """Shared engine for the ge0 / full homomorphism checks.

    modes = "nonneg" checks n >= 0 only; "all" additionally walks n = -1, -2,
    ... down to the in-cutoff bound.  Escaping probes are skipped and counted.
    """
    m1, m2 = theta.source, theta.target
    alg = m1.algebra
    assert m2.algebra is alg
    name = f"is_{'gv_ge0' if modes == 'nonneg' else 'v'}_hom"
    skipped = 0
    checked = 0
    lo_used = {}

    def probe(v, n, w):
        nonlocal skipped, checked
        try:
            lhs = theta(m1.mode(v, n, w))
            rhs = m2.mode(v, n, theta(w))
        except CutoffEscape:
            skipped += 1
            return None
        checked += 1
        if lhs != rhs:
            return Witness({"n": n}, 0, lhs, rhs)
        return False

    for v in alg.space.order:
        for w in m1.space.order:
            for n in range(0, m1.trunc_bound(v, w)):
                res = probe(v, n, w)
                if res:
                    return CheckReport(name, "fail", witness=res,
                                       detail=f"v={v}, w={w}, n={n}")
            if modes == "all":
                n = -1
                lo = alg.space.weight(v) + m1.space.weight(w) - 1 - \
                    min(m1.space.cutoff, m2.space.cutoff)
                lo_used[(v, w)] = lo
                while n >= lo:
                    res = probe(v, n, w)
                    if res:
                        return CheckReport(name, "fail", witness=res,
                                           detail=f"v={v}, w={w}, n={n}")
                    n -= 1
    detail = f"{checked} probes"
    if modes == "all" and lo_used:
        detail += f", negative modes down to {min(lo_used.values())}"
    if skipped:
        detail += f", {skipped} skipped at cutoff"
    return CheckReport(name, "pass", detail=detail)


def is_gv_ge0_hom(theta: LinearMap) -> CheckReport:
    return _hom_check(theta, "nonneg")


def is_v_hom(theta: LinearMap) -> CheckReport:
    return _hom_check(theta, "all")


# ---------------------------------------------------------------------------
# induced level-one modules
# ---------------------------------------------------------------------------

class GvModuleData:
    """Restricted level-one module with a PBW monomial basis.

    Doubly truncated: by weight (<= cutoff) and by PBW degree (<= degree
    bound); either escape raises CutoffEscape.  Monomials are tuples of
    generator ids over a vacuum name.
    """

    def __init__(self, gv: GvAlgebra, variant: str, cutoff: int, degree: int,
                 lowest: int | None = None):
        self.gv = gv
        self.variant = variant
        self.cutoff = cutoff
        self.degree = degree
        self.level = Fraction(1)
        alg = gv.alg
        space = alg.space
        if variant == "vacuum":
            self.gens = {}
            for b in space.order:
                if b == alg.unit:
                    continue
                self.gens[(b, -1)] = (space.weight(b), b + "(-1)")
            self.vac_names = {"vac": 0}
        elif variant == "lowest":
            r = min(space.weights.values()) if lowest is None else lowest
            if not space.slice_basis(r):
                raise ValueError(f"lowest slice {r} is empty")
            if any(w < r for w in space.weights.values()):
                raise ValueError("algebra has weights below the lowest slice")
            self.lowest = r
            self.gens = {}
            for b in space.order:
                if space.weight(b) - (-1) - 1 > 0:
                    self.gens[(b, -1)] = (space.weight(b), b + "(-1)")
            # nonnegative-mode generators from the D-complement reps: take
            # every normal-form coordinate b(n), n >= 0 of positive g-weight
            # that survives reduction
            for b in space.order:
                for n in range(0, space.weight(b) - 1 - 0):
                    gw = space.weight(b) - n - 1
                    if gw <= 0:
                        continue
                    e = gv.element(b, n)
                    if (b, n) in e.terms and len(e.terms) == 1 \
                            and e.terms[(b, n)] == 1:
                        self.gens[(b, n)] = (gw, f"{b}({n})")
            self.vac_names = {f"[{b}]": space.weight(b)
                              for b in space.slice_basis(r)}
        else:
            raise ValueError(variant)
        self._gen_order = {k: i for i, k in enumerate(
            sorted(self.gens, key=lambda k: (self.gens[k][0], k[1],
                                             gv._idx[k[0]])))}
        self._build_space()

    def _build_space(self):
        names: dict[str, int] = {}
        order: list[str] = []
        self._mono_of: dict[str, tuple] = {}

        def rec(mono, weight, minidx):
            if weight > self.cutoff or len(mono) > self.degree:
                return
            for vac, wv in self.vac_names.items():
                if weight + wv <= self.cutoff:
                    nm = self._name(mono, vac)
                    names[nm] = weight + wv
                    order.append(nm)
                    self._mono_of[nm] = (mono, vac)
            if len(mono) == self.degree:
                return
            # monomials carry ascending generator order left to right
            for k, i in self._gen_order.items():
                if i >= minidx and weight + self.gens[k][0] <= self.cutoff:
                    rec(mono + (k,), weight + self.gens[k][0], i)

        rec((), 0, 0)
        order.sort(key=lambda nm: (names[nm], nm))
        # a slice is degree-incomplete when a monomial one past the degree
        # bound could still land in it (conservative over-approximation)
        gw = [self.gens[k][0] for k in self.gens]
        wvs = list(self.vac_names.values())
        incomplete = set()
        complete = True
        if gw:
            g_min = min(gw)
            complete = max(gw) == 0
            for q in range(min(wvs), self.cutoff + 1):
                if any(q - wv >= g_min * (self.degree + 1) for wv in wvs):
                    incomplete.add(q)
        self.space = GradedSpace(f"induced_{self.variant}", names, order,
                                 complete=complete, cutoff=self.cutoff,
                                 incomplete_slices=frozenset(incomplete))

    def _name(self, mono: tuple, vac: str) -> str:
        return "".join(self.gens[k][1] for k in mono) + vac

    def vacuum(self) -> Vec:
        if self.variant == "vacuum":
            return Vec.unit("vac")
        raise ValueError("lowest-slice module has no single vacuum")

    # -- action ------------------------------------------------------------

    def act_vn(self, v: Vec | str, n: int, w: Vec) -> Vec:
        return self.act(self.gv.element(v, n), w)

    def act(self, x: GvElement, w: Vec) -> Vec:
        out = ZERO
        for nm, c in w.items():
            mono, vac = self._mono_of[nm]
            out = out + self._act_mono(x, mono, vac) * c
        return out

    def _act_mono(self, x: GvElement, mono: tuple, vac: str) -> Vec:
        out = ZERO
        for key, c in x.terms.items():
            out = out + self._act_term(key, mono, vac) * c
        return out

    def _act_term(self, key: tuple[str, int], mono: tuple, vac: str) -> Vec:
        b, n = key
        alg = self.gv.alg
        if key == (alg.unit, -1):
            return Vec.unit(self._name(mono, vac)) * self.level
        if not mono:
            return self._act_vacuum(key, vac)
        head, rest = mono[0], mono[1:]
        if key in self.gens and self._gen_order[key] <= self._gen_order[head]:
            return self._prepend(key, mono, vac)
        # commute: x . head rest = head . (x . rest) + [x, head] . rest
        inner = self._act_term(key, rest, vac)
        out = ZERO
        for nm2, c2 in inner.items():
            m2, v2 = self._mono_of[nm2]
            out = out + self._prepend(head, m2, v2) * c2
        br = self.gv.bracket(GvElement(self.gv, {key: Fraction(1)}),
                             GvElement(self.gv, {head: Fraction(1)}))
        out = out + self._act_mono(br, rest, vac)
        return out

    def _prepend(self, key: tuple[str, int], mono: tuple, vac: str) -> Vec:
        if not mono or self._gen_order[key] <= self._gen_order[mono[0]]:
            new = (key,) + mono
            w = sum(self.gens[k][0] for k in new) + self.vac_names[vac]
            if len(new) > self.degree:
                raise CutoffEscape(
                    f"PBW degree {len(new)} beyond bound {self.degree}",
                    space=self.space.name)
            if w > self.cutoff:
                raise CutoffEscape(f"weight {w} beyond cutoff {self.cutoff}",
                                   space=self.space.name, weight=w)
            return Vec.unit(self._name(new, vac))
        return self._act_term(key, mono, vac)

    def _act_vacuum(self, key: tuple[str, int], vac: str) -> Vec:
        b, n = key
        alg = self.gv.alg
        if key in self.gens:
            return self._prepend(key, (), vac)
        if self.variant == "vacuum":
            if n >= 0:
                return ZERO
            # a mode n <= -2 would be a generator of weight beyond the cutoff
            raise CutoffEscape(f"{b}({n}) escapes the vacuum-module cutoff",
                               space=self.space.name)
        gw = alg.space.weight(b) - n - 1
        if gw < 0:
            return ZERO
        if gw == 0:
            img = alg.mode(b, n, vac[1:-1])
            return Vec({f"[{k}]": c for k, c in img.items()})
        raise CutoffEscape(f"{b}({n}) escapes the induced-module truncation",
                           space=self.space.name)


def induced_level_one_module(alg: VertexAlgebra, variant: str, cutoff: int,
                             degree: int, lowest: int | None = None) -> GvModuleData:
    """Induced level-one module; `variant` is "vacuum" or "lowest"."""
    return GvModuleData(GvAlgebra(alg), variant, cutoff, degree, lowest)


def module_from_gv(gvmod: GvModuleData, name="gv_module") -> ModuleData:
    """View a restricted level-one module as a vertex-operator candidate
    via Y_W(v, x) = sum v(n) x^{-n-1}."""
    alg = gvmod.gv.alg

    def mode_fn(uname, n, wname):
        return gvmod.act_vn(uname, n, Vec.unit(wname))

    return ModuleData(alg, gvmod.space, mode_fn, name=name)


def check_not_weak_module(gvmod: GvModuleData, win: Window | None = None) -> CheckReport:
    """Bounded search for a triple violating the Jacobi identity while the
    commutator formula holds; inconclusive when no witness fits the window."""
    m = module_from_gv(gvmod)
    alg = gvmod.gv.alg
    if win is None:
        win = Window((("x0", -2, 2), ("x1", -2, 2), ("x2", -2, 2)),
                     (gvmod.space.min_weight, gvmod.space.max_stored))
    name = "not_weak_module"
    skipped = 0
    for u in alg.space.order:
        for v in alg.space.order:
            for w in gvmod.space.order:
                try:
                    com = check_module_commutator(m, u, v, Vec.unit(w), win)
                    jac = check_module_jacobi(m, u, v, Vec.unit(w), win)
                except CutoffEscape:
                    skipped += 1
                    continue
                if com.verdict != "pass" or jac.verdict == "inconclusive":
                    skipped += 1
                    continue
                if jac.failed:
                    rep = CheckReport(name, "pass", win, jac.witness,
                                      detail=f"u={u}, v={v}, w={w}: commutator "
                                             f"holds, Jacobi fails")
                    return rep
    return CheckReport(name, "inconclusive", win,
                       detail=f"no witness in window ({skipped} skipped)")
