"""Graded vector spaces with named bases, and exact sparse vectors over them.

Everything downstream (mode tables, delta-kernel products, linear solves)
works with `Vec` coordinates over a `GradedSpace`.  Coordinates are
`fractions.Fraction`; there is no floating point anywhere.

A space is either *complete* (its stored basis is the whole space, so any
weight outside the stored range is genuinely zero) or *truncated* (weights
above the cutoff exist but are not represented).  Queries that would need a
slice beyond the cutoff of a truncated space raise `CutoffEscape`, which is
how the engine distinguishes "unknown beyond the truncation" from an actual
zero.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping


def neg_one_pow(k: int) -> int:
    """(-1)**k for any integer k, without float contamination."""
    return -1 if k % 2 else 1


class CutoffEscape(Exception):
    """A computation left the representable weight/degree range.

    Carries enough context to report *where* the truncation was escaped;
    checkers convert this into an "inconclusive" verdict rather than a
    false pass or fail.
    """

    def __init__(self, detail: str, space: str = "", weight: int | None = None):
        super().__init__(detail)
        self.detail = detail
        self.space = space
        self.weight = weight


class Vec:
    """Sparse exact vector: finite map from basis names to nonzero Fractions."""

    __slots__ = ("c",)

    def __init__(self, coords: Mapping[str, Fraction | int] | None = None):
        self.c: dict[str, Fraction] = {}
        if coords:
            for k, v in coords.items():
                f = Fraction(v)
                if f:
                    self.c[k] = f

    @staticmethod
    def unit(name: str, coeff: Fraction | int = 1) -> "Vec":
        return Vec({name: Fraction(coeff)})

    def is_zero(self) -> bool:
        return not self.c

    def items(self):
        return self.c.items()

    def support(self):
        return set(self.c)

    def get(self, name: str) -> Fraction:
        return self.c.get(name, Fraction(0))

    def __add__(self, other: "Vec") -> "Vec":
        out = dict(self.c)
        for k, v in other.c.items():
            s = out.get(k, Fraction(0)) + v
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        r = Vec()
        r.c = out
        return r

    def __sub__(self, other: "Vec") -> "Vec":
        return self + (other * -1)

    def __mul__(self, a) -> "Vec":
        a = Fraction(a)
        r = Vec()
        if a:
            r.c = {k: v * a for k, v in self.c.items()}
        return r

    __rmul__ = __mul__

    def __neg__(self) -> "Vec":
        return self * -1

    def __eq__(self, other) -> bool:
        if not isinstance(other, Vec):
            return NotImplemented
        return self.c == other.c

    def __hash__(self):
        return hash(frozenset(self.c.items()))

    def __repr__(self):
        if not self.c:
            return "0"
        parts = []
        for k in sorted(self.c):
            v = self.c[k]
            parts.append(f"{v}*{k}" if v != 1 else k)
        return " + ".join(parts)

    def as_strings(self) -> dict[str, str]:
        """Coordinates with rationals rendered as "num/den" strings."""
        return {k: f"{v.numerator}/{v.denominator}" if v.denominator != 1
                else str(v.numerator)
                for k, v in sorted(self.c.items())}


ZERO = Vec()


class GradedSpace:
    """A ``Z``-graded space with a named, finite, weight-bounded-below basis.

    `complete=True` means the stored basis spans the whole space; otherwise
    weights above `cutoff` exist but are unrepresented (truncated space).
    """

    def __init__(self, name: str, weights: Mapping[str, int], order: Iterable[str],
                 complete: bool = True, cutoff: int | None = None,
                 incomplete_slices: frozenset[int] = frozenset()):
        self.name = name
        self.weights = dict(weights)
        self.order = tuple(order)
        assert set(self.order) == set(self.weights)
        self.complete = complete
        self.incomplete_slices = frozenset(incomplete_slices)
        self.min_weight = min(self.weights.values()) if self.weights else 0
        self.max_stored = max(self.weights.values()) if self.weights else 0
        self.cutoff = self.max_stored if cutoff is None else cutoff
        self._by_weight: dict[int, tuple[str, ...]] = {}
        for b in self.order:
            w = self.weights[b]
            self._by_weight.setdefault(w, ())
            self._by_weight[w] += (b,)

    @property
    def dim(self) -> int:
        return len(self.order)

    def weight(self, basis_name: str) -> int:
        return self.weights[basis_name]

    def slice_basis(self, w: int) -> tuple[str, ...]:
        return self._by_weight.get(w, ())

    def slice_known(self, w: int) -> bool:
        """True when the slice at weight w is fully represented (possibly 0).

        `complete` means no weights above `max_stored` exist at all; a slice
        listed in `incomplete_slices` is stored but truncated in another
        direction (e.g. by PBW degree) and is never fully known.
        """
        if w in self.incomplete_slices:
            return False
        return self.complete or w <= self.cutoff

    def project(self, v: Vec, w: int) -> Vec:
        return Vec({k: a for k, a in v.items() if self.weights[k] == w})

    def decompose(self, v: Vec) -> dict[int, Vec]:
        out: dict[int, dict] = {}
        for k, a in v.items():
            out.setdefault(self.weights[k], {})[k] = a
        return {w: Vec(d) for w, d in sorted(out.items())}

    def weight_of(self, v: Vec) -> int | None:
        """Weight of a homogeneous vector, None for 0, error if mixed."""
        ws = {self.weights[k] for k in v.support()}
        if not ws:
            return None
        if len(ws) > 1:
            raise ValueError(f"vector not homogeneous: weights {sorted(ws)}")
        return ws.pop()


# Value space for scalar-valued coefficient oracles (delta kernels).
SCALAR_BASIS = "1"
SCALAR = GradedSpace("scalar", {SCALAR_BASIS: 0}, (SCALAR_BASIS,))


def scalar_vec(a: Fraction | int) -> Vec:
    return Vec({SCALAR_BASIS: Fraction(a)})


def vec_to_scalar(v: Vec) -> Fraction:
    return v.get(SCALAR_BASIS)


class SlicedVec:
    """Element of the algebraic completion of a graded space.

    Holds one finite `Vec` per weight slice.  Slices below the space minimum
    are zero; slices above the stored range are zero for complete spaces and
    unknown (CutoffEscape) for truncated ones.
    """

    def __init__(self, space: GradedSpace, slices: Mapping[int, Vec],
                 known: Iterable[int] | None = None):
        self.space = space
        self.known = set(slices) if known is None else set(known) | set(slices)
        self.slices = {q: v for q, v in slices.items() if not v.is_zero()}
        for q, v in self.slices.items():
            for k in v.support():
                assert space.weights[k] == q, f"slice {q} holds weight {space.weights[k]}"

    def get_slice(self, q: int) -> Vec:
        if q in self.slices:
            return self.slices[q]
        if q in self.known or q < self.space.min_weight or self.space.slice_known(q):
            return ZERO
        raise CutoffEscape(f"slice {q} of completion beyond cutoff of {self.space.name}",
                           space=self.space.name, weight=q)

    def nonzero_slices(self) -> list[int]:
        return sorted(self.slices)

    def __add__(self, other: "SlicedVec") -> "SlicedVec":
        assert self.space is other.space
        known = self.known & other.known
        out = {}
        for q in known:
            v = self.slices.get(q, ZERO) + other.slices.get(q, ZERO)
            if not v.is_zero():
                out[q] = v
        return SlicedVec(self.space, out, known=known)

    def __mul__(self, a) -> "SlicedVec":
        return SlicedVec(self.space, {q: v * a for q, v in self.slices.items()},
                         known=self.known)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, SlicedVec):
            return NotImplemented
        return self.space is other.space and self.slices == other.slices

    def __repr__(self):
        if not self.slices:
            return "0"
        return " + ".join(f"[{q}]({v!r})" for q, v in sorted(self.slices.items()))


def dual_space(space: GradedSpace, name: str | None = None) -> GradedSpace:
    """Graded dual with basis b' in the same weight as b (restricted dual)."""
    return GradedSpace(name or f"{space.name}'",
                       {b + "'": w for b, w in space.weights.items()},
                       tuple(b + "'" for b in space.order),
                       complete=space.complete, cutoff=space.cutoff)


def pair_dual_space(s1: GradedSpace, s2: GradedSpace, name: str | None = None) -> GradedSpace:
    """Dual of a tensor product, basis indexed by pairs, graded by total weight."""
    names = {}
    order = []
    for b1 in s1.order:
        for b2 in s2.order:
            nm = pair_name(b1, b2)
            names[nm] = s1.weights[b1] + s2.weights[b2]
            order.append(nm)
    return GradedSpace(name or f"({s1.name}(x){s2.name})*", names, order,
                       complete=s1.complete and s2.complete,
                       cutoff=s1.cutoff + s2.cutoff)


def pair_name(b1: str, b2: str) -> str:
    return f"{b1}(x){b2}"


def split_pair_name(nm: str) -> tuple[str, str]:
    left, right = nm.split("(x)", 1)
    return left, right
