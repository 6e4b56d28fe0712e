"""Exact rational linear algebra over sparse keyed vectors.

Small dense problems over `Fraction` coordinates: reduced row echelon forms,
membership tests with combination certificates, nullspaces.  Verdicts are
exact; there are no tolerances to tune.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Hashable, Iterable

from .spaces import Vec


class EchelonBasis:
    """Row space of keyed sparse vectors kept in reduced echelon form.

    Keys are ordered by `key_order` (pivot = smallest key with nonzero
    coordinate).  Supports incremental insertion, reduction, membership and
    combination certificates.
    """

    def __init__(self, key_order: Callable[[Hashable], tuple] | None = None):
        self.key_order = key_order or (lambda k: (k,))
        self.rows: list[tuple[Hashable, dict, dict]] = []  # (pivot, row, combo)

    @property
    def rank(self) -> int:
        return len(self.rows)

    def _pivot(self, row: dict) -> Hashable | None:
        if not row:
            return None
        return min(row, key=self.key_order)

    def reduce(self, vec: dict, combo: dict | None = None) -> tuple[dict, dict]:
        """Reduce vec against the basis; returns (residual, combination).

        combination maps row tags to coefficients such that
        vec = residual + sum(coeff * original_row).
        """
        row = {k: Fraction(v) for k, v in vec.items() if v}
        used: dict = dict(combo or {})
        changed = True
        while changed:
            changed = False
            for piv, base, bcombo in self.rows:
                a = row.get(piv)
                if a:
                    for k, v in base.items():
                        s = row.get(k, Fraction(0)) - a * v
                        if s:
                            row[k] = s
                        else:
                            row.pop(k, None)
                    for t, v in bcombo.items():
                        s = used.get(t, Fraction(0)) + a * v
                        if s:
                            used[t] = s
                        else:
                            used.pop(t, None)
                    changed = True
        return row, used

    def add(self, vec: dict, tag: Hashable | None = None) -> bool:
        """Insert a vector; returns True if it enlarged the span."""
        row, combo = self.reduce(vec)
        piv = self._pivot(row)
        if piv is None:
            return False
        a = row[piv]
        row = {k: v / a for k, v in row.items()}
        # stored_row = (vec - sum(combo*originals)) / a, so prior tags flip sign
        combo = {t: -v / a for t, v in combo.items()}
        if tag is not None:
            combo[tag] = Fraction(1) / a
        # back-substitute into existing rows
        for i, (p, base, bc) in enumerate(self.rows):
            c = base.get(piv)
            if c:
                nb = dict(base)
                for k, v in row.items():
                    s = nb.get(k, Fraction(0)) - c * v
                    if s:
                        nb[k] = s
                    else:
                        nb.pop(k, None)
                nbc = dict(bc)
                for t, v in combo.items():
                    s = nbc.get(t, Fraction(0)) - c * v
                    if s:
                        nbc[t] = s
                    else:
                        nbc.pop(t, None)
                self.rows[i] = (p, nb, nbc)
        self.rows.append((piv, row, combo))
        self.rows.sort(key=lambda r: self.key_order(r[0]))
        return True

    def contains(self, vec: dict) -> bool:
        residual, _ = self.reduce(vec)
        return not residual

    def membership(self, vec: dict) -> dict | None:
        """Combination over tags expressing vec, or None if not in the span."""
        residual, combo = self.reduce(vec)
        if residual:
            return None
        return dict(combo)


def add_vec(basis: EchelonBasis, v: Vec, tag=None) -> bool:
    return basis.add(dict(v.items()), tag)


def contains_vec(basis: EchelonBasis, v: Vec) -> bool:
    return basis.contains(dict(v.items()))


def nullspace(rows: Iterable[dict], keys: list[Hashable]) -> list[dict]:
    """Exact nullspace of the linear system rows . x = 0 over the given keys.

    Each row maps key -> Fraction.  Returns a basis of solution vectors.
    """
    keys = list(keys)
    pos = {k: i for i, k in enumerate(keys)}
    mat = []
    for r in rows:
        row = [Fraction(0)] * len(keys)
        nonzero = False
        for k, v in r.items():
            if v:
                row[pos[k]] = Fraction(v)
                nonzero = True
        if nonzero:
            mat.append(row)
    # reduced row echelon form
    pivots: list[int] = []
    r = 0
    for c in range(len(keys)):
        piv = None
        for i in range(r, len(mat)):
            if mat[i][c]:
                piv = i
                break
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        a = mat[r][c]
        mat[r] = [x / a for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c]:
                f = mat[i][c]
                mat[i] = [x - f * y for x, y in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    free = [c for c in range(len(keys)) if c not in pivots]
    out = []
    for fc in free:
        sol = [Fraction(0)] * len(keys)
        sol[fc] = Fraction(1)
        for ri, pc in enumerate(pivots):
            sol[pc] = -mat[ri][fc]
        out.append({keys[i]: sol[i] for i in range(len(keys)) if sol[i]})
    return out


def rank_of(rows: Iterable[dict]) -> int:
    basis = EchelonBasis()
    n = 0
    for r in rows:
        if basis.add(r):
            n += 1
    return n
