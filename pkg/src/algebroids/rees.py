"""Degree-one homogenization of the universal envelope.

Generators: a central degree-one element t and the algebroid frame
l_1..l_n, subject to
    l_j l_i = l_i l_j + [l_j, l_i] t          (j > i)
    l_i f   = f l_i + (anchor(l_i) f) t       (f in the base ring)
with all base-ring coefficients normalized to the left.  Normal-form
monomials t^a l_1^a1 .. l_n^an with a + |alpha| = d form a free base-ring
basis of the degree-d piece; multiplication is implemented by the two
rewrite rules above, applied recursively from the last letter of a word.

Everything downstream consumes this module through three devices: exact
products of normal forms, the graded basis of a given degree, and matrices
of one-sided multiplications between graded pieces.
"""

from __future__ import annotations

from math import comb

from .algebroid import Algebroid
from .linalg import ColMatrix, vec_add, vec_clean
from .scalars import Scalar


class ReesError(ValueError):
    pass


def _inc(alpha: tuple, i: int) -> tuple:
    return alpha[:i] + (alpha[i] + 1,) + alpha[i + 1:]


def _dec(alpha: tuple, i: int) -> tuple:
    return alpha[:i] + (alpha[i] - 1,) + alpha[i + 1:]


class Rees:
    """Homogenized envelope of one algebroid, with memoized rewriting."""

    def __init__(self, alg: Algebroid):
        self.alg = alg
        self.n = alg.rank
        self.base = alg.base
        self._zero_alpha = (0,) * self.n
        self._gen_memo: dict = {}
        self._basis_cache: dict = {}
        self._index_cache: dict = {}

    # -- element constructors (elements: {(t_power, alpha): coefficient}) ---

    def zero(self) -> dict:
        return {}

    def one(self) -> dict:
        return {(0, self._zero_alpha): self.base.one}

    def gen(self, i: int) -> dict:
        if not 0 <= i < self.n:
            raise ReesError(f"generator index {i} out of range")
        return {(0, _inc(self._zero_alpha, i)): self.base.one}

    def t_elem(self) -> dict:
        return {(1, self._zero_alpha): self.base.one}

    def from_coeff(self, f: Scalar) -> dict:
        return {(0, self._zero_alpha): f} if f else {}

    def monomial(self, a: int, alpha: tuple, f: Scalar = None) -> dict:
        c = self.base.one if f is None else f
        return {(a, tuple(alpha)): c} if c else {}

    # -- rewriting ----------------------------------------------------------

    def _mono_gen(self, alpha: tuple, i: int) -> dict:
        """Normal form of l^alpha * l_i (treat the result as immutable)."""
        key = (alpha, i)
        hit = self._gen_memo.get(key)
        if hit is not None:
            return hit
        top = -1
        for j in range(self.n - 1, -1, -1):
            if alpha[j]:
                top = j
                break
        if top <= i:
            out = {(0, _inc(alpha, i)): self.base.one}
        else:
            beta = _dec(alpha, top)
            out = self.elem_times_gen(self._mono_gen(beta, i), top)
            for k, c in enumerate(self.alg.bracket_of(top, i)):
                if c:
                    term = self.mono_times_coeff(1, beta, c)
                    out = vec_add(out, self.elem_times_gen(term, k))
        self._gen_memo[key] = out
        return out

    def mono_times_coeff(self, a: int, alpha: tuple, f: Scalar) -> dict:
        """Normal form of t^a l^alpha * f."""
        if not f:
            return {}
        if self.base.is_point or self.base.is_constant(f):
            return {(a, alpha): f}
        top = -1
        for j in range(self.n - 1, -1, -1):
            if alpha[j]:
                top = j
                break
        if top < 0:
            return {(a, alpha): f}
        beta = _dec(alpha, top)
        out = self.elem_times_gen(self.mono_times_coeff(a, beta, f), top)
        df = self.alg.anchor_derivation(top, f)
        if df:
            out = vec_add(out, self.mono_times_coeff(a + 1, beta, df))
        return out

    def elem_times_gen(self, elem: dict, i: int) -> dict:
        out: dict = {}
        for (a, alpha), f in elem.items():
            for (b, gamma), g in self._mono_gen(alpha, i).items():
                key = (a + b, gamma)
                s = out.get(key, 0) + f * g
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return out

    def elem_times_coeff(self, elem: dict, f: Scalar) -> dict:
        out: dict = {}
        for (a, alpha), g in elem.items():
            for key, c in self.mono_times_coeff(a, alpha, f).items():
                s = out.get(key, 0) + g * c
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return out

    def elem_times_t(self, elem: dict, power: int = 1) -> dict:
        return {(a + power, alpha): c for (a, alpha), c in elem.items()}

    def mul(self, e1: dict, e2: dict) -> dict:
        out: dict = {}
        for (a, alpha), g in e2.items():
            term = self.elem_times_coeff(e1, g)
            if a:
                term = self.elem_times_t(term, a)
            for i in range(self.n):
                for _ in range(alpha[i]):
                    term = self.elem_times_gen(term, i)
            out = vec_add(out, term)
        return out

    @staticmethod
    def add(e1: dict, e2: dict) -> dict:
        return vec_add(e1, e2)

    def scale(self, elem: dict, c: Scalar) -> dict:
        if not c:
            return {}
        return {k: c * v for k, v in elem.items()}

    # -- grading ------------------------------------------------------------

    @staticmethod
    def mono_degree(key: tuple) -> int:
        a, alpha = key
        return a + sum(alpha)

    def degree(self, elem: dict):
        """Degree of a homogeneous element, None for zero."""
        degs = {self.mono_degree(k) for k in elem}
        if not degs:
            return None
        if len(degs) > 1:
            raise ReesError(f"inhomogeneous element, degrees {sorted(degs)}")
        return degs.pop()

    def dim(self, d: int) -> int:
        return comb(self.n + d, d) if d >= 0 else 0

    def graded_basis(self, d: int) -> list:
        if d < 0:
            return []
        hit = self._basis_cache.get(d)
        if hit is not None:
            return hit
        keys = []

        def rec(pos, remaining, alpha):
            if pos == self.n:
                keys.append((remaining, tuple(alpha)))
                return
            for e in range(remaining + 1):
                rec(pos + 1, remaining - e, alpha + [e])

        rec(0, d, [])
        keys.sort(reverse=True)
        self._basis_cache[d] = keys
        return keys

    def basis_index(self, d: int) -> dict:
        hit = self._index_cache.get(d)
        if hit is None:
            hit = {k: p for p, k in enumerate(self.graded_basis(d))}
            self._index_cache[d] = hit
        return hit

    def coeff_vec(self, elem: dict, d: int) -> dict:
        """Coordinates of a degree-d element in the monomial basis."""
        idx = self.basis_index(d)
        out = {}
        for key, c in elem.items():
            if self.mono_degree(key) != d:
                raise ReesError(f"monomial {key} not of degree {d}")
            out[idx[key]] = c
        return out

    def from_coeff_vec(self, vec: dict, d: int) -> dict:
        basis = self.graded_basis(d)
        return vec_clean({basis[p]: c for p, c in vec.items()})

    # -- multiplication matrices between graded pieces ----------------------

    def left_mult_block(self, elem: dict, d: int) -> ColMatrix:
        """Matrix of x -> elem*x from degree d to degree d+deg(elem)."""
        k = self.degree(elem)
        if k is None:
            raise ReesError("zero element has no block")
        target = self.basis_index(d + k)
        cols = []
        for key in self.graded_basis(d):
            prod = self.mul(elem, {key: self.base.one})
            cols.append({target[m]: c for m, c in prod.items()})
        return ColMatrix(len(target), len(cols), cols)

    def right_mult_block(self, elem: dict, d: int) -> ColMatrix:
        """Matrix of x -> x*elem from degree d to degree d+deg(elem)."""
        k = self.degree(elem)
        if k is None:
            raise ReesError("zero element has no block")
        target = self.basis_index(d + k)
        cols = []
        for key in self.graded_basis(d):
            prod = self.mul({key: self.base.one}, elem)
            cols.append({target[m]: c for m, c in prod.items()})
        return ColMatrix(len(target), len(cols), cols)

    def right_coeff_vec(self, elem: dict, d: int) -> dict:
        """Coordinates in the basis (monomial * coefficient).

        Left multiplication maps are linear over the base only for
        coefficients written on the right; converting is a triangular
        elimination because moving a coefficient left past a generator
        only creates terms of strictly higher t-degree.
        """
        if self.base.is_point:
            return self.coeff_vec(elem, d)
        idx = self.basis_index(d)
        rem = dict(elem)
        out = {}
        for key in sorted(self.graded_basis(d)):  # ascending t-degree
            f = rem.get(key)
            if not f:
                rem.pop(key, None)
                continue
            out[idx[key]] = f
            rem = vec_add(rem, self.scale(self.mul({key: self.base.one},
                                                   self.from_coeff(f)), -1))
        if vec_clean(rem):
            raise ReesError(f"element not homogeneous of degree {d}")
        return out

    def left_mult_block_rc(self, elem: dict, d: int) -> ColMatrix:
        """Matrix of x -> elem*x in right-normalized coordinates."""
        k = self.degree(elem)
        if k is None:
            raise ReesError("zero element has no block")
        cols = []
        for key in self.graded_basis(d):
            prod = self.mul(elem, {key: self.base.one})
            cols.append(self.right_coeff_vec(prod, d + k))
        return ColMatrix(self.dim(d + k), len(cols), cols)

    # -- serialization and display -------------------------------------------

    def dump_elem(self, elem: dict) -> list:
        return sorted([a, list(alpha), self.base.dump(c)]
                      for (a, alpha), c in elem.items())

    def load_elem(self, data: list) -> dict:
        return {(a, tuple(alpha)): self.base.load(c) for a, alpha, c in data}

    def to_str(self, elem: dict) -> str:
        if not elem:
            return "0"
        parts = []
        for (a, alpha) in sorted(elem, reverse=True):
            c = elem[(a, alpha)]
            word = []
            if a:
                word.append("t" if a == 1 else f"t^{a}")
            for i, e in enumerate(alpha):
                if e:
                    word.append(f"l{i+1}" if e == 1 else f"l{i+1}^{e}")
            cs = self.base.to_str(c)
            if ("+" in cs[1:]) or ("-" in cs[1:]):
                cs = f"({cs})"
            parts.append("*".join([cs] + word) if word else cs)
        return " + ".join(parts)

    # -- structural self-checks ----------------------------------------------

    def pbw_dimensions(self, imax: int) -> list:
        return [len(self.graded_basis(i)) for i in range(imax + 1)]

    def verify_pbw(self, imax: int, gr_degree: int = 3) -> dict:
        """Dimension table plus the two checks with content: associativity
        on all generator triples (the rewrite system's overlaps), and the
        t=0 leading-term property identifying the associated graded with
        the symmetric algebra."""
        dims = self.pbw_dimensions(imax)
        expected = [comb(self.n + i, i) for i in range(imax + 1)]

        gens = [self.t_elem()] + [self.gen(i) for i in range(self.n)]
        if not self.base.is_point:
            gens = gens + [self.from_coeff(self.base.gen(m))
                           for m in range(self.base.nvars)]
        assoc_ok = True
        for x in gens:
            for y in gens:
                yz = [(z, self.mul(y, z)) for z in gens]
                xy = self.mul(x, y)
                for z, yz_prod in yz:
                    if self.mul(xy, z) != self.mul(x, yz_prod):
                        assoc_ok = False

        gr_ok = True
        dcap = min(gr_degree, imax)
        pure = [k for k in self.graded_basis(dcap) if k[0] == 0]
        for (_, alpha) in pure:
            for (_, beta) in pure:
                prod = self.mul({(0, alpha): self.base.one},
                                {(0, beta): self.base.one})
                lead = tuple(a + b for a, b in zip(alpha, beta))
                for (a, gamma), c in prod.items():
                    if a == 0 and (gamma != lead or c != self.base.one):
                        gr_ok = False
                if prod.get((0, lead)) != self.base.one:
                    gr_ok = False

        return {
            "dims": dims,
            "expected": expected,
            "dims_ok": dims == expected,
            "assoc_ok": assoc_ok,
            "gr_ok": gr_ok,
            "ok": dims == expected and assoc_ok and gr_ok,
        }
