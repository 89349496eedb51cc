"""Sparse exact linear algebra over QQ and QQ[x_1..x_d].

Everything downstream (normal forms, complexes, section functors) reduces
to ranks, kernels, solves and homology of sparse matrices.  Matrices are
stored column-wise as dicts {row_index: scalar}; scalars are mpq for a
point base and sympy PolyElements otherwise (see scalars.BaseRing).

Over QQ the workhorse is an insertion echelon basis with optional shadow
tracking, which yields rank, kernel, solve, membership, complements and
homology representatives from one primitive.  Over a univariate ring we
keep a hand-rolled Smith normal form with unimodular transform tracking;
its invariant factors certify saturation of images, which upgrades rank
equalities to genuine exactness statements.  Multivariate matrices get
exact ranks through the fraction field, or probabilistic-but-exact ranks
by evaluation at seeded integer points.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from gmpy2 import mpq
from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

from .scalars import BaseRing, Scalar

Vec = dict  # {index: scalar}, entries always nonzero


class LinalgError(ValueError):
    pass


class EvaluationBudgetError(LinalgError):
    """Raised when evaluation-point sampling keeps hitting excluded loci."""


# ---------------------------------------------------------------------------
# sparse vectors


def vec_clean(v: Vec) -> Vec:
    return {k: c for k, c in v.items() if c}


def vec_add(a: Vec, b: Vec) -> Vec:
    out = dict(a)
    for k, c in b.items():
        s = out.get(k, 0) + c
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def vec_axpy(out: Vec, c, v: Vec) -> None:
    """In place: out += c*v."""
    for k, val in v.items():
        s = out.get(k, 0) + c * val
        if s:
            out[k] = s
        else:
            out.pop(k, None)


def vec_scale(v: Vec, c) -> Vec:
    if not c:
        return {}
    return {k: c * val for k, val in v.items()}


# ---------------------------------------------------------------------------
# column-sparse matrices


@dataclass
class ColMatrix:
    nrows: int
    ncols: int
    cols: list  # list[Vec]

    def __post_init__(self) -> None:
        if len(self.cols) != self.ncols:
            raise LinalgError("column count mismatch")

    @staticmethod
    def zeros(nrows: int, ncols: int) -> "ColMatrix":
        return ColMatrix(nrows, ncols, [dict() for _ in range(ncols)])

    @staticmethod
    def identity(n: int, one) -> "ColMatrix":
        return ColMatrix(n, n, [{i: one} for i in range(n)])

    @staticmethod
    def from_cols(cols: Iterable[Vec], nrows: int) -> "ColMatrix":
        cs = [vec_clean(c) for c in cols]
        return ColMatrix(nrows, len(cs), cs)

    @staticmethod
    def from_dense(rows: list) -> "ColMatrix":
        nr = len(rows)
        nc = len(rows[0]) if rows else 0
        cols = [dict() for _ in range(nc)]
        for i, row in enumerate(rows):
            for j, val in enumerate(row):
                if val:
                    cols[j][i] = val
        return ColMatrix(nr, nc, cols)

    def entry(self, i: int, j: int):
        return self.cols[j].get(i, 0)

    def to_dense(self, zero) -> list:
        out = [[zero] * self.ncols for _ in range(self.nrows)]
        for j, col in enumerate(self.cols):
            for i, val in col.items():
                out[i][j] = val
        return out

    def transpose(self) -> "ColMatrix":
        cols = [dict() for _ in range(self.nrows)]
        for j, col in enumerate(self.cols):
            for i, val in col.items():
                cols[i][j] = val
        return ColMatrix(self.ncols, self.nrows, cols)

    def apply(self, x: Vec) -> Vec:
        out: Vec = {}
        for j, c in x.items():
            if c:
                vec_axpy(out, c, self.cols[j])
        return out

    def mul(self, other: "ColMatrix") -> "ColMatrix":
        if self.ncols != other.nrows:
            raise LinalgError(f"shape mismatch {self.ncols} vs {other.nrows}")
        return ColMatrix(self.nrows, other.ncols, [self.apply(c) for c in other.cols])

    def add(self, other: "ColMatrix") -> "ColMatrix":
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise LinalgError("shape mismatch")
        return ColMatrix(
            self.nrows, self.ncols,
            [vec_add(a, b) for a, b in zip(self.cols, other.cols)],
        )

    def scale(self, c) -> "ColMatrix":
        return ColMatrix(self.nrows, self.ncols, [vec_scale(col, c) for col in self.cols])

    def hstack(self, other: "ColMatrix") -> "ColMatrix":
        if self.nrows != other.nrows:
            raise LinalgError("row mismatch")
        return ColMatrix(self.nrows, self.ncols + other.ncols,
                         [dict(c) for c in self.cols] + [dict(c) for c in other.cols])

    def vstack(self, other: "ColMatrix") -> "ColMatrix":
        if self.ncols != other.ncols:
            raise LinalgError("column mismatch")
        cols = []
        for a, b in zip(self.cols, other.cols):
            c = dict(a)
            for i, val in b.items():
                c[i + self.nrows] = val
            cols.append(c)
        return ColMatrix(self.nrows + other.nrows, self.ncols, cols)

    def map_entries(self, f: Callable) -> "ColMatrix":
        return ColMatrix(
            self.nrows, self.ncols,
            [vec_clean({i: f(v) for i, v in col.items()}) for col in self.cols],
        )

    def is_zero(self) -> bool:
        return all(not col for col in self.cols)

    def nnz(self) -> int:
        return sum(len(c) for c in self.cols)

    def equals(self, other: "ColMatrix") -> bool:
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            return False
        return all(_cols_equal(a, b) for a, b in zip(self.cols, other.cols))


def _cols_equal(a: Vec, b: Vec) -> bool:
    if set(a) != set(b):
        return False
    return all(a[k] == b[k] for k in a)


# ---------------------------------------------------------------------------
# insertion echelon over QQ

class EchelonBasis:
    """Incremental row-echelon structure over QQ.

    Vectors are inserted one at a time; each is reduced against the stored
    pivots and either vanishes (a dependence, witnessed by the shadow when
    tracking is on) or contributes a new pivot.  Shadows record how each
    stored vector was assembled from the inserted ones, giving kernels and
    solution vectors without a second elimination pass.
    """

    def __init__(self, track: bool = False):
        self.pivots: dict = {}   # pivot index -> normalized vector
        self.shadows: dict = {}  # pivot index -> shadow of that vector
        self.track = track

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def reduce(self, vec: Vec, shadow: Optional[Vec] = None):
        v = vec_clean(vec)
        s = dict(shadow) if shadow is not None else None
        while v:
            p = min(v)
            piv = self.pivots.get(p)
            if piv is None:
                break
            c = v[p]
            vec_axpy(v, -c, piv)
            if s is not None and self.track:
                vec_axpy(s, -c, self.shadows[p])
        return v, s

    def insert(self, vec: Vec, shadow: Optional[Vec] = None) -> Optional[Vec]:
        """Insert; returns None if the vector was independent, otherwise the
        shadow of the dependence (or {} when not tracking)."""
        v, s = self.reduce(vec, shadow if shadow is not None else ({} if self.track else None))
        if not v:
            return s if s is not None else {}
        p = min(v)
        inv = 1 / mpq(v[p])
        self.pivots[p] = vec_scale(v, inv)
        if self.track:
            self.shadows[p] = vec_scale(s, inv) if s else {}
        return None

    def contains(self, vec: Vec) -> bool:
        v, _ = self.reduce(vec)
        return not v

    def solve(self, target: Vec) -> Optional[Vec]:
        """Coefficients x with target = sum x_j * (j-th inserted vector),
        in terms of the shadow keys used at insertion.  None if outside."""
        if not self.track:
            raise LinalgError("solve requires shadow tracking")
        v, s = self.reduce(target, {})
        if v:
            return None
        return {k: -c for k, c in s.items() if c}


def rank_qq(m: ColMatrix) -> int:
    eb = EchelonBasis()
    for col in sorted(m.cols, key=len):
        eb.insert(col)
    return eb.rank


def kernel_qq(m: ColMatrix) -> list:
    """Basis of ker(m) as vectors over column indices."""
    eb = EchelonBasis(track=True)
    out = []
    for j, col in enumerate(m.cols):
        dep = eb.insert(col, {j: mpq(1)})
        if dep is not None:
            out.append(vec_clean(dep))
    return out


def solve_qq(m: ColMatrix, b: Vec) -> Optional[Vec]:
    eb = EchelonBasis(track=True)
    for j, col in enumerate(m.cols):
        eb.insert(col, {j: mpq(1)})
    return eb.solve(b)


def complement_indices_qq(cols: list, dim: int) -> list:
    """Unit-vector indices completing span(cols) to the full space."""
    eb = EchelonBasis()
    for col in cols:
        eb.insert(col)
    out = []
    for i in range(dim):
        if eb.insert({i: mpq(1)}) is None:
            out.append(i)
    return out


def homology_reps_qq(outgoing: ColMatrix, incoming: ColMatrix) -> list:
    """Representatives of ker(outgoing)/im(incoming), assuming the image
    lands in the kernel.  Returns ambient vectors."""
    if outgoing.ncols != incoming.nrows:
        raise LinalgError("middle dimensions disagree")
    ker = kernel_qq(outgoing)
    eb = EchelonBasis()
    for col in incoming.cols:
        eb.insert(col)
    reps = []
    for k in ker:
        if eb.insert(k) is None:
            reps.append(k)
    return reps


class QuotientSpace:
    """ker/im with chosen representatives and coordinate extraction."""

    def __init__(self, outgoing: ColMatrix, incoming: ColMatrix):
        self.ambient_dim = outgoing.ncols
        self._eb = EchelonBasis(track=True)
        for col in incoming.cols:
            self._eb.insert(col, {})
        self.reps = []
        for k in kernel_qq(outgoing):
            if self._eb.insert(k, {("r", len(self.reps)): mpq(1)}) is None:
                self.reps.append(k)

    @property
    def dim(self) -> int:
        return len(self.reps)

    def coords(self, vec: Vec) -> Vec:
        """Class of vec in the chosen basis; vec must lie in ker(outgoing)."""
        sol = self._eb.solve(vec)
        if sol is None:
            raise LinalgError("vector not in kernel + image span")
        return {key[1]: c for key, c in sol.items() if isinstance(key, tuple)}

    def matrix_of(self, images: list) -> ColMatrix:
        """Matrix of a linear map into this quotient, given ambient images
        of the domain's basis vectors."""
        return ColMatrix.from_cols([self.coords(v) for v in images], self.dim)


# ---------------------------------------------------------------------------
# polynomial ranks


def rank_poly_exact(m: ColMatrix, base: BaseRing) -> int:
    if m.nrows == 0 or m.ncols == 0:
        return 0
    F = QQ.frac_field(*base._ring.symbols)
    dense = [[F.convert(m.entry(i, j)) if m.entry(i, j) else F.zero
              for j in range(m.ncols)] for i in range(m.nrows)]
    return DomainMatrix(dense, (m.nrows, m.ncols), F).rank()


def rank_poly_eval(m: ColMatrix, base: BaseRing, *, seed: int = 0, samples: int = 3,
                   lo: int = -10**6, hi: int = 10**6, avoid: tuple = ()) -> int:
    """Max rank over evaluations at seeded integer points.  Points where an
    avoided polynomial vanishes are resampled, with a hard retry budget."""
    rng = random.Random(seed)
    best = 0
    budget = 64
    got = 0
    while got < samples:
        if budget <= 0:
            raise EvaluationBudgetError(
                "could not sample a point off the excluded locus")
        budget -= 1
        pt = tuple(rng.randint(lo, hi) for _ in range(base.nvars))
        if any(not base.evaluate(g, pt) for g in avoid):
            continue
        got += 1
        ev = m.map_entries(lambda p: base.evaluate(p, pt))
        best = max(best, rank_qq(ev))
    return best


def rank(m: ColMatrix, base: BaseRing, strategy: str = "exact", **kw) -> int:
    if base.is_point:
        return rank_qq(m)
    if strategy == "exact":
        return rank_poly_exact(m, base)
    if strategy == "evaluation":
        return rank_poly_eval(m, base, **kw)
    raise LinalgError(f"unknown strategy {strategy!r}")


# ---------------------------------------------------------------------------
# Smith normal form over QQ and QQ[x] with transform tracking


@dataclass
class SmithForm:
    left: list          # dense unimodular, left @ m @ right == diag
    right: list
    diag: list          # full main diagonal, invariant factors first
    det_left: mpq
    det_right: mpq

    @property
    def invariant_factors(self) -> list:
        return [d for d in self.diag if d]

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)


class _Ops:
    """Euclidean-domain hooks shared by the QQ and QQ[x] paths."""

    def __init__(self, base: BaseRing):
        self.base = base
        if not base.is_point and base.nvars != 1:
            raise LinalgError("normal form needs a point or univariate base")

    def deg(self, a) -> int:
        if not a:
            return -1
        if self.base.is_point:
            return 0
        return int(a.degree())

    def divmod(self, a, b):
        if self.base.is_point:
            return a / b, mpq(0)
        return a.div(b)

    def monic_unit(self, a) -> mpq:
        if self.base.is_point:
            return mpq(a)
        return mpq(a.LC)


def smith_form(m: ColMatrix, base: BaseRing) -> SmithForm:
    ops = _Ops(base)
    nr, nc = m.nrows, m.ncols
    zero, one = base.zero, base.one
    a = m.to_dense(zero)
    left = [[one if i == j else zero for j in range(nr)] for i in range(nr)]
    right = [[one if i == j else zero for j in range(nc)] for i in range(nc)]
    det_l, det_r = mpq(1), mpq(1)

    def swap_rows(i, j):
        nonlocal det_l
        if i != j:
            a[i], a[j] = a[j], a[i]
            left[i], left[j] = left[j], left[i]
            det_l = -det_l

    def swap_cols(i, j):
        nonlocal det_r
        if i != j:
            for row in a:
                row[i], row[j] = row[j], row[i]
            for row in right:
                row[i], row[j] = row[j], row[i]
            det_r = -det_r

    def row_axpy(dst, src, q):
        # row_dst -= q * row_src
        for k in range(nc):
            a[dst][k] = a[dst][k] - q * a[src][k]
        for k in range(nr):
            left[dst][k] = left[dst][k] - q * left[src][k]

    def col_axpy(dst, src, q):
        for row in a:
            row[dst] = row[dst] - q * row[src]
        for row in right:
            row[dst] = row[dst] - q * row[src]

    def scale_row(i, c):
        nonlocal det_l
        for k in range(nc):
            a[i][k] = c * a[i][k]
        for k in range(nr):
            left[i][k] = c * left[i][k]
        det_l = det_l * mpq(c if base.is_point else c.LC)

    t = 0
    while t < min(nr, nc):
        # minimal-degree nonzero pivot in the trailing block
        pos = None
        best = None
        for i in range(t, nr):
            for j in range(t, nc):
                if a[i][j]:
                    d = ops.deg(a[i][j])
                    if best is None or d < best:
                        best, pos = d, (i, j)
        if pos is None:
            break
        swap_rows(t, pos[0])
        swap_cols(t, pos[1])
        while True:
            dirty = False
            for i in range(t + 1, nr):
                if a[i][t]:
                    q, r = ops.divmod(a[i][t], a[t][t])
                    row_axpy(i, t, q)
                    if r:
                        swap_rows(t, i)
                        dirty = True
            for j in range(t + 1, nc):
                if a[t][j]:
                    q, r = ops.divmod(a[t][j], a[t][t])
                    col_axpy(j, t, q)
                    if r:
                        swap_cols(t, j)
                        dirty = True
            if dirty:
                continue
            if any(a[i][t] for i in range(t + 1, nr)) or any(
                    a[t][j] for j in range(t + 1, nc)):
                continue
            # pivot must divide the rest of the block
            offender = None
            for i in range(t + 1, nr):
                for j in range(t + 1, nc):
                    if a[i][j]:
                        _, r = ops.divmod(a[i][j], a[t][t])
                        if r:
                            offender = i
                            break
                if offender is not None:
                    break
            if offender is None:
                break
            row_axpy(t, offender, -one)
        u = ops.monic_unit(a[t][t])
        if u != 1:
            scale_row(t, _inv_scalar(base, u))
        t += 1

    diag = [a[i][i] for i in range(min(nr, nc))]
    return SmithForm(left=left, right=right, diag=diag,
                     det_left=det_l, det_right=det_r)


def _inv_scalar(base: BaseRing, u: mpq):
    inv = 1 / mpq(u)
    if base.is_point:
        return inv
    return base.from_rational(inv.numerator, inv.denominator)


def kernel_poly_univariate(m: ColMatrix, base: BaseRing) -> list:
    """Free basis of ker(m) over QQ[x]: trailing columns of the Smith right
    transform."""
    sf = smith_form(m, base)
    r = sf.rank
    out = []
    for j in range(r, m.ncols):
        col = {i: sf.right[i][j] for i in range(m.ncols) if sf.right[i][j]}
        out.append(col)
    return out


def kernel(m: ColMatrix, base: BaseRing) -> list:
    if base.is_point:
        return kernel_qq(m)
    if base.nvars == 1:
        return kernel_poly_univariate(m, base)
    if all(base.is_constant(v) for col in m.cols for v in col.values()):
        consts = m.map_entries(base.constant_value)
        ker = kernel_qq(consts)
        return [{i: base.from_rational(c.numerator, c.denominator)
                 for i, c in k.items()} for k in ker]
    raise LinalgError("multivariate kernels only for constant entries")


def image_saturated_univariate(m: ColMatrix, base: BaseRing) -> bool:
    """True when coker(m) is torsion-free, i.e. all invariant factors are
    units.  Makes rank equalities certify exactness over QQ[x]."""
    sf = smith_form(m, base)
    return all(ops_deg_is_unit(base, d) for d in sf.invariant_factors)


def ops_deg_is_unit(base: BaseRing, d) -> bool:
    if not d:
        return False
    return base.is_constant(d)


def middle_exact_univariate(outgoing: ColMatrix, incoming: ColMatrix,
                            base: BaseRing) -> bool:
    """Exactness of free(QQ[x]) at the middle of incoming -> . -> outgoing,
    given that the composite vanishes: rank split plus saturated image."""
    n = outgoing.ncols
    sf_in = smith_form(incoming, base)
    r_out = smith_form(outgoing, base).rank
    if sf_in.rank + r_out != n:
        return False
    return all(ops_deg_is_unit(base, d) for d in sf_in.invariant_factors)
