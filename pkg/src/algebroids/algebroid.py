"""Presentations of Lie algebroids over QQ or QQ[x_1..x_d].

An algebroid of rank n is a free module on l_1..l_n with a bracket table
[l_i, l_j] = sum_k c^k_ij l_k and an anchor sending l_i to the derivation
sum_m a_i^m d/dx_m.  Validation checks antisymmetry, the anchor-twisted
Jacobi identity, and that the anchor is a bracket homomorphism into vector
fields.  Brackets are stored exactly as given (both orders allowed) so a
one-sided edit is caught as an antisymmetry failure instead of silently
normalizing away.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .scalars import BaseRing, Scalar


class AlgebroidError(ValueError):
    pass


@dataclass
class ValidationReport:
    ok: bool
    failures: list

    def summary(self) -> str:
        if self.ok:
            return "valid"
        return "; ".join(self.failures)


@dataclass
class Algebroid:
    """rank-n algebroid presentation.

    brackets: {(i, j): coeffs} with 0-based i, j and coeffs a length-n tuple
    of base scalars, meaning [l_{i+1}, l_{j+1}] = sum coeffs[k] l_{k+1}.
    anchor: length-n tuple of length-d tuples, anchor[i][m] the coefficient
    of d/dx_m in the image of l_{i+1}.
    """

    base: BaseRing
    rank: int
    brackets: dict
    anchor: tuple
    name: str = ""

    def __post_init__(self) -> None:
        n, d = self.rank, self.base.nvars
        if len(self.anchor) != n or any(len(row) != d for row in self.anchor):
            raise AlgebroidError(f"anchor must be {n} rows of {d} coefficients")
        for (i, j), coeffs in self.brackets.items():
            if not (0 <= i < n and 0 <= j < n):
                raise AlgebroidError(f"bracket index ({i},{j}) out of range")
            if len(coeffs) != n:
                raise AlgebroidError(f"bracket ({i},{j}) needs {n} coefficients")

    # -- structure access ---------------------------------------------------

    def bracket_of(self, i: int, j: int) -> tuple:
        """Coefficients of [l_{i+1}, l_{j+1}], resolving stored orientation."""
        if i == j:
            return tuple(self.base.zero for _ in range(self.rank))
        if (i, j) in self.brackets:
            return tuple(self.brackets[(i, j)])
        if (j, i) in self.brackets:
            return tuple(-c for c in self.brackets[(j, i)])
        return tuple(self.base.zero for _ in range(self.rank))

    def anchor_derivation(self, i: int, f: Scalar) -> Scalar:
        """Apply the anchor image of l_{i+1} to a base element."""
        out = self.base.zero
        for m in range(self.base.nvars):
            a = self.anchor[i][m]
            if a:
                out = out + a * self.base.diff(f, m)
        return out

    def anchor_bracket_derivation(self, coeffs, f: Scalar) -> Scalar:
        """Apply the anchor image of sum coeffs[k] l_{k+1} to f."""
        out = self.base.zero
        for k, c in enumerate(coeffs):
            if c:
                out = out + c * self.anchor_derivation(k, f)
        return out

    @property
    def is_abelian(self) -> bool:
        return all(not c for coeffs in self.brackets.values() for c in coeffs)

    @property
    def has_constant_structure(self) -> bool:
        """Constant bracket tables and anchor: graded multiplication blocks
        then have rational entries on the standard monomial basis."""
        consts = all(self.base.is_constant(c)
                     for coeffs in self.brackets.values() for c in coeffs)
        return consts and all(self.base.is_constant(a)
                              for row in self.anchor for a in row)

    # -- axioms -------------------------------------------------------------

    def validate(self) -> ValidationReport:
        failures = []
        n = self.rank
        zero = self.base.zero

        for i in range(n):
            if (i, i) in self.brackets and any(self.brackets[(i, i)]):
                failures.append(f"antisymmetry: [l{i+1},l{i+1}] != 0")
        for (i, j) in self.brackets:
            if i != j and (j, i) in self.brackets:
                lhs = self.brackets[(i, j)]
                rhs = self.brackets[(j, i)]
                if any(a + b for a, b in zip(lhs, rhs)):
                    failures.append(
                        f"antisymmetry: [l{i+1},l{j+1}] != -[l{j+1},l{i+1}]")

        # twisted Jacobi: [[l_i,l_j],l_k] expands through the Leibniz rule
        # for function coefficients, [f u, v] = f [u,v] - (anchor(v) f) u
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(j + 1, n):
                    residual = [zero] * n
                    for (a, b, c) in ((i, j, k), (j, k, i), (k, i, j)):
                        cab = self.bracket_of(a, b)
                        for m in range(n):
                            if cab[m]:
                                cmk = self.bracket_of(m, c)
                                for p in range(n):
                                    if cmk[p]:
                                        residual[p] = residual[p] + cab[m] * cmk[p]
                            dterm = self.anchor_derivation(c, cab[m])
                            if dterm:
                                residual[m] = residual[m] - dterm
                    if any(residual):
                        terms = " + ".join(
                            f"({self.base.to_str(r)})*l{p+1}"
                            for p, r in enumerate(residual) if r)
                        failures.append(
                            f"jacobi({i+1},{j+1},{k+1}): residual {terms}")

        # anchor respects brackets: anchor([l_i,l_j]) = [anchor(l_i), anchor(l_j)]
        d = self.base.nvars
        for i in range(n):
            for j in range(i + 1, n):
                cij = self.bracket_of(i, j)
                for m in range(d):
                    lhs = zero
                    for k, c in enumerate(cij):
                        if c:
                            lhs = lhs + c * self.anchor[k][m]
                    rhs = zero
                    for r in range(d):
                        if self.anchor[i][r]:
                            rhs = rhs + self.anchor[i][r] * self.base.diff(self.anchor[j][m], r)
                        if self.anchor[j][r]:
                            rhs = rhs - self.anchor[j][r] * self.base.diff(self.anchor[i][m], r)
                    if lhs - rhs:
                        failures.append(
                            f"anchor({i+1},{j+1}): component d/dx_{m+1} "
                            f"mismatch {self.base.to_str(lhs - rhs)}")

        return ValidationReport(ok=not failures, failures=failures)

    # -- derived presentations ---------------------------------------------

    def scaled(self, hbar) -> "Algebroid":
        """Scale bracket and anchor by a rational parameter; 0 degenerates
        to the abelian algebroid on the same module."""
        h = self.base.parse(hbar) if isinstance(hbar, str) else self.base.from_rational(hbar)
        brackets = {ij: tuple(h * c for c in coeffs)
                    for ij, coeffs in self.brackets.items()}
        anchor = tuple(tuple(h * a for a in row) for row in self.anchor)
        return Algebroid(self.base, self.rank, brackets, anchor,
                         name=f"{self.name or 'algebroid'}@{hbar}")

    def frozen_at(self, point: tuple) -> "Algebroid":
        """Specialize all structure functions at a base point, yielding a
        presentation over QQ.  Meaningful for comparing with evaluations of
        graded blocks when the anchor vanishes at the point or is discarded."""
        pt = BaseRing()
        brackets = {ij: tuple(self.base.evaluate(c, point) for c in coeffs)
                    for ij, coeffs in self.brackets.items()}
        anchor = tuple(() for _ in range(self.rank))
        return Algebroid(pt, self.rank, brackets, anchor,
                         name=f"{self.name or 'algebroid'}|{point}")

    def content_key(self) -> str:
        parts = [self.base.content_key(), str(self.rank)]
        for (i, j) in sorted(self.brackets):
            parts.append(f"b{i},{j}:" + repr([self.base.dump(c) for c in self.brackets[(i, j)]]))
        for row in self.anchor:
            parts.append("a:" + repr([self.base.dump(c) for c in row]))
        return "|".join(parts)


# ---------------------------------------------------------------------------
# builtin families


def abelian(n: int) -> Algebroid:
    base = BaseRing()
    return Algebroid(base, n, {}, tuple(() for _ in range(n)), name=f"abelian{n}")


def from_lie_algebra(table: dict, rank: int, name: str = "") -> Algebroid:
    """Point-base algebroid from integer/rational structure constants,
    table {(i, j): {k: c}} 0-based with i < j."""
    base = BaseRing()
    brackets = {}
    for (i, j), row in table.items():
        coeffs = [base.zero] * rank
        for k, c in row.items():
            coeffs[k] = base.parse(c) if isinstance(c, str) else base.from_rational(c)
        brackets[(i, j)] = tuple(coeffs)
    return Algebroid(base, rank, brackets, tuple(() for _ in range(rank)), name=name)


def sl2() -> Algebroid:
    # generators ordered e, f, h: [e,f] = h, [h,e] = 2e, [h,f] = -2f
    return from_lie_algebra(
        {(0, 1): {2: 1}, (0, 2): {0: -2}, (1, 2): {1: 2}},
        rank=3, name="sl2")


def tangent_affine(d: int) -> Algebroid:
    """Tangent algebroid of affine d-space: the envelope homogenizes the
    Weyl algebra."""
    base = BaseRing(tuple(f"x{m+1}" for m in range(d)) if d > 1 else ("x",))
    anchor = tuple(tuple(base.from_rational(1 if m == i else 0) for m in range(d))
                   for i in range(d))
    return Algebroid(base, d, {}, anchor, name=f"tangent{d}")


weyl = tangent_affine


def euler() -> Algebroid:
    """Rank one on QQ[x] with anchor x d/dx: nonconstant anchor, so the
    normal form genuinely moves coefficients."""
    base = BaseRing(("x",))
    return Algebroid(base, 1, {}, ((base.parse("x"),),), name="euler")


def borel() -> Algebroid:
    """Rank two on QQ[x]: l1 -> d/dx, l2 -> x d/dx, [l1, l2] = l1."""
    base = BaseRing(("x",))
    brackets = {(0, 1): (base.from_rational(1), base.zero)}
    anchor = ((base.from_rational(1),), (base.parse("x"),))
    return Algebroid(base, 2, brackets, anchor, name="borel")


def x_nilpotent() -> Algebroid:
    """Rank two on QQ[x], zero anchor, [l1, l2] = x l1: nonconstant bracket
    functions with trivial anchor, the minimal witness that graded blocks
    can carry polynomial entries."""
    base = BaseRing(("x",))
    brackets = {(0, 1): (base.parse("x"), base.zero)}
    anchor = ((base.zero,), (base.zero,))
    return Algebroid(base, 2, brackets, anchor, name="x_nilpotent")


BUILTINS = {
    "abelian1": lambda: abelian(1),
    "abelian2": lambda: abelian(2),
    "abelian3": lambda: abelian(3),
    "sl2": sl2,
    "weyl1": lambda: tangent_affine(1),
    "weyl2": lambda: tangent_affine(2),
    "euler": euler,
    "borel": borel,
    "x_nilpotent": x_nilpotent,
}


def algebroid_from_dict(cfg: dict) -> Algebroid:
    """Build from a decoded config mapping.

    Expected shape:
      {"rank": n, "variables": [..], "name": "...",
       "bracket": {"i,j": [[k, "coeff"], ...]},
       "anchor": {"i": [["x", "coeff"], ...]}}
    Indices are 1-based in configs.
    """
    if "builtin" in cfg:
        key = cfg["builtin"]
        if key not in BUILTINS:
            raise AlgebroidError(f"unknown builtin {key!r}; have {sorted(BUILTINS)}")
        alg = BUILTINS[key]()
        if "hbar" in cfg:
            alg = alg.scaled(cfg["hbar"])
        return alg
    rank = int(cfg["rank"])
    variables = tuple(cfg.get("variables", ()))
    base = BaseRing(variables)
    brackets = {}
    for key, terms in cfg.get("bracket", {}).items():
        i_s, j_s = key.split(",")
        i, j = int(i_s) - 1, int(j_s) - 1
        coeffs = [base.zero] * rank
        for k, coeff in terms:
            coeffs[int(k) - 1] = coeffs[int(k) - 1] + base.parse(coeff)
        brackets[(i, j)] = tuple(coeffs)
    var_index = {v: m for m, v in enumerate(variables)}
    anchor_rows = []
    anchor_cfg = cfg.get("anchor", {})
    for i in range(rank):
        row = [base.zero] * len(variables)
        for var, coeff in anchor_cfg.get(str(i + 1), []):
            if var not in var_index:
                raise AlgebroidError(f"anchor names unknown variable {var!r}")
            m = var_index[var]
            row[m] = row[m] + base.parse(coeff)
        anchor_rows.append(tuple(row))
    alg = Algebroid(base, rank, brackets, tuple(anchor_rows),
                    name=cfg.get("name", ""))
    if "hbar" in cfg:
        alg = alg.scaled(cfg["hbar"])
    return alg
