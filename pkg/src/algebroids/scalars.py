"""Exact scalar arithmetic for the whole package.

Two kinds of coefficient ring appear: the rationals (a point base) and
sparse multivariate polynomial rings over the rationals.  Rationals are
gmpy2 ``mpq`` values; polynomials are sympy ``PolyElement`` values from a
ring with graded-lex monomial order.  Both support ``+ - *`` natively and
are falsy exactly when zero, so downstream code treats scalars uniformly
and only comes here for construction, differentiation, evaluation and
serialization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import sympy
from gmpy2 import mpq
from sympy.polys.domains import QQ
from sympy.polys.rings import ring as _sympy_ring

Scalar = Any  # mpq for a point base, sympy PolyElement otherwise


class ScalarError(ValueError):
    pass


@dataclass(frozen=True)
class BaseRing:
    """QQ or QQ[x_1..x_d] with its partial derivatives.

    ``variables`` empty means the point base; then every scalar is an mpq.
    Characteristic is zero by construction.
    """

    variables: tuple[str, ...] = ()
    _ring: Any = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self) -> None:
        if len(set(self.variables)) != len(self.variables):
            raise ScalarError(f"duplicate variables: {self.variables}")
        if self.variables:
            R = _sympy_ring(",".join(self.variables), QQ, "grlex")[0]
            object.__setattr__(self, "_ring", R)

    @property
    def is_point(self) -> bool:
        return not self.variables

    @property
    def nvars(self) -> int:
        return len(self.variables)

    @property
    def zero(self) -> Scalar:
        return mpq(0) if self.is_point else self._ring.zero

    @property
    def one(self) -> Scalar:
        return mpq(1) if self.is_point else self._ring.one

    def from_rational(self, p, q=1) -> Scalar:
        c = mpq(p) / mpq(q)
        if self.is_point:
            return c
        return self._ring.ground_new(QQ(int(c.numerator), int(c.denominator)))

    def gen(self, m: int) -> Scalar:
        if self.is_point:
            raise ScalarError("point base has no variables")
        return self._ring.gens[m]

    def parse(self, text: str | int) -> Scalar:
        """Parse a human-entered coefficient, e.g. ``"x^2 - 1/2*y"``."""
        if isinstance(text, int):
            return self.from_rational(text)
        expr = sympy.sympify(text.replace("^", "**"), rational=True)
        if self.is_point:
            if not expr.is_Rational:
                raise ScalarError(f"{text!r} is not a rational constant")
            return mpq(expr.p, expr.q)
        allowed = set(self.variables)
        for s in expr.free_symbols:
            if str(s) not in allowed:
                raise ScalarError(f"unknown variable {s} in {text!r}")
        return self._ring.from_expr(expr)

    def diff(self, f: Scalar, m: int) -> Scalar:
        """Partial derivative with respect to variable number m (0-based)."""
        if self.is_point:
            return mpq(0)
        return f.diff(self._ring.gens[m])

    def evaluate(self, f: Scalar, point: tuple) -> mpq:
        if self.is_point:
            return mpq(f)
        if len(point) != self.nvars:
            raise ScalarError("wrong number of coordinates")
        out = f.evaluate(list(zip(self._ring.gens, [QQ(p) for p in point])))
        return mpq(out)

    def is_constant(self, f: Scalar) -> bool:
        if self.is_point:
            return True
        return f.is_ground

    def constant_value(self, f: Scalar) -> mpq:
        if self.is_point:
            return mpq(f)
        if not f.is_ground:
            raise ScalarError(f"{f} is not constant")
        return mpq(f.coeff(1)) if f else mpq(0)

    def total_degree(self, f: Scalar) -> int:
        if self.is_point or not f:
            return 0
        return max(sum(mon) for mon in f.monoms())

    # -- serialization used by the on-disk cache and reports ----------------

    def dump(self, f: Scalar) -> str | list:
        if self.is_point:
            return str(mpq(f))
        return sorted([list(mon), str(coef)] for mon, coef in f.terms())

    def load(self, data: str | list) -> Scalar:
        if self.is_point:
            return mpq(data)
        out = self._ring.zero
        for mon, coef in data:
            c = mpq(coef)
            out += self._ring.from_dict(
                {tuple(mon): QQ(int(c.numerator), int(c.denominator))})
        return out

    def to_str(self, f: Scalar) -> str:
        return str(f)

    def content_key(self) -> str:
        return "QQ" if self.is_point else "QQ[" + ",".join(self.variables) + "]"


def as_mpq(value) -> mpq:
    return mpq(value)
