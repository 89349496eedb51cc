"""Algebroid presentations and axiom validation.

Hand-checked oracles:
  - [DERIVED] doubling c^h_ef on ONE side only breaks antisymmetry.
  - [DERIVED] a consistent doubling [e,f] = 2h still satisfies Jacobi (it
    is an isomorphic Lie algebra: rescale e), so validation must pass.
  - [DERIVED] corrupting [h,e] = 2e to 3e breaks Jacobi with residual h on
    the triple (e,f,h): [[e,f],h] + [[f,h],e] + [[h,e],f] = 0 - 2h + 3h.
  - [DERIVED] anchors d/dx and x d/dx need [l1,l2] = l1; with zero bracket
    the anchor-compatibility check must fail.
"""

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from algebroids.algebroid import (
    Algebroid,
    AlgebroidError,
    abelian,
    algebroid_from_dict,
    borel,
    euler,
    sl2,
    tangent_affine,
    x_nilpotent,
)
from algebroids.scalars import BaseRing


class TestBuiltins:
    @pytest.mark.parametrize("alg", [
        abelian(1), abelian(3), sl2(), tangent_affine(1), tangent_affine(2),
        euler(), borel(), x_nilpotent(),
    ])
    def test_validate(self, alg):
        report = alg.validate()
        assert report.ok, report.summary()

    def test_sl2_table(self):
        a = sl2()
        assert a.bracket_of(0, 1) == (mpq(0), mpq(0), mpq(1))
        # stored one way, negated the other
        assert a.bracket_of(1, 0) == (mpq(0), mpq(0), mpq(-1))
        assert a.bracket_of(2, 0) == (mpq(2), mpq(0), mpq(0))
        assert a.bracket_of(1, 1) == (mpq(0),) * 3

    def test_anchor_derivation(self):
        e = euler()
        f = e.base.parse("x^3 + 2")
        assert e.anchor_derivation(0, f) == e.base.parse("3*x^3")

    def test_constant_structure_flags(self):
        assert sl2().has_constant_structure
        assert tangent_affine(2).has_constant_structure
        assert not euler().has_constant_structure
        assert not x_nilpotent().has_constant_structure
        assert abelian(2).is_abelian and not sl2().is_abelian


class TestAxiomFailures:
    def test_one_sided_doubling_breaks_antisymmetry(self):
        base = BaseRing()
        brackets = {
            (0, 1): (mpq(0), mpq(0), mpq(2)),   # edited side
            (1, 0): (mpq(0), mpq(0), mpq(-1)),  # stale reverse entry
            (0, 2): (mpq(-2), mpq(0), mpq(0)),
            (1, 2): (mpq(0), mpq(2), mpq(0)),
        }
        alg = Algebroid(base, 3, brackets, ((), (), ()))
        report = alg.validate()
        assert not report.ok
        assert any("antisymmetry" in f for f in report.failures)

    def test_consistent_doubling_is_still_lie(self):
        # [e,f] = 2h with everything else standard is isomorphic to the
        # standard presentation (scale e by 1/2), so no axiom can fail
        base = BaseRing()
        brackets = {
            (0, 1): (mpq(0), mpq(0), mpq(2)),
            (0, 2): (mpq(-2), mpq(0), mpq(0)),
            (1, 2): (mpq(0), mpq(2), mpq(0)),
        }
        alg = Algebroid(base, 3, brackets, ((), (), ()))
        assert alg.validate().ok

    def test_corrupted_he_breaks_jacobi(self):
        base = BaseRing()
        brackets = {
            (0, 1): (mpq(0), mpq(0), mpq(1)),
            (0, 2): (mpq(-3), mpq(0), mpq(0)),  # [h,e] = 3e instead of 2e
            (1, 2): (mpq(0), mpq(2), mpq(0)),
        }
        alg = Algebroid(base, 3, brackets, ((), (), ()))
        report = alg.validate()
        assert not report.ok
        assert any("jacobi(1,2,3)" in f and "l3" in f for f in report.failures)

    def test_incompatible_anchor(self):
        base = BaseRing(("x",))
        anchor = ((base.from_rational(1),), (base.parse("x"),))
        alg = Algebroid(base, 2, {}, anchor)
        report = alg.validate()
        assert not report.ok
        assert any("anchor(1,2)" in f for f in report.failures)

    def test_shape_errors(self):
        base = BaseRing()
        with pytest.raises(AlgebroidError):
            Algebroid(base, 2, {(0, 3): (mpq(0), mpq(0))}, ((), ()))
        with pytest.raises(AlgebroidError):
            Algebroid(base, 2, {}, ((),))


class TestScaling:
    @pytest.mark.parametrize("h", [0, 1, 2, "1/2"])
    def test_scaled_family_validates(self, h):
        for alg in (sl2(), borel()):
            scaled = alg.scaled(h)
            assert scaled.validate().ok

    def test_zero_scaling_is_abelian(self):
        assert sl2().scaled(0).is_abelian
        assert borel().scaled(0).is_abelian

    @given(st.integers(-6, 6))
    @settings(max_examples=20, deadline=None)
    def test_scaled_bracket_values(self, h):
        s = sl2().scaled(h)
        assert s.bracket_of(0, 1) == (mpq(0), mpq(0), mpq(h))
        assert s.validate().ok

    def test_frozen_at_point(self):
        frozen = x_nilpotent().frozen_at((5,))
        assert frozen.base.is_point
        assert frozen.bracket_of(0, 1) == (mpq(5), mpq(0))
        assert frozen.validate().ok


class TestLeibniz:
    @given(st.integers(-4, 4), st.integers(-4, 4), st.integers(0, 2), st.integers(0, 2))
    @settings(max_examples=30, deadline=None)
    def test_anchor_is_derivation(self, a, b, p, q):
        alg = borel()
        f = alg.base.parse(f"({a})*x^{p} + 1")
        g = alg.base.parse(f"({b})*x^{q} - x")
        for i in range(alg.rank):
            lhs = alg.anchor_derivation(i, f * g)
            rhs = f * alg.anchor_derivation(i, g) + g * alg.anchor_derivation(i, f)
            assert lhs == rhs


class TestConfigParsing:
    def test_from_toml_dict(self):
        doc = tomllib.loads("""
        [algebroid]
        rank = 2
        variables = ["x"]
        name = "borel-by-hand"
        [algebroid.bracket]
        "1,2" = [[1, "1"]]
        [algebroid.anchor]
        "1" = [["x", "1"]]
        "2" = [["x", "x"]]
        """)
        alg = algebroid_from_dict(doc["algebroid"])
        assert alg.rank == 2
        assert alg.validate().ok
        assert alg.bracket_of(0, 1)[0] == alg.base.from_rational(1)
        assert alg.content_key() == borel().content_key()

    def test_builtin_reference(self):
        alg = algebroid_from_dict({"builtin": "sl2", "hbar": "1/2"})
        assert alg.validate().ok
        assert alg.bracket_of(0, 1)[2] == mpq(1, 2)
        with pytest.raises(AlgebroidError):
            algebroid_from_dict({"builtin": "nope"})

    def test_bad_anchor_variable(self):
        with pytest.raises(AlgebroidError):
            algebroid_from_dict({
                "rank": 1, "variables": ["x"],
                "anchor": {"1": [["y", "1"]]},
            })
