import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geodetica import expr
from geodetica.expr import (BinOp, Call, EvalDomainError, Num, ParseError,
                            UnboundVariableError, UnknownFunctionError, Var,
                            eval_jet, eval_scalar, free_variables, parse,
                            to_string)


class TestParse:
    def test_product_with_function(self):
        e = parse("rho*cos(phi)")
        assert e.root == BinOp("*", Var("rho"), Call("cos", Var("phi")))

    def test_precedence_sum_of_squares(self):
        e = parse("u1^2+u2^2")
        assert e.root == BinOp("+",
                               BinOp("^", Var("u1"), Num(2.0)),
                               BinOp("^", Var("u2"), Num(2.0)))

    def test_malformed_call_reports_offset(self):
        with pytest.raises(ParseError) as info:
            parse("sin(")
        assert info.value.offset == 4

    def test_unknown_function(self):
        with pytest.raises(UnknownFunctionError):
            parse("sinc(x)")

    def test_power_is_right_associative(self):
        assert parse("2^3^2").root == parse("2^(3^2)").root

    def test_unary_minus_binds_below_power(self):
        assert parse("-x^2").root == parse("-(x^2)").root

    def test_subtraction_left_associative(self):
        assert parse("a-b-c").root == parse("(a-b)-c").root

    def test_negative_exponent(self):
        assert eval_scalar(parse("2^-2"), {}) == 0.25

    def test_empty_input(self):
        with pytest.raises(ParseError):
            parse("   ")

    def test_reserved_constants(self):
        assert eval_scalar(parse("pi"), {}) == math.pi
        assert eval_scalar(parse("e"), {}) == math.e
        assert free_variables(parse("pi*e")) == ()

    def test_literal_with_exponent(self):
        assert eval_scalar(parse("1.5e2"), {}) == 150.0

    def test_overflowing_literal_rejected(self):
        with pytest.raises(ParseError):
            parse("1e999")


class TestFreeVariables:
    def test_first_appearance_order(self):
        assert free_variables(parse("rho*cos(phi)")) == ("rho", "phi")
        assert free_variables(parse("u2+u1+u2")) == ("u2", "u1")

    def test_pure_number(self):
        assert free_variables(parse("3.5")) == ()


class TestEvalScalar:
    def test_basic(self):
        assert eval_scalar(parse("rho*cos(phi)"), {"rho": 2, "phi": 0}) == 2.0

    def test_sqrt(self):
        assert eval_scalar(parse("sqrt(u1)"), {"u1": 9}) == 3.0

    def test_log_domain_error(self):
        with pytest.raises(EvalDomainError):
            eval_scalar(parse("log(u1)"), {"u1": 0})

    def test_unbound_variable(self):
        with pytest.raises(UnboundVariableError):
            eval_scalar(parse("a+b"), {"a": 1})

    def test_integer_power_of_negative_base(self):
        assert eval_scalar(parse("(-2)^3"), {}) == -8.0

    def test_fractional_power_of_negative_base_rejected(self):
        with pytest.raises(EvalDomainError):
            eval_scalar(parse("(-2)^0.5"), {})

    def test_division_by_zero(self):
        with pytest.raises(EvalDomainError):
            eval_scalar(parse("1/u"), {"u": 0})


class TestEvalJet:
    def test_square(self):
        jet = eval_jet(parse("u1^2"), ("u1",), (3.0,), 2)
        assert jet.value == 9.0
        assert jet.grad == (6.0,)
        assert jet.hess == ((2.0,),)

    def test_sine_third_order(self):
        jet = eval_jet(parse("sin(u1)"), ("u1",), (0.0,), 3)
        assert jet.value == 0.0
        assert jet.grad == (1.0,)
        assert jet.hess == ((0.0,),)
        assert jet.third == (((-1.0,),),)

    def test_product_rule_two_variables(self):
        jet = eval_jet(parse("rho*cos(phi)"), ("rho", "phi"), (2.0, 0.0), 2)
        assert jet.value == 2.0
        assert jet.grad == (1.0, 0.0)
        assert np.allclose(jet.hess, [[0.0, 0.0], [0.0, -2.0]])

    def test_domain_error_propagates(self):
        with pytest.raises(EvalDomainError):
            eval_jet(parse("sqrt(u)"), ("u",), (-1.0,), 1)

    def test_variable_exponent(self):
        jet = eval_jet(parse("x^y"), ("x", "y"), (2.0, 3.0), 1)
        assert jet.value == pytest.approx(8.0, abs=1e-12)
        assert jet.grad[0] == pytest.approx(12.0, abs=1e-10)
        assert jet.grad[1] == pytest.approx(8.0 * math.log(2.0), abs=1e-10)

    def test_hessian_symmetry(self):
        jet = eval_jet(parse("sin(a*b)+a^3*c"), ("a", "b", "c"),
                       (0.4, 0.7, 1.3), 3)
        hess = np.array(jet.hess)
        assert np.array_equal(hess, hess.T)
        third = np.array(jet.third)
        for perm in ((0, 2, 1), (1, 0, 2), (2, 1, 0)):
            assert np.array_equal(third, third.transpose(perm))


class TestJetAgainstFiniteDifferences:
    def test_random_polynomials(self):
        rng = np.random.default_rng(7)
        names = ("a", "b", "c")
        for _ in range(25):
            terms = []
            for _ in range(5):
                coeff = rng.uniform(-2, 2)
                powers = rng.integers(0, 5, size=3)
                while powers.sum() > 4:
                    powers = rng.integers(0, 5, size=3)
                term = repr(coeff)
                for name, p in zip(names, powers):
                    if p:
                        term += f"*{name}^{p}"
                terms.append(term)
            e = parse(" + ".join(terms))
            point = rng.uniform(-1, 1, size=3)
            jet = eval_jet(e, names, point, 2)

            h = 1e-5

            def value(p):
                return eval_scalar(e, dict(zip(names, p)))

            scale = max(abs(jet.value), 1.0)
            for i in range(3):
                dp = np.zeros(3)
                dp[i] = h
                fd = (value(point + dp) - value(point - dp)) / (2 * h)
                assert jet.grad[i] == pytest.approx(fd, abs=1e-6 * scale,
                                                    rel=1e-6)
            for i in range(3):
                for j in range(3):
                    dpi = np.zeros(3)
                    dpj = np.zeros(3)
                    dpi[i] = h
                    dpj[j] = h
                    fd = (value(point + dpi + dpj) - value(point + dpi - dpj)
                          - value(point - dpi + dpj)
                          + value(point - dpi - dpj)) / (4 * h * h)
                    assert jet.hess[i][j] == pytest.approx(
                        fd, abs=1e-4 * scale, rel=1e-4)

    def test_order_restriction_is_exact(self):
        rng = np.random.default_rng(11)
        e = parse("sin(a*b) + exp(c)/(1+a^2) + sqrt(1+b^2)")
        names = ("a", "b", "c")
        for _ in range(20):
            point = rng.uniform(-1, 1, size=3)
            j1 = eval_jet(e, names, point, 1)
            j2 = eval_jet(e, names, point, 2)
            j3 = eval_jet(e, names, point, 3)
            assert j1.value == j2.value == j3.value
            assert j1.grad == j2.grad == j3.grad
            assert j2.hess == j3.hess


_LEAF = st.one_of(
    st.floats(min_value=0.1, max_value=9.0).map(lambda v: Num(round(v, 3))),
    st.sampled_from(["x", "y", "z"]).map(Var),
)


def _ast(depth):
    if depth == 0:
        return _LEAF
    sub = _ast(depth - 1)
    return st.one_of(
        _LEAF,
        st.tuples(st.sampled_from("+-*/"), sub, sub).map(
            lambda t: BinOp(t[0], t[1], t[2])),
        st.tuples(st.sampled_from(["sin", "cos", "exp", "tanh"]), sub).map(
            lambda t: Call(t[0], t[1])),
    )


class TestPrinterRoundTrip:
    @settings(max_examples=200, deadline=None)
    @given(_ast(3))
    def test_parse_print_parse(self, root):
        e = expr.Expression(root)
        assert parse(to_string(e)) == e

    def test_documented_examples(self):
        for text in ("rho*cos(phi)", "u1^2+u2^2", "-x^2", "1/(1+t^2)",
                     "sin(cos(exp(x)))", "2^-3", "a-b-c", "pi*e"):
            e = parse(text)
            assert parse(to_string(e)) == e


class TestStructuralHelpers:
    def test_substitute_numbers(self):
        e = parse("R*sin(theta)")
        folded = expr.substitute(e, {"R": 2.0})
        assert free_variables(folded) == ("theta",)
        assert eval_scalar(folded, {"theta": math.pi / 2}) == \
            pytest.approx(2.0)

    def test_substitute_expressions(self):
        e = parse("x^2+y^2")
        composed = expr.substitute(e, {"x": parse("rho*cos(phi)"),
                                       "y": parse("rho*sin(phi)")})
        value = eval_scalar(composed, {"rho": 2.0, "phi": 0.7})
        assert value == pytest.approx(4.0, abs=1e-12)

    def test_derivative_matches_jet(self):
        rng = np.random.default_rng(3)
        e = parse("sin(a*b)*exp(b) + a^3/(1+b^2)")
        da = expr.derivative(e, "a")
        for _ in range(10):
            a, b = rng.uniform(-1, 1, size=2)
            jet = eval_jet(e, ("a", "b"), (a, b), 1)
            assert eval_scalar(da, {"a": a, "b": b}) == pytest.approx(
                jet.grad[0], rel=1e-12, abs=1e-12)
