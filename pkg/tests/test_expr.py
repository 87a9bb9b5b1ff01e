import numpy as np
import pytest

from fairdesk.data import CATEGORICAL, NUMERIC, DataTable
from fairdesk.errors import ValidationError
from fairdesk.expr import (
    Bin,
    ExprSyntaxError,
    Group,
    Neg,
    Num,
    Ref,
    bind,
    equivalent,
    evaluate_column,
    evaluate_row,
    parse,
    print_expr,
    strip_groups,
)
from expr_oracle import python_eval, random_ast


def small_table():
    return DataTable.build(
        ["net_monthly_income", "monthly_payment", "purpose"],
        {"net_monthly_income": NUMERIC, "monthly_payment": NUMERIC,
         "purpose": CATEGORICAL},
        {"net_monthly_income": [3000.0, 1500.0, None],
         "monthly_payment": [500.0, 0.0, 200.0],
         "purpose": ["car", "home", "car"]})


class TestParse:
    def test_simple_difference(self):
        ast = parse("net_monthly_income - monthly_payment")
        assert ast == Bin("-", Ref("net_monthly_income"), Ref("monthly_payment"))

    def test_precedence(self):
        assert parse("a + b * c") == Bin("+", Ref("a"), Bin("*", Ref("b"), Ref("c")))

    def test_left_associativity(self):
        assert parse("a - b - c") == Bin("-", Bin("-", Ref("a"), Ref("b")), Ref("c"))

    def test_parens_become_groups(self):
        assert parse("(a + b) * c") == Bin("*", Group(Bin("+", Ref("a"), Ref("b"))), Ref("c"))

    def test_quoted_names(self):
        assert parse('"years with bank" + 1') == Bin("+", Ref("years with bank"), Num(1.0))

    def test_unicode_operators(self):
        assert parse("a × b ÷ c") == parse("a * b / c")

    def test_unbalanced_paren(self):
        with pytest.raises(ExprSyntaxError) as err:
            parse("(a + b")
        assert err.value.offset == len("(a + b")
        assert ")" in err.value.expected

    def test_unknown_character(self):
        with pytest.raises(ExprSyntaxError) as err:
            parse("a % b")
        assert err.value.offset == 2

    def test_trailing_junk(self):
        with pytest.raises(ExprSyntaxError) as err:
            parse("a b")
        assert err.value.offset == 2

    def test_empty_input(self):
        with pytest.raises(ExprSyntaxError):
            parse("")

    def test_unterminated_quote(self):
        with pytest.raises(ExprSyntaxError):
            parse('"abc + 1')


class TestPrint:
    def test_round_trip_simple(self):
        ast = parse("a + b * c")
        assert parse(print_expr(ast)) == ast

    def test_right_associative_needs_parens(self):
        ast = Bin("-", Ref("a"), Bin("-", Ref("b"), Ref("c")))
        assert print_expr(ast) == "a - (b - c)"
        assert equivalent(parse(print_expr(ast)), ast)

    def test_group_preserved(self):
        ast = parse("(a) + b")
        assert print_expr(ast) == "(a) + b"
        assert parse(print_expr(ast)) == ast

    def test_negation(self):
        assert print_expr(Neg(Bin("+", Ref("a"), Ref("b")))) == "-(a + b)"
        assert print_expr(Neg(Ref("a"))) == "-a"

    def test_quoted_round_trip(self):
        ast = parse('"years with bank" * 2')
        assert print_expr(ast) == '"years with bank" * 2'
        assert parse(print_expr(ast)) == ast

    def test_thousand_random_asts_round_trip(self):
        rng = np.random.default_rng(12)
        names = ["a", "b_2", "income", "years with bank"]
        for _ in range(1000):
            ast = random_ast(rng, int(rng.integers(0, 6)), names)
            again = parse(print_expr(ast))
            assert equivalent(again, ast)
            # a parsed tree prints to a fixed point
            assert print_expr(parse(print_expr(again))) == print_expr(again)


class TestEvaluate:
    def test_affordability(self):
        ast = parse("net_monthly_income - monthly_payment")
        assert evaluate_row(ast, {"net_monthly_income": 3000.0,
                                  "monthly_payment": 500.0}) == 2500.0

    def test_division_by_zero_is_missing(self):
        ast = parse("x / y")
        assert evaluate_row(ast, {"x": 1.0, "y": 0.0}) is None

    def test_missing_propagates(self):
        ast = parse("x + y")
        assert evaluate_row(ast, {"x": None, "y": 2.0}) is None

    def test_matches_python_oracle(self):
        rng = np.random.default_rng(99)
        names = ["a", "b", "c", "years with bank"]
        for _ in range(100):
            ast = random_ast(rng, int(rng.integers(1, 6)), names)
            text = print_expr(ast)
            for _ in range(100):
                env = {}
                for name in names:
                    roll = rng.random()
                    if roll < 0.08:
                        env[name] = None
                    elif roll < 0.2:
                        env[name] = 0.0
                    else:
                        env[name] = float(np.round(rng.normal(0, 3), 3))
                assert evaluate_row(ast, env) == python_eval(text, env)


class TestEvaluateColumn:
    def test_affordability_column(self):
        t = small_table()
        cells, spec = evaluate_column(parse("net_monthly_income - monthly_payment"), t)
        assert cells == [2500.0, 1500.0, None]
        assert spec.k <= 10

    def test_constant_expression(self):
        t = small_table()
        cells, spec = evaluate_column(parse("1"), t)
        assert cells == [1.0, 1.0, 1.0]
        assert spec.k == 1

    def test_unknown_reference_lists_candidates(self):
        t = small_table()
        with pytest.raises(ValidationError) as err:
            evaluate_column(parse("net_monthly_incom"), t)
        assert "net_monthly_income" in str(err.value)

    def test_categorical_reference_is_type_error(self):
        t = small_table()
        with pytest.raises(ValidationError):
            bind(parse("purpose + 1"), t)


class TestMalformedNeverCrashes:
    CASES = ["", "(", ")", "a +", "* a", "1..2", "a ++ b", '("x" ',
             "a / ", "((a)", "-", "4e", '""', "a 5", "@", "a?b"]

    def test_each_raises_positioned_error(self):
        for text in self.CASES:
            with pytest.raises(ExprSyntaxError) as err:
                parse(text)
            assert isinstance(err.value.offset, int)
            assert err.value.offset >= 0
