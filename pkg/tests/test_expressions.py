import numpy as np
import pytest

from n1ma.errors import ConfigError
from n1ma.expressions import compile_expression


def ev(text, n=3, coords=None):
    if coords is None:
        coords = [np.zeros(1) for _ in range(n)]
    return compile_expression(text, n)(coords)


class TestParsing:
    def test_precedence(self):
        assert ev("2 + 3 * 4^2")[0] == 50.0

    def test_power_right_associative(self):
        assert ev("2^3^2")[0] == 512.0

    def test_unary_minus(self):
        assert ev("-2^2")[0] == -4.0
        assert ev("3 - -2")[0] == 5.0

    def test_parentheses(self):
        assert ev("(2 + 3) * 4")[0] == 20.0

    def test_functions_and_constants(self):
        assert ev("sin(pi/2) + cos(0) + log(e)")[0] == pytest.approx(3.0)
        assert ev("exp(0)")[0] == 1.0

    def test_scientific_notation(self):
        assert ev("1.5e-3 + 2E2")[0] == pytest.approx(200.0015)

    def test_division(self):
        assert ev("7/2")[0] == 3.5


class TestErrors:
    def test_unknown_name(self):
        with pytest.raises(ConfigError):
            ev("y + 1")

    def test_unknown_function(self):
        with pytest.raises(ConfigError):
            ev("tan(x1)")

    def test_out_of_range_variable(self):
        with pytest.raises(ConfigError):
            ev("x4", n=3)

    def test_trailing_garbage(self):
        with pytest.raises(ConfigError):
            ev("1 + 2 )")

    def test_bad_character(self):
        with pytest.raises(ConfigError):
            ev("1 & 2")

    def test_unbalanced_paren(self):
        with pytest.raises(ConfigError):
            ev("sin(x1")


class TestGridEvaluation:
    def test_matches_numpy(self):
        xs = [np.linspace(0, 2 * np.pi, 9)[:, None], np.linspace(0, 2 * np.pi, 7)[None, :]]
        fn = compile_expression("1 + 0.5*cos(x1)*sin(x2) - x2/4", 2)
        expected = 1 + 0.5 * np.cos(xs[0]) * np.sin(xs[1]) - xs[1] / 4
        assert np.allclose(fn(xs), expected)

    def test_constant_broadcasts(self):
        xs = [np.zeros((4, 5)), np.ones((4, 5))]
        out = compile_expression("2.5", 2)(xs)
        assert out.shape == (4, 5)
        assert np.all(out == 2.5)

    def test_coordinate_count_checked(self):
        fn = compile_expression("x1", 2)
        with pytest.raises(ConfigError):
            fn([np.zeros(3)])
