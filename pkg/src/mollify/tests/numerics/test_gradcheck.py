from unittest import TestSuite, TextTestRunner

import numpy as np
from unittest_extensions import args

from mollify.numerics.gradcheck import finite_diff_grad, relative_error
from mollify.exceptions.base import MollifyValueError
from mollify.exceptions.numerics import NonFiniteValueError
from mollify.tests.utils import ArrayTestCase, add_to, def_load_tests


load_tests = def_load_tests("mollify.numerics.gradcheck")

gradcheck_test_suite = TestSuite()


if __name__ == "__main__":
    runner = TextTestRunner()
    runner.run(gradcheck_test_suite)


@add_to(gradcheck_test_suite)
class TestFiniteDiffGrad(ArrayTestCase):
    def subject(self, loss, at, h=1e-5):
        return finite_diff_grad(loss, np.array(at, dtype=float), h)

    @args({"loss": lambda x: float(np.sin(x).sum()), "at": [[0.0, 1.0], [2.0, 3.0]]})
    def test_with_matrix(self):
        self.assertResultAllClose(np.cos([[0.0, 1.0], [2.0, 3.0]]), atol=1e-9)

    @args({"loss": lambda x: float((x**3).sum()), "at": [2.0]})
    def test_with_cubic(self):
        self.assertResultAllClose([12.0], atol=1e-8)

    @args({"loss": lambda x: float(x.sum()), "at": [1.0], "h": 0.0})
    def test_with_zero_step(self):
        self.assertResultRaises(MollifyValueError)

    @args({"loss": lambda x: float(np.log(x).sum()), "at": [1.0, 1e-6]})
    def test_with_non_finite_loss(self):
        with self.assertRaises(NonFiniteValueError) as context:
            self.result()
        self.assertEqual(context.exception.index, 1)

    def test_does_not_modify_point(self):
        point = np.array([1.0, 2.0])
        finite_diff_grad(lambda x: float((x**2).sum()), point)
        np.testing.assert_array_equal(point, [1.0, 2.0])


@add_to(gradcheck_test_suite)
class TestRelativeError(ArrayTestCase):
    def subject(self, analytic, numeric):
        return relative_error(np.array(analytic), np.array(numeric))

    @args({"analytic": [1.0, 0.0], "numeric": [1.0, 0.0]})
    def test_with_equal_values(self):
        self.assertResultAllClose([0.0, 0.0])

    @args({"analytic": [1.0], "numeric": [3.0]})
    def test_with_different_values(self):
        self.assertResultAllClose([0.5])
