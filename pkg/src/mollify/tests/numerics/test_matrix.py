from unittest import TestSuite, TextTestRunner

import numpy as np
from unittest_extensions import args

from mollify.numerics.matrix import as_matrix, ensure_finite, first_non_finite, matmul
from mollify.exceptions.base import MollifyTypeError
from mollify.exceptions.numerics import NonFiniteValueError, ShapeMismatchError
from mollify.tests.utils import ArrayTestCase, add_to, def_load_tests


load_tests = def_load_tests("mollify.numerics.matrix")

matrix_test_suite = TestSuite()


if __name__ == "__main__":
    runner = TextTestRunner()
    runner.run(matrix_test_suite)


@add_to(matrix_test_suite)
class TestAsMatrix(ArrayTestCase):
    def subject(self, data):
        return as_matrix(data)

    @args({"data": [[1, 2], [3, 4]]})
    def test_with_nested_list(self):
        self.assertResultAllClose([[1.0, 2.0], [3.0, 4.0]])

    @args({"data": 3.0})
    def test_with_scalar(self):
        self.assertResultShape((1, 1))

    @args({"data": [1.0, 2.0, 3.0]})
    def test_with_vector(self):
        self.assertResultShape((1, 3))

    @args({"data": np.arange(6.0).reshape(3, 2)[:, ::-1]})
    def test_returns_row_major(self):
        self.assertTrue(self.result().flags["C_CONTIGUOUS"])

    @args({"data": [["a", "b"]]})
    def test_with_non_numeric_data(self):
        self.assertResultRaises(MollifyTypeError)

    @args({"data": np.zeros((2, 2, 2))})
    def test_with_three_dimensions(self):
        self.assertResultRaises(MollifyTypeError)

    @args({"data": [[1.0, float("nan")]]})
    def test_with_nan(self):
        self.assertResultRaises(NonFiniteValueError)


@add_to(matrix_test_suite)
class TestMatmul(ArrayTestCase):
    def subject(self, a, b):
        return matmul(np.asarray(a, dtype=float), np.asarray(b, dtype=float))

    @args({"a": [[1, 2], [3, 4]], "b": [[1, 0], [0, 1]]})
    def test_with_identity(self):
        self.assertResultAllClose([[1.0, 2.0], [3.0, 4.0]])

    @args({"a": [[1, 2, 3]], "b": [[1, 0], [0, 1]]})
    def test_with_misaligned_shapes(self):
        self.assertResultRaises(ShapeMismatchError)

    @args({"a": [1, 2], "b": [[1], [1]]})
    def test_with_vector(self):
        self.assertResultRaises(ShapeMismatchError)


@add_to(matrix_test_suite)
class TestFirstNonFinite(ArrayTestCase):
    def subject(self, array):
        return first_non_finite(np.asarray(array, dtype=float))

    @args({"array": [[1.0, 2.0], [3.0, 4.0]]})
    def test_with_finite_array(self):
        self.assertResult(None)

    @args({"array": [[1.0, 2.0], [float("inf"), float("nan")]]})
    def test_with_non_finite_entries(self):
        self.assertResult(2)


@add_to(matrix_test_suite)
class TestEnsureFinite(ArrayTestCase):
    def subject(self, array):
        return ensure_finite(np.asarray(array, dtype=float), "weights")

    @args({"array": [0.0, float("-inf")]})
    def test_names_offending_index(self):
        with self.assertRaises(NonFiniteValueError) as context:
            self.result()
        self.assertEqual(context.exception.name, "weights")
        self.assertEqual(context.exception.index, 1)

    @args({"array": [0.0, 1.0]})
    def test_with_finite_array(self):
        self.assertResultAllClose([0.0, 1.0])
