from importlib import import_module

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
from unittest_extensions import TestCase


def add_to(test_suite, method_name=None):

    def wrapper(cls):
        for test_method in {m for m in dir(cls) if m.startswith("test_")}:
            test_suite.addTest(cls(test_method))
        if method_name is not None:
            setattr(cls, "_method", method_name)
        return cls

    return wrapper


def def_load_tests(module_path):

    def load_tests(loader, tests, ignore):
        from doctest import DocTestSuite

        tests.addTests(DocTestSuite(import_module(module_path)))
        return tests

    return load_tests


class ArrayTestCase(TestCase):
    """
    TestCase whose subject returns numpy arrays.
    """

    def assertResultAllClose(self, expected, atol=1e-12, rtol=0.0):
        assert_allclose(self.result(), expected, rtol=rtol, atol=atol)

    def assertResultArrayEqual(self, expected):
        assert_array_equal(self.result(), expected)

    def assertResultShape(self, shape):
        self.assertEqual(np.shape(self.result()), shape)

    def assertResultFinite(self):
        self.assertTrue(np.isfinite(self.result()).all())
