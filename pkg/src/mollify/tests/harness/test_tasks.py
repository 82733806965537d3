from unittest import TestSuite, TextTestRunner

import numpy as np
from unittest_extensions import TestCase, args

from mollify.harness.tasks import (
    Dataset,
    gen_parity,
    gen_seq_copy,
    gen_toy_regression,
    parity_labels,
    split_dataset,
    toy_regression_target,
)
from mollify.numerics.rng import RngStream
from mollify.exceptions.base import MollifyValueError
from mollify.tests.utils import ArrayTestCase, add_to, def_load_tests


load_tests = def_load_tests("mollify.harness.tasks")

tasks_test_suite = TestSuite()


if __name__ == "__main__":
    runner = TextTestRunner()
    runner.run(tasks_test_suite)


@add_to(tasks_test_suite)
class TestParityLabels(ArrayTestCase):
    def subject(self, bits):
        return parity_labels(np.array(bits))

    @args({"bits": [[1, 1, 0, 1], [0, 0, 0, 0], [1, 0, 0, 0]]})
    def test_xor(self):
        self.assertResultArrayEqual([1.0, 0.0, 1.0])


@add_to(tasks_test_suite)
class TestGenParity(TestCase):
    def subject(self, n_bits, n, seed=0):
        return gen_parity(n_bits, n, RngStream(seed))

    @args({"n_bits": 8, "n": 50})
    def test_labels_match_inputs(self):
        data = self.result()
        self.assertEqual(data.inputs.shape, (50, 8))
        np.testing.assert_array_equal(data.targets, data.inputs.sum(axis=1) % 2)

    @args({"n_bits": 5, "n": 30, "seed": 4})
    def test_same_seed_same_data(self):
        np.testing.assert_array_equal(
            self.result().inputs, gen_parity(5, 30, RngStream(4)).inputs
        )

    @args({"n_bits": 0, "n": 30})
    def test_without_bits(self):
        self.assertResultRaises(MollifyValueError)


@add_to(tasks_test_suite)
class TestGenToyRegression(TestCase):
    def subject(self, n, noise):
        return gen_toy_regression(n, RngStream(1), noise)

    @args({"n": 200, "noise": 0.0})
    def test_noiseless_targets(self):
        data = self.result()
        np.testing.assert_allclose(
            data.targets, toy_regression_target(data.inputs, 0.0), rtol=0, atol=0
        )
        self.assertTrue((np.abs(data.inputs) <= 2.0).all())

    @args({"n": 200, "noise": 0.5})
    def test_noise_is_added(self):
        data = self.result()
        self.assertFalse(np.allclose(data.targets, np.sin(3.0 * data.inputs)))


@add_to(tasks_test_suite)
class TestGenSeqCopy(TestCase):
    def subject(self, lag, length=6, vocab=4):
        return gen_seq_copy(5, length, vocab, lag, RngStream(2))

    @args({"lag": 2})
    def test_targets_are_lagged_tokens(self):
        data = self.result()
        tokens = data.inputs.argmax(axis=2)
        np.testing.assert_array_equal(data.targets[:, :2], np.full((5, 2), 4))
        np.testing.assert_array_equal(data.targets[:, 2:], tokens[:, :-2])

    @args({"lag": 0})
    def test_without_lag(self):
        data = self.result()
        np.testing.assert_array_equal(data.targets, data.inputs.argmax(axis=2))

    @args({"lag": 6})
    def test_lag_too_long(self):
        self.assertResultRaises(MollifyValueError)


@add_to(tasks_test_suite)
class TestSplitDataset(TestCase):
    def subject(self, n):
        data = Dataset(np.arange(n * 2.0).reshape(n, 2), np.arange(n * 1.0))
        return split_dataset(data, RngStream(0))

    @args({"n": 100})
    def test_ten_percent_held_out(self):
        split = self.result()
        self.assertEqual((len(split.train), len(split.valid)), (90, 10))
        combined = np.sort(np.concatenate([split.train.targets, split.valid.targets]))
        np.testing.assert_array_equal(combined, np.arange(100.0))

    @args({"n": 5})
    def test_small_dataset_keeps_one_example_out(self):
        self.assertEqual(len(self.result().valid), 1)

    @args({"n": 1})
    def test_single_example(self):
        self.assertEqual(len(self.result().valid), 0)

    def test_mismatched_dataset(self):
        with self.assertRaises(MollifyValueError):
            Dataset(np.zeros((3, 2)), np.zeros(2))
