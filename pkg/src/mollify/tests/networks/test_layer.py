from unittest import TestSuite, TextTestRunner

import numpy as np
from unittest_extensions import TestCase, args

from mollify.activations.activation import MollifiedActivation
from mollify.activations.kinds import ActivationKind
from mollify.networks.layer import (
    AdapterKind,
    MollifiedLayer,
    SkipMask,
    WeightNoiseConfig,
    adapt,
    layer_backward,
    layer_forward_infer,
    layer_forward_train,
    weight_noise_forward,
)
from mollify.numerics.gradcheck import finite_diff_grad
from mollify.numerics.rng import RngStream
from mollify.exceptions.base import MollifyValidationError
from mollify.exceptions.numerics import ShapeMismatchError
from mollify.exceptions.networks import AdapterError, WeightNoiseError
from mollify.tests.data import random_batch
from mollify.tests.utils import ArrayTestCase, add_to, def_load_tests


load_tests = def_load_tests("mollify.networks.layer")

layer_test_suite = TestSuite()


if __name__ == "__main__":
    runner = TextTestRunner()
    runner.run(layer_test_suite)


def make_layer(fan_in=4, fan_out=4, kind="sigmoid", c=1.0, seed=0, **kwargs):
    return MollifiedLayer.initialize(
        fan_in, fan_out, ActivationKind(kind), RngStream(seed), c=c, **kwargs
    )


@add_to(layer_test_suite)
class TestSkipMask(TestCase):
    def subject(self, pi):
        return SkipMask(np.array(pi))

    @args({"pi": [[0.0, 0.5]]})
    def test_with_fractional_entries(self):
        self.assertResultRaises(MollifyValidationError)

    @args({"pi": [[0.0, 1.0]]})
    def test_with_binary_entries(self):
        self.assertResultIsInstance(SkipMask)


@add_to(layer_test_suite)
class TestWeightNoiseConfig(TestCase):
    def subject(self, **kwargs):
        return WeightNoiseConfig(**kwargs)

    @args({"sigma": -0.1})
    def test_with_negative_sigma(self):
        self.assertResultRaises(WeightNoiseError)

    @args({"mu": 1.0, "sigma": 0.0})
    def test_with_zero_sigma(self):
        self.assertResultIsInstance(WeightNoiseConfig)


@add_to(layer_test_suite)
class TestMollifiedLayerInit(TestCase):
    def subject(self, fan_in, fan_out, adapter, projection=None):
        act = MollifiedActivation("tanh", np.zeros(fan_out))
        return MollifiedLayer(
            np.zeros((fan_in, fan_out)), np.zeros(fan_out), act, adapter, projection
        )

    @args({"fan_in": 3, "fan_out": 4, "adapter": "none"})
    def test_without_adapter(self):
        self.assertResultRaises(AdapterError)

    @args({"fan_in": 5, "fan_out": 4, "adapter": "zero-pad"})
    def test_zero_pad_cannot_shrink(self):
        self.assertResultRaises(AdapterError)

    @args({"fan_in": 5, "fan_out": 4, "adapter": "linear-projection"})
    def test_projection_without_matrix(self):
        self.assertResultRaises(AdapterError)

    @args(
        {
            "fan_in": 5,
            "fan_out": 4,
            "adapter": "linear-projection",
            "projection": np.zeros((4, 5)),
        }
    )
    def test_projection_with_wrong_shape(self):
        self.assertResultRaises(AdapterError)

    @args({"fan_in": 4, "fan_out": 4, "adapter": "none"})
    def test_with_equal_widths(self):
        self.assertIs(self.result().adapter, AdapterKind.NONE)


@add_to(layer_test_suite)
class TestMollifiedLayerInitialize(TestCase):
    def subject(self, fan_in, fan_out):
        return make_layer(fan_in, fan_out)

    @args({"fan_in": 3, "fan_out": 5})
    def test_growing_width_is_zero_padded(self):
        self.assertIs(self.result().adapter, AdapterKind.ZERO_PAD)

    @args({"fan_in": 5, "fan_out": 3})
    def test_shrinking_width_is_projected(self):
        layer = self.result()
        self.assertIs(layer.adapter, AdapterKind.PROJECTION)
        self.assertIn("P", layer.parameters())

    @args({"fan_in": 3, "fan_out": 3})
    def test_same_seed_same_weights(self):
        np.testing.assert_array_equal(self.result().W, make_layer(3, 3).W)

    @args({"fan_in": 3, "fan_out": 5})
    def test_sharpness_within_range(self):
        self.assertTrue((np.abs(self.result().act.a) <= 2.0).all())


@add_to(layer_test_suite)
class TestLayerForwardTrain(ArrayTestCase):
    def subject(self, p, c=1.0, fan_in=4, residual=False):
        layer = make_layer(fan_in, 4, "tanh", c=c, residual=residual)
        h_prev = random_batch(5, fan_in, seed=1)
        self._expected_identity = adapt(h_prev, layer)
        self._expected_plain = np.tanh(h_prev @ layer.W + layer.b)
        h, _ = layer_forward_train(h_prev, layer, p, RngStream(2))
        return h

    @args({"p": 1.0})
    def test_full_skip_is_identity(self):
        self.result()
        self.assertResultAllClose(self._expected_identity)

    @args({"p": 1.0, "fan_in": 2})
    def test_full_skip_pads_input(self):
        self.result()
        self.assertResultAllClose(self._expected_identity)

    @args({"p": 0.0, "c": 0.0})
    def test_no_skip_no_noise_is_plain_layer(self):
        self.result()
        self.assertResultAllClose(self._expected_plain)

    @args({"p": 0.0, "c": 0.0, "residual": True})
    def test_residual_adds_identity(self):
        self.result()
        self.assertResultAllClose(self._expected_identity + self._expected_plain)

    def test_with_wrong_input_width(self):
        layer = make_layer(4, 4)
        with self.assertRaises(ShapeMismatchError):
            layer_forward_train(np.zeros((2, 3)), layer, 0.5, RngStream(0))


@add_to(layer_test_suite)
class TestLayerForwardInfer(ArrayTestCase):
    def subject(self, p, c=1.0):
        layer = make_layer(3, 4, "sigmoid", c=c)
        h_prev = random_batch(5, 3, seed=1)
        self._identity = adapt(h_prev, layer)
        self._plain = ActivationKind.SIGMOID(h_prev @ layer.W + layer.b)
        return layer_forward_infer(h_prev, layer, p)

    @args({"p": 1.0})
    def test_full_skip_is_identity(self):
        self.result()
        self.assertResultAllClose(self._identity)

    @args({"p": 0.0})
    def test_no_skip_is_plain_layer(self):
        self.result()
        self.assertResultAllClose(self._plain)

    @args({"p": 0.25, "c": 0.0})
    def test_mixes_paths_by_p(self):
        self.result()
        self.assertResultAllClose(0.25 * self._identity + 0.75 * self._plain)


@add_to(layer_test_suite)
class TestLayerBackward(TestCase):
    """
    Layer gradients at a fixed realization against central differences: the noise
    and mask are frozen by re-creating the stream for every evaluation.
    """

    def check(self, layer, p, seed=3):
        h_prev = random_batch(4, layer.fan_in, seed=seed)
        upstream = random_batch(4, layer.fan_out, seed=seed + 1)

        def forward(inputs):
            h, _ = layer_forward_train(inputs, layer, p, RngStream(seed + 2))
            return float((upstream * h).sum())

        _, cache = layer_forward_train(h_prev, layer, p, RngStream(seed + 2))
        grad_h, grads = layer_backward(upstream, cache, layer)
        for name, value in list(layer.parameters().items()):

            def loss(point, name=name):
                layer.set_parameter(name, point)
                return forward(h_prev)

            numeric = finite_diff_grad(loss, value)
            layer.set_parameter(name, value)
            np.testing.assert_allclose(grads[name], numeric, atol=1e-6, err_msg=name)

        np.testing.assert_allclose(grad_h, finite_diff_grad(forward, h_prev), atol=1e-6)

    def test_equal_widths(self):
        self.check(make_layer(4, 4, "tanh"), 0.4)

    def test_zero_padded(self):
        self.check(make_layer(3, 5, "sigmoid"), 0.6)

    def test_projection(self):
        self.check(make_layer(5, 3, "sigmoid"), 0.5)

    def test_residual(self):
        self.check(make_layer(4, 4, "tanh", residual=True), 0.5)

    def test_masked_units_get_no_weight_gradient(self):
        layer = make_layer(4, 4, "tanh")
        h_prev = random_batch(3, 4)
        _, cache = layer_forward_train(h_prev, layer, 1.0, RngStream(0))
        _, grads = layer_backward(np.ones((3, 4)), cache, layer)
        np.testing.assert_array_equal(grads["W"], np.zeros((4, 4)))
        np.testing.assert_array_equal(grads["a"], np.zeros(4))


@add_to(layer_test_suite)
class TestWeightNoiseForward(ArrayTestCase):
    def subject(self, mu, sigma):
        layer = make_layer(3, 3, "linear")
        h_prev = random_batch(2, 3)
        self._base = h_prev @ layer.W + layer.b
        self._shift = h_prev.sum(axis=1, keepdims=True) * mu
        return weight_noise_forward(
            h_prev, layer, WeightNoiseConfig(mu, sigma), RngStream(1)
        )

    @args({"mu": 0.0, "sigma": 0.0})
    def test_without_noise(self):
        self.result()
        self.assertResultAllClose(self._base)

    @args({"mu": 0.5, "sigma": 0.0})
    def test_subtracts_mean(self):
        self.result()
        self.assertResultAllClose(self._base - self._shift)

    @args({"mu": 0.0, "sigma": 1.0})
    def test_fresh_noise_changes_output(self):
        self.assertFalse(np.allclose(self.result(), self._base))


@add_to(layer_test_suite)
class TestSkipMaskRate(TestCase):
    def subject(self, p, units):
        layer = make_layer(1, units)
        _, cache = layer_forward_train(random_batch(1, 1), layer, p, RngStream(5))
        return float(cache.mask.mean())

    @args({"p": 0.5, "units": 10000})
    def test_half(self):
        self.assertAlmostEqual(self.result(), 0.5, delta=3 * np.sqrt(0.25 / 10000))


@add_to(layer_test_suite)
class TestWeightNoiseMean(TestCase):
    """
    Averaged over draws, a linear layer with weight noise N(mu, sigma^2) computes
    h_prev (W - mu) + b.
    """

    draws = 4000

    def subject(self, mu, sigma):
        layer = make_layer(3, 3, "linear", seed=6)
        h_prev = random_batch(1, 3, seed=7)
        self._expected = h_prev @ (layer.W - mu) + layer.b
        cfg, rng = WeightNoiseConfig(mu, sigma), RngStream(8)
        return np.concatenate(
            [weight_noise_forward(h_prev, layer, cfg, rng) for _ in range(self.draws)]
        )

    @args({"mu": 0.3, "sigma": 0.5})
    def test_mean_within_three_standard_errors(self):
        samples = self.result()
        std_error = samples.std(axis=0, ddof=1) / np.sqrt(self.draws)
        error = np.abs(samples.mean(axis=0) - self._expected[0])
        self.assertTrue((error <= 3 * std_error).all())


@add_to(layer_test_suite)
class TestWeightNoiseWithoutInput(ArrayTestCase):
    def subject(self, sigma):
        layer = make_layer(3, 4, "sigmoid", seed=9)
        return weight_noise_forward(
            np.zeros((2, 3)), layer, WeightNoiseConfig(0.0, sigma), RngStream(10)
        )

    @args({"sigma": 1.0})
    def test_noise_has_nothing_to_scale(self):
        self.assertResultArrayEqual(np.full((2, 4), 0.5))
