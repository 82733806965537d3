from unittest import TestSuite, TextTestRunner

import numpy as np
from unittest_extensions import TestCase, args

from mollify.activations.kinds import ActivationKind
from mollify.annealing.schedule import AnnealState
from mollify.networks.heads import HeadKind
from mollify.networks.network import (
    MollifiedNetwork,
    network_backward,
    network_forward,
    network_infer,
    network_loss_and_grads,
)
from mollify.numerics.gradcheck import finite_diff_grad, relative_error
from mollify.numerics.rng import RngStream
from mollify.exceptions.base import MollifyValidationError, MollifyValueError
from mollify.exceptions.networks import NonFiniteLossError
from mollify.tests.data import (
    make_network,
    parity_batch,
    random_batch,
    reference_mlp_outputs,
)
from mollify.tests.utils import ArrayTestCase, add_to, def_load_tests


load_tests = def_load_tests("mollify.networks.network")

network_test_suite = TestSuite()


if __name__ == "__main__":
    runner = TextTestRunner()
    runner.run(network_test_suite)


def frozen_loss(net, batch, targets, probabilities, seed):
    return network_forward(batch, targets, net, probabilities, RngStream(seed)).loss


def max_gradient_error(net, batch, targets, probabilities, seed):
    """
    Largest relative error between the analytic gradient at a realization and the
    central differences of the loss with the same realization.
    """
    _, grads = network_loss_and_grads(
        batch, targets, net, probabilities, RngStream(seed)
    )
    worst = 0.0
    for name, value in list(net.named_parameters().items()):

        def loss(point, name=name):
            net.set_parameter(name, point)
            return frozen_loss(net, batch, targets, probabilities, seed)

        numeric = finite_diff_grad(loss, value)
        net.set_parameter(name, value)
        worst = max(worst, float(relative_error(grads[name], numeric, 1e-4).max()))
    return worst


@add_to(network_test_suite)
class TestNetworkGradients(TestCase):
    """
    Analytic gradients of random three-layer networks of width 8 agree with central
    differences (h = 1e-5) to a relative error of 1e-5.
    """

    def subject(self, kind, seed, **kwargs):
        net = make_network(kind, seed=seed, **kwargs)
        batch, targets = parity_batch(4, bits=net.layers[0].fan_in, seed=seed)
        probabilities = RngStream(seed + 1000).uniform(0.1, 0.9, net.depth).tolist()
        return max_gradient_error(net, batch, targets, probabilities, seed + 2000)

    def test_sigmoid_networks(self):
        for seed in range(10):
            with self.subTest(seed=seed):
                self.assertLess(self.subject(ActivationKind.SIGMOID, seed), 1e-5)

    def test_tanh_networks(self):
        for seed in range(10, 20):
            with self.subTest(seed=seed):
                self.assertLess(self.subject(ActivationKind.TANH, seed), 1e-5)

    @args({"kind": ActivationKind.TANH, "seed": 30, "input_dim": 5})
    def test_zero_padded_input(self):
        self.assertLess(self.result(), 1e-5)

    @args({"kind": ActivationKind.SIGMOID, "seed": 31, "input_dim": 11})
    def test_projected_input(self):
        self.assertLess(self.result(), 1e-5)

    @args({"kind": ActivationKind.TANH, "seed": 32, "residual": True})
    def test_residual(self):
        self.assertLess(self.result(), 1e-5)

    @args(
        {
            "kind": ActivationKind.SIGMOID,
            "seed": 33,
            "head_kind": HeadKind.SQUARED_ERROR,
            "outputs": 2,
        }
    )
    def test_squared_error_head(self):
        self.assertLess(self.result(), 1e-5)


@add_to(network_test_suite)
class TestFullSkipNetwork(TestCase):
    """
    At p = 1 every layer is the identity, so the loss is convex in the parameters
    and hidden parameters receive no gradient.
    """

    def setUp(self):
        self.net = make_network(ActivationKind.SIGMOID, seed=5)
        self.batch, self.targets = parity_batch(16, seed=5)
        self.probabilities = [1.0] * self.net.depth
        self.names = list(self.net.named_parameters())

    def loss_at(self, params):
        for name, value in params.items():
            self.net.set_parameter(name, value)
        return frozen_loss(self.net, self.batch, self.targets, self.probabilities, 0)

    def random_params(self, rng):
        return {
            name: rng.normal(0.0, 1.0, value.shape)
            for name, value in self.net.named_parameters().items()
        }

    def test_midpoint_convexity(self):
        rng = RngStream(11)
        for _ in range(200):
            first, second = self.random_params(rng), self.random_params(rng)
            mid = {name: 0.5 * (first[name] + second[name]) for name in self.names}
            bound = 0.5 * (self.loss_at(first) + self.loss_at(second))
            self.assertLessEqual(self.loss_at(mid), bound + 1e-12)

    def test_hidden_gradients_vanish(self):
        _, grads = network_loss_and_grads(
            self.batch, self.targets, self.net, self.probabilities, RngStream(3)
        )
        for name in self.names:
            if name.startswith("layers."):
                np.testing.assert_array_equal(
                    grads[name], np.zeros_like(grads[name]), err_msg=name
                )

    def test_outputs_are_linear_readout(self):
        outputs = network_infer(self.batch, self.net, self.probabilities)
        expected = self.batch @ self.net.head.V + self.net.head.d
        np.testing.assert_allclose(outputs, expected, rtol=0, atol=1e-12)


@add_to(network_test_suite)
class TestNoSkipNoNoiseNetwork(ArrayTestCase):
    """
    At p = 0 with c = 0 the network is the plain multi-layer perceptron.
    """

    def subject(self, kind, train):
        net = make_network(kind, seed=7, c=0.0)
        batch = random_batch(100, 8, seed=8)
        self._expected = reference_mlp_outputs(batch, net)
        probabilities = [0.0] * net.depth
        if train:
            targets = np.zeros(100)
            record = network_forward(batch, targets, net, probabilities, RngStream(0))
            return record.outputs
        return network_infer(batch, net, probabilities)

    @args({"kind": ActivationKind.SIGMOID, "train": False})
    def test_sigmoid_inference(self):
        self.result()
        self.assertResultAllClose(self._expected)

    @args({"kind": ActivationKind.TANH, "train": False})
    def test_tanh_inference(self):
        self.result()
        self.assertResultAllClose(self._expected)

    @args({"kind": ActivationKind.SIGMOID, "train": True})
    def test_sigmoid_training_pass(self):
        self.result()
        self.assertResultAllClose(self._expected)

    @args({"kind": ActivationKind.TANH, "train": True})
    def test_tanh_training_pass(self):
        self.result()
        self.assertResultAllClose(self._expected)


@add_to(network_test_suite)
class TestNetworkForward(TestCase):
    def setUp(self):
        self.net = make_network(ActivationKind.TANH, seed=1)
        self.batch, self.targets = parity_batch(6, seed=1)

    def test_same_stream_same_record(self):
        first = network_forward(
            self.batch, self.targets, self.net, [0.5] * 3, RngStream(4)
        )
        second = network_forward(
            self.batch, self.targets, self.net, [0.5] * 3, RngStream(4)
        )
        self.assertEqual(first.loss, second.loss)

    def test_accepts_anneal_state(self):
        anneal = AnnealState(k=1.0, num_layers=3, v=1.0)
        record = network_forward(
            self.batch, self.targets, self.net, anneal, RngStream(4)
        )
        self.assertTrue(np.isfinite(record.loss))

    def test_wrong_probability_count(self):
        with self.assertRaises(MollifyValueError):
            network_forward(self.batch, self.targets, self.net, [0.5], RngStream(0))

    def test_wrong_stream_count(self):
        with self.assertRaises(MollifyValueError):
            network_forward(
                self.batch, self.targets, self.net, [0.5] * 3, RngStream(0).spawn(2)
            )

    def test_non_finite_layer_is_reported(self):
        self.net.layers[1].W[0, 0] = np.nan
        with self.assertRaises(NonFiniteLossError) as caught:
            network_forward(self.batch, self.targets, self.net, [0.0] * 3, RngStream(0))
        self.assertEqual(caught.exception.layer_index, 1)

    def test_backward_names_every_parameter(self):
        record = network_forward(
            self.batch, self.targets, self.net, [0.5] * 3, RngStream(2)
        )
        grads = network_backward(record, self.targets, self.net)
        self.assertEqual(set(grads), set(self.net.named_parameters()))


@add_to(network_test_suite)
class TestMollifiedNetworkInitialize(TestCase):
    def subject(self, **kwargs):
        return make_network(**kwargs)

    @args({"depth": 0})
    def test_without_layers(self):
        self.assertResultRaises(MollifyValidationError)

    @args({"depth": 2, "input_dim": 3, "width": 5})
    def test_parameter_names(self):
        self.assertEqual(
            list(self.result().named_parameters()),
            [
                "layers.0.W",
                "layers.0.b",
                "layers.0.a",
                "layers.1.W",
                "layers.1.b",
                "layers.1.a",
                "head.V",
                "head.d",
            ],
        )

    @args({"depth": 2, "input_dim": 6, "width": 4})
    def test_projection_parameter(self):
        self.assertIn("layers.0.P", self.result().named_parameters())

    @args({"seed": 9})
    def test_same_seed_same_parameters(self):
        other = make_network(seed=9)
        for name, value in self.result().named_parameters().items():
            np.testing.assert_array_equal(value, other.named_parameters()[name])

    @args({"c": 0.0})
    def test_set_noise_constant(self):
        net = self.result()
        net.set_noise_constant(0.5)
        self.assertEqual([layer.act.c for layer in net.layers], [0.5] * 3)

    @args({})
    def test_set_unknown_parameter(self):
        with self.assertRaises(MollifyValidationError):
            self.result().set_parameter("encoder.W", np.zeros(1))


@add_to(network_test_suite)
class TestNetworkDescription(TestCase):
    def subject(self, **kwargs):
        net = make_network(ActivationKind.TANH, seed=2, **kwargs)
        rebuilt = MollifiedNetwork.from_description(
            net.describe(), net.named_parameters()
        )
        batch = random_batch(5, net.layers[0].fan_in, seed=3)
        return float(
            np.max(
                np.abs(
                    network_infer(batch, net, [0.3] * net.depth)
                    - network_infer(batch, rebuilt, [0.3] * rebuilt.depth)
                )
            )
        )

    @args({})
    def test_round_trip(self):
        self.assertResult(0.0)

    @args({"input_dim": 12, "residual": True})
    def test_round_trip_with_projection(self):
        self.assertResult(0.0)

    def test_missing_parameter(self):
        net = make_network()
        params = net.named_parameters()
        del params["head.d"]
        with self.assertRaises(KeyError):
            MollifiedNetwork.from_description(net.describe(), params)
