import math
from unittest import TestSuite, TextTestRunner

from unittest_extensions import TestCase, args

from mollify.annealing.schedule import (
    AnnealState,
    AverageKind,
    expected_skip,
    layer_probabilities,
    schedule_p,
    update_loss_average,
)
from mollify.numerics.rng import RngStream
from mollify.exceptions.annealing import AnnealStateError, NonFiniteLossAverageError
from mollify.tests.utils import add_to, def_load_tests


load_tests = def_load_tests("mollify.annealing.schedule")

schedule_test_suite = TestSuite()


if __name__ == "__main__":
    runner = TextTestRunner()
    runner.run(schedule_test_suite)


@add_to(schedule_test_suite)
class TestAnnealStateInit(TestCase):
    def subject(self, **kwargs):
        return AnnealState(**kwargs)

    @args({"k": -1.0, "num_layers": 2})
    def test_negative_k(self):
        self.assertResultRaises(AnnealStateError)

    @args({"k": 1.0, "num_layers": 0})
    def test_without_layers(self):
        self.assertResultRaises(AnnealStateError)

    @args({"k": 1.0, "num_layers": 2, "beta": 1.0})
    def test_beta_of_one(self):
        self.assertResultRaises(AnnealStateError)

    @args({"k": 1.0, "num_layers": 2, "v": math.nan})
    def test_non_finite_average(self):
        self.assertResultRaises(AnnealStateError)

    @args({"k": 1.0, "num_layers": 2, "window": 0})
    def test_empty_window(self):
        self.assertResultRaises(AnnealStateError)

    @args({"k": 1.0, "num_layers": 6})
    def test_default_delta(self):
        self.assertAlmostEqual(self.result().delta, 0.3, 12)

    @args({"k": 1.0, "num_layers": 2, "average": "window"})
    def test_average_is_coerced(self):
        self.assertIs(self.result().average, AverageKind.WINDOW)


@add_to(schedule_test_suite)
class TestScheduleP(TestCase):
    def subject(self, l=1, **kwargs):
        return schedule_p(AnnealState(**kwargs), l)

    @args({"k": 1.0, "num_layers": 1, "v": 1e9})
    def test_huge_loss_skips_almost_surely(self):
        self.assertGreater(self.result(), 1.0 - 1e-6)
        self.assertLess(self.result(), 1.0)

    @args({"k": 1.0, "num_layers": 1, "v": 1e-9})
    def test_tiny_loss_rarely_skips(self):
        self.assertLess(self.result(), 1e-6)

    @args({"k": 1.0, "num_layers": 2, "v": 1.0, "l": 2})
    def test_top_layer(self):
        self.assertResultAlmost(1.0 - math.exp(-1.0), 12)

    @args({"k": 1.0, "num_layers": 2, "v": 1.0, "t": 4, "l": 2})
    def test_decays_with_updates(self):
        self.assertResultAlmost(1.0 - math.exp(-0.25), 12)

    @args({"k": 1.0, "num_layers": 2})
    def test_before_first_loss(self):
        self.assertResult(0.0)

    @args({"k": 1.0, "num_layers": 2, "v": 3.0, "frozen": True})
    def test_frozen(self):
        self.assertResult(0.0)

    @args({"k": 1.0, "num_layers": 2, "v": 1.0, "l": 3})
    def test_layer_out_of_range(self):
        self.assertResultRaises(AnnealStateError)

    @args({"k": 1.0, "num_layers": 2, "v": 1.0, "l": 0})
    def test_layer_zero(self):
        self.assertResultRaises(AnnealStateError)


@add_to(schedule_test_suite)
class TestScheduleMonotonicity(TestCase):
    """
    p grows with the loss average and with the layer index, and shrinks with the
    update counter, on random draws of (k, v, t).
    """

    def draws(self):
        rng = RngStream(17)
        for _ in range(1000):
            k = float(rng.uniform(0.01, 5.0, ()))
            v = float(rng.uniform(0.0, 10.0, ()))
            t = int(rng.integers(1, 1000, ()))
            yield k, v, t

    def test_increasing_in_loss(self):
        for k, v, t in self.draws():
            low = schedule_p(AnnealState(k=k, num_layers=4, t=t, v=v), 2)
            high = schedule_p(AnnealState(k=k, num_layers=4, t=t, v=v + 0.5), 2)
            self.assertLessEqual(low, high)

    def test_increasing_in_layer(self):
        for k, v, t in self.draws():
            probabilities = layer_probabilities(
                AnnealState(k=k, num_layers=4, t=t, v=v)
            )
            self.assertEqual(probabilities, sorted(probabilities))

    def test_decreasing_in_updates(self):
        for k, v, t in self.draws():
            early = schedule_p(AnnealState(k=k, num_layers=4, t=t, v=v), 3)
            late = schedule_p(AnnealState(k=k, num_layers=4, t=t + 1, v=v), 3)
            self.assertGreaterEqual(early, late)

    def test_within_unit_interval(self):
        for k, v, t in self.draws():
            for p in layer_probabilities(AnnealState(k=k, num_layers=4, t=t, v=v)):
                self.assertTrue(0.0 <= p < 1.0)


@add_to(schedule_test_suite)
class TestUpdateLossAverage(TestCase):
    def subject(self, losses, **kwargs):
        state = AnnealState(k=1.0, num_layers=2, **kwargs)
        for loss in losses:
            update_loss_average(state, loss)
        return state

    @args({"losses": [2.0]})
    def test_first_loss_initializes(self):
        state = self.result()
        self.assertEqual((state.v, state.t), (2.0, 2))

    @args({"losses": [1.0, 0.0], "beta": 0.5})
    def test_exponential_average(self):
        self.assertEqual(self.result().v, 0.5)

    @args({"losses": [1.0, 2.0, 3.0, 4.0], "average": "window", "window": 2})
    def test_window_average(self):
        state = self.result()
        self.assertEqual((state.v, state.history), (3.5, [3.0, 4.0]))

    @args({"losses": [math.inf]})
    def test_infinite_loss(self):
        self.assertResultRaises(NonFiniteLossAverageError)

    @args({"losses": [-1.0]})
    def test_negative_loss(self):
        self.assertResultRaises(NonFiniteLossAverageError)

    def test_nan_keeps_previous_average(self):
        state = AnnealState(k=1.0, num_layers=2)
        update_loss_average(state, 1.0)
        with self.assertRaises(NonFiniteLossAverageError):
            update_loss_average(state, math.nan)
        self.assertEqual((state.v, state.t), (1.0, 2))


@add_to(schedule_test_suite)
class TestExpectedSkip(TestCase):
    def subject(self, **kwargs):
        state = AnnealState(**kwargs)
        return expected_skip(state), state.frozen

    @args({"k": 1.0, "num_layers": 2, "v": 1.0, "delta": 0.0})
    def test_sum_of_probabilities(self):
        total, frozen = self.result()
        self.assertAlmostEqual(total, 2.0 - math.exp(-0.5) - math.exp(-1.0), 12)
        self.assertFalse(frozen)

    @args({"k": 1.0, "num_layers": 2, "v": 0.01, "delta": 0.1})
    def test_freezes_at_threshold(self):
        _, frozen = self.result()
        self.assertTrue(frozen)

    @args({"k": 1.0, "num_layers": 2})
    def test_does_not_freeze_before_first_loss(self):
        self.assertResult((0.0, False))

    def test_frozen_state_stays_frozen(self):
        state = AnnealState(k=1.0, num_layers=2, v=0.01, delta=0.1)
        expected_skip(state)
        update_loss_average(state, 1e6)
        self.assertEqual(expected_skip(state), 0.0)
        self.assertEqual(layer_probabilities(state), [0.0, 0.0])
