"""
This module runs experiments: it builds the task and model of a run configuration,
trains one model per seed and writes the run's files.

Each seed owns the directory `<out>/seed_<s>/` with

    metrics.csv      one row per epoch
    checkpoint.json  the model and annealing state at the end of the last epoch
    curves.svg       learning curves, when plotting is enabled

and the output directory gets `aggregate.csv` (per-epoch medians over seeds) and
`summary.csv` (epochs each seed needed to reach the target accuracy).

Every random draw of a seed comes from one of four streams spawned from
`RngStream(seed)`: data, initialization, shuffling and noise. A configuration and a
seed therefore determine every byte written, as long as wall times are not recorded.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from mollify.activations.kinds import ActivationKind
from mollify.annealing.schedule import (
    AnnealState,
    AverageKind,
    expected_skip,
    layer_probabilities,
    update_loss_average,
)
from mollify.networks.checkpoint import save_checkpoint
from mollify.networks.heads import HeadKind
from mollify.networks.network import (
    MollifiedNetwork,
    network_infer,
    network_loss_and_grads,
)
from mollify.numerics.matrix import first_non_finite
from mollify.numerics.optimizers import OptimizerState, apply_updates
from mollify.numerics.rng import RngStream
from mollify.recurrent.cells import CellKind
from mollify.recurrent.sequence import (
    SequenceModel,
    bptt_chunks,
    initial_state,
    sequence_infer,
    sequence_loss_and_grads,
)
from mollify.harness.config import RunConfig
from mollify.harness.metrics import (
    MetricsRow,
    MetricsWriter,
    write_aggregate,
    write_summary,
)
from mollify.harness.plot import emit_plot
from mollify.harness.tasks import (
    Dataset,
    TaskSplit,
    gen_parity,
    gen_seq_copy,
    gen_toy_regression,
    split_dataset,
)
from mollify.exceptions.annealing import NonFiniteLossAverageError
from mollify.exceptions.harness import (
    ConfigError,
    DivergenceError,
    OutputDirectoryError,
)
from mollify.exceptions.networks import NonFiniteLossError
from mollify.exceptions.numerics import NonFiniteValueError

__all__ = [
    "DIVERGENCE_ERRORS",
    "SeedResult",
    "make_task",
    "build_model",
    "Trainer",
    "prepare_output",
    "train_seed",
    "run_experiment",
]

logger = logging.getLogger(__name__)

# Errors that mean the loss or a parameter update stopped being finite.
DIVERGENCE_ERRORS = (
    NonFiniteLossError,
    NonFiniteValueError,
    NonFiniteLossAverageError,
)

Model = Union[MollifiedNetwork, SequenceModel]


@dataclass(frozen=True)
class SeedResult:
    """
    Outcome of training one seed: exit status 0 (completed) or 1 (diverged), the
    number of finished epochs and the first epoch whose training accuracy reached
    the target, if any.
    """

    seed: int
    status: int
    epochs: int
    epochs_to_target: Optional[int]
    directory: Path

    @property
    def metrics_path(self) -> Path:
        return self.directory / "metrics.csv"

    @property
    def checkpoint_path(self) -> Path:
        return self.directory / "checkpoint.json"


def make_task(cfg: RunConfig, rng: RngStream) -> TaskSplit:
    """
    Generate the dataset of `cfg.task` and split it 90/10 into training and
    validation sets.
    """
    if cfg.task == "parity":
        data = gen_parity(cfg.bits, cfg.examples, rng)
    elif cfg.task == "toy-regression":
        data = gen_toy_regression(cfg.examples, rng, cfg.regression_noise)
    else:
        data = gen_seq_copy(cfg.examples, cfg.seq_length, cfg.vocab, cfg.lag, rng)
    return split_dataset(data, rng)


def build_model(cfg: RunConfig, rng: RngStream) -> Model:
    """
    Initialize the model of `cfg`: a mollified network for the feed-forward tasks,
    a mollified GRU or LSTM sequence model for `seq-copy`. Baselines other than
    `mollified` have noise constant 0; `residual-plain` adds residual connections.
    """
    c = cfg.c if cfg.is_mollified else 0.0
    if cfg.task == "seq-copy":
        return SequenceModel.initialize(
            CellKind(cfg.cell),
            cfg.vocab,
            cfg.hidden,
            cfg.vocab + 1,
            rng,
            c,
            cfg.a_range,
        )
    if cfg.task == "parity":
        input_dim, head = cfg.bits, HeadKind.SIGMOID_CROSS_ENTROPY
    else:
        input_dim, head = 1, HeadKind.SQUARED_ERROR
    return MollifiedNetwork.initialize(
        input_dim,
        cfg.hidden,
        cfg.layers,
        ActivationKind(cfg.activation),
        head,
        1,
        rng,
        c=c,
        residual=cfg.residual or cfg.baseline == "residual-plain",
        a_range=cfg.a_range,
    )


class Trainer:
    """
    Training state of one seed: data, model, optimizer, annealing state and the
    shuffling and noise streams.

    Examples:
        >>> cfg = RunConfig(bits=3, examples=20, layers=2, hidden=4, epochs=1)
        >>> trainer = Trainer(cfg, seed=1)
        >>> trainer.anneal.num_layers, trainer.anneal.t
        (2, 1)
    """

    def __init__(self, cfg: RunConfig, seed: int) -> None:
        self.cfg = cfg
        self.seed = seed
        streams = RngStream(seed).spawn(4)
        data_rng, init_rng, self.shuffle_rng, self.noise_rng = streams
        self.split = make_task(cfg, data_rng)
        if cfg.anneal_loss == "valid" and len(self.split.valid) == 0:
            raise ConfigError(
                "cannot anneal on the validation loss; the task has no validation "
                "examples. "
            )
        self.model = build_model(cfg, init_rng)
        self.optimizer = OptimizerState(
            cfg.optimizer,
            cfg.learning_rate,
            momentum=cfg.momentum,
            rms_decay=cfg.rms_decay,
            nesterov=cfg.nesterov,
        )
        self.step = 0
        self.anneal = self._initial_anneal()
        self.valid_loss = (
            self.evaluate(self.split.valid)[0] if cfg.anneal_loss == "valid" else None
        )

    @property
    def is_sequence(self) -> bool:
        return isinstance(self.model, SequenceModel)

    def _initial_anneal(self) -> AnnealState:
        # The average starts at the loss of the noiseless network.
        zero = [0.0] * self.cfg.anneal_layers
        data = self.split.valid if self.cfg.anneal_loss == "valid" else self.split.train
        loss, _ = self.evaluate(data, zero, t=1)
        average = AverageKind(self.cfg.average)
        return AnnealState(
            k=self.cfg.k if self.cfg.is_mollified else 0.0,
            num_layers=self.cfg.anneal_layers,
            v=loss,
            beta=self.cfg.beta,
            delta=self.cfg.delta,
            average=average,
            window=self.cfg.window,
            history=[loss] if average is AverageKind.WINDOW else [],
        )

    def evaluate(
        self,
        data: Dataset,
        probabilities: Optional[List[float]] = None,
        t: Optional[int] = None,
    ) -> Tuple[float, float]:
        """
        Mean loss and accuracy on `data` in inference mode, at the current skip
        probabilities and annealing step unless given. Empty datasets evaluate to
        NaN.

        Raises `NonFiniteLossError` if the loss is not finite.
        """
        if len(data) == 0:
            return math.nan, math.nan
        if probabilities is None:
            probabilities = layer_probabilities(self.anneal)
        if self.is_sequence:
            t = self.anneal.t if t is None else t
            logits = sequence_infer(data.inputs, self.model, probabilities[0], t)
            head = self.model.head
            losses, accuracies = [], []
            for s in range(logits.shape[1]):
                losses.append(head.loss(logits[:, s], data.targets[:, s])[0])
                accuracies.append(head.accuracy(logits[:, s], data.targets[:, s]))
            loss, accuracy = float(np.mean(losses)), float(np.mean(accuracies))
        else:
            outputs = network_infer(data.inputs, self.model, probabilities)
            loss, _ = self.model.head.loss(outputs, data.targets)
            accuracy = self.model.head.accuracy(outputs, data.targets)
        if not math.isfinite(loss):
            raise NonFiniteLossError("evaluation produced a non-finite loss. ")
        return loss, accuracy

    def _apply(self, grads: Dict[str, np.ndarray]) -> None:
        parameters = self.model.named_parameters()
        apply_updates(parameters, grads, self.optimizer)
        for name, value in parameters.items():
            index = first_non_finite(value)
            if index is not None:
                raise NonFiniteValueError(
                    f"cannot update {name}; the update overflowed at flat index "
                    f"{index}. ",
                    name,
                    index,
                )
            self.model.set_parameter(name, value)

    def _anneal(self, loss: float) -> None:
        self.step += 1
        fed = loss if self.valid_loss is None else self.valid_loss
        update_loss_average(self.anneal, fed)
        skip = expected_skip(self.anneal)
        logger.debug(
            "seed %d step %d: loss %.6f, v %.6f, expected skip %.6f, p %s",
            self.seed,
            self.step,
            loss,
            self.anneal.v,
            skip,
            layer_probabilities(self.anneal),
        )

    def train_batch(self, inputs: np.ndarray, targets: np.ndarray) -> float:
        """
        Train on one mini-batch and return its mean training loss. Feed-forward
        models make one update; sequence models make one update per truncated
        backpropagation chunk, carrying the cell state across chunks.
        """
        if not self.is_sequence:
            loss, grads = network_loss_and_grads(
                inputs,
                targets,
                self.model,
                layer_probabilities(self.anneal),
                self.noise_rng,
            )
            self._apply(grads)
            self._anneal(loss)
            return loss
        state = initial_state(self.model, inputs.shape[0])
        losses = []
        for chunk in bptt_chunks(inputs.shape[1], self.cfg.bptt):
            record, grads = sequence_loss_and_grads(
                inputs[:, chunk],
                targets[:, chunk],
                self.model,
                layer_probabilities(self.anneal)[0],
                self.anneal.t,
                self.noise_rng,
                state,
            )
            self._apply(grads)
            self._anneal(record.loss)
            state = record.final_state
            losses.append(record.loss)
        return float(np.mean(losses))

    def train_epoch(self) -> None:
        train = self.split.train
        order = self.shuffle_rng.permutation(len(train))
        for start in range(0, len(train), self.cfg.batch_size):
            batch = train.subset(order[start : start + self.cfg.batch_size])
            self.train_batch(batch.inputs, batch.targets)

    def run_epoch(self, epoch: int, started: float) -> MetricsRow:
        """
        Train one epoch and evaluate it. `started` is the `time.perf_counter()` value
        the run started at.

        Raises `DivergenceError` if a loss or an updated parameter is not finite.
        """
        try:
            self.train_epoch()
            wall_ms = (
                int((time.perf_counter() - started) * 1000)
                if self.cfg.record_wall_time
                else 0
            )
            return self.metrics_row(epoch, wall_ms)
        except DIVERGENCE_ERRORS as exc:
            raise DivergenceError(
                f"cannot train seed {self.seed}; diverged in epoch {epoch} at step "
                f"{self.step}: {exc}"
            ) from exc

    def metrics_row(self, epoch: int, wall_ms: int = 0) -> MetricsRow:
        train_loss, train_acc = self.evaluate(self.split.train)
        valid_loss, valid_acc = self.evaluate(self.split.valid)
        if self.valid_loss is not None:
            self.valid_loss = valid_loss
        return MetricsRow(
            epoch,
            self.step,
            train_loss,
            train_acc,
            valid_loss,
            valid_acc,
            expected_skip(self.anneal),
            tuple(layer_probabilities(self.anneal)),
            wall_ms,
        )


def prepare_output(cfg: RunConfig) -> Dict[int, Path]:
    """
    Create the output directory and one directory per seed.

    Raises `OutputDirectoryError` if a directory cannot be created or written.
    """
    directories = {seed: Path(cfg.out) / f"seed_{seed}" for seed in cfg.seeds}
    for directory in directories.values():
        try:
            directory.mkdir(parents=True, exist_ok=True)
            probe = directory / ".write-test"
            probe.touch()
            probe.unlink()
        except OSError as exc:
            raise OutputDirectoryError(
                f"cannot write output directory {directory}; {exc}. "
            ) from None
    return directories


def train_seed(cfg: RunConfig, seed: int, directory: Path) -> SeedResult:
    """
    Train one seed, writing its metrics after every epoch and its checkpoint at
    initialization and after every epoch.

    A divergence stops training with status 1 and leaves the checkpoint of the last
    finished epoch in place.
    """
    trainer = Trainer(cfg, seed)
    checkpoint = directory / "checkpoint.json"
    save_checkpoint(checkpoint, trainer.model, trainer.anneal)
    start = time.perf_counter()
    epochs_to_target = None
    epoch = 0
    status = 0
    with MetricsWriter(directory / "metrics.csv", cfg.anneal_layers) as writer:
        try:
            for epoch in range(1, cfg.epochs + 1):
                row = trainer.run_epoch(epoch, start)
                writer.write(row)
                save_checkpoint(checkpoint, trainer.model, trainer.anneal)
                if epochs_to_target is None and row.train_acc >= cfg.target_accuracy:
                    epochs_to_target = epoch
                logger.info(
                    "seed %d epoch %d: train loss %.6f acc %.4f, valid loss %.6f "
                    "acc %.4f, expected skip %.4f",
                    seed,
                    epoch,
                    row.train_loss,
                    row.train_acc,
                    row.valid_loss,
                    row.valid_acc,
                    row.expected_skip,
                )
        except DivergenceError as exc:
            status = 1
            epoch -= 1
            logger.warning("%s", exc)
            logger.warning("keeping last good checkpoint %s", checkpoint)
    if cfg.plot and epoch > 0:
        emit_plot(
            directory / "metrics.csv",
            [column.strip() for column in cfg.plot_columns.split(",")],
            directory / "curves.svg",
        )
    return SeedResult(seed, status, epoch, epochs_to_target, directory)


def run_experiment(cfg: RunConfig) -> int:
    """
    Train every seed of `cfg` and write the aggregate and summary files. Seeds run
    on `cfg.workers` threads; each seed has its own streams and files.

    Returns 0 if every seed completed, 1 if any diverged.

    Raises `OutputDirectoryError` before training if the output directory cannot be
    written.
    """
    directories = prepare_output(cfg)
    logger.info(
        "running %s (%s baseline) for %d epochs on seeds %s",
        cfg.task,
        cfg.baseline,
        cfg.epochs,
        ", ".join(str(seed) for seed in cfg.seeds),
    )
    if cfg.workers > 1 and len(cfg.seeds) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [
                pool.submit(train_seed, cfg, seed, directories[seed])
                for seed in cfg.seeds
            ]
            results = [future.result() for future in futures]
    else:
        results = [train_seed(cfg, seed, directories[seed]) for seed in cfg.seeds]
    out = Path(cfg.out)
    try:
        write_aggregate(out / "aggregate.csv", [r.metrics_path for r in results])
        write_summary(
            out / "summary.csv", {r.seed: r.epochs_to_target for r in results}
        )
    except OSError as exc:
        raise OutputDirectoryError(
            f"cannot write run summary to {out}; {exc}. "
        ) from None
    return 1 if any(result.status for result in results) else 0
