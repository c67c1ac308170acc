"""Training loop: per epoch, disassemble the triplets into a pointwise pool,
shuffle both pools, split them into ratio-preserving joint mini-batches,
and take one optimizer step per batch on the corrected risk.

Ratio-preserving batching (every batch gets a near-proportional share of
both pools) keeps the two per-batch means well defined; a plain merged
shuffle could produce batches with an empty side, where a term of the
estimator has no value.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    ClassPrior,
    ConfigurationError,
    CorrectionKind,
    InsufficientDataError,
    LabeledPool,
    LossSpec,
    WeakDataset,
    loss_grads,
    loss_values,
)
from .model import AdamState, Model, adam_step, backward, forward, init_model
from .risk import (
    Thetas,
    compute_thetas,
    empirical_risk,
    empirical_risk_grad,
    matched_point_weights,
)
from .sampler import disassemble


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters. The prior is the one GIVEN to training,
    which may deliberately differ from the data-generation prior when
    studying misspecification."""

    prior: ClassPrior
    loss: LossSpec = field(default_factory=LossSpec)
    correction: CorrectionKind = CorrectionKind.ABS
    estimator: str = "matched"
    epochs: int = 600
    batch_size: int = 2000
    lr: float = 1e-3
    weight_decay: float = 1e-5
    model_kind: str = "linear"
    hidden: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.estimator not in ("matched", "plain"):
            raise ConfigurationError(
                f"estimator must be 'matched' or 'plain', got {self.estimator!r}"
            )
        if self.epochs < 0:
            raise ConfigurationError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 2:
            raise ConfigurationError(f"batch_size must be >= 2, got {self.batch_size}")
        self.prior.require_non_degenerate()


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    raw_risk: float
    corrected_risk: float
    us_term: float
    u_term: float
    test_accuracy: float | None = None


@dataclass
class TrainLog:
    records: list[EpochRecord] = field(default_factory=list)

    def to_rows(self) -> list[dict]:
        return [
            {
                "epoch": r.epoch,
                "raw_risk": r.raw_risk,
                "corrected_risk": r.corrected_risk,
                "us_term": r.us_term,
                "u_term": r.u_term,
                "test_accuracy": r.test_accuracy,
            }
            for r in self.records
        ]


def _accuracy(model: Model, x: np.ndarray, y: np.ndarray) -> float:
    scores = np.atleast_1d(forward(model, x))
    pred = np.where(scores >= 0, 1, -1)  # sign(0) counts as +1
    return float(np.mean(pred == y))


def _batch_plan(n_us: int, n_u: int, batch_size: int) -> int:
    """Number of joint batches; errors out when the sizes cannot give every
    batch at least one point from each pool."""
    total = n_us + n_u
    n_batches = -(-total // batch_size)
    if batch_size > n_us or batch_size > n_u:
        raise ConfigurationError(
            f"batch_size {batch_size} exceeds a pool size "
            f"(pointwise similarity pool {n_us}, unlabeled pool {n_u}); "
            "reduce --batch or supply more data"
        )
    if n_batches > min(n_us, n_u):
        raise ConfigurationError(
            f"{n_batches} batches cannot each contain a point from both pools "
            f"(sizes {n_us} and {n_u}); increase --batch"
        )
    return n_batches


def train(
    config: TrainConfig,
    data: WeakDataset,
    eval_set: LabeledPool | None = None,
) -> tuple[Model, TrainLog]:
    """Minimize the corrected weak-supervision risk; returns the final model
    and one log record per epoch. epochs = 0 returns the initialized model
    untouched.

    With estimator = "matched" (default) the similarity term uses the
    position-dependent weights of matched_point_weights, whose expectation
    equals the unnormalized similarity integral of the risk reconstruction;
    "plain" uses the uniform sample mean, whose calibration deficit makes
    the minimizer degenerate (see trisim.verify's bias suite).
    """
    if data.n_triplets < 1 or data.n_unlabeled < 1:
        raise InsufficientDataError(
            "training needs at least one triplet and one unlabeled point"
        )
    us_pool = disassemble(data.triplets)
    u_pool = data.unlabeled
    thetas = compute_thetas(config.prior)
    if config.estimator == "matched":
        us_weights, u_plus_coef = matched_point_weights(
            config.prior, data.sampler_kind, data.n_triplets
        )
    else:
        us_weights, u_plus_coef = None, 0.0

    _, ss_shuffle = np.random.SeedSequence(config.seed).spawn(2)
    dim = us_pool.shape[1]
    model = init_model(config.model_kind, dim, config.hidden, seed=config.seed)
    log = TrainLog()
    if config.epochs == 0:
        return model, log

    n_batches = _batch_plan(us_pool.shape[0], u_pool.shape[0], config.batch_size)
    state = AdamState.for_params(
        model.params(), lr=config.lr, weight_decay=config.weight_decay
    )
    rng = np.random.default_rng(ss_shuffle)

    for epoch in range(1, config.epochs + 1):
        us_order = rng.permutation(us_pool.shape[0])
        us_perm = us_pool[us_order]
        w_perm = None if us_weights is None else us_weights[us_order]
        u_perm = u_pool[rng.permutation(u_pool.shape[0])]
        w_batches = (
            [None] * n_batches if w_perm is None else np.array_split(w_perm, n_batches)
        )
        for us_batch, w_batch, u_batch in zip(
            np.array_split(us_perm, n_batches), w_batches, np.array_split(u_perm, n_batches)
        ):
            us_scores = np.atleast_1d(forward(model, us_batch))
            u_scores = np.atleast_1d(forward(model, u_batch))
            g_us, g_u = empirical_risk_grad(
                us_scores,
                u_scores,
                thetas,
                config.loss,
                config.correction,
                us_weights=w_batch,
                u_plus_coef=u_plus_coef,
            )
            x_all = np.concatenate([us_batch, u_batch])
            grads = backward(model, x_all, np.concatenate([g_us, g_u]))
            adam_step(model.params(), grads, state)
        rv = empirical_risk(
            np.atleast_1d(forward(model, us_pool)),
            np.atleast_1d(forward(model, u_pool)),
            thetas,
            config.loss,
            config.correction,
            us_weights=us_weights,
            u_plus_coef=u_plus_coef,
        )
        acc = _accuracy(model, eval_set.x, eval_set.y) if eval_set is not None else None
        log.records.append(
            EpochRecord(
                epoch=epoch,
                raw_risk=rv.raw,
                corrected_risk=rv.corrected,
                us_term=rv.us_term,
                u_term=rv.u_term,
                test_accuracy=acc,
            )
        )
    return model, log


def train_supervised_oracle(
    config: TrainConfig,
    labeled: LabeledPool,
    eval_set: LabeledPool | None = None,
) -> tuple[Model, TrainLog]:
    """Identical loop minimizing the plain supervised empirical risk; the
    upper-reference model for acceptance comparisons."""
    if len(labeled) < 1:
        raise InsufficientDataError("supervised training needs a non-empty pool")
    _, ss_shuffle = np.random.SeedSequence(config.seed).spawn(2)
    model = init_model(
        config.model_kind, labeled.x.shape[1], config.hidden, seed=config.seed
    )
    log = TrainLog()
    if config.epochs == 0:
        return model, log

    n = len(labeled)
    if config.batch_size > n:
        raise ConfigurationError(
            f"batch_size {config.batch_size} exceeds pool size {n}"
        )
    n_batches = -(-n // config.batch_size)
    state = AdamState.for_params(
        model.params(), lr=config.lr, weight_decay=config.weight_decay
    )
    rng = np.random.default_rng(ss_shuffle)

    for epoch in range(1, config.epochs + 1):
        perm = rng.permutation(n)
        for idx in np.array_split(perm, n_batches):
            x, y = labeled.x[idx], labeled.y[idx]
            scores = np.atleast_1d(forward(model, x))
            upstream = np.where(
                y == 1,
                loss_grads(config.loss, scores, 1),
                loss_grads(config.loss, scores, -1),
            ) / idx.size
            grads = backward(model, x, upstream)
            adam_step(model.params(), grads, state)
        scores = np.atleast_1d(forward(model, labeled.x))
        risk = float(
            np.mean(
                np.where(
                    labeled.y == 1,
                    loss_values(config.loss, scores, 1),
                    loss_values(config.loss, scores, -1),
                )
            )
        )
        acc = _accuracy(model, eval_set.x, eval_set.y) if eval_set is not None else None
        log.records.append(
            EpochRecord(
                epoch=epoch,
                raw_risk=risk,
                corrected_risk=risk,
                us_term=risk,
                u_term=0.0,
                test_accuracy=acc,
            )
        )
    return model, log
