"""Penalized maximum-likelihood fitting from partially observed edges.

The data are Bernoulli labels on a subset S of edge slots.  We maximize

    sum_{(edge, y) in S} [ y*log(sigmoid(score)) + (1-y)*log(1-sigmoid(score)) ]
        - rho1 * ||params||_1 - rho2 * ||params||_2^2

over parameters whose rows are confined to the radius-U ball, with an
optional hard cap on the number of nonzero entries.  Optimization is
projected stochastic ascent with AdaGrad step sizes; only rows touched
by a minibatch are updated, so cost per step is independent of N.
"""

from __future__ import annotations

import dataclasses
from typing import Iterator, Optional, Sequence

import numpy as np

from .models import (
    ModelParams,
    NetworkShape,
    ScoreModel,
    ShapeError,
    Triple,
    score_gradients,
    scores,
    sigmoid,
)

__all__ = [
    "Observation",
    "ObservationSet",
    "TrainConfig",
    "TrainResult",
    "SparseGradient",
    "log_likelihood",
    "penalized_objective",
    "objective_gradient",
    "project_ball",
    "project_l0",
    "train",
]


@dataclasses.dataclass(frozen=True)
class Observation:
    """One labeled edge: was the edge present (1) or absent (0)?"""

    edge: Triple
    label: int


class ObservationSet:
    """Columnar store of distinct labeled edges for one network."""

    def __init__(self, shape: NetworkShape, heads, tails, rels, labels,
                 validate: bool = True):
        self.shape = shape
        self.heads = np.ascontiguousarray(heads, dtype=np.int64)
        self.tails = np.ascontiguousarray(tails, dtype=np.int64)
        self.rels = np.ascontiguousarray(rels, dtype=np.int64)
        self.labels = np.ascontiguousarray(labels, dtype=np.int8)
        n = len(self.heads)
        if not (len(self.tails) == len(self.rels) == len(self.labels) == n):
            raise ShapeError("observation columns have unequal lengths")
        if validate:
            self._validate()

    def _validate(self):
        n, k = self.shape.n_entities, self.shape.n_relations
        for name, idx, hi in (("head", self.heads, n), ("tail", self.tails, n),
                              ("relation", self.rels, k)):
            if idx.size and (idx.min() < 0 or idx.max() >= hi):
                raise ValueError(f"{name} index out of range [0, {hi})")
        if self.labels.size and not np.all((self.labels == 0) | (self.labels == 1)):
            raise ValueError("labels must be 0 or 1")
        lin = self.linear_indices()
        if len(np.unique(lin)) != len(lin):
            raise ValueError("observations contain duplicate edges")

    @classmethod
    def from_observations(cls, shape: NetworkShape,
                          obs: Sequence[Observation]) -> "ObservationSet":
        heads = [o.edge.head for o in obs]
        tails = [o.edge.tail for o in obs]
        rels = [o.edge.rel for o in obs]
        labels = [o.label for o in obs]
        return cls(shape, heads, tails, rels, labels)

    def linear_indices(self) -> np.ndarray:
        n, k = self.shape.n_entities, self.shape.n_relations
        return (self.heads * n + self.tails) * k + self.rels

    def __len__(self) -> int:
        return len(self.heads)

    def __iter__(self) -> Iterator[Observation]:
        for h, t, r, y in zip(self.heads, self.tails, self.rels, self.labels):
            yield Observation(Triple(int(h), int(t), int(r)), int(y))

    def positive_rate(self) -> float:
        return float(self.labels.mean()) if len(self) else float("nan")


@dataclasses.dataclass
class TrainConfig:
    """Optimizer settings.

    ``sparsity_cap`` (if set) keeps at most that many nonzero scalars
    across all parameters, re-imposed by hard thresholding once per
    epoch.  ``radius`` is the row-norm budget U for the fitted model.
    """

    epochs: int
    learning_rate: float = 0.1
    adagrad_eps: float = 1e-8
    batch_size: int = 128
    rho1: float = 0.0
    rho2: float = 0.0
    sparsity_cap: Optional[int] = None
    radius: float = 20.0
    init_scale: float = 0.1
    seed: int = 0

    def validate(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0 or self.adagrad_eps <= 0:
            raise ValueError("learning_rate and adagrad_eps must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.rho1 < 0 or self.rho2 < 0:
            raise ValueError("penalty weights must be nonnegative")
        if self.radius <= 0 or self.init_scale <= 0:
            raise ValueError("radius and init_scale must be positive")
        if self.sparsity_cap is not None and self.sparsity_cap < 0:
            raise ValueError("sparsity_cap must be nonnegative")


@dataclasses.dataclass
class TrainResult:
    params: ModelParams
    objective_trace: np.ndarray  # epochs + 1 entries; [0] is at init
    nnz_trace: np.ndarray


@dataclasses.dataclass
class SparseGradient:
    """Objective gradient restricted to the rows a batch touches."""

    entity_rows: np.ndarray
    entity_grad: np.ndarray
    relation_rows: np.ndarray
    relation_grad: np.ndarray


def log_likelihood(model: ScoreModel, params: ModelParams,
                   obs: ObservationSet) -> float:
    """Bernoulli log-likelihood of the labels; 0.0 for no observations."""
    if len(obs) == 0:
        return 0.0
    phi = scores(model, params, obs.heads, obs.tails, obs.rels)
    # y=1 -> -log(1+e^-phi), y=0 -> -log(1+e^phi); stable via logaddexp
    signed = np.where(obs.labels == 1, -phi, phi)
    return float(-np.logaddexp(0.0, signed).sum())


def _penalty(params: ModelParams, rho1: float, rho2: float) -> float:
    if rho1 == 0.0 and rho2 == 0.0:
        return 0.0
    e, r = params.entities, params.relations
    l1 = np.abs(e).sum() + np.abs(r).sum()
    sq = (e * e).sum() + (r * r).sum()
    return rho1 * l1 + rho2 * sq


def penalized_objective(model: ScoreModel, params: ModelParams,
                        obs: ObservationSet, rho1: float = 0.0,
                        rho2: float = 0.0) -> float:
    """Log-likelihood minus elastic-net penalty (to be maximized)."""
    if rho1 < 0 or rho2 < 0:
        raise ValueError("penalty weights must be nonnegative")
    return log_likelihood(model, params, obs) - _penalty(params, rho1, rho2)


def objective_gradient(model: ScoreModel, params: ModelParams,
                       batch: ObservationSet, rho1: float = 0.0,
                       rho2: float = 0.0, batch_scale: float = 1.0) -> SparseGradient:
    """Ascent gradient over a batch, as dense blocks on the touched rows.

    ``batch_scale`` multiplies the data term only (set it to
    |S| / |batch| for an unbiased minibatch estimate); the penalty term
    enters at full strength on every touched row.
    """
    if len(batch) == 0:
        raise ValueError("batch must be nonempty")
    if batch_scale <= 0:
        raise ValueError("batch_scale must be positive")
    p = sigmoid(scores(model, params, batch.heads, batch.tails, batch.rels))
    resid = (batch.labels - p) * batch_scale
    gh, gt, gr = score_gradients(model, params, batch.heads, batch.tails, batch.rels)

    nb = len(batch)
    ent_rows, ent_inv = np.unique(
        np.concatenate([batch.heads, batch.tails]), return_inverse=True)
    ent_grad = np.zeros((len(ent_rows), model.latent_dim))
    np.add.at(ent_grad, ent_inv[:nb], resid[:, None] * gh)
    np.add.at(ent_grad, ent_inv[nb:], resid[:, None] * gt)

    rel_rows, rel_inv = np.unique(batch.rels, return_inverse=True)
    rel_grad = np.zeros((len(rel_rows), model.relation_dim))
    np.add.at(rel_grad, rel_inv, resid[:, None] * gr)

    if rho1 or rho2:
        for rows, grad, block in ((ent_rows, ent_grad, params.entities),
                                  (rel_rows, rel_grad, params.relations)):
            vals = block[rows]
            grad -= rho1 * np.sign(vals) + 2.0 * rho2 * vals
    return SparseGradient(ent_rows, ent_grad, rel_rows, rel_grad)


def _scale_rows(arr: np.ndarray, rows, radius: float) -> None:
    norms = np.linalg.norm(arr[rows], axis=1)
    over = norms > radius
    if np.any(over):
        idx = np.asarray(rows)[over] if not isinstance(rows, slice) else \
            np.arange(arr.shape[0])[rows][over]
        arr[idx] *= (radius / norms[over])[:, None]


def project_ball(params: ModelParams, radius: float) -> ModelParams:
    """Rescale rows with norm above ``radius`` back onto the sphere."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    out = ModelParams(params.entities.copy(), params.relations.copy(), radius)
    _scale_rows(out.entities, slice(None), radius)
    _scale_rows(out.relations, slice(None), radius)
    return out


def project_l0(params: ModelParams, cap: int) -> ModelParams:
    """Keep the ``cap`` largest-magnitude scalars, zero the rest.

    Ties are broken toward the earlier position in the flattened
    (entities, relations) order, so the result is deterministic.
    """
    ne = params.entities.size
    total = ne + params.relations.size
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    if cap >= total:
        return params.copy()
    flat = np.concatenate([params.entities.ravel(), params.relations.ravel()])
    order = np.argsort(-np.abs(flat), kind="stable")
    kept = np.zeros(total)
    kept[order[:cap]] = flat[order[:cap]]
    return ModelParams(
        kept[:ne].reshape(params.entities.shape),
        kept[ne:].reshape(params.relations.shape),
        params.radius,
    )


def _init_params(model: ScoreModel, shape: NetworkShape,
                 config: TrainConfig, rng: np.random.Generator) -> ModelParams:
    s = config.init_scale
    ent = rng.uniform(-s, s, size=(shape.n_entities, model.latent_dim))
    rel = rng.uniform(-s, s, size=(shape.n_relations, model.relation_dim))
    params = project_ball(ModelParams(ent, rel, config.radius), config.radius)
    if config.sparsity_cap is not None:
        params = project_l0(params, config.sparsity_cap)
    return params


def _nnz(params: ModelParams) -> int:
    return int(np.count_nonzero(params.entities)
               + np.count_nonzero(params.relations))


def train(model: ScoreModel, shape: NetworkShape, obs: ObservationSet,
          config: TrainConfig) -> TrainResult:
    """Projected AdaGrad ascent on the penalized log-likelihood.

    Deterministic given ``config.seed``.  Ball projection runs on the
    touched rows after every step (projection is idempotent, so
    untouched rows stay feasible); the sparsity cap, if any, is
    re-imposed once per epoch and at the end.
    """
    config.validate()
    if len(obs) == 0:
        raise ValueError("cannot train on an empty observation set")
    if obs.shape.n_entities != shape.n_entities or \
            obs.shape.n_relations != shape.n_relations:
        raise ShapeError("observation set does not match the network shape")
    cap = config.sparsity_cap
    if cap is not None and cap > model.param_count(shape):
        raise ValueError("sparsity_cap exceeds the total parameter count")

    rng = np.random.default_rng(config.seed)
    params = _init_params(model, shape, config, rng)
    g2_ent = np.zeros_like(params.entities)
    g2_rel = np.zeros_like(params.relations)
    n_obs = len(obs)
    lr, eps = config.learning_rate, config.adagrad_eps

    objective = [penalized_objective(model, params, obs, config.rho1, config.rho2)]
    nnz = [_nnz(params)]

    for _ in range(config.epochs):
        perm = rng.permutation(n_obs)
        for start in range(0, n_obs, config.batch_size):
            idx = perm[start:start + config.batch_size]
            batch = ObservationSet(shape, obs.heads[idx], obs.tails[idx],
                                   obs.rels[idx], obs.labels[idx], validate=False)
            grad = objective_gradient(model, params, batch, config.rho1,
                                      config.rho2, batch_scale=n_obs / len(idx))
            for rows, g, block, g2 in (
                (grad.entity_rows, grad.entity_grad, params.entities, g2_ent),
                (grad.relation_rows, grad.relation_grad, params.relations, g2_rel),
            ):
                g2[rows] += g * g
                block[rows] += lr * g / (np.sqrt(g2[rows]) + eps)
                _scale_rows(block, rows, config.radius)
        if cap is not None:
            params = project_l0(params, cap)
        objective.append(
            penalized_objective(model, params, obs, config.rho1, config.rho2))
        nnz.append(_nnz(params))

    return TrainResult(params, np.asarray(objective), np.asarray(nnz, dtype=np.int64))
