"""Score models for multi-relational networks.

A network has N entities and K relation types; every directed pair
(head, tail) together with a relation type is an edge that is either
present or absent.  A score model assigns each edge a real score from
latent entity vectors (one length-d row per entity) and relation
vectors (length depends on the model), and the probability of the edge
being present is the logistic function of that score.

Three score forms are supported:

``distance``
    b - ||head + shift - tail||^2, relation vector (shift, b), length d+1.
``bilinear``
    sum_r w_r * head_r * tail_r, relation vector w, length d.
``combined``
    sum_r b_r * (head_r + shift_r - tail_r)^2, relation vector
    (shift, b), length 2d.
"""

from __future__ import annotations

import dataclasses

import numpy as np

__all__ = [
    "MODEL_KINDS",
    "ShapeError",
    "Triple",
    "NetworkShape",
    "ScoreModel",
    "ModelParams",
    "sigmoid",
    "score",
    "scores",
    "score_gradient",
    "score_gradients",
    "edge_probability",
    "edge_probabilities",
    "score_sup_bound",
    "lipschitz_bound",
]

MODEL_KINDS = ("distance", "bilinear", "combined")

# Smallest/largest doubles strictly inside (0, 1); sigmoid output is
# clamped here so downstream logs and KL terms never hit 0 or 1.
_P_LO = np.nextafter(0.0, 1.0)
_P_HI = np.nextafter(1.0, 0.0)


class ShapeError(ValueError):
    """Array dimensions disagree with the declared model or network."""


@dataclasses.dataclass(frozen=True)
class Triple:
    """One edge slot: (head entity, tail entity, relation type)."""

    head: int
    tail: int
    rel: int


@dataclasses.dataclass(frozen=True)
class NetworkShape:
    """Size of the edge universe plus the observation rate."""

    n_entities: int
    n_relations: int
    obs_rate: float = 1.0

    def __post_init__(self):
        if self.n_entities < 1 or self.n_relations < 1:
            raise ValueError("need at least one entity and one relation")
        if not 0.0 <= self.obs_rate <= 1.0:
            raise ValueError(f"obs_rate must be in [0, 1], got {self.obs_rate}")

    @property
    def n_edges(self) -> int:
        return self.n_entities * self.n_entities * self.n_relations

    @property
    def expected_observations(self) -> float:
        return self.obs_rate * self.n_edges


@dataclasses.dataclass(frozen=True)
class ScoreModel:
    """Model kind plus latent dimension; fixes all parameter shapes."""

    kind: str
    latent_dim: int

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")

    @property
    def relation_dim(self) -> int:
        d = self.latent_dim
        if self.kind == "distance":
            return d + 1
        if self.kind == "bilinear":
            return d
        return 2 * d

    def param_count(self, shape: NetworkShape) -> int:
        """Total number of scalar parameters m for a given network."""
        return (
            shape.n_entities * self.latent_dim
            + shape.n_relations * self.relation_dim
        )


@dataclasses.dataclass
class ModelParams:
    """Latent vectors: entities (N, d), relations (K, relation_dim).

    ``radius`` is the row-norm budget U: every entity row and every
    relation row is supposed to satisfy ||row||_2 <= U.  Training and
    generation enforce this by projection; ``validate`` checks it.
    """

    entities: np.ndarray
    relations: np.ndarray
    radius: float

    @property
    def n_entities(self) -> int:
        return self.entities.shape[0]

    @property
    def n_relations(self) -> int:
        return self.relations.shape[0]

    def copy(self) -> "ModelParams":
        return ModelParams(self.entities.copy(), self.relations.copy(), self.radius)

    def check_model(self, model: ScoreModel) -> None:
        if self.entities.ndim != 2 or self.relations.ndim != 2:
            raise ShapeError("entities and relations must be 2-d arrays")
        if self.entities.shape[1] != model.latent_dim:
            raise ShapeError(
                f"entity dim {self.entities.shape[1]} != model dim {model.latent_dim}"
            )
        if self.relations.shape[1] != model.relation_dim:
            raise ShapeError(
                f"relation dim {self.relations.shape[1]} != expected {model.relation_dim}"
            )

    def validate(self) -> None:
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        for name, arr in (("entities", self.entities), ("relations", self.relations)):
            if arr.ndim != 2:
                raise ShapeError(f"{name} must be a 2-d array")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            norms = np.linalg.norm(arr, axis=1)
            # tiny tolerance: projection scaling can overshoot by an ulp
            if norms.size and norms.max() > self.radius * (1 + 1e-12) + 1e-12:
                raise ValueError(
                    f"{name} row norm {norms.max():g} exceeds radius {self.radius:g}"
                )


def sigmoid(x):
    """Overflow-safe logistic, clamped strictly inside (0, 1)."""
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ex = np.exp(arr[~pos])
    out[~pos] = ex / (1.0 + ex)
    np.clip(out, _P_LO, _P_HI, out=out)
    return float(out[0]) if scalar else out


def _check_indices(shape_n, shape_k, heads, tails, rels):
    for name, idx, hi in (("head", heads, shape_n), ("tail", tails, shape_n),
                          ("relation", rels, shape_k)):
        idx = np.asarray(idx)
        if idx.size and (idx.min() < 0 or idx.max() >= hi):
            raise IndexError(f"{name} index out of range [0, {hi})")


def scores(model: ScoreModel, params: ModelParams, heads, tails, rels) -> np.ndarray:
    """Vectorized edge scores for parallel index arrays."""
    params.check_model(model)
    heads = np.asarray(heads, dtype=np.intp)
    tails = np.asarray(tails, dtype=np.intp)
    rels = np.asarray(rels, dtype=np.intp)
    th = params.entities[heads]
    tt = params.entities[tails]
    w = params.relations[rels]
    d = model.latent_dim
    if model.kind == "distance":
        v = th + w[:, :d] - tt
        return w[:, d] - np.einsum("ij,ij->i", v, v)
    if model.kind == "bilinear":
        return np.einsum("ij,ij,ij->i", th, w, tt)
    v = th + w[:, :d] - tt
    return np.einsum("ij,ij,ij->i", w[:, d:], v, v)


def score(model: ScoreModel, params: ModelParams, edge: Triple) -> float:
    """Score of a single edge; exact match with the vectorized path."""
    _check_indices(params.n_entities, params.n_relations,
                   [edge.head], [edge.tail], [edge.rel])
    return float(scores(model, params, [edge.head], [edge.tail], [edge.rel])[0])


def score_gradients(model: ScoreModel, params: ModelParams, heads, tails, rels):
    """Per-edge score gradients w.r.t. (head row, tail row, relation row).

    Returns arrays of shape (B, d), (B, d), (B, relation_dim).
    """
    params.check_model(model)
    heads = np.asarray(heads, dtype=np.intp)
    tails = np.asarray(tails, dtype=np.intp)
    rels = np.asarray(rels, dtype=np.intp)
    th = params.entities[heads]
    tt = params.entities[tails]
    w = params.relations[rels]
    d = model.latent_dim
    if model.kind == "distance":
        v = th + w[:, :d] - tt
        g_head = -2.0 * v
        g_rel = np.concatenate([g_head, np.ones((len(v), 1))], axis=1)
        return g_head, 2.0 * v, g_rel
    if model.kind == "bilinear":
        return w * tt, w * th, th * tt
    b = w[:, d:]
    v = th + w[:, :d] - tt
    bv = 2.0 * b * v
    return bv, -bv, np.concatenate([bv, v * v], axis=1)


def score_gradient(model: ScoreModel, params: ModelParams, edge: Triple):
    """Gradient of one edge's score: (d_head, d_tail, d_relation)."""
    _check_indices(params.n_entities, params.n_relations,
                   [edge.head], [edge.tail], [edge.rel])
    gh, gt, gr = score_gradients(model, params, [edge.head], [edge.tail], [edge.rel])
    return gh[0], gt[0], gr[0]


def edge_probabilities(model: ScoreModel, params: ModelParams, heads, tails, rels):
    return sigmoid(scores(model, params, heads, tails, rels))


def edge_probability(model: ScoreModel, params: ModelParams, edge: Triple) -> float:
    return float(sigmoid(score(model, params, edge)))


def score_sup_bound(model: ScoreModel, radius: float) -> float:
    """Bound C >= 2 with |score| <= C whenever all rows have norm <= radius.

    distance: max(2, U + 9U^2); bilinear: max(2, U^3); combined:
    max(2, 9U^3).  The 9U^2 / 9U^3 terms come from ||head + shift -
    tail|| <= 3U.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    u = float(radius)
    if model.kind == "distance":
        return max(2.0, u + 9.0 * u * u)
    if model.kind == "bilinear":
        return max(2.0, u**3)
    return max(2.0, 9.0 * u**3)


def lipschitz_bound(model: ScoreModel, radius: float) -> float:
    """Bound on the full-gradient norm of the score over the radius ball.

    distance: sqrt(1 + 108 U^2) (three blocks of norm <= 6U plus the
    constant-1 offset slot); bilinear: sqrt(3) U^2; combined:
    sqrt(189) U^2 (shift/entity blocks <= 6U^2 each, quadratic block
    <= 9U^2, so 3*(6U^2)^2 + (9U^2)^2 = 189 U^4).
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    u = float(radius)
    if model.kind == "distance":
        return float(np.sqrt(1.0 + 108.0 * u * u))
    if model.kind == "bilinear":
        return float(np.sqrt(3.0) * u * u)
    return float(np.sqrt(189.0) * u * u)
