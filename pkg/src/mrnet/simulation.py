"""Synthetic networks: ground-truth parameters, labels, observations.

The generator draws truth parameters from truncated normals, realizes
edge labels as independent Bernoulli draws with the model-implied
probabilities, and reveals each edge independently with probability
``obs_rate``.  Labels come from a counter-based stream keyed by the
edge's linear index, so any sub-collection of edges can be realized
without touching the rest — a network with 10^9 edge slots costs only
as much as the slots actually examined.
"""

from __future__ import annotations

import dataclasses
import time
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ._rng import counter_uniforms, derive_seed
from .estimation import ObservationSet, TrainConfig, train
from .evaluation import EvalReport, evaluate_losses
from .models import ModelParams, NetworkShape, ScoreModel, Triple, \
    edge_probabilities, scores

__all__ = [
    "GenSpec",
    "LabelSampler",
    "ExperimentGrid",
    "GridRow",
    "generate_truth",
    "sample_network",
    "sample_observations",
    "run_grid",
    "write_grid_csv",
    "GRID_CSV_HEADER",
]

# stream tags so one user seed fans out into independent sub-streams
_TAG_TRUTH, _TAG_LABELS, _TAG_MASK, _TAG_TRAIN, _TAG_EVAL = range(5)

# Break the edge universe into chunks of this many slots when scanning.
_CHUNK = 1 << 18


@dataclasses.dataclass(frozen=True)
class GenSpec:
    """Ground-truth generator settings.

    Entity coordinates ~ N(0, entity_sd^2), relation shift coordinates
    ~ N(0, shift_sd^2), relation weight coordinates ~ N(0, weight_sd^2),
    every coordinate rejected outside [-truncation, truncation].  The
    implied row-norm radius is truncation * sqrt(max row length).
    """

    model: ScoreModel
    shape: NetworkShape
    entity_sd: float = 1.0
    shift_sd: float = 1.0
    weight_sd: float = 0.5
    truncation: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if min(self.entity_sd, self.shift_sd, self.weight_sd) <= 0:
            raise ValueError("coordinate sds must be positive")
        if self.truncation <= 0:
            raise ValueError("truncation must be positive")

    @property
    def radius(self) -> float:
        d = max(self.model.latent_dim, self.model.relation_dim)
        return self.truncation * float(np.sqrt(d))


def _truncated_normal(rng: np.random.Generator, shape, sd: float,
                      bound: float) -> np.ndarray:
    out = rng.normal(0.0, sd, size=shape)
    bad = np.abs(out) > bound
    while np.any(bad):  # rejection; redraw only the offending coordinates
        out[bad] = rng.normal(0.0, sd, size=int(bad.sum()))
        bad = np.abs(out) > bound
    return out


def generate_truth(spec: GenSpec) -> ModelParams:
    """Draw ground-truth parameters; deterministic in ``spec.seed``."""
    rng = np.random.default_rng(derive_seed(spec.seed, _TAG_TRUTH))
    model, shape = spec.model, spec.shape
    d = model.latent_dim
    ent = _truncated_normal(rng, (shape.n_entities, d), spec.entity_sd,
                            spec.truncation)
    k = shape.n_relations
    if model.kind == "distance":
        shift = _truncated_normal(rng, (k, d), spec.shift_sd, spec.truncation)
        offs = _truncated_normal(rng, (k, 1), spec.weight_sd, spec.truncation)
        rel = np.concatenate([shift, offs], axis=1)
    elif model.kind == "bilinear":
        rel = _truncated_normal(rng, (k, d), spec.weight_sd, spec.truncation)
    else:
        shift = _truncated_normal(rng, (k, d), spec.shift_sd, spec.truncation)
        wt = _truncated_normal(rng, (k, d), spec.weight_sd, spec.truncation)
        rel = np.concatenate([shift, wt], axis=1)
    return ModelParams(ent, rel, spec.radius)


class LabelSampler:
    """Lazy Bernoulli edge labels for one realized network.

    The label of edge (h, t, r) is a pure function of the sampler's
    seed and the edge's linear index (h*N + t)*K + r, so queries are
    independent of order and of which other edges get realized.
    """

    def __init__(self, model: ScoreModel, truth: ModelParams,
                 shape: NetworkShape, seed: int):
        truth.check_model(model)
        if truth.n_entities != shape.n_entities or \
                truth.n_relations != shape.n_relations:
            raise ValueError("truth parameters do not match the network shape")
        self.model = model
        self.truth = truth
        self.shape = shape
        self._key = derive_seed(seed, _TAG_LABELS)

    def linear_index(self, heads, tails, rels) -> np.ndarray:
        n, k = self.shape.n_entities, self.shape.n_relations
        return (np.asarray(heads, dtype=np.int64) * n
                + np.asarray(tails, dtype=np.int64)) * k \
            + np.asarray(rels, dtype=np.int64)

    def probabilities(self, heads, tails, rels) -> np.ndarray:
        return edge_probabilities(self.model, self.truth, heads, tails, rels)

    def labels(self, heads, tails, rels) -> np.ndarray:
        u = counter_uniforms(self._key, self.linear_index(heads, tails, rels))
        return (u < self.probabilities(heads, tails, rels)).astype(np.int8)

    def label(self, edge: Triple) -> int:
        return int(self.labels([edge.head], [edge.tail], [edge.rel])[0])


def sample_network(model: ScoreModel, truth: ModelParams,
                   shape: NetworkShape, seed: int) -> LabelSampler:
    """Realize one network's labels (lazily) from the ground truth."""
    return LabelSampler(model, truth, shape, seed)


def _decode(linear: np.ndarray, shape: NetworkShape):
    n, k = shape.n_entities, shape.n_relations
    rels = linear % k
    pair = linear // k
    return pair // n, pair % n, rels


def _distinct_uniform(rng: np.random.Generator, total: int,
                      count: int) -> np.ndarray:
    """``count`` distinct integers from [0, total), uniform over subsets."""
    if count > total:
        raise ValueError("count exceeds population size")
    if count == 0:
        return np.empty(0, dtype=np.int64)
    if total <= (1 << 22) or 3 * count >= total:
        return np.sort(rng.permutation(total)[:count].astype(np.int64))
    # Rejection sampling, vectorized: keep the first `count` distinct
    # values in draw order, which matches drawing one at a time.
    draws = np.empty(0, dtype=np.int64)
    while True:
        need = count + 4 * (count * count // total + 1) + 64
        draws = np.concatenate([draws, rng.integers(0, total, size=need)])
        _, first = np.unique(draws, return_index=True)
        if len(first) >= count:
            first.sort()  # chronological order of first occurrences
            return np.sort(draws[first[:count]])


def sample_observations(shape: NetworkShape, labels: LabelSampler, seed: int,
                        method: str = "auto") -> ObservationSet:
    """Reveal each edge independently with probability ``shape.obs_rate``.

    ``method`` picks how the revealed subset is drawn:

    - ``"flip"``: one uniform per edge slot (exact Bernoulli mask; cost
      proportional to the full edge universe);
    - ``"binomial"``: draw |S| ~ Binomial(N^2 K, rate), then a uniform
      |S|-subset — the same distribution, at cost proportional to |S|;
    - ``"auto"``: flip for universes up to 2^22 slots, binomial beyond.
    """
    if method not in ("auto", "flip", "binomial"):
        raise ValueError(f"unknown sampling method {method!r}")
    total = shape.n_edges
    rate = shape.obs_rate
    rng = np.random.default_rng(derive_seed(seed, _TAG_MASK))
    if method == "auto":
        method = "flip" if total <= (1 << 22) else "binomial"
    if rate == 0.0:
        chosen = np.empty(0, dtype=np.int64)
    elif rate == 1.0:
        chosen = np.arange(total, dtype=np.int64)
    elif method == "flip":
        chosen = np.nonzero(rng.random(total) < rate)[0].astype(np.int64)
    else:
        count = int(rng.binomial(total, rate))
        chosen = _distinct_uniform(rng, total, count)
    heads, tails, rels = _decode(chosen, shape)
    ys = labels.labels(heads, tails, rels) if len(chosen) else \
        np.empty(0, dtype=np.int8)
    return ObservationSet(shape, heads, tails, rels, ys, validate=False)


@dataclasses.dataclass
class ExperimentGrid:
    """A sweep over network sizes and observation rates.

    ``gen`` is the template generator (its shape's size fields are
    overridden per cell; its seed is the master seed for the whole
    grid).  Evaluation covers every edge slot when the universe has at
    most ``eval_cap`` slots, else a uniform subsample of that size.
    """

    gen: GenSpec
    train: TrainConfig
    entity_counts: Sequence[int]
    obs_rates: Sequence[float]
    replicates: int = 1
    eval_cap: int = 1_000_000
    fit_radius_from_truth: bool = True

    def cells(self) -> List[Tuple[int, float]]:
        return [(int(n), float(g)) for n in self.entity_counts
                for g in self.obs_rates]


@dataclasses.dataclass
class GridRow:
    """One (cell, replicate) outcome; metrics are NaN on failure."""

    n_entities: int
    obs_rate: float
    replicate: int
    avg_kl: float
    mse_phi: float
    link_err: float
    seconds: float
    n_evaluated: int = 0
    eval_exact: bool = True
    error: Optional[str] = None


def _eval_edges(shape: NetworkShape, cap: int, seed: int):
    """All edge slots if they fit under ``cap``, else a uniform subsample."""
    total = shape.n_edges
    if total <= cap:
        return None, True  # None means "scan everything"
    rng = np.random.default_rng(derive_seed(seed, _TAG_EVAL))
    lin = _distinct_uniform(rng, total, cap)
    return _decode(lin, shape), False


def run_replicate(grid: ExperimentGrid, n_entities: int, obs_rate: float,
                  cell_index: int, replicate: int) -> GridRow:
    base = grid.gen.seed
    shape = NetworkShape(n_entities, grid.gen.shape.n_relations, obs_rate)
    spec = dataclasses.replace(
        grid.gen, shape=shape,
        seed=derive_seed(base, cell_index, replicate, _TAG_TRUTH))
    t0 = time.perf_counter()
    truth = generate_truth(spec)
    sampler = sample_network(
        spec.model, truth, shape,
        derive_seed(base, cell_index, replicate, _TAG_LABELS))
    obs = sample_observations(
        shape, sampler, derive_seed(base, cell_index, replicate, _TAG_MASK))
    config = dataclasses.replace(
        grid.train, seed=derive_seed(base, cell_index, replicate, _TAG_TRAIN))
    if grid.fit_radius_from_truth:
        config = dataclasses.replace(config, radius=spec.radius)
    fitted = train(spec.model, shape, obs, config).params
    edges, exact = _eval_edges(
        shape, grid.eval_cap,
        derive_seed(base, cell_index, replicate, _TAG_EVAL))
    report = evaluate_losses(spec.model, fitted, truth, edges=edges,
                             shape=shape)
    seconds = time.perf_counter() - t0
    return GridRow(n_entities, obs_rate, replicate, report.avg_kl,
                   report.mse_phi, report.link_err, seconds,
                   n_evaluated=report.n_evaluated, eval_exact=exact)


def run_grid(grid: ExperimentGrid, n_workers: int = 1) -> List[GridRow]:
    """Run every (cell, replicate); failures become NaN rows, not raises.

    Row order and all random draws are deterministic functions of the
    grid settings (replicate seeds derive from the master seed, the
    cell index, and the replicate index), so reruns reproduce the same
    table regardless of which cells fail or how many workers run them.
    """
    jobs = [(ci, n, rate, rep)
            for ci, (n, rate) in enumerate(grid.cells())
            for rep in range(grid.replicates)]

    def run_one(job):
        ci, n, rate, rep = job
        try:
            return run_replicate(grid, n, rate, ci, rep)
        except Exception as exc:  # noqa: BLE001 - record and continue
            return GridRow(n, rate, rep, float("nan"), float("nan"),
                           float("nan"), float("nan"),
                           error=f"{type(exc).__name__}: {exc}")

    if n_workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            return list(pool.map(run_one, jobs))
    return [run_one(job) for job in jobs]


GRID_CSV_HEADER = "n_entities,obs_rate,replicate,avg_kl,mse_phi,link_err,seconds"


def write_grid_csv(rows: Sequence[GridRow], path, include_timing: bool = False):
    """Write the pinned results table.

    With ``include_timing`` false (the default) the seconds column is
    written as 0, which keeps the file byte-identical across reruns;
    measured wall times stay available on the in-memory rows.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(GRID_CSV_HEADER + "\n")
        for r in rows:
            secs = r.seconds if include_timing else 0.0
            fields = (str(r.n_entities), f"{r.obs_rate:.9g}", str(r.replicate),
                      f"{r.avg_kl:.9g}", f"{r.mse_phi:.9g}",
                      f"{r.link_err:.9g}", f"{secs:.9g}")
            fh.write(",".join(fields) + "\n")
