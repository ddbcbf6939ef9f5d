"""Loss metrics against a known truth, and filtered ranking metrics.

Two evaluation regimes:

* simulation studies, where the ground-truth parameters are known and
  we measure average Bernoulli KL, mean squared score error, and the
  link (sign) error over a set of edge slots;
* knowledge-base completion, where only a set of true triples is known
  and we rank each test triple against corrupted versions of itself,
  filtering out corruptions that are themselves true.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import rel_entr

from .models import (
    ModelParams,
    NetworkShape,
    ScoreModel,
    ShapeError,
    Triple,
    scores,
    sigmoid,
)

__all__ = [
    "KL_CLAMP",
    "EvalReport",
    "RankReport",
    "bernoulli_kl",
    "evaluate_losses",
    "rank_edge",
    "rank_report",
]

# Estimated probabilities are clamped into [KL_CLAMP, 1 - KL_CLAMP]
# before entering KL, so a saturated fit scores a large finite loss
# instead of infinity.
KL_CLAMP = 1e-12

_CHUNK = 1 << 18


def bernoulli_kl(p, q):
    """KL divergence between Bernoulli(p) and Bernoulli(q), elementwise.

    ``p`` is the reference and must lie in [0, 1]; ``q`` is the
    estimate and gets clamped away from the boundary by ``KL_CLAMP``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    scalar = p.ndim == 0 and q.ndim == 0
    if p.size and (p.min() < 0 or p.max() > 1):
        raise ValueError("reference probabilities must lie in [0, 1]")
    qc = np.clip(q, KL_CLAMP, 1.0 - KL_CLAMP)
    out = rel_entr(p, qc) + rel_entr(1.0 - p, 1.0 - qc)
    return float(out) if scalar else out


@dataclasses.dataclass
class EvalReport:
    avg_kl: float
    mse_phi: float
    link_err: float
    n_evaluated: int


def _decode(linear: np.ndarray, shape: NetworkShape):
    n, k = shape.n_entities, shape.n_relations
    rels = linear % k
    pair = linear // k
    return pair // n, pair % n, rels


def evaluate_losses(model: ScoreModel, fitted: ModelParams,
                    truth: ModelParams, edges=None,
                    shape: Optional[NetworkShape] = None) -> EvalReport:
    """Average KL / squared score error / sign error of a fit vs truth.

    ``edges`` is a (heads, tails, rels) triple of index arrays; pass
    ``None`` with a ``shape`` to scan every slot of the edge universe
    (chunked, so memory stays bounded).  The link prediction for a slot
    is "present" iff the fitted probability is >= 1/2, and the link
    error is the fraction of slots where that disagrees with the truth.
    """
    fitted.check_model(model)
    truth.check_model(model)
    if fitted.entities.shape != truth.entities.shape or \
            fitted.relations.shape != truth.relations.shape:
        raise ShapeError("fitted and truth parameter shapes differ")
    if edges is None:
        if shape is None:
            raise ValueError("need a network shape to scan all edges")
        total = shape.n_edges
        blocks = (
            _decode(np.arange(s, min(s + _CHUNK, total), dtype=np.int64), shape)
            for s in range(0, total, _CHUNK))
    else:
        heads, tails, rels = (np.asarray(a) for a in edges)
        if not len(heads):
            raise ValueError("no edges to evaluate")
        blocks = ((heads, tails, rels),)

    kl_sum = mse_sum = err_sum = 0.0
    count = 0
    for hs, ts, rs in blocks:
        phi_true = scores(model, truth, hs, ts, rs)
        phi_fit = scores(model, fitted, hs, ts, rs)
        m_true = sigmoid(phi_true)
        m_fit = sigmoid(phi_fit)
        kl_sum += bernoulli_kl(m_true, m_fit).sum()
        diff = phi_fit - phi_true
        mse_sum += (diff * diff).sum()
        err_sum += np.count_nonzero((m_fit >= 0.5) != (m_true >= 0.5))
        count += len(hs)
    return EvalReport(kl_sum / count, mse_sum / count, err_sum / count, count)


Validity = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def as_validity(truth_labels) -> Validity:
    """Normalize a truth oracle to a vectorized (h, t, r) -> bool map.

    Accepts a callable, a dense boolean array of shape (N, N, K), or a
    collection of (head, tail, rel) tuples / Triples.
    """
    if callable(truth_labels):
        return truth_labels
    if isinstance(truth_labels, np.ndarray):
        if truth_labels.ndim != 3:
            raise ShapeError("dense truth table must have shape (N, N, K)")
        table = truth_labels.astype(bool)
        return lambda h, t, r: table[h, t, r]
    pos = set()
    for item in truth_labels:
        if isinstance(item, Triple):
            pos.add((item.head, item.tail, item.rel))
        else:
            h, t, r = item
            pos.add((int(h), int(t), int(r)))

    def lookup(h, t, r):
        h, t, r = (np.atleast_1d(np.asarray(a)) for a in (h, t, r))
        return np.fromiter(((int(a), int(b), int(c)) in pos
                            for a, b, c in zip(h, t, r)),
                           dtype=bool, count=len(h))

    return lookup


def rank_edge(model: ScoreModel, params: ModelParams, target: Triple,
              slot: str, truth_labels, shape: NetworkShape) -> float:
    """Filtered rank of a true triple against corruptions in one slot.

    ``slot`` is "head", "tail", or "relation"; the candidate pool is
    the target itself plus every corruption of that slot that is NOT a
    true triple (true corruptions are filtered out).  Rank is 1 plus
    the number of candidates scoring strictly above the target, plus
    half the number of non-target candidates tying it.
    """
    valid = as_validity(truth_labels)
    n, k = shape.n_entities, shape.n_relations
    if slot == "head":
        hs = np.arange(n)
        ts = np.full(n, target.tail)
        rs = np.full(n, target.rel)
        pos = target.head
    elif slot == "tail":
        hs = np.full(n, target.head)
        ts = np.arange(n)
        rs = np.full(n, target.rel)
        pos = target.tail
    elif slot == "relation":
        hs = np.full(k, target.head)
        ts = np.full(k, target.tail)
        rs = np.arange(k)
        pos = target.rel
    else:
        raise ValueError(f"unknown slot {slot!r}")
    is_true = np.asarray(valid(hs, ts, rs), dtype=bool)
    if not is_true[pos]:
        raise ValueError("target triple is not marked true in the filter")
    s = scores(model, params, hs, ts, rs)
    mask = ~is_true  # keeps only corruptions that are false; drops target too
    target_score = s[pos]
    above = int((s[mask] > target_score).sum())
    tied = int((s[mask] == target_score).sum())
    return 1.0 + above + 0.5 * tied


@dataclasses.dataclass
class RankReport:
    """Filtered ranking summary over a test set.

    Entity metrics average head and tail corruptions (2 ranks per test
    triple); relation metrics use relation corruptions (1 rank each).
    """

    mr_entity: float
    mrr_entity: float
    hits_entity: Dict[int, float]
    mr_relation: float
    mrr_relation: float
    hits_relation: Dict[int, float]
    n_triples: int


def rank_report(model: ScoreModel, params: ModelParams,
                test_triples: Sequence[Triple], truth_labels,
                shape: NetworkShape,
                entity_hits: Iterable[int] = (10,),
                relation_hits: Iterable[int] = (1,)) -> RankReport:
    """Mean rank / mean reciprocal rank / hits@q over a test set."""
    test = list(test_triples)
    if not test:
        raise ValueError("empty test set")
    valid = as_validity(truth_labels)
    ent_ranks = np.empty(2 * len(test))
    rel_ranks = np.empty(len(test))
    for i, tr in enumerate(test):
        ent_ranks[2 * i] = rank_edge(model, params, tr, "head", valid, shape)
        ent_ranks[2 * i + 1] = rank_edge(model, params, tr, "tail", valid, shape)
        rel_ranks[i] = rank_edge(model, params, tr, "relation", valid, shape)

    def summarize(ranks, qs):
        hits = {int(q): float((ranks <= q).mean()) for q in qs}
        return float(ranks.mean()), float((1.0 / ranks).mean()), hits

    mr_e, mrr_e, hits_e = summarize(ent_ranks, entity_hits)
    mr_r, mrr_r, hits_r = summarize(rel_ranks, relation_hits)
    return RankReport(mr_e, mrr_e, hits_e, mr_r, mrr_r, hits_r, len(test))
