"""
Three scoring rules for multi-relational edges
==============================================

A network over N entities and K relation types assigns each directed
edge (head, tail, relation) a real score; the logistic transform of the
score is the edge probability.  This walk-through builds a toy network
and exercises the three scoring rules side by side.
"""

import numpy as np

from mrnet import (MODEL_KINDS, ModelParams, ScoreModel, Triple,
                   lipschitz_bound, score_sup_bound)
from mrnet.models import (edge_probability, score, score_gradient, scores)

rng = np.random.default_rng(0)
n_entities, n_relations, d = 5, 2, 3
edge = Triple(0, 3, 1)

for kind in MODEL_KINDS:
    model = ScoreModel(kind, d)
    # every parameter row lives in a ball of this radius
    params = ModelParams(rng.normal(0, 0.5, (n_entities, d)),
                         rng.normal(0, 0.5, (n_relations, model.relation_dim)),
                         radius=2.0)

    phi = score(model, params, edge)
    print(f"{kind:9s} score {phi:+.4f}  probability {edge_probability(model, params, edge):.4f}")

    # the analytic gradient of the score, row by row: head entity,
    # tail entity, relation vector
    gh, gt, gr = score_gradient(model, params, edge)
    print(f"{'':9s} |grad| head {np.linalg.norm(gh):.3f}  "
          f"tail {np.linalg.norm(gt):.3f}  relation {np.linalg.norm(gr):.3f}")

    # a quick central-difference check on one head coordinate
    h = 1e-6
    params.entities[0, 0] += h
    up = score(model, params, edge)
    params.entities[0, 0] -= 2 * h
    dn = score(model, params, edge)
    params.entities[0, 0] += h
    print(f"{'':9s} dscore/dhead[0]: analytic {gh[0]:+.6f}  "
          f"numeric {(up - dn) / (2 * h):+.6f}")

    # worst-case constants over the radius-2 parameter ball: a bound on
    # |score| and on the gradient norm; both feed the deviation bounds
    print(f"{'':9s} sup score {score_sup_bound(model, 2.0):.1f}  "
          f"Lipschitz {lipschitz_bound(model, 2.0):.1f}")
    print()

# scoring is vectorized: all K relations for one (head, tail) pair at once
model = ScoreModel("distance", d)
params = ModelParams(rng.normal(0, 0.5, (n_entities, d)),
                     rng.normal(0, 0.5, (n_relations, model.relation_dim)),
                     radius=2.0)
all_rels = scores(model, params, np.zeros(n_relations, int),
                  np.full(n_relations, 3), np.arange(n_relations))
print("distance scores of (0 -> 3) under every relation:", np.round(all_rels, 4))
