"""Surrogate-model minimization of expensive stochastic objectives.

Classic stochastic-RBF scheme: evaluate a Latin-hypercube design, fit a
smoothed thin-plate RBF surrogate, then repeatedly score a candidate pool by
a weighted blend of predicted value and distance to already-evaluated points,
cycling the blend weight between exploration and exploitation. Only the true
objective evaluations count against the budget, which is what makes the
approach attractive when each evaluation is a full multi-agent simulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RBFInterpolator
from scipy.stats import qmc

from .errors import ConfigurationError

WEIGHT_CYCLE = (0.3, 0.5, 0.8, 0.95, 1.0)
DESIGN_MULTIPLIER = 10


@dataclass
class SurrogateResult:
    x_best: np.ndarray
    f_best: float
    log: list = field(default_factory=list)   # (x tuple, f) per evaluation

    def as_rows(self):
        return [(i, *x, f) for i, (x, f) in enumerate(self.log)]


def _fit_surrogate(points: np.ndarray, values: np.ndarray) -> RBFInterpolator:
    spread = float(values.std())
    smoothing = 1e-8 if spread == 0 else 0.01 * spread
    return RBFInterpolator(points, values, kernel="thin_plate_spline",
                           smoothing=smoothing)


def minimize_surrogate(fun, bounds, budget: int, seed: int = 0,
                       design_size: int | None = None,
                       n_candidates: int = 2000) -> SurrogateResult:
    """Minimize ``fun`` over box ``bounds`` using at most ``budget`` calls.

    Deterministic given (bounds, budget, seed) and a deterministic ``fun``.
    ``budget`` must cover the initial design (10 x dimension by default);
    budget == design size degenerates to returning the best design point.
    """
    bounds = np.asarray(bounds, dtype=np.float64)
    if bounds.ndim != 2 or bounds.shape[1] != 2:
        raise ConfigurationError("bounds must be an (n, 2) array")
    dim = len(bounds)
    lo, hi = bounds[:, 0], bounds[:, 1]
    if (hi <= lo).any():
        raise ConfigurationError("each bound must satisfy low < high")
    if design_size is None:
        design_size = DESIGN_MULTIPLIER * dim
    if budget < design_size:
        raise ConfigurationError(
            f"budget {budget} is smaller than the initial design {design_size}")

    rng = np.random.default_rng(seed)
    sampler = qmc.LatinHypercube(d=dim, seed=rng)
    unit = sampler.random(design_size)
    points = lo + unit * (hi - lo)

    log = []
    values = []
    for x in points:
        f = float(fun(x))
        log.append((tuple(x), f))
        values.append(f)
    values = np.asarray(values)
    evaluated = points.copy()

    span = hi - lo
    while len(log) < budget:
        surrogate = _fit_surrogate((evaluated - lo) / span, values)
        w = WEIGHT_CYCLE[(len(log) - design_size) % len(WEIGHT_CYCLE)]
        best = evaluated[int(np.argmin(values))]
        # candidate pool: global uniform plus local perturbations of the best
        n_local = n_candidates // 2
        global_c = rng.random((n_candidates - n_local, dim))
        scale = 0.1 * (0.5 ** ((len(log) - design_size) // (2 * len(WEIGHT_CYCLE))))
        local_c = ((best - lo) / span
                   + rng.normal(0.0, scale, (n_local, dim)))
        cand = np.clip(np.vstack([global_c, local_c]), 0.0, 1.0)
        pred = surrogate(cand)
        pr_lo, pr_hi = pred.min(), pred.max()
        pred_score = ((pred - pr_lo) / (pr_hi - pr_lo)) if pr_hi > pr_lo else np.zeros(len(cand))
        dists = np.sqrt(
            ((cand[:, None, :] - (evaluated - lo) / span[None, :]) ** 2).sum(-1)
        ).min(axis=1)
        d_hi = dists.max()
        dist_score = 1.0 - dists / d_hi if d_hi > 0 else np.ones(len(cand))
        score = w * pred_score + (1.0 - w) * dist_score
        x_unit = cand[int(np.argmin(score))]
        x = lo + x_unit * span
        f = float(fun(x))
        log.append((tuple(x), f))
        evaluated = np.vstack([evaluated, x])
        values = np.append(values, f)

    i_best = int(np.argmin(values))
    return SurrogateResult(x_best=evaluated[i_best].copy(),
                           f_best=float(values[i_best]), log=log)
