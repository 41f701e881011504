"""Rule vectors, Gaussian mixture fitting, and elbow-method model selection.

Every rule is encoded as a 20-dimensional vector:

  dims  0-4   one-hot pre-effect category (velocity, position, animation,
              variable, empty)
  dim   5     pre-effect numeric value (0 for non-numeric payloads)
  dims  6-10  one-hot post-effect category, same order
  dim   11    post-effect numeric value
  dims 12-19  condition counts by fact family: animation, velocityX,
              velocityY, positionX, positionY, variable, relationship (both
              axes), empty

The mixture is diagonal-covariance, fitted by EM with farthest-point seeding,
and the cluster count is picked at the point of maximum perpendicular
distance between the negative-log-likelihood curve and its end-to-end chord.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .engine import Rule
from .errors import InvalidKError
from .facts import (
    ANIMATION,
    EMPTY,
    POSITION_X,
    POSITION_Y,
    RELATIONSHIP_X,
    RELATIONSHIP_Y,
    VARIABLE,
    VELOCITY_X,
    VELOCITY_Y,
    Fact,
)

RULE_VECTOR_DIMS = 20
VARIANCE_FLOOR = 1e-6

_CATEGORIES = ("velocity", "position", "animation", "variable", "empty")
_CONDITION_FAMILIES = (
    ANIMATION,
    VELOCITY_X,
    VELOCITY_Y,
    POSITION_X,
    POSITION_Y,
    VARIABLE,
    "relationship",
    EMPTY,
)


def _category(fact: Fact) -> str:
    if fact.kind in (VELOCITY_X, VELOCITY_Y):
        return "velocity"
    # Relationship offsets are positional information; fold them into the
    # position category so effect one-hots stay five-wide.
    if fact.kind in (POSITION_X, POSITION_Y, RELATIONSHIP_X, RELATIONSHIP_Y):
        return "position"
    if fact.kind == ANIMATION:
        return "animation"
    if fact.kind == VARIABLE:
        return "variable"
    return "empty"


def _numeric_value(fact: Fact) -> float:
    if isinstance(fact.value, bool) or fact.value is None or isinstance(fact.value, tuple):
        return 0.0
    return float(fact.value)


def encode_rule(rule: Rule) -> np.ndarray:
    """20-d numeric encoding of a rule; see the module docstring for layout."""
    vec = np.zeros(RULE_VECTOR_DIMS)
    vec[_CATEGORIES.index(_category(rule.pre))] = 1.0
    vec[5] = _numeric_value(rule.pre)
    vec[6 + _CATEGORIES.index(_category(rule.post))] = 1.0
    vec[11] = _numeric_value(rule.post)
    for condition in rule.conditions:
        family = condition.kind
        if family in (RELATIONSHIP_X, RELATIONSHIP_Y):
            family = "relationship"
        vec[12 + _CONDITION_FAMILIES.index(family)] += 1.0
    return vec


@dataclass(frozen=True)
class GmmModel:
    k: int
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    log_likelihood: float
    log_likelihood_history: tuple
    seed: int


def _as_matrix(vectors) -> np.ndarray:
    data = np.asarray(vectors, dtype=float)
    if data.ndim != 2:
        raise InvalidKError(f"expected a 2-d array of vectors, got shape {data.shape}")
    return data


def _log_densities(data: np.ndarray, model_weights, means, variances) -> np.ndarray:
    """(n, k) matrix of log(weight_k * N(x | mu_k, diag sigma_k))."""
    diff = data[:, None, :] - means[None, :, :]
    quad = np.sum(diff * diff / variances[None, :, :], axis=2)
    logdet = np.sum(np.log(2.0 * np.pi * variances), axis=1)
    return np.log(model_weights)[None, :] - 0.5 * (quad + logdet[None, :])


def _logsumexp(arr: np.ndarray, axis: int) -> np.ndarray:
    top = np.max(arr, axis=axis, keepdims=True)
    return (top + np.log(np.sum(np.exp(arr - top), axis=axis, keepdims=True))).squeeze(axis)


def _seed_means(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Farthest-point seeding: random first pick, then max-min-distance points."""
    n = data.shape[0]
    chosen = [int(rng.integers(n))]
    dist = np.sum((data - data[chosen[0]]) ** 2, axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.sum((data - data[nxt]) ** 2, axis=1))
    return data[chosen].copy()


def fit_gmm(vectors, k: int, seed: int = 0, max_iter: int = 200, tol: float = 1e-6) -> GmmModel:
    """EM for a diagonal-covariance Gaussian mixture.

    Deterministic given (vectors, k, seed); log-likelihood is non-decreasing
    across iterations and variances never drop below the floor.
    """
    data = _as_matrix(vectors)
    n, dims = data.shape
    if k < 1:
        raise InvalidKError("k must be >= 1")
    if k > n:
        raise InvalidKError(f"k={k} exceeds the {n} available vectors")

    rng = np.random.default_rng(seed)
    seeds = _seed_means(data, k, rng)
    # Hard-assign to the nearest seed for the starting parameters; a plain
    # global-variance start washes out the seeding on well-separated data.
    nearest = np.argmin(
        np.sum((data[:, None, :] - seeds[None, :, :]) ** 2, axis=2), axis=1
    )
    base_var = np.maximum(np.var(data, axis=0), VARIANCE_FLOOR)
    means = seeds.copy()
    variances = np.tile(base_var, (k, 1))
    weights = np.full(k, 1.0 / k)
    for j in range(k):
        members = data[nearest == j]
        if len(members):
            weights[j] = len(members) / n
            means[j] = members.mean(axis=0)
            variances[j] = np.maximum(members.var(axis=0), VARIANCE_FLOOR)
    weights = weights / weights.sum()

    history = []
    prev_ll = -np.inf
    for _ in range(max_iter):
        log_dens = _log_densities(data, weights, means, variances)
        log_norm = _logsumexp(log_dens, axis=1)
        ll = float(np.sum(log_norm))
        history.append(ll)
        resp = np.exp(log_dens - log_norm[:, None])

        mass = resp.sum(axis=0)
        mass = np.maximum(mass, 1e-12)
        weights = mass / n
        weights = weights / weights.sum()
        means = (resp.T @ data) / mass[:, None]
        diff = data[:, None, :] - means[None, :, :]
        variances = np.einsum("nk,nkd->kd", resp, diff * diff) / mass[:, None]
        variances = np.maximum(variances, VARIANCE_FLOOR)

        if ll - prev_ll < tol and np.isfinite(prev_ll):
            break
        prev_ll = ll

    return GmmModel(
        k=k,
        weights=weights,
        means=means,
        variances=variances,
        log_likelihood=history[-1],
        log_likelihood_history=tuple(history),
        seed=seed,
    )


ELBOW_MIN_DIP = 0.1


def elbow_select(vectors, k_max: int = 12, seed: int = 0):
    """Pick the mixture size at the elbow of the negative-log-likelihood curve.

    Fits k = 1..k_max (each with seed+k) and selects the k whose curve point
    dips farthest below the chord joining the curve's endpoints, measured on
    the curve rescaled to the unit square.  A near-linear curve never dips
    meaningfully (less than ``ELBOW_MIN_DIP`` of the total drop), which means
    there is no elbow and the single-component model is kept.  Returns
    (selected k, the NLL curve).
    """
    if k_max < 2:
        raise InvalidKError("k_max must be >= 2")
    curve = []
    for k in range(1, k_max + 1):
        model = fit_gmm(vectors, k, seed=seed + k)
        curve.append(-model.log_likelihood)
    spread = max(curve) - min(curve)
    if spread == 0.0:
        return 1, curve
    ys = [(c - min(curve)) / spread for c in curve]
    xs = [i / (k_max - 1) for i in range(k_max)]
    best_k, best_dip = 1, ELBOW_MIN_DIP
    for i in range(k_max):
        chord_y = ys[0] + (ys[-1] - ys[0]) * xs[i]
        dip = chord_y - ys[i]
        if dip > best_dip:
            best_k, best_dip = i + 1, dip
    return best_k, curve


def assign_clusters(model: GmmModel, vectors) -> list:
    """Argmax posterior component per vector, with the winning responsibility."""
    data = _as_matrix(vectors)
    log_dens = _log_densities(data, model.weights, model.means, model.variances)
    log_norm = _logsumexp(log_dens, axis=1)
    resp = np.exp(log_dens - log_norm[:, None])
    out = []
    for row in resp:
        winner = int(np.argmax(row))
        out.append((winner, float(row[winner])))
    return out


def write_cluster_csv(path, rule_ids, vectors, assignments) -> None:
    """One row per rule: ruleId, the 20 vector dims, clusterId, responsibility."""
    data = _as_matrix(vectors)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["ruleId"]
            + [f"dim{i}" for i in range(RULE_VECTOR_DIMS)]
            + ["clusterId", "responsibility"]
        )
        for rule_id, vec, (cluster, resp) in zip(rule_ids, data, assignments):
            writer.writerow(
                [rule_id]
                + [f"{v:.6f}" for v in vec]
                + [cluster, f"{resp:.6f}"]
            )
