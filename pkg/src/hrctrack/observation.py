"""Point-measurement models over the grid: target-origin emissions, clutter,
and the single-point / fixed-size-scan mixtures.

Provides
--------
- NoiseModel, ClutterModel, SingleObsModel, MultiObsModel: model parameters
- point_likelihood / clutter_point_likelihood / single_obs_likelihood /
  multi_obs_likelihood: scalar reference forms used by tests and oracles
- likelihood_table / clutter_likelihood_table: per-epoch tables via the
  selected kernel backend (the filters' fast path)
- generate_single_sequence / generate_multi_sequence /
  generate_clutter_sequence: samplers for target-present and clutter-only data
- ObservationRecord plus JSON-able conversion helpers

Observation sequences are arrays of shape (T+1, M, 2): one scan of M planar
points per epoch (M = 1 for the single-point model).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .gridworld import GridSpec

__all__ = [
    "NoiseModel",
    "ClutterModel",
    "SingleObsModel",
    "MultiObsModel",
    "ObservationRecord",
    "point_likelihood",
    "clutter_point_likelihood",
    "single_obs_likelihood",
    "multi_obs_likelihood",
    "likelihood_table",
    "clutter_likelihood_table",
    "generate_single_sequence",
    "generate_multi_sequence",
    "generate_clutter_sequence",
    "observations_to_jsonable",
    "observations_from_jsonable",
]


@dataclass(frozen=True)
class NoiseModel:
    """Isotropic Gaussian measurement noise with per-axis variance sigma2;
    sigma2 = 0 means exact cell-center reports."""

    sigma2: float

    def __post_init__(self) -> None:
        if self.sigma2 < 0:
            raise ValueError(f"sigma2 must be >= 0, got {self.sigma2}")


@dataclass(frozen=True)
class ClutterModel:
    """Clutter origin: a random cell drawn from `weights`, reported with the
    same noise as target measurements."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("clutter weights must form a probability vector")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, n_states: int) -> "ClutterModel":
        return cls(np.full(n_states, 1.0 / n_states))


@dataclass(frozen=True)
class SingleObsModel:
    """One point per epoch: clutter-origin with probability epsilon,
    target-origin otherwise. epsilon = 1 is the target-absent regime."""

    epsilon: float
    noise: NoiseModel
    clutter: ClutterModel

    def __post_init__(self) -> None:
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError(f"epsilon must be within [0, 1], got {self.epsilon}")


@dataclass(frozen=True)
class MultiObsModel:
    """Fixed-size scan of `count` points per epoch: slot priors give the
    target slot (lambdas[l] for slot l) or no target at all (lambda0 = 1 is
    the target-absent regime); every non-target slot is clutter."""

    count: int
    lambda0: float
    noise: NoiseModel
    clutter: ClutterModel
    lambdas: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")
        if not (0.0 <= self.lambda0 <= 1.0):
            raise ValueError(f"lambda0 must be within [0, 1], got {self.lambda0}")
        lam = self.lambdas
        if lam is None:
            lam = np.full(self.count, (1.0 - self.lambda0) / self.count)
        lam = np.asarray(lam, dtype=float)
        if lam.shape != (self.count,) or np.any(lam < 0):
            raise ValueError(f"lambdas must be {self.count} non-negative weights")
        if abs(self.lambda0 + lam.sum() - 1.0) > 1e-9:
            raise ValueError("lambda0 plus slot priors must sum to 1")
        object.__setattr__(self, "lambdas", lam)


@dataclass(frozen=True)
class ObservationRecord:
    """One epoch's scan: epoch index plus an (M, 2) array of points."""

    epoch: int
    points: np.ndarray


# ---------------------------------------------------------------------------
# Scalar reference likelihoods
# ---------------------------------------------------------------------------


def point_likelihood(point: np.ndarray, center: np.ndarray, sigma2: float) -> float:
    """Planar Gaussian density of an observed point around a cell center;
    exact-match indicator when sigma2 = 0."""
    dx = float(point[0]) - float(center[0])
    dy = float(point[1]) - float(center[1])
    if sigma2 == 0.0:
        return 1.0 if (dx == 0.0 and dy == 0.0) else 0.0
    return math.exp(-(dx * dx + dy * dy) / (2.0 * sigma2)) / (2.0 * math.pi * sigma2)


def clutter_point_likelihood(
    point: np.ndarray, model: SingleObsModel | MultiObsModel, grid: GridSpec
) -> float:
    """Likelihood of one point under the clutter origin: the weight-mixture
    of cell-center emissions."""
    centers = grid.centers()
    sigma2 = model.noise.sigma2
    return float(
        sum(
            w * point_likelihood(point, centers[j], sigma2)
            for j, w in enumerate(model.clutter.weights)
        )
    )


def single_obs_likelihood(
    point: np.ndarray, state: int, model: SingleObsModel, grid: GridSpec
) -> float:
    """Per-state likelihood of a single point: target and clutter mixture."""
    centers = grid.centers()
    cond = point_likelihood(point, centers[state], model.noise.sigma2)
    return (1.0 - model.epsilon) * cond + model.epsilon * clutter_point_likelihood(
        point, model, grid
    )


def multi_obs_likelihood(
    points: np.ndarray, state: int, model: MultiObsModel, grid: GridSpec
) -> float:
    """Per-state likelihood of a full scan, summing every slot association
    with direct products (clear reference form; the table builders use an
    algebraically identical factored computation)."""
    points = np.asarray(points, dtype=float)
    if points.shape != (model.count, 2):
        raise ValueError(f"scan must have shape ({model.count}, 2), got {points.shape}")
    centers = grid.centers()
    sigma2 = model.noise.sigma2
    g = [clutter_point_likelihood(points[m], model, grid) for m in range(model.count)]
    total = model.lambda0 * math.prod(g)
    for slot in range(model.count):
        term = model.lambdas[slot] * point_likelihood(points[slot], centers[state], sigma2)
        for m in range(model.count):
            if m != slot:
                term *= g[m]
        total += term
    return float(total)


# ---------------------------------------------------------------------------
# Table builders (fast path)
# ---------------------------------------------------------------------------


def _canonical_sequence(points: np.ndarray) -> np.ndarray:
    pts = np.ascontiguousarray(np.asarray(points, dtype=float))
    if pts.ndim == 2:
        pts = pts[:, None, :]
    if pts.ndim != 3 or pts.shape[-1] != 2:
        raise ValueError(f"observation sequence must have shape (T+1, M, 2), got {pts.shape}")
    return pts


def likelihood_table(
    points: np.ndarray, model: SingleObsModel | MultiObsModel, grid: GridSpec
) -> np.ndarray:
    """(T+1, N) per-epoch, per-state observation likelihoods."""
    pts = _canonical_sequence(points)
    centers = grid.centers()
    kern = _kernels.active()
    if isinstance(model, SingleObsModel):
        if pts.shape[1] != 1:
            raise ValueError(f"single-point model expects one point per epoch, got {pts.shape[1]}")
        return kern.single_obs_table(
            pts, centers, model.noise.sigma2, model.epsilon, model.clutter.weights
        )
    if pts.shape[1] != model.count:
        raise ValueError(f"scan model expects {model.count} points per epoch, got {pts.shape[1]}")
    return kern.multi_obs_table(
        pts, centers, model.noise.sigma2, model.lambda0, model.lambdas, model.clutter.weights
    )


def clutter_likelihood_table(
    points: np.ndarray, model: SingleObsModel | MultiObsModel, grid: GridSpec
) -> np.ndarray:
    """(T+1, M) clutter-origin likelihood of every point."""
    pts = _canonical_sequence(points)
    return _kernels.active().clutter_table(
        pts, grid.centers(), model.noise.sigma2, model.clutter.weights
    )


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def _noise(rng: np.random.Generator, sigma2: float, shape: tuple[int, ...]) -> np.ndarray:
    if sigma2 == 0.0:
        return np.zeros(shape)
    return rng.normal(0.0, math.sqrt(sigma2), shape)


def generate_single_sequence(
    rng: np.random.Generator,
    path: np.ndarray,
    model: SingleObsModel,
    grid: GridSpec,
) -> np.ndarray:
    """(T+1, 1, 2) sequence for a target path: each epoch reports either the
    target's cell or a clutter cell, plus noise."""
    centers = grid.centers()
    n_epochs = len(path)
    cells = centers[np.asarray(path)]
    is_clutter = rng.random(n_epochs) < model.epsilon
    clutter_cells = centers[rng.choice(grid.n_states, size=n_epochs, p=model.clutter.weights)]
    pts = np.where(is_clutter[:, None], clutter_cells, cells)
    return (pts + _noise(rng, model.noise.sigma2, pts.shape))[:, None, :]


def generate_multi_sequence(
    rng: np.random.Generator,
    path: np.ndarray,
    model: MultiObsModel,
    grid: GridSpec,
) -> np.ndarray:
    """(T+1, M, 2) scans for a target path: per epoch one slot may carry the
    target (slot prior lambdas, no-target prior lambda0), the rest clutter."""
    centers = grid.centers()
    n_epochs = len(path)
    m = model.count
    priors = np.concatenate([[model.lambda0], model.lambdas])
    chosen = rng.choice(m + 1, size=n_epochs, p=priors)  # 0 = no target slot
    cells = centers[
        rng.choice(grid.n_states, size=(n_epochs, m), p=model.clutter.weights)
    ]
    target_cells = centers[np.asarray(path)]
    for t in range(n_epochs):
        if chosen[t] > 0:
            cells[t, chosen[t] - 1] = target_cells[t]
    return cells + _noise(rng, model.noise.sigma2, cells.shape)


def generate_clutter_sequence(
    rng: np.random.Generator,
    n_epochs: int,
    model: SingleObsModel | MultiObsModel,
    grid: GridSpec,
) -> np.ndarray:
    """Target-absent data: every point in every scan is clutter."""
    centers = grid.centers()
    m = 1 if isinstance(model, SingleObsModel) else model.count
    cells = centers[
        rng.choice(grid.n_states, size=(n_epochs, m), p=model.clutter.weights)
    ]
    return cells + _noise(rng, model.noise.sigma2, cells.shape)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def observations_to_jsonable(points: np.ndarray) -> list[list[list[float]]]:
    """Nested lists (epoch -> point -> [x, y]) preserving full precision."""
    return [[list(map(float, p)) for p in scan] for scan in _canonical_sequence(points)]


def observations_from_jsonable(obj: list) -> np.ndarray:
    pts = np.asarray(obj, dtype=float)
    return _canonical_sequence(pts)
