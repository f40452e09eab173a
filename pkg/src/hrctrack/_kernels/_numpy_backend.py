"""Vectorized numpy implementations of the hot kernels.

Array contracts shared with the compiled backend:

- hrc_forward(bt, endpoint_t, like): bt[k, t, i, j] holds the bridge step
  t -> t+1 into state i from state j (transposed layout), endpoint_t[k, i]
  the joint endpoint mass of (start i, destination k), like[t, i] the
  per-epoch observation likelihood. Returns (marg, dest, h) where a zero
  normalizer leaves h[t] = 0 and later epochs untouched.
- chain_forward(tt, initial, like): tt[t, i, j] is the step t -> t+1 into i
  from j. Returns (marg, h) with the same zero-normalizer contract.
- single_obs_table / multi_obs_table: per-epoch likelihood tables for the
  one-point and fixed-size scan models.
- clutter_table: per-point clutter-origin likelihoods.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def gaussian_point_table(points: np.ndarray, centers: np.ndarray, sigma2: float) -> np.ndarray:
    """(..., N) likelihood of each point under each cell's emission law.

    sigma2 = 0 degenerates to the exact-match indicator on cell centers.
    """
    points = np.asarray(points, dtype=float)
    diff = points[..., None, :] - centers[None, :, :]
    if sigma2 == 0.0:
        return np.all(diff == 0.0, axis=-1).astype(float)
    dist2 = np.einsum("...ij,...ij->...i", diff, diff)
    return np.exp(-dist2 / (2.0 * sigma2)) / (2.0 * np.pi * sigma2)


def clutter_table(
    points: np.ndarray, centers: np.ndarray, sigma2: float, weights: np.ndarray
) -> np.ndarray:
    """(T+1, M) likelihood of each point under the clutter origin."""
    return gaussian_point_table(points, centers, sigma2) @ weights


def single_obs_table(
    points: np.ndarray,
    centers: np.ndarray,
    sigma2: float,
    epsilon: float,
    weights: np.ndarray,
) -> np.ndarray:
    """(T+1, N) per-state likelihood of one point per epoch: target-origin
    with probability 1 - epsilon, clutter-origin with probability epsilon.
    `points` has shape (T+1, 1, 2)."""
    pts = np.asarray(points, dtype=float)[:, 0, :]
    cond = gaussian_point_table(pts, centers, sigma2)
    clutter = cond @ weights
    return (1.0 - epsilon) * cond + epsilon * clutter[:, None]


def multi_obs_table(
    points: np.ndarray,
    centers: np.ndarray,
    sigma2: float,
    lambda0: float,
    lambdas: np.ndarray,
    weights: np.ndarray,
) -> np.ndarray:
    """(T+1, N) per-state likelihood of an M-point scan: one slot may carry
    the target, every other slot is clutter. Products over the other slots
    reuse the full clutter product, recomputed directly when zeros appear."""
    points = np.asarray(points, dtype=float)
    n_epochs = points.shape[0]
    out = np.empty((n_epochs, centers.shape[0]))
    for t in range(n_epochs):
        cond = gaussian_point_table(points[t], centers, sigma2)  # (M, N)
        g = cond @ weights  # (M,)
        zero = np.flatnonzero(g == 0.0)
        if zero.size == 0:
            full = g.prod()
            others = full / g
            row = lambda0 * full + lambdas @ (cond * others[:, None])
        elif zero.size == 1:
            others_of_zero = g[g > 0].prod() if (g > 0).any() else 1.0
            m = zero[0]
            row = lambdas[m] * cond[m] * others_of_zero
        else:
            row = np.zeros(centers.shape[0])
        out[t] = row
    return out


def hrc_forward(
    bt: np.ndarray, endpoint_t: np.ndarray, like: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n_epochs = like.shape[0]
    horizon = n_epochs - 1
    n_dest, n_states = endpoint_t.shape
    marg = np.zeros((n_epochs, n_states))
    dest = np.zeros((n_epochs, n_dest))
    h = np.zeros(n_epochs)
    q = endpoint_t * like[0][None, :]
    total = q.sum()
    h[0] = total
    if total <= 0.0:
        return marg, dest, h
    q /= total
    marg[0] = q.sum(axis=0)
    dest[0] = q.sum(axis=1)
    for t in range(1, horizon):
        q = np.matmul(bt[:, t - 1], q[:, :, None])[:, :, 0]
        q *= like[t][None, :]
        total = q.sum()
        h[t] = total
        if total <= 0.0:
            return marg, dest, h
        q /= total
        marg[t] = q.sum(axis=0)
        dest[t] = q.sum(axis=1)
    arrived = q.sum(axis=1) * like[horizon]
    total = arrived.sum()
    h[horizon] = total
    if total <= 0.0:
        return marg, dest, h
    arrived /= total
    marg[horizon] = arrived
    dest[horizon] = arrived
    return marg, dest, h


def chain_forward(
    tt: np.ndarray, initial: np.ndarray, like: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    n_epochs = like.shape[0]
    n_states = initial.shape[0]
    marg = np.zeros((n_epochs, n_states))
    h = np.zeros(n_epochs)
    q = initial * like[0]
    total = q.sum()
    h[0] = total
    if total <= 0.0:
        return marg, h
    q = q / total
    marg[0] = q
    for t in range(1, n_epochs):
        q = (tt[t - 1] @ q) * like[t]
        total = q.sum()
        h[t] = total
        if total <= 0.0:
            return marg, h
        q /= total
        marg[t] = q
    return marg, h
