"""Normalized forward filters for the three target models, with shared
per-epoch likelihood tables.

Provides
--------
- hrc_filter: joint destination/state recursion for the endpoint-conditioned
  model, with the destination posterior reported at the terminal epoch
- hmc_filter / hsc_filter / chain_filter: standard normalized forward pass
  for ordinary (possibly per-step) transition matrices
- hrc_init / hrc_step / hrc_terminal: single-step reference implementations
- clutter_embedded_hrc_step: the same step with the clutter mixture fused in,
  kept as an independent arithmetic route for cross-checking
- conditional_mean / map_states: point estimates from posterior marginals
- FilterState / FilterOutput containers, ZeroEvidenceError

Likelihoods enter either as a precomputed (T+1, N) table or as a callable
(t, i) -> value, which is tabulated once up front.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import _kernels
from .chains import BridgeFamily, SchrodingerBridge

__all__ = [
    "ZeroEvidenceError",
    "FilterState",
    "FilterOutput",
    "hrc_filter",
    "hmc_filter",
    "hsc_filter",
    "chain_filter",
    "hrc_init",
    "hrc_step",
    "hrc_terminal",
    "clutter_embedded_hrc_step",
    "conditional_mean",
    "map_states",
    "filter_output_to_jsonable",
]

LikelihoodSpec = Union[np.ndarray, Callable[[int, int], float]]


class ZeroEvidenceError(RuntimeError):
    """Observation sequence has zero likelihood under the model; carries the
    first epoch whose normalizer vanished."""

    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"zero normalizer at epoch {epoch}: data impossible under the model")


@dataclass
class FilterState:
    """One epoch of the recursion: normalized weights (joint (N, K) for the
    endpoint-conditioned model before the terminal epoch, a destination
    vector after it), the epoch's normalizer, and the running log-likelihood."""

    epoch: int
    weights: np.ndarray
    normalizer: float
    loglik: float


@dataclass
class FilterOutput:
    """Full-pass results: per-epoch state marginals (the terminal row is the
    destination posterior, whose states coincide with epoch-T states),
    per-epoch normalizers, the total log-likelihood, and point estimates
    when cell centers were supplied."""

    kind: str
    marginals: np.ndarray
    normalizers: np.ndarray
    loglik: float
    destination: np.ndarray | None = None
    cond_mean: np.ndarray | None = None
    map_states: np.ndarray | None = None


def _resolve_table(like: LikelihoodSpec, n_epochs: int, n_states: int) -> np.ndarray:
    if callable(like):
        table = np.empty((n_epochs, n_states))
        for t in range(n_epochs):
            for i in range(n_states):
                table[t, i] = like(t, i)
        return table
    table = np.ascontiguousarray(np.asarray(like, dtype=float))
    if table.shape != (n_epochs, n_states):
        raise ValueError(
            f"likelihood table must have shape ({n_epochs}, {n_states}), got {table.shape}"
        )
    return table


def _first_zero(h: np.ndarray) -> int:
    bad = np.flatnonzero(h <= 0.0)
    return int(bad[0])


def _finish(
    kind: str,
    marg: np.ndarray,
    h: np.ndarray,
    centers: np.ndarray | None,
    destination: np.ndarray | None = None,
) -> FilterOutput:
    if np.any(h <= 0.0):
        raise ZeroEvidenceError(_first_zero(h))
    out = FilterOutput(
        kind=kind,
        marginals=marg,
        normalizers=h,
        loglik=float(np.log(h).sum()),
        destination=destination,
    )
    if centers is not None:
        out.cond_mean = conditional_mean(marg, centers)
        out.map_states = map_states(marg)
    return out


def hrc_filter(
    pi: np.ndarray,
    family: BridgeFamily,
    like: LikelihoodSpec,
    centers: np.ndarray | None = None,
) -> FilterOutput:
    """Joint recursion over (state, destination) pairs: initialized from the
    endpoint distribution, advanced by the destination's bridge, and closed
    by the pinned arrival, which scores the destination's own likelihood."""
    n = family.n_states
    n_epochs = family.horizon + 1
    table = _resolve_table(like, n_epochs, n)
    endpoint_t = np.ascontiguousarray(np.asarray(pi, dtype=float).T)
    if endpoint_t.shape != (n, n):
        raise ValueError(f"endpoint distribution must have shape ({n}, {n})")
    marg, dest, h = _kernels.active().hrc_forward(family.transposed(), endpoint_t, table)
    return _finish("hrc", marg, h, centers, destination=dest)


def chain_filter(
    initial: np.ndarray,
    transposed_steps: np.ndarray,
    like: LikelihoodSpec,
    centers: np.ndarray | None = None,
    kind: str = "hmc",
) -> FilterOutput:
    """Normalized forward pass; `transposed_steps` is the (T, N, N) stack
    with step t stored transposed (target state first)."""
    n = len(initial)
    n_epochs = transposed_steps.shape[0] + 1
    table = _resolve_table(like, n_epochs, n)
    marg, h = _kernels.active().chain_forward(
        np.ascontiguousarray(transposed_steps), np.asarray(initial, dtype=float), table
    )
    return _finish(kind, marg, h, centers)


def hmc_filter(
    initial: np.ndarray,
    a: np.ndarray,
    like: LikelihoodSpec,
    horizon: int,
    centers: np.ndarray | None = None,
) -> FilterOutput:
    """Forward pass for the time-homogeneous chain."""
    a = np.asarray(a, dtype=float)
    steps = np.ascontiguousarray(np.broadcast_to(a.T, (horizon, *a.shape)))
    return chain_filter(initial, steps, like, centers, kind="hmc")


def hsc_filter(
    bridge: SchrodingerBridge,
    initial: np.ndarray,
    like: LikelihoodSpec,
    centers: np.ndarray | None = None,
) -> FilterOutput:
    """Forward pass for the endpoint-marginal-matching chain (per-step
    matrices)."""
    return chain_filter(initial, bridge.transposed(), like, centers, kind="hsc")


# ---------------------------------------------------------------------------
# Reference single steps (state-major (N, K) weights, plain numpy)
# ---------------------------------------------------------------------------


def hrc_init(pi: np.ndarray, like_row: np.ndarray) -> FilterState:
    """Epoch-0 joint weights: endpoint mass times the first likelihood row."""
    weights = np.asarray(pi, dtype=float) * np.asarray(like_row, dtype=float)[:, None]
    total = float(weights.sum())
    if total <= 0.0:
        raise ZeroEvidenceError(0)
    return FilterState(epoch=0, weights=weights / total, normalizer=total, loglik=float(np.log(total)))


def hrc_step(state: FilterState, like_row: np.ndarray, family: BridgeFamily) -> FilterState:
    """Advance the joint weights one interior epoch."""
    t = state.epoch + 1
    if not (1 <= t <= family.horizon - 1):
        raise ValueError(f"interior epochs are 1..{family.horizon - 1}, got {t}")
    propagated = np.einsum("kji,jk->ik", family.trans[:, t - 1], state.weights)
    weights = propagated * np.asarray(like_row, dtype=float)[:, None]
    total = float(weights.sum())
    if total <= 0.0:
        raise ZeroEvidenceError(t)
    return FilterState(
        epoch=t,
        weights=weights / total,
        normalizer=total,
        loglik=state.loglik + float(np.log(total)),
    )


def hrc_terminal(state: FilterState, like_row: np.ndarray, family: BridgeFamily) -> FilterState:
    """Close the recursion: collapse onto destinations and score the pinned
    arrival's own likelihood."""
    if state.epoch != family.horizon - 1:
        raise ValueError(
            f"terminal step expects epoch {family.horizon - 1} weights, got {state.epoch}"
        )
    arrived = state.weights.sum(axis=0) * np.asarray(like_row, dtype=float)
    total = float(arrived.sum())
    if total <= 0.0:
        raise ZeroEvidenceError(family.horizon)
    return FilterState(
        epoch=family.horizon,
        weights=arrived / total,
        normalizer=total,
        loglik=state.loglik + float(np.log(total)),
    )


def clutter_embedded_hrc_step(
    state: FilterState,
    target_row: np.ndarray,
    epsilon: float,
    clutter_weights: np.ndarray,
    family: BridgeFamily,
) -> FilterState:
    """Interior step with the single-point clutter mixture spelled out: the
    propagated weights are scored once by the target-origin density and once
    by the clutter-origin mass, then combined. Must agree with `hrc_step` on
    the premixed likelihood row to machine precision."""
    t = state.epoch + 1
    if not (1 <= t <= family.horizon - 1):
        raise ValueError(f"interior epochs are 1..{family.horizon - 1}, got {t}")
    target_row = np.asarray(target_row, dtype=float)
    propagated = np.einsum("kji,jk->ik", family.trans[:, t - 1], state.weights)
    clutter_mass = float(target_row @ np.asarray(clutter_weights, dtype=float))
    weights = (1.0 - epsilon) * target_row[:, None] * propagated
    weights += epsilon * clutter_mass * propagated
    total = float(weights.sum())
    if total <= 0.0:
        raise ZeroEvidenceError(t)
    return FilterState(
        epoch=t,
        weights=weights / total,
        normalizer=total,
        loglik=state.loglik + float(np.log(total)),
    )


# ---------------------------------------------------------------------------
# Point estimates
# ---------------------------------------------------------------------------


def conditional_mean(marginals: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """(T+1, 2) posterior-mean positions."""
    return np.asarray(marginals, dtype=float) @ np.asarray(centers, dtype=float)


def map_states(marginals: np.ndarray) -> np.ndarray:
    """(T+1,) most probable state per epoch; ties resolve to the lowest index."""
    return np.argmax(np.asarray(marginals), axis=1)


def filter_output_to_jsonable(out: FilterOutput, include_marginals: bool = False) -> dict:
    doc: dict = {
        "kind": out.kind,
        "loglik": out.loglik,
        "normalizers": [float(v) for v in out.normalizers],
    }
    if out.cond_mean is not None:
        doc["cond_mean"] = [[float(x), float(y)] for x, y in out.cond_mean]
    if out.map_states is not None:
        doc["map_states"] = [int(s) for s in out.map_states]
    if include_marginals:
        doc["marginals"] = [[float(v) for v in row] for row in out.marginals]
        if out.destination is not None:
            doc["destination"] = [[float(v) for v in row] for row in out.destination]
    return doc
