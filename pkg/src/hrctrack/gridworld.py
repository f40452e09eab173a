"""Rectangular surveillance grid: geometry, random-walk dynamics, endpoint families.

Provides
--------
- GridSpec: cell/state indexing and cell-center geometry
- build_random_walk: 8-connected lazy random walk transition matrix
- endpoints_crossing / endpoints_loitering / endpoints_mixture: joint
  distributions over the (initial, final) state pair
- benefit_indicator: mean minimum traversal steps implied by an endpoint
  distribution, normalized by the horizon
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridSpec",
    "build_random_walk",
    "endpoints_crossing",
    "endpoints_loitering",
    "endpoints_mixture",
    "benefit_indicator",
]

# Moore neighborhood: 8 surrounding cells.
_NEIGHBOR_OFFSETS = (
    (-1, -1), (0, -1), (1, -1),
    (-1, 0), (1, 0),
    (-1, 1), (0, 1), (1, 1),
)


@dataclass(frozen=True)
class GridSpec:
    """W x H grid of unit cells; cell (x, y) uses 1-based coordinates.

    State indices are 0-based and row-major: state = (y - 1) * width + (x - 1).
    The center of cell (x, y) sits at real coordinates (x, y), so adjacent
    centers are 1 apart and the unit-variance noise scale is one cell.
    """

    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid dimensions must be >= 1, got {self.width}x{self.height}")

    @property
    def n_states(self) -> int:
        return self.width * self.height

    def state_index(self, x: int, y: int) -> int:
        if not (1 <= x <= self.width and 1 <= y <= self.height):
            raise ValueError(f"cell ({x}, {y}) outside {self.width}x{self.height} grid")
        return (y - 1) * self.width + (x - 1)

    def cell_of(self, state: int) -> tuple[int, int]:
        if not (0 <= state < self.n_states):
            raise ValueError(f"state {state} outside 0..{self.n_states - 1}")
        y, x = divmod(state, self.width)
        return (x + 1, y + 1)

    def centers(self) -> np.ndarray:
        """(N, 2) array of cell centers, row s = center of state s."""
        xs = np.arange(1, self.width + 1, dtype=float)
        ys = np.arange(1, self.height + 1, dtype=float)
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def min_steps(self, a: int, b: int) -> int:
        """Minimum number of 8-connected moves between two states (Chebyshev)."""
        ax, ay = self.cell_of(a)
        bx, by = self.cell_of(b)
        return max(abs(ax - bx), abs(ay - by))

    def min_steps_matrix(self) -> np.ndarray:
        """(N, N) integer matrix of pairwise minimum move counts."""
        c = self.centers()
        dx = np.abs(c[:, None, 0] - c[None, :, 0])
        dy = np.abs(c[:, None, 1] - c[None, :, 1])
        return np.maximum(dx, dy).astype(np.int64)

    def corners(self) -> list[int]:
        """States of the four grid corners; degenerate grids repeat cells."""
        w, h = self.width, self.height
        return [
            self.state_index(1, 1),
            self.state_index(w, 1),
            self.state_index(1, h),
            self.state_index(w, h),
        ]


def build_random_walk(grid: GridSpec, stay_probability: float) -> np.ndarray:
    """Lazy 8-connected random walk: stay with `stay_probability`, otherwise
    move to one of the in-bounds Moore neighbors with equal probability.

    Rows sum to 1 exactly up to float arithmetic; edge and corner cells split
    the move mass over fewer neighbors.
    """
    if not (0.0 <= stay_probability <= 1.0):
        raise ValueError(f"stay_probability must be within [0, 1], got {stay_probability}")
    n = grid.n_states
    a = np.zeros((n, n))
    for s in range(n):
        x, y = grid.cell_of(s)
        neighbors = [
            grid.state_index(x + dx, y + dy)
            for dx, dy in _NEIGHBOR_OFFSETS
            if 1 <= x + dx <= grid.width and 1 <= y + dy <= grid.height
        ]
        a[s, s] = stay_probability
        if neighbors:
            a[s, neighbors] = (1.0 - stay_probability) / len(neighbors)
        elif stay_probability != 1.0:
            # A single-cell grid has no neighbors to receive the move mass.
            raise ValueError("grid with a single cell requires stay_probability = 1")
    return a


def endpoints_crossing(grid: GridSpec) -> np.ndarray:
    """Joint endpoint distribution for corner-to-opposite-corner crossings.

    Mass 1/4 on each of the four ordered pairs (corner, diagonally opposite
    corner). Requires a grid with four distinct corners.
    """
    if grid.width < 2 or grid.height < 2:
        raise ValueError("crossing endpoints need at least a 2x2 grid")
    c00, c10, c01, c11 = grid.corners()
    pi = np.zeros((grid.n_states, grid.n_states))
    for start, end in ((c00, c11), (c11, c00), (c10, c01), (c01, c10)):
        pi[start, end] = 0.25
    return pi


def endpoints_loitering(grid: GridSpec, weights: np.ndarray | None = None) -> np.ndarray:
    """Joint endpoint distribution concentrated on the diagonal: the target
    ends where it started. `weights` is the start-cell distribution
    (uniform when omitted)."""
    n = grid.n_states
    if weights is None:
        weights = np.full(n, 1.0 / n)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (n,):
        raise ValueError(f"weights must have shape ({n},), got {weights.shape}")
    if np.any(weights < 0) or not np.isclose(weights.sum(), 1.0, rtol=0, atol=1e-12):
        raise ValueError("weights must be a probability vector")
    return np.diag(weights)


def endpoints_mixture(grid: GridSpec, alpha: float) -> np.ndarray:
    """Convex blend: alpha * crossing + (1 - alpha) * uniform loitering."""
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must be within [0, 1], got {alpha}")
    return alpha * endpoints_crossing(grid) + (1.0 - alpha) * endpoints_loitering(grid)


def benefit_indicator(pi: np.ndarray, grid: GridSpec, horizon: int) -> float:
    """Mean minimum traversal steps under the endpoint distribution, divided
    by the horizon. Values near 1 leave the path no slack; values above 1
    mean the endpoint pair cannot be reached in time and indicate a
    construction error upstream, so they are rejected rather than clamped."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    pi = np.asarray(pi, dtype=float)
    n = grid.n_states
    if pi.shape != (n, n):
        raise ValueError(f"endpoint distribution must have shape ({n}, {n}), got {pi.shape}")
    beta = float((grid.min_steps_matrix() * pi).sum() / horizon)
    if beta > 1.0:
        if beta > 1.0 + 1e-9:
            raise ValueError(
                f"benefit indicator {beta} exceeds 1: some endpoint pair needs more "
                f"than {horizon} steps"
            )
        beta = 1.0
    return beta
