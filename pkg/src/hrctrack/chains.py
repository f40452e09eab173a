"""Finite-state chain models: three-point kernels, destination-conditioned
bridge families, and fixed-endpoint-marginal chains.

Provides
--------
- validate_transition_matrix / validate_endpoint_distribution /
  validate_endpoint_feasibility: input checks shared by every constructor
- matrix_power_table: powers A^0 .. A^T
- ThreePointKernel, three_point_from_base: conditional law of the middle
  state given both neighbors
- BridgeFamily, bridges_from_base_closed_form, bridges_from_kernel:
  destination-indexed one-step transition families, with the final step
  pinned to the destination
- bridge_initial_distributions: destination-conditioned initial laws
- rc_path_logprob, destination_attainment: path scoring and propagation checks
- sample_rc_path, sample_markov_path: ancestral samplers
- SchrodingerBridge, solve_schrodinger: endpoint-marginal-matching chain via
  alternating scaling, plus propagate_chain_marginals
- markov_endpoint_distribution: the endpoint law induced by an ordinary chain
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ChainModelError",
    "BridgeConstructionError",
    "InfeasibleEndpointsError",
    "SchrodingerConvergenceError",
    "validate_transition_matrix",
    "validate_endpoint_distribution",
    "validate_endpoint_feasibility",
    "matrix_power_table",
    "ThreePointKernel",
    "three_point_from_base",
    "BridgeFamily",
    "bridge_initial_distributions",
    "bridges_from_base_closed_form",
    "bridges_from_kernel",
    "rc_path_logprob",
    "destination_attainment",
    "sample_rc_path",
    "sample_markov_path",
    "SchrodingerBridge",
    "solve_schrodinger",
    "propagate_chain_marginals",
    "markov_endpoint_distribution",
]


class ChainModelError(ValueError):
    """Invalid model input (shape, stochasticity, support)."""


class InfeasibleEndpointsError(ChainModelError):
    """Endpoint pair carries mass the dynamics cannot realize in the horizon."""


class BridgeConstructionError(ChainModelError):
    """Backward recursion hit a source row with no usable normalization column."""

    def __init__(self, failures: list[tuple[int, int, int]]):
        self.failures = failures
        shown = ", ".join(f"(k={k}, t={t}, i={i})" for k, t, i in failures[:5])
        more = "" if len(failures) <= 5 else f" and {len(failures) - 5} more"
        super().__init__(f"no valid normalization column for rows: {shown}{more}")


class SchrodingerConvergenceError(RuntimeError):
    """Alternating scaling failed to converge; carries the marginal residual."""

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"scaling iteration did not converge after {iterations} iterations "
            f"(marginal residual {residual:.3e})"
        )


def validate_transition_matrix(a: np.ndarray, atol: float = 1e-9) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ChainModelError(f"transition matrix must be square, got shape {a.shape}")
    if np.any(a < 0):
        raise ChainModelError("transition matrix has negative entries")
    err = np.abs(a.sum(axis=1) - 1.0).max()
    if err > atol:
        raise ChainModelError(f"transition matrix rows must sum to 1 (max deviation {err:.3e})")
    return a


def validate_endpoint_distribution(pi: np.ndarray, atol: float = 1e-9) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 2 or pi.shape[0] != pi.shape[1]:
        raise ChainModelError(f"endpoint distribution must be square, got shape {pi.shape}")
    if np.any(pi < 0):
        raise ChainModelError("endpoint distribution has negative entries")
    if abs(pi.sum() - 1.0) > atol:
        raise ChainModelError(f"endpoint distribution must sum to 1, got {pi.sum()!r}")
    return pi


def validate_endpoint_feasibility(pi: np.ndarray, a: np.ndarray, horizon: int) -> None:
    """Every endpoint pair with mass must be reachable in exactly `horizon` steps."""
    reach = np.linalg.matrix_power(np.asarray(a, dtype=float), horizon) > 0
    bad = np.argwhere((np.asarray(pi) > 0) & ~reach)
    if bad.size:
        pairs = ", ".join(f"({i}, {k})" for i, k in bad[:5])
        more = "" if len(bad) <= 5 else f" and {len(bad) - 5} more"
        raise InfeasibleEndpointsError(
            f"endpoint pairs with mass but no {horizon}-step path: {pairs}{more}"
        )


def matrix_power_table(a: np.ndarray, horizon: int) -> list[np.ndarray]:
    """[A^0, A^1, ..., A^horizon]. Non-negative products keep exact zeros exact."""
    a = np.asarray(a, dtype=float)
    powers = [np.eye(a.shape[0])]
    for _ in range(horizon):
        powers.append(powers[-1] @ a)
    return powers


# ---------------------------------------------------------------------------
# Three-point kernel
# ---------------------------------------------------------------------------


@dataclass
class ThreePointKernel:
    """Law of the middle state given both temporal neighbors.

    values[i, j, l] = Pr{X_t = j | X_{t-1} = i, X_{t+1} = l}; the model is
    time-homogeneous, so one array serves every interior epoch t = 1..T-1.
    defined[i, l] marks neighbor pairs with at least one two-step path;
    undefined slices are stored as zeros.
    """

    values: np.ndarray
    defined: np.ndarray
    horizon: int

    @property
    def n_states(self) -> int:
        return self.values.shape[0]

    def at(self, t: int) -> np.ndarray:
        if not (1 <= t <= self.horizon - 1):
            raise ChainModelError(
                f"interior epoch must satisfy 1 <= t <= {self.horizon - 1}, got {t}"
            )
        return self.values


def three_point_from_base(a: np.ndarray, horizon: int) -> ThreePointKernel:
    """Middle-state law of the chain with one-step matrix `a`:
    values[i, j, l] = a[i, j] a[j, l] / (a @ a)[i, l] where the two-step
    mass (a @ a)[i, l] is positive."""
    a = validate_transition_matrix(a)
    if horizon < 2:
        raise ChainModelError(f"three-point kernel needs horizon >= 2, got {horizon}")
    two_step = a @ a
    defined = two_step > 0
    numer = np.einsum("ij,jl->ijl", a, a)
    denom = np.where(defined, two_step, 1.0)[:, None, :]
    values = np.where(defined[:, None, :], numer / denom, 0.0)
    return ThreePointKernel(values=values, defined=defined, horizon=horizon)


# ---------------------------------------------------------------------------
# Bridge families
# ---------------------------------------------------------------------------


@dataclass
class BridgeFamily:
    """Destination-indexed one-step transitions.

    trans[k, t, i, j] = Pr{X_{t+1} = j | X_t = i, X_T = k} for t = 0..T-2; the
    final step T-1 -> T is pinned to the destination k and is not stored.
    reachable[k, t, i] marks source states consistent with reaching k in the
    remaining T - t steps; their rows are stochastic, all other rows are zero.
    last_step_ok[k, j] marks states allowed to take the pinned final step.
    initial[k] is the destination-conditioned start law (rows of zeros where
    the destination has no endpoint mass; see initial_defined).
    """

    trans: np.ndarray
    reachable: np.ndarray
    horizon: int
    last_step_ok: np.ndarray
    initial: np.ndarray | None = None
    initial_defined: np.ndarray | None = None
    _transposed: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def n_states(self) -> int:
        return self.trans.shape[0]

    def transposed(self) -> np.ndarray:
        """(K, T-1, N, N) view-copy with source/target axes swapped, laid out
        contiguously for the filter kernels; built once and cached."""
        if self._transposed is None:
            self._transposed = np.ascontiguousarray(self.trans.transpose(0, 1, 3, 2))
        return self._transposed


def bridge_initial_distributions(pi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Start law conditioned on each destination: initial[k, i] proportional
    to pi[i, k]. Destinations without endpoint mass get a zero row and
    defined[k] = False."""
    pi = validate_endpoint_distribution(pi)
    mass = pi.sum(axis=0)
    defined = mass > 0
    denom = np.where(defined, mass, 1.0)
    initial = np.where(defined[None, :], pi / denom, 0.0).T.copy()
    return initial, defined


def _attach_initial(family: BridgeFamily, pi: np.ndarray | None) -> BridgeFamily:
    if pi is None:
        return family
    initial, defined = bridge_initial_distributions(pi)
    bad = np.argwhere((initial > 0) & ~family.reachable[:, 0, :])
    if bad.size:
        pairs = ", ".join(f"(start={i}, dest={k})" for k, i in bad[:5])
        raise InfeasibleEndpointsError(
            f"endpoint mass on starts that cannot reach their destination: {pairs}"
        )
    family.initial = initial
    family.initial_defined = defined
    return family


def bridges_from_base_closed_form(
    a: np.ndarray, horizon: int, pi: np.ndarray | None = None
) -> BridgeFamily:
    """Bridge family of the chain with one-step matrix `a`, in closed form:

        trans[k, t, i, j] = a[i, j] * (a^(T-t-1))[j, k] / (a^(T-t))[i, k]

    for sources with (a^(T-t))[i, k] > 0.
    """
    a = validate_transition_matrix(a)
    if horizon < 2:
        raise ChainModelError(f"bridge family needs horizon >= 2, got {horizon}")
    n = a.shape[0]
    powers = matrix_power_table(a, horizon)
    trans = np.zeros((n, horizon - 1, n, n))
    reachable = np.zeros((n, horizon - 1, n), dtype=bool)
    for t in range(horizon - 1):
        fwd = powers[horizon - t - 1]  # (j, k)
        den = powers[horizon - t]  # (i, k)
        ok = den > 0
        numer = a[:, :, None] * fwd[None, :, :]  # (i, j, k)
        ratio = np.divide(
            numer, den[:, None, :], out=np.zeros_like(numer), where=ok[:, None, :]
        )
        trans[:, t] = ratio.transpose(2, 0, 1)
        reachable[:, t, :] = ok.T
    family = BridgeFamily(
        trans=trans,
        reachable=reachable,
        horizon=horizon,
        last_step_ok=(a > 0).T.copy(),
    )
    return _attach_initial(family, pi)


def bridges_from_kernel(
    kernel: ThreePointKernel, pi: np.ndarray | None = None
) -> BridgeFamily:
    """Bridge family recovered from the three-point kernel alone, by backward
    recursion from trans[k, T-2] = values[:, :, k].

    Each earlier row i is the normalized vector of ratios
    values[i, j, l] / trans[k, t+1, j, l] over the row's support, evaluated
    with one common column l shared by the numerator and the normalizing sum;
    any column valid for the whole support yields the same row, and the
    implementation picks the one maximizing the smallest divisor (ties ->
    lowest index) for numerical safety. Rows whose support admits no common
    column are reported as construction errors.
    """
    q = kernel.values
    defined = kernel.defined
    horizon = kernel.horizon
    n = kernel.n_states
    q_pos = q > 0
    trans = np.zeros((n, horizon - 1, n, n))
    reachable = np.zeros((n, horizon - 1, n), dtype=bool)
    failures: list[tuple[int, int, int]] = []
    for k in range(n):
        trans[k, horizon - 2] = np.where(defined[:, k, None], q[:, :, k], 0.0)
        reachable[k, horizon - 2] = defined[:, k]
        for t in range(horizon - 3, -1, -1):
            nxt = trans[k, t + 1]
            nxt_pos = nxt > 0
            # support[i, j]: some column l has both a kernel step and a
            # positive next-epoch bridge entry, so j can follow i.
            support = np.any(q_pos & nxt_pos[None, :, :], axis=2)
            alive = support.any(axis=1)
            reachable[k, t] = alive
            if not alive.any():
                continue
            # Smallest next-epoch divisor per (source row, candidate column).
            stacked = np.where(support[:, :, None], nxt[None, :, :], np.inf)
            low = stacked.min(axis=1)
            usable = (low > 0) & np.isfinite(low)
            no_candidate = alive & ~usable.any(axis=1)
            if no_candidate.any():
                failures.extend((k, t, int(i)) for i in np.flatnonzero(no_candidate))
                continue
            pick = np.argmax(np.where(usable, low, -np.inf), axis=1)
            numer = np.take_along_axis(q, pick[:, None, None], axis=2)[:, :, 0]
            denom = nxt[:, pick].T
            rows = np.divide(
                numer, denom, out=np.zeros((n, n)), where=support & (denom > 0)
            )
            rows[~alive] = 0.0
            total = rows.sum(axis=1, keepdims=True)
            degenerate = alive & (total.ravel() == 0)
            if degenerate.any():
                # The kernel admits the step pattern but assigns it no mass;
                # only an inconsistent kernel can produce this.
                failures.extend((k, t, int(i)) for i in np.flatnonzero(degenerate))
                continue
            trans[k, t] = np.divide(rows, total, out=rows, where=total > 0)
    if failures:
        raise BridgeConstructionError(failures)
    # A state may take the pinned final step when some predecessor links to it
    # through the destination column of the kernel.
    last_ok = np.stack([q_pos[:, :, k].any(axis=0) for k in range(n)])
    family = BridgeFamily(
        trans=trans, reachable=reachable, horizon=horizon, last_step_ok=last_ok
    )
    return _attach_initial(family, pi)


def rc_path_logprob(path: np.ndarray, pi: np.ndarray, family: BridgeFamily) -> float:
    """log Pr of a full path: endpoint mass times the bridge steps; the final
    pinned step contributes no factor. Returns -inf for impossible paths."""
    path = np.asarray(path)
    if path.shape != (family.horizon + 1,):
        raise ChainModelError(
            f"path must have {family.horizon + 1} epochs, got shape {path.shape}"
        )
    k = int(path[-1])
    p = pi[path[0], k]
    for t in range(family.horizon - 1):
        p *= family.trans[k, t, path[t], path[t + 1]]
    if p <= 0 or not family.last_step_ok[k, path[-2]]:
        return -np.inf
    return float(np.log(p))


def destination_attainment(family: BridgeFamily, k: int) -> float:
    """Probability mass that, starting from the destination-conditioned
    initial law and following the bridge, sits on states allowed to take the
    pinned final step. Equals 1 for a consistent family."""
    if family.initial is None:
        raise ChainModelError("family carries no initial distributions")
    mu = family.initial[k].copy()
    for t in range(family.horizon - 1):
        mu = mu @ family.trans[k, t]
    return float(mu[family.last_step_ok[k]].sum())


def sample_rc_path(
    rng: np.random.Generator, pi: np.ndarray, family: BridgeFamily
) -> np.ndarray:
    """Ancestral draw: endpoint pair from `pi`, then bridge steps, then the
    pinned arrival."""
    n = family.n_states
    flat = rng.choice(n * n, p=np.asarray(pi, dtype=float).ravel())
    start, dest = divmod(int(flat), n)
    path = np.empty(family.horizon + 1, dtype=np.int64)
    path[0] = start
    state = start
    for t in range(family.horizon - 1):
        state = int(rng.choice(n, p=family.trans[dest, t, state]))
        path[t + 1] = state
    path[family.horizon] = dest
    return path


def sample_markov_path(
    rng: np.random.Generator,
    initial: np.ndarray,
    trans: np.ndarray,
    horizon: int,
) -> np.ndarray:
    """Ancestral draw of an ordinary chain; `trans` is one matrix shared by
    every step or a (horizon, N, N) stack."""
    trans = np.asarray(trans, dtype=float)
    stacked = trans.ndim == 3
    if stacked and trans.shape[0] != horizon:
        raise ChainModelError(
            f"per-step transition stack must have {horizon} matrices, got {trans.shape[0]}"
        )
    n = trans.shape[-1]
    path = np.empty(horizon + 1, dtype=np.int64)
    state = int(rng.choice(n, p=np.asarray(initial, dtype=float)))
    path[0] = state
    for t in range(horizon):
        step = trans[t] if stacked else trans
        state = int(rng.choice(n, p=step[state]))
        path[t + 1] = state
    return path


# ---------------------------------------------------------------------------
# Endpoint-marginal-matching chain
# ---------------------------------------------------------------------------


@dataclass
class SchrodingerBridge:
    """Time-inhomogeneous chain matching prescribed start and end marginals
    while staying as close as possible to the base dynamics.

    transitions[t] is the step t -> t+1 matrix, t = 0..T-1. potentials hold
    the end-anchored vectors psi[t] = a^(T-t) @ lambda_end used to tilt the
    base matrix; scaling vectors lambda_start / lambda_end solve the
    endpoint fixed-point equations.
    """

    transitions: np.ndarray
    lambda_start: np.ndarray
    lambda_end: np.ndarray
    potentials: np.ndarray
    horizon: int
    iterations: int
    residual: float
    _transposed: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def n_states(self) -> int:
        return self.transitions.shape[-1]

    def transposed(self) -> np.ndarray:
        if self._transposed is None:
            self._transposed = np.ascontiguousarray(self.transitions.transpose(0, 2, 1))
        return self._transposed


def solve_schrodinger(
    a: np.ndarray,
    start_marginal: np.ndarray,
    end_marginal: np.ndarray,
    horizon: int,
    tol: float = 1e-10,
    max_iter: int = 10000,
) -> SchrodingerBridge:
    """Alternating scaling on the horizon-step kernel a^T:

        lambda_start = start_marginal / (a^T  @ lambda_end)
        lambda_end   = end_marginal   / (a^T' @ lambda_start)

    iterated from lambda_end = 1 until the largest relative change of either
    vector drops below `tol`. The tilted one-step matrices are
    transitions[t][i, j] = a[i, j] psi[t+1][j] / psi[t][i].
    """
    a = validate_transition_matrix(a)
    if horizon < 1:
        raise ChainModelError(f"horizon must be >= 1, got {horizon}")
    if max_iter < 1:
        raise ChainModelError(f"max_iter must be >= 1, got {max_iter}")
    p0 = np.asarray(start_marginal, dtype=float)
    pt = np.asarray(end_marginal, dtype=float)
    n = a.shape[0]
    for name, v in (("start", p0), ("end", pt)):
        if v.shape != (n,) or np.any(v < 0) or abs(v.sum() - 1.0) > 1e-9:
            raise ChainModelError(f"{name} marginal must be a length-{n} probability vector")
    kern = np.linalg.matrix_power(a, horizon)
    if np.any((pt > 0) & ((p0 @ kern) == 0)):
        raise InfeasibleEndpointsError(
            "end marginal has mass the start marginal cannot reach in the horizon"
        )
    lam0 = np.zeros(n)
    lam1 = np.ones(n)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        fwd = kern @ lam1
        if np.any((p0 > 0) & (fwd == 0)):
            raise InfeasibleEndpointsError("start marginal mass on states with no path mass")
        new0 = np.divide(p0, fwd, out=np.zeros(n), where=fwd > 0)
        bwd = kern.T @ new0
        if np.any((pt > 0) & (bwd == 0)):
            raise InfeasibleEndpointsError("end marginal mass on states with no path mass")
        new1 = np.divide(pt, bwd, out=np.zeros(n), where=bwd > 0)
        delta = max(_max_rel_change(lam0, new0), _max_rel_change(lam1, new1))
        lam0, lam1 = new0, new1
        if delta < tol:
            break
    else:
        iterations = max_iter
    psi = np.empty((horizon + 1, n))
    psi[horizon] = lam1
    for t in range(horizon - 1, -1, -1):
        psi[t] = a @ psi[t + 1]
    transitions = np.zeros((horizon, n, n))
    for t in range(horizon):
        ok = psi[t] > 0
        numer = a * psi[t + 1][None, :]
        transitions[t] = np.divide(
            numer, psi[t][:, None], out=np.zeros((n, n)), where=ok[:, None]
        )
    attained = propagate_chain_marginals(p0, transitions)
    residual = float(np.abs(attained[-1] - pt).max())
    bridge = SchrodingerBridge(
        transitions=transitions,
        lambda_start=lam0,
        lambda_end=lam1,
        potentials=psi,
        horizon=horizon,
        iterations=iterations,
        residual=residual,
    )
    if delta >= tol:
        raise SchrodingerConvergenceError(iterations, residual)
    return bridge


def _max_rel_change(old: np.ndarray, new: np.ndarray) -> float:
    scale = np.maximum(np.abs(old), np.abs(new))
    diff = np.abs(new - old)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(scale > 0, diff / scale, 0.0)
    return float(rel.max()) if rel.size else 0.0


def propagate_chain_marginals(initial: np.ndarray, trans: np.ndarray) -> np.ndarray:
    """(T+1, N) occupancy marginals of an inhomogeneous chain."""
    trans = np.asarray(trans, dtype=float)
    horizon = trans.shape[0]
    out = np.empty((horizon + 1, trans.shape[-1]))
    out[0] = np.asarray(initial, dtype=float)
    for t in range(horizon):
        out[t + 1] = out[t] @ trans[t]
    return out


def markov_endpoint_distribution(
    initial: np.ndarray, a: np.ndarray, horizon: int
) -> np.ndarray:
    """Joint law of (start, end) states for an ordinary chain: the endpoint
    distribution under which the conditioned model degenerates to the chain."""
    a = validate_transition_matrix(a)
    reach = np.linalg.matrix_power(a, horizon)
    return np.asarray(initial, dtype=float)[:, None] * reach
