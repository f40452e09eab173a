"""Monte Carlo studies: configuration, model assembly, detection and
filtering experiments, parameter sweeps, brute-force oracles, and report
artifacts.

Provides
--------
- ExperimentConfig (+ EndpointSettings / ObservationSettings): validated,
  JSON-round-trippable run description with a stable content hash
- ModelBundle / build_models: everything derived from a config once
- run_detection_experiment / run_filtering_experiment / run_experiment:
  seeded trial loops (optionally threaded; reductions are ordered by trial
  index, so results are independent of the thread count)
- sweep: one experiment per axis value with derived seeds
- brute_force_sequence_likelihood / brute_force_posterior: exhaustive
  path x association enumeration oracles for small instances
- MetricsReport, write_report, write_sweep: CSV + JSON artifacts

Per-trial randomness comes from SeedSequence([master_seed, stream, trial]),
so any single trial's data is unchanged by the total trial count.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .chains import (
    BridgeFamily,
    SchrodingerBridge,
    bridges_from_base_closed_form,
    sample_rc_path,
    solve_schrodinger,
)
from .detect import (
    RocCurve,
    auc,
    bootstrap_auc_se,
    bootstrap_delta_auc_se,
    null_loglik,
    roc_from_scores,
    roc_to_rows,
)
from .filters import chain_filter, hrc_filter
from .gridworld import (
    GridSpec,
    benefit_indicator,
    build_random_walk,
    endpoints_crossing,
    endpoints_loitering,
    endpoints_mixture,
)
from .observation import (
    ClutterModel,
    MultiObsModel,
    NoiseModel,
    SingleObsModel,
    generate_clutter_sequence,
    generate_multi_sequence,
    generate_single_sequence,
    likelihood_table,
)

__all__ = [
    "ConfigError",
    "EndpointSettings",
    "ObservationSettings",
    "ExperimentConfig",
    "config_from_dict",
    "config_from_json",
    "config_hash",
    "ModelBundle",
    "build_models",
    "run_detection_experiment",
    "run_filtering_experiment",
    "run_experiment",
    "sweep",
    "MetricsReport",
    "write_report",
    "write_sweep",
    "brute_force_sequence_likelihood",
    "brute_force_posterior",
]

_TRACKERS = ("hrc", "hmc", "hsc")
_SWEEP_AXES = (
    "alpha",
    "horizon",
    "stay_probability",
    "epsilon",
    "sigma2",
    "count",
    "lambda0",
)

# Stream tags for SeedSequence([seed, stream, trial]).
_STREAM_TARGET = 0
_STREAM_CLUTTER = 1
_STREAM_FILTERING = 2
_STREAM_BOOTSTRAP = 3
_STREAM_SWEEP = 9


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EndpointSettings:
    kind: str  # crossing | loitering | mixture
    alpha: float | None = None
    weights: tuple[float, ...] | None = None

    def to_dict(self) -> dict:
        doc: dict = {"kind": self.kind}
        if self.alpha is not None:
            doc["alpha"] = self.alpha
        if self.weights is not None:
            doc["weights"] = list(self.weights)
        return doc


@dataclass(frozen=True)
class ObservationSettings:
    kind: str  # single | multi
    sigma2: float
    epsilon: float | None = None
    count: int | None = None
    lambda0: float | None = None

    def to_dict(self) -> dict:
        doc: dict = {"kind": self.kind, "sigma2": self.sigma2}
        if self.kind == "single":
            doc["epsilon"] = self.epsilon
        else:
            doc["count"] = self.count
            doc["lambda0"] = self.lambda0
        return doc


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str  # detection | filtering
    grid_width: int
    grid_height: int
    stay_probability: float
    horizon: int
    endpoints: EndpointSettings
    observation: ObservationSettings
    trials: int = 2000
    seed: int = 0
    trackers: tuple[str, ...] = ("hrc", "hmc", "hsc")
    threads: int = 1
    sweep_axis: str | None = None
    sweep_values: tuple[float, ...] | None = None

    def to_dict(self) -> dict:
        doc = {
            "mode": self.mode,
            "grid": {"width": self.grid_width, "height": self.grid_height},
            "stay_probability": self.stay_probability,
            "horizon": self.horizon,
            "endpoints": self.endpoints.to_dict(),
            "observation": self.observation.to_dict(),
            "trials": self.trials,
            "seed": self.seed,
            "trackers": list(self.trackers),
            "threads": self.threads,
        }
        if self.sweep_axis is not None:
            doc["sweep"] = {"axis": self.sweep_axis, "values": list(self.sweep_values or ())}
        return doc


def _require(doc: dict, key: str, path: str):
    if key not in doc:
        raise ConfigError(f"{path}{key}" if path.endswith(".") or not path else key, "missing")
    return doc[key]


def _as_number(value, path: str, *, lo=None, hi=None, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"must be a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(path, f"must be an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ConfigError(path, f"must be >= {lo}, got {value!r}")
    if hi is not None and value > hi:
        raise ConfigError(path, f"must be within [{lo}, {hi}], got {value!r}")
    return int(value) if integer else float(value)


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build and validate a configuration; errors name the JSON field path."""
    if not isinstance(doc, dict):
        raise ConfigError("", "configuration must be a JSON object")
    mode = _require(doc, "mode", "")
    if mode not in ("detection", "filtering"):
        raise ConfigError("mode", f"must be 'detection' or 'filtering', got {mode!r}")
    grid = _require(doc, "grid", "")
    if not isinstance(grid, dict):
        raise ConfigError("grid", "must be an object with width and height")
    width = _as_number(_require(grid, "width", "grid."), "grid.width", lo=1, integer=True)
    height = _as_number(_require(grid, "height", "grid."), "grid.height", lo=1, integer=True)
    stay = _as_number(
        _require(doc, "stay_probability", ""), "stay_probability", lo=0.0, hi=1.0
    )
    horizon = _as_number(_require(doc, "horizon", ""), "horizon", lo=2, integer=True)

    epd = _require(doc, "endpoints", "")
    if not isinstance(epd, dict):
        raise ConfigError("endpoints", "must be an object")
    kind = _require(epd, "kind", "endpoints.")
    if kind not in ("crossing", "loitering", "mixture"):
        raise ConfigError(
            "endpoints.kind", f"must be 'crossing', 'loitering' or 'mixture', got {kind!r}"
        )
    alpha = None
    weights = None
    if kind == "mixture":
        alpha = _as_number(
            _require(epd, "alpha", "endpoints."), "endpoints.alpha", lo=0.0, hi=1.0
        )
    if kind == "loitering" and epd.get("weights") is not None:
        raw = epd["weights"]
        if not isinstance(raw, list):
            raise ConfigError("endpoints.weights", "must be a list of cell weights")
        weights = tuple(
            _as_number(v, f"endpoints.weights[{i}]", lo=0.0) for i, v in enumerate(raw)
        )
    endpoints = EndpointSettings(kind=kind, alpha=alpha, weights=weights)

    obd = _require(doc, "observation", "")
    if not isinstance(obd, dict):
        raise ConfigError("observation", "must be an object")
    okind = _require(obd, "kind", "observation.")
    if okind not in ("single", "multi"):
        raise ConfigError("observation.kind", f"must be 'single' or 'multi', got {okind!r}")
    sigma2 = _as_number(
        _require(obd, "sigma2", "observation."), "observation.sigma2", lo=0.0
    )
    if okind == "single":
        epsilon = _as_number(
            _require(obd, "epsilon", "observation."), "observation.epsilon", lo=0.0, hi=1.0
        )
        observation = ObservationSettings(kind="single", sigma2=sigma2, epsilon=epsilon)
    else:
        count = _as_number(
            _require(obd, "count", "observation."), "observation.count", lo=1, integer=True
        )
        lambda0 = _as_number(
            _require(obd, "lambda0", "observation."), "observation.lambda0", lo=0.0, hi=1.0
        )
        observation = ObservationSettings(
            kind="multi", sigma2=sigma2, count=count, lambda0=lambda0
        )

    trials = _as_number(doc.get("trials", 2000), "trials", lo=1, integer=True)
    seed = _as_number(doc.get("seed", 0), "seed", lo=0, integer=True)
    threads = _as_number(doc.get("threads", 1), "threads", lo=1, integer=True)
    raw_trackers = doc.get("trackers", list(_TRACKERS))
    if not isinstance(raw_trackers, list) or not raw_trackers:
        raise ConfigError("trackers", "must be a non-empty list")
    for i, name in enumerate(raw_trackers):
        if name not in _TRACKERS:
            raise ConfigError(f"trackers[{i}]", f"must be one of {_TRACKERS}, got {name!r}")
    if len(set(raw_trackers)) != len(raw_trackers):
        raise ConfigError("trackers", "must not repeat entries")

    sweep_axis = None
    sweep_values = None
    if doc.get("sweep") is not None:
        swd = doc["sweep"]
        if not isinstance(swd, dict):
            raise ConfigError("sweep", "must be an object with axis and values")
        sweep_axis = _require(swd, "axis", "sweep.")
        if sweep_axis not in _SWEEP_AXES:
            raise ConfigError("sweep.axis", f"must be one of {_SWEEP_AXES}, got {sweep_axis!r}")
        raw_values = _require(swd, "values", "sweep.")
        if not isinstance(raw_values, list) or not raw_values:
            raise ConfigError("sweep.values", "must be a non-empty list")
        sweep_values = tuple(
            _as_number(v, f"sweep.values[{i}]") for i, v in enumerate(raw_values)
        )

    cfg = ExperimentConfig(
        mode=mode,
        grid_width=width,
        grid_height=height,
        stay_probability=stay,
        horizon=horizon,
        endpoints=endpoints,
        observation=observation,
        trials=trials,
        seed=seed,
        trackers=tuple(raw_trackers),
        threads=threads,
        sweep_axis=sweep_axis,
        sweep_values=sweep_values,
    )
    _cross_validate(cfg)
    return cfg


def _cross_validate(cfg: ExperimentConfig) -> None:
    if cfg.endpoints.kind in ("crossing", "mixture") and (
        cfg.grid_width < 2 or cfg.grid_height < 2
    ):
        raise ConfigError("endpoints.kind", "crossing endpoints need at least a 2x2 grid")
    if cfg.endpoints.weights is not None:
        n = cfg.grid_width * cfg.grid_height
        if len(cfg.endpoints.weights) != n:
            raise ConfigError(
                "endpoints.weights", f"must list {n} cell weights, got {len(cfg.endpoints.weights)}"
            )
        if abs(sum(cfg.endpoints.weights) - 1.0) > 1e-9:
            raise ConfigError("endpoints.weights", "must sum to 1")
    if cfg.sweep_axis is not None:
        for i, v in enumerate(cfg.sweep_values or ()):
            path = f"sweep.values[{i}]"
            if cfg.sweep_axis == "alpha" and not (0.0 <= v <= 1.0):
                raise ConfigError(path, f"alpha values must be within [0, 1], got {v!r}")
            if cfg.sweep_axis in ("stay_probability", "epsilon", "lambda0") and not (
                0.0 <= v <= 1.0
            ):
                raise ConfigError(path, f"must be within [0, 1], got {v!r}")
            if cfg.sweep_axis in ("horizon", "count") and (int(v) != v or v < 1):
                raise ConfigError(path, f"must be a positive integer, got {v!r}")
        if cfg.sweep_axis == "alpha" and cfg.endpoints.kind != "mixture":
            raise ConfigError("sweep.axis", "alpha sweeps need mixture endpoints")
        if cfg.sweep_axis == "epsilon" and cfg.observation.kind != "single":
            raise ConfigError("sweep.axis", "epsilon sweeps need the single observation model")
        if cfg.sweep_axis in ("count", "lambda0") and cfg.observation.kind != "multi":
            raise ConfigError("sweep.axis", f"{cfg.sweep_axis} sweeps need the multi model")


def config_from_json(text: str) -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from exc
    return config_from_dict(doc)


def config_hash(cfg: ExperimentConfig) -> str:
    """Stable digest of the statistically meaningful fields. The thread
    count steers execution only, so it is excluded: results must not
    depend on it."""
    doc = cfg.to_dict()
    doc.pop("threads", None)
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _with_axis_value(cfg: ExperimentConfig, axis: str, value: float, seed: int) -> ExperimentConfig:
    doc = cfg.to_dict()
    doc.pop("sweep", None)
    doc["seed"] = seed
    if axis == "alpha":
        doc["endpoints"]["alpha"] = float(value)
    elif axis == "horizon":
        doc["horizon"] = int(value)
    elif axis == "stay_probability":
        doc["stay_probability"] = float(value)
    elif axis == "epsilon":
        doc["observation"]["epsilon"] = float(value)
    elif axis == "sigma2":
        doc["observation"]["sigma2"] = float(value)
    elif axis == "count":
        doc["observation"]["count"] = int(value)
    elif axis == "lambda0":
        doc["observation"]["lambda0"] = float(value)
    else:  # pragma: no cover - guarded by validation
        raise ConfigError("sweep.axis", f"unknown axis {axis!r}")
    return config_from_dict(doc)


# ---------------------------------------------------------------------------
# Model assembly
# ---------------------------------------------------------------------------


@dataclass
class ModelBundle:
    """Everything an experiment derives from its configuration once."""

    grid: GridSpec
    centers: np.ndarray
    base: np.ndarray
    endpoint: np.ndarray
    family: BridgeFamily
    initial_marginal: np.ndarray
    hmc_steps_t: np.ndarray
    schrodinger: SchrodingerBridge | None
    obs_model: SingleObsModel | MultiObsModel
    beta: float
    horizon: int


def build_models(cfg: ExperimentConfig) -> ModelBundle:
    grid = GridSpec(cfg.grid_width, cfg.grid_height)
    base = build_random_walk(grid, cfg.stay_probability)
    if cfg.endpoints.kind == "crossing":
        endpoint = endpoints_crossing(grid)
    elif cfg.endpoints.kind == "loitering":
        w = None if cfg.endpoints.weights is None else np.asarray(cfg.endpoints.weights)
        endpoint = endpoints_loitering(grid, w)
    else:
        endpoint = endpoints_mixture(grid, float(cfg.endpoints.alpha))
    family = bridges_from_base_closed_form(base, cfg.horizon, endpoint)
    initial_marginal = endpoint.sum(axis=1)
    final_marginal = endpoint.sum(axis=0)
    schrodinger = None
    if "hsc" in cfg.trackers:
        schrodinger = solve_schrodinger(
            base, initial_marginal, final_marginal, cfg.horizon
        )
    noise = NoiseModel(cfg.observation.sigma2)
    clutter = ClutterModel.uniform(grid.n_states)
    if cfg.observation.kind == "single":
        obs_model: SingleObsModel | MultiObsModel = SingleObsModel(
            epsilon=float(cfg.observation.epsilon), noise=noise, clutter=clutter
        )
    else:
        obs_model = MultiObsModel(
            count=int(cfg.observation.count),
            lambda0=float(cfg.observation.lambda0),
            noise=noise,
            clutter=clutter,
        )
    hmc_steps_t = np.ascontiguousarray(
        np.broadcast_to(base.T, (cfg.horizon, *base.shape))
    )
    beta = benefit_indicator(endpoint, grid, cfg.horizon)
    return ModelBundle(
        grid=grid,
        centers=grid.centers(),
        base=base,
        endpoint=endpoint,
        family=family,
        initial_marginal=initial_marginal,
        hmc_steps_t=hmc_steps_t,
        schrodinger=schrodinger,
        obs_model=obs_model,
        beta=beta,
        horizon=cfg.horizon,
    )


def _generate_target_sequence(
    rng: np.random.Generator, bundle: ModelBundle
) -> tuple[np.ndarray, np.ndarray]:
    path = sample_rc_path(rng, bundle.endpoint, bundle.family)
    if isinstance(bundle.obs_model, SingleObsModel):
        obs = generate_single_sequence(rng, path, bundle.obs_model, bundle.grid)
    else:
        obs = generate_multi_sequence(rng, path, bundle.obs_model, bundle.grid)
    return path, obs


def _tracker_loglik(name: str, bundle: ModelBundle, table: np.ndarray) -> float:
    if name == "hrc":
        return hrc_filter(bundle.endpoint, bundle.family, table).loglik
    if name == "hmc":
        return chain_filter(bundle.initial_marginal, bundle.hmc_steps_t, table).loglik
    if name == "hsc":
        assert bundle.schrodinger is not None
        return chain_filter(
            bundle.initial_marginal, bundle.schrodinger.transposed(), table, kind="hsc"
        ).loglik
    raise ValueError(f"unknown tracker {name!r}")


def _run_trials(fn, n: int, threads: int) -> list:
    if threads <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class MetricsReport:
    """Everything an experiment measured; runtime is informational only and
    excluded from equality. Detection runs fill the score/curve fields,
    filtering runs fill the error fields."""

    kind: str
    config: dict
    config_hash: str
    seed: int
    backend: str
    beta: float
    trials: int
    trackers: tuple[str, ...]
    auc: dict[str, float] | None = None
    auc_se: dict[str, float] | None = None
    delta_auc: float | None = None
    delta_auc_se: float | None = None
    scores: dict[str, dict[str, np.ndarray]] | None = None
    roc: dict[str, RocCurve] | None = None
    rmse_cm: dict[str, np.ndarray] | None = None
    rmse_aps: dict[str, float] | None = None
    aps_per_trial: dict[str, np.ndarray] | None = None
    runtime_seconds: float = field(default=0.0, compare=False)

    def summary_dict(self) -> dict:
        doc: dict = {
            "kind": self.kind,
            "config": self.config,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "backend": self.backend,
            "beta": self.beta,
            "trials": self.trials,
            "trackers": list(self.trackers),
            "runtime_seconds": self.runtime_seconds,
        }
        if self.auc is not None:
            doc["auc"] = {k: float(v) for k, v in self.auc.items()}
            doc["auc_se"] = {k: float(v) for k, v in (self.auc_se or {}).items()}
        if self.delta_auc is not None:
            doc["delta_auc"] = float(self.delta_auc)
            doc["delta_auc_se"] = float(self.delta_auc_se)
        if self.rmse_aps is not None:
            doc["rmse_aps"] = {k: float(v) for k, v in self.rmse_aps.items()}
        return doc


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def run_detection_experiment(cfg: ExperimentConfig) -> MetricsReport:
    """Half the trials carry a target, half are clutter-only; every tracker
    scores every sequence by its log-likelihood ratio against the null."""
    if cfg.mode != "detection":
        raise ConfigError("mode", f"expected detection config, got {cfg.mode!r}")
    started = time.perf_counter()
    bundle = build_models(cfg)
    n_alt = cfg.trials // 2
    n_null = cfg.trials - n_alt
    trackers = cfg.trackers

    def score(points: np.ndarray) -> list[float]:
        table = likelihood_table(points, bundle.obs_model, bundle.grid)
        base = null_loglik(points, bundle.obs_model, bundle.grid)
        return [_tracker_loglik(name, bundle, table) - base for name in trackers]

    def alt_trial(i: int) -> list[float]:
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _STREAM_TARGET, i]))
        _, obs = _generate_target_sequence(rng, bundle)
        return score(obs)

    def null_trial(i: int) -> list[float]:
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _STREAM_CLUTTER, i]))
        obs = generate_clutter_sequence(rng, cfg.horizon + 1, bundle.obs_model, bundle.grid)
        return score(obs)

    alt_rows = np.asarray(_run_trials(alt_trial, n_alt, cfg.threads))
    null_rows = np.asarray(_run_trials(null_trial, n_null, cfg.threads))

    scores = {
        name: {"alt": alt_rows[:, j].copy(), "null": null_rows[:, j].copy()}
        for j, name in enumerate(trackers)
    }
    roc = {name: roc_from_scores(s["alt"], s["null"]) for name, s in scores.items()}
    aucs = {name: auc(curve) for name, curve in roc.items()}
    auc_se = {
        name: bootstrap_auc_se(
            scores[name]["alt"],
            scores[name]["null"],
            rng=np.random.default_rng(np.random.SeedSequence([cfg.seed, _STREAM_BOOTSTRAP, 0, j])),
        )
        for j, name in enumerate(trackers)
    }
    d_auc = None
    d_auc_se = None
    if "hrc" in trackers and "hmc" in trackers:
        d_auc = aucs["hrc"] - aucs["hmc"]
        d_auc_se = bootstrap_delta_auc_se(
            scores["hrc"]["alt"],
            scores["hrc"]["null"],
            scores["hmc"]["alt"],
            scores["hmc"]["null"],
            rng=np.random.default_rng(np.random.SeedSequence([cfg.seed, _STREAM_BOOTSTRAP, 1])),
        )
    return MetricsReport(
        kind="detection",
        config=cfg.to_dict(),
        config_hash=config_hash(cfg),
        seed=cfg.seed,
        backend=_kernels.backend_name(),
        beta=bundle.beta,
        trials=cfg.trials,
        trackers=trackers,
        auc=aucs,
        auc_se=auc_se,
        delta_auc=d_auc,
        delta_auc_se=d_auc_se,
        scores=scores,
        roc=roc,
        runtime_seconds=time.perf_counter() - started,
    )


def run_filtering_experiment(cfg: ExperimentConfig) -> MetricsReport:
    """Target-present trials only; every tracker's conditional-mean track is
    scored against the true path."""
    if cfg.mode != "filtering":
        raise ConfigError("mode", f"expected filtering config, got {cfg.mode!r}")
    started = time.perf_counter()
    bundle = build_models(cfg)
    trackers = cfg.trackers
    n_epochs = cfg.horizon + 1

    def trial(i: int) -> np.ndarray:
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _STREAM_FILTERING, i]))
        path, obs = _generate_target_sequence(rng, bundle)
        table = likelihood_table(obs, bundle.obs_model, bundle.grid)
        truth = bundle.centers[path]
        out = np.empty((len(trackers), n_epochs))
        for j, name in enumerate(trackers):
            if name == "hrc":
                res = hrc_filter(bundle.endpoint, bundle.family, table)
            elif name == "hmc":
                res = chain_filter(bundle.initial_marginal, bundle.hmc_steps_t, table)
            else:
                assert bundle.schrodinger is not None
                res = chain_filter(
                    bundle.initial_marginal, bundle.schrodinger.transposed(), table, kind="hsc"
                )
            est = res.marginals @ bundle.centers
            diff = est - truth
            out[j] = (diff * diff).sum(axis=1)
        return out

    per_trial = np.asarray(_run_trials(trial, cfg.trials, cfg.threads))
    # per_trial: (R, n_trackers, T+1) squared position errors.
    rmse_cm = {}
    rmse_aps = {}
    aps_per_trial = {}
    for j, name in enumerate(trackers):
        sq = per_trial[:, j, :]
        rmse_cm[name] = np.sqrt(sq.mean(axis=0))
        aps = np.sqrt(sq[:, 1:].mean(axis=1))
        aps_per_trial[name] = aps
        rmse_aps[name] = float(aps.mean())
    return MetricsReport(
        kind="filtering",
        config=cfg.to_dict(),
        config_hash=config_hash(cfg),
        seed=cfg.seed,
        backend=_kernels.backend_name(),
        beta=bundle.beta,
        trials=cfg.trials,
        trackers=trackers,
        rmse_cm=rmse_cm,
        rmse_aps=rmse_aps,
        aps_per_trial=aps_per_trial,
        runtime_seconds=time.perf_counter() - started,
    )


def run_experiment(cfg: ExperimentConfig) -> MetricsReport:
    if cfg.mode == "detection":
        return run_detection_experiment(cfg)
    return run_filtering_experiment(cfg)


def sweep(cfg: ExperimentConfig) -> list[tuple[float, MetricsReport]]:
    """One experiment per axis value, each with a seed derived from the
    master seed and the value's index."""
    if cfg.sweep_axis is None or not cfg.sweep_values:
        raise ConfigError("sweep", "config carries no sweep axis/values")
    results = []
    for idx, value in enumerate(cfg.sweep_values):
        derived = int(
            np.random.SeedSequence([cfg.seed, _STREAM_SWEEP, idx]).generate_state(1)[0]
        )
        sub = _with_axis_value(cfg, cfg.sweep_axis, value, derived)
        results.append((float(value), run_experiment(sub)))
    return results


# ---------------------------------------------------------------------------
# Brute-force oracles
# ---------------------------------------------------------------------------


def _enumerate_paths(n_states: int, horizon: int, guard: float) -> np.ndarray:
    count = n_states ** (horizon + 1)
    if count > guard:
        raise ValueError(f"enumeration of {count} paths exceeds the guard {guard:g}")
    prod = itertools.product(range(n_states), repeat=horizon + 1)
    return np.array(list(prod), dtype=np.int64)


def _path_probs(chain: tuple, paths: np.ndarray, horizon: int) -> np.ndarray:
    tag = chain[0]
    if tag == "rc":
        _, pi, base = chain
        base = np.asarray(base, dtype=float)
        reach = np.linalg.matrix_power(base, horizon)
        start, dest = paths[:, 0], paths[:, -1]
        denom = reach[start, dest]
        probs = np.where(denom > 0, np.asarray(pi)[start, dest], 0.0)
        np.divide(probs, denom, out=probs, where=denom > 0)
        for t in range(horizon):
            probs *= base[paths[:, t], paths[:, t + 1]]
        return probs
    if tag == "chain":
        _, initial, trans = chain
        trans = np.asarray(trans, dtype=float)
        probs = np.asarray(initial, dtype=float)[paths[:, 0]].copy()
        for t in range(horizon):
            step = trans[t] if trans.ndim == 3 else trans
            probs *= step[paths[:, t], paths[:, t + 1]]
        return probs
    raise ValueError(f"unknown chain tag {chain[0]!r}")


def _assoc_tables(
    points: np.ndarray, model: SingleObsModel | MultiObsModel, grid: GridSpec
) -> np.ndarray:
    """w[t, i, a]: joint weight of epoch t's scan and association a given
    state i (a = 0 means no slot carries the target), built from direct
    per-slot products."""
    from .observation import point_likelihood

    points = np.asarray(points, dtype=float)
    if points.ndim == 2:
        points = points[:, None, :]
    n_epochs, m, _ = points.shape
    centers = grid.centers()
    n = grid.n_states
    sigma2 = model.noise.sigma2
    weights = model.clutter.weights
    if isinstance(model, SingleObsModel):
        priors = np.array([model.epsilon, 1.0 - model.epsilon])
    else:
        priors = np.concatenate([[model.lambda0], model.lambdas])
    w = np.zeros((n_epochs, n, m + 1))
    for t in range(n_epochs):
        cond = np.array(
            [[point_likelihood(points[t, p], centers[i], sigma2) for i in range(n)] for p in range(m)]
        )
        g = cond @ weights
        for a in range(m + 1):
            others = 1.0
            for p in range(m):
                if p != a - 1:
                    others *= g[p]
            if a == 0:
                w[t, :, 0] = priors[0] * others
            else:
                w[t, :, a] = priors[a] * cond[a - 1] * others
    return w


def brute_force_sequence_likelihood(
    chain: tuple,
    points: np.ndarray,
    model: SingleObsModel | MultiObsModel,
    grid: GridSpec,
    guard: float = 1e7,
) -> float:
    """Exhaustive joint enumeration of state paths and per-epoch association
    sequences. `chain` is ("rc", endpoint_distribution, base_matrix) or
    ("chain", initial, transition or (T, N, N) stack)."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 2:
        points = points[:, None, :]
    n_epochs, m, _ = points.shape
    horizon = n_epochs - 1
    n = grid.n_states
    n_paths = n ** (horizon + 1)
    n_assoc = (m + 1) ** n_epochs
    if n_paths * n_assoc > guard:
        raise ValueError(
            f"{n_paths} paths x {n_assoc} associations exceeds the guard {guard:g}"
        )
    paths = _enumerate_paths(n, horizon, guard)
    probs = _path_probs(chain, paths, horizon)
    w = _assoc_tables(points, model, grid)
    combos = np.array(list(itertools.product(range(m + 1), repeat=n_epochs)), dtype=np.int64)
    acc = np.ones((paths.shape[0], combos.shape[0]))
    for t in range(n_epochs):
        acc *= w[t][paths[:, t][:, None], combos[:, t][None, :]]
    return float(probs @ acc.sum(axis=1))


def brute_force_posterior(
    chain: tuple,
    points: np.ndarray,
    model: SingleObsModel | MultiObsModel,
    grid: GridSpec,
    guard: float = 1e7,
) -> np.ndarray:
    """(T+1, N) filtered state marginals by exhaustive path enumeration; the
    per-epoch association is summed out (it factors across epochs)."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 2:
        points = points[:, None, :]
    n_epochs = points.shape[0]
    horizon = n_epochs - 1
    n = grid.n_states
    paths = _enumerate_paths(n, horizon, guard)
    probs = _path_probs(chain, paths, horizon)
    w = _assoc_tables(points, model, grid).sum(axis=2)  # (T+1, N) per-epoch evidence
    out = np.empty((n_epochs, n))
    running = probs.copy()
    for t in range(n_epochs):
        running *= w[t][paths[:, t]]
        mass = np.bincount(paths[:, t], weights=running, minlength=n)
        total = mass.sum()
        if total <= 0:
            raise ZeroDivisionError(f"zero evidence at epoch {t}")
        out[t] = mass / total
    return out


# ---------------------------------------------------------------------------
# Artifact writers
# ---------------------------------------------------------------------------


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_csv(path: Path, header: list[str], rows, stamp: str) -> None:
    lines = [stamp, ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n", newline="\n")


def write_report(report: MetricsReport, outdir: str | Path) -> list[Path]:
    """Emit one CSV per metric family plus summary.json; every file opens
    with a comment embedding the config hash and master seed."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stamp = f"# config_hash={report.config_hash} seed={report.seed}"
    written: list[Path] = []
    if report.kind == "detection":
        assert report.roc is not None and report.scores is not None
        for name, curve in report.roc.items():
            path = outdir / f"roc_{name}.csv"
            _write_csv(path, ["threshold", "p_fa", "p_d"], roc_to_rows(curve), stamp)
            written.append(path)
        path = outdir / "scores.csv"
        header = ["trial", "hypothesis"] + [f"llr_{name}" for name in report.trackers]
        rows = []
        n_alt = len(next(iter(report.scores.values()))["alt"])
        n_null = len(next(iter(report.scores.values()))["null"])
        for i in range(n_alt):
            rows.append(
                [i, "target"] + [float(report.scores[n]["alt"][i]) for n in report.trackers]
            )
        for i in range(n_null):
            rows.append(
                [i, "clutter"] + [float(report.scores[n]["null"][i]) for n in report.trackers]
            )
        _write_csv(path, header, rows, stamp)
        written.append(path)
        path = outdir / "auc.csv"
        rows = [
            [name, float(report.auc[name]), float(report.auc_se[name])]
            for name in report.trackers
        ]
        _write_csv(path, ["tracker", "auc", "auc_se"], rows, stamp)
        written.append(path)
    else:
        assert report.rmse_cm is not None and report.rmse_aps is not None
        path = outdir / "rmse_cm.csv"
        header = ["epoch"] + [f"rmse_cm_{name}" for name in report.trackers]
        n_epochs = len(next(iter(report.rmse_cm.values())))
        rows = [
            [t] + [float(report.rmse_cm[name][t]) for name in report.trackers]
            for t in range(n_epochs)
        ]
        _write_csv(path, header, rows, stamp)
        written.append(path)
        path = outdir / "rmse_aps.csv"
        rows = [[name, float(report.rmse_aps[name])] for name in report.trackers]
        _write_csv(path, ["tracker", "rmse_aps"], rows, stamp)
        written.append(path)
    summary = outdir / "summary.json"
    summary.write_text(json.dumps(report.summary_dict(), indent=2, sort_keys=True) + "\n")
    written.append(summary)
    return written


def write_sweep(
    cfg: ExperimentConfig,
    results: list[tuple[float, MetricsReport]],
    outdir: str | Path,
) -> list[Path]:
    """Combined sweep table plus a JSON summary with the delta-AUC trend fit."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stamp = f"# config_hash={config_hash(cfg)} seed={cfg.seed}"
    axis = cfg.sweep_axis or "value"
    detection = cfg.mode == "detection"
    header = [axis, "beta"]
    if detection:
        header += [f"auc_{name}" for name in cfg.trackers]
        header += ["delta_auc", "delta_auc_se"]
        header += [f"auc_se_{name}" for name in cfg.trackers]
    else:
        header += [f"rmse_aps_{name}" for name in cfg.trackers]
    rows = []
    for value, report in results:
        row: list = [float(value), float(report.beta)]
        if detection:
            row += [float(report.auc[name]) for name in cfg.trackers]
            row += [
                float(report.delta_auc) if report.delta_auc is not None else float("nan"),
                float(report.delta_auc_se) if report.delta_auc_se is not None else float("nan"),
            ]
            row += [float(report.auc_se[name]) for name in cfg.trackers]
        else:
            row += [float(report.rmse_aps[name]) for name in cfg.trackers]
        rows.append(row)
    table = outdir / "sweep.csv"
    _write_csv(table, header, rows, stamp)
    summary_doc: dict = {
        "config": cfg.to_dict(),
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "axis": axis,
        "values": [float(v) for v, _ in results],
        "beta": [float(r.beta) for _, r in results],
        "runtime_seconds": sum(r.runtime_seconds for _, r in results),
    }
    if detection:
        deltas = [r.delta_auc for _, r in results]
        if all(d is not None for d in deltas) and len(deltas) >= 2:
            betas = np.array([r.beta for _, r in results])
            slope, intercept = np.polyfit(betas, np.array(deltas, dtype=float), 1)
            summary_doc["delta_auc_vs_beta_fit"] = {
                "slope": float(slope),
                "intercept": float(intercept),
            }
        summary_doc["delta_auc"] = [
            None if d is None else float(d) for d in deltas
        ]
    else:
        summary_doc["rmse_aps"] = {
            name: [float(r.rmse_aps[name]) for _, r in results] for name in cfg.trackers
        }
    summary = outdir / "summary.json"
    summary.write_text(json.dumps(summary_doc, indent=2, sort_keys=True) + "\n")
    return [table, summary]
