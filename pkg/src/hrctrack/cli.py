"""Command-line front end.

Subcommands: model, simulate, filter, detect, experiment, sweep,
oracle-check. Exit codes: 0 success, 1 failed oracle check, 2 invalid
configuration or usage, 3 model/runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import _kernels
from .chains import (
    ChainModelError,
    bridges_from_kernel,
    sample_rc_path,
    solve_schrodinger,
    three_point_from_base,
)
from .detect import null_loglik
from .filters import ZeroEvidenceError, chain_filter, hrc_filter, map_states
from .harness import (
    ConfigError,
    ExperimentConfig,
    ModelBundle,
    brute_force_posterior,
    brute_force_sequence_likelihood,
    build_models,
    config_from_dict,
    config_hash,
    run_experiment,
    sweep,
    write_report,
    write_sweep,
)
from .observation import (
    MultiObsModel,
    SingleObsModel,
    generate_clutter_sequence,
    generate_multi_sequence,
    generate_single_sequence,
    likelihood_table,
    multi_obs_likelihood,
    single_obs_likelihood,
)

__all__ = ["main", "entry"]

_SUITES = ("bridge", "likelihood", "filter", "all")


def _fail(code: int, message: str) -> int:
    print(message, file=sys.stderr)
    return code


def _load_config(args) -> ExperimentConfig:
    if not getattr(args, "config", None):
        raise ConfigError("config", "a --config file is required")
    path = Path(args.config)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError("config", f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON in {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config", "configuration must be a JSON object")
    if getattr(args, "seed", None) is not None:
        doc["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        doc["trials"] = args.trials
    if getattr(args, "threads", None) is not None:
        doc["threads"] = args.threads
    return config_from_dict(doc)


def _write_json(path: str | Path, doc: dict) -> Path:
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _read_sequences(args, cfg: ExperimentConfig) -> list[np.ndarray]:
    path = Path(args.observations)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError("observations", f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("observations", f"invalid JSON in {path}: {exc}") from None
    if "config_hash" in doc and doc["config_hash"] != config_hash(cfg):
        raise ConfigError(
            "observations", "file was generated under a different configuration"
        )
    raw = doc.get("sequences")
    if not isinstance(raw, list) or not raw:
        raise ConfigError("observations", "file carries no sequences")
    out = []
    for i, item in enumerate(raw):
        scans = item.get("scans") if isinstance(item, dict) else None
        if scans is None:
            raise ConfigError(f"observations.sequences[{i}]", "missing scans")
        arr = np.asarray(scans, dtype=float)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise ConfigError(
                f"observations.sequences[{i}]", "scans must have shape (epochs, count, 2)"
            )
        out.append(arr)
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_model(args) -> int:
    cfg = _load_config(args)
    bundle = build_models(cfg)
    doc = {
        "n": bundle.grid.n_states,
        "T": bundle.horizon,
        "A": bundle.base.tolist(),
        "Pi": bundle.endpoint.tolist(),
        "beta": bundle.beta,
        "grid": {"width": bundle.grid.width, "height": bundle.grid.height},
        "config_hash": config_hash(cfg),
    }
    if args.out:
        path = _write_json(args.out, doc)
        print(f"wrote {path}")
    else:
        print(json.dumps(doc, indent=2, sort_keys=True))
    if args.verbose:
        print(f"beta={bundle.beta!r} backend={_kernels.backend_name()}")
    return 0


def _generate_sequences(cfg: ExperimentConfig, bundle: ModelBundle, hypothesis: str):
    records = []
    for i in range(cfg.trials):
        if hypothesis == "target":
            rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0, i]))
            path = sample_rc_path(rng, bundle.endpoint, bundle.family)
            if isinstance(bundle.obs_model, SingleObsModel):
                scans = generate_single_sequence(rng, path, bundle.obs_model, bundle.grid)
            else:
                scans = generate_multi_sequence(rng, path, bundle.obs_model, bundle.grid)
            records.append({"trial": i, "path": path.tolist(), "scans": scans.tolist()})
        else:
            rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1, i]))
            scans = generate_clutter_sequence(
                rng, cfg.horizon + 1, bundle.obs_model, bundle.grid
            )
            records.append({"trial": i, "scans": scans.tolist()})
    return records


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    bundle = build_models(cfg)
    records = _generate_sequences(cfg, bundle, args.hypothesis)
    doc = {
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "hypothesis": args.hypothesis,
        "sequences": records,
    }
    path = _write_json(args.out, doc)
    print(f"wrote {path} ({len(records)} sequences)")
    return 0


def _cmd_filter(args) -> int:
    cfg = _load_config(args)
    bundle = build_models(cfg)
    if args.observations:
        sequences = _read_sequences(args, cfg)
    else:
        records = _generate_sequences(cfg, bundle, "target")
        sequences = [np.asarray(r["scans"], dtype=float) for r in records]
    trials = []
    for i, scans in enumerate(sequences):
        table = likelihood_table(scans, bundle.obs_model, bundle.grid)
        entry_doc: dict = {"trial": i, "loglik": {}, "cond_mean": {}, "map": {}}
        for name in cfg.trackers:
            if name == "hrc":
                res = hrc_filter(bundle.endpoint, bundle.family, table, centers=bundle.centers)
            elif name == "hmc":
                res = chain_filter(
                    bundle.initial_marginal, bundle.hmc_steps_t, table, centers=bundle.centers
                )
            else:
                assert bundle.schrodinger is not None
                res = chain_filter(
                    bundle.initial_marginal,
                    bundle.schrodinger.transposed(),
                    table,
                    centers=bundle.centers,
                    kind="hsc",
                )
            entry_doc["loglik"][name] = res.loglik
            entry_doc["cond_mean"][name] = res.cond_mean.tolist()
            entry_doc["map"][name] = map_states(res.marginals).tolist()
        trials.append(entry_doc)
    doc = {"config_hash": config_hash(cfg), "trials": trials}
    path = _write_json(args.out, doc)
    print(f"wrote {path} ({len(trials)} trials)")
    return 0


def _cmd_detect(args) -> int:
    cfg = _load_config(args)
    bundle = build_models(cfg)
    if args.observations:
        sequences = _read_sequences(args, cfg)
        labels = [None] * len(sequences)
    else:
        n_alt = cfg.trials // 2
        alt = _generate_sequences(cfg, bundle, "target")[:n_alt]
        null_cfg_records = _generate_sequences(cfg, bundle, "clutter")[: cfg.trials - n_alt]
        sequences = [np.asarray(r["scans"], dtype=float) for r in alt + null_cfg_records]
        labels = ["target"] * len(alt) + ["clutter"] * len(null_cfg_records)
    rows = []
    for i, scans in enumerate(sequences):
        table = likelihood_table(scans, bundle.obs_model, bundle.grid)
        base = null_loglik(scans, bundle.obs_model, bundle.grid)
        llr = {}
        for name in cfg.trackers:
            if name == "hrc":
                loglik = hrc_filter(bundle.endpoint, bundle.family, table).loglik
            elif name == "hmc":
                loglik = chain_filter(bundle.initial_marginal, bundle.hmc_steps_t, table).loglik
            else:
                assert bundle.schrodinger is not None
                loglik = chain_filter(
                    bundle.initial_marginal, bundle.schrodinger.transposed(), table, kind="hsc"
                ).loglik
            llr[name] = loglik - base
        row: dict = {"trial": i, "llr": llr, "null_loglik": base}
        if labels[i] is not None:
            row["hypothesis"] = labels[i]
        rows.append(row)
    doc = {"config_hash": config_hash(cfg), "scores": rows}
    path = _write_json(args.out, doc)
    print(f"wrote {path} ({len(rows)} sequences)")
    return 0


def _cmd_experiment(args) -> int:
    cfg = _load_config(args)
    report = run_experiment(cfg)
    written = write_report(report, args.out)
    for path in written:
        print(f"wrote {path}")
    if report.kind == "detection":
        parts = [f"auc[{k}]={v:.4f}" for k, v in (report.auc or {}).items()]
        if report.delta_auc is not None:
            parts.append(f"delta_auc={report.delta_auc:.4f}")
        print(" ".join(parts))
    else:
        parts = [f"rmse_aps[{k}]={v:.4f}" for k, v in (report.rmse_aps or {}).items()]
        print(" ".join(parts))
    if args.verbose:
        print(f"beta={report.beta!r} runtime={report.runtime_seconds:.2f}s")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    results = sweep(cfg)
    written = write_sweep(cfg, results, args.out)
    for path in written:
        print(f"wrote {path}")
    if args.verbose:
        for value, report in results:
            if report.kind == "detection" and report.delta_auc is not None:
                print(f"{cfg.sweep_axis}={value!r} delta_auc={report.delta_auc:.4f}")
            elif report.rmse_aps is not None:
                line = " ".join(f"{k}={v:.4f}" for k, v in report.rmse_aps.items())
                print(f"{cfg.sweep_axis}={value!r} {line}")
    return 0


# ---------------------------------------------------------------------------
# Oracle battery
# ---------------------------------------------------------------------------


def _oracle_instance(seed: int, multi: bool):
    """Small instance every check can afford to enumerate exhaustively."""
    from .gridworld import GridSpec, build_random_walk, endpoints_crossing
    from .observation import ClutterModel, NoiseModel

    grid = GridSpec(3, 3)
    base = build_random_walk(grid, 0.4)
    endpoint = endpoints_crossing(grid)
    horizon = 3 if multi else 4
    noise = NoiseModel(0.5)
    clutter = ClutterModel.uniform(grid.n_states)
    if multi:
        model: SingleObsModel | MultiObsModel = MultiObsModel(
            count=2, lambda0=0.2, noise=noise, clutter=clutter
        )
    else:
        model = SingleObsModel(epsilon=0.3, noise=noise, clutter=clutter)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    from .chains import bridges_from_base_closed_form

    family = bridges_from_base_closed_form(base, horizon, endpoint)
    path = sample_rc_path(rng, endpoint, family)
    if multi:
        scans = generate_multi_sequence(rng, path, model, grid)
    else:
        scans = generate_single_sequence(rng, path, model, grid)
    return grid, base, endpoint, horizon, family, model, scans


def _run_oracle_suite(suite: str, seed: int, perturb: bool, verbose: bool) -> int:
    checks: list[tuple[str, float, float]] = []  # (name, error, tolerance)

    grid, base, endpoint, horizon, family, model, scans = _oracle_instance(seed, multi=False)
    if perturb:
        # Corrupt a bridge entry the filter actually traverses: the most
        # likely start row of the most likely destination.
        k = int(endpoint.sum(axis=0).argmax())
        i = int(family.initial[k].argmax())
        j = int(family.trans[k, 0, i].argmax())
        family.trans[k, 0, i, j] += 1e-3

    if suite in ("bridge", "all"):
        kernel = three_point_from_base(base, horizon)
        generic = bridges_from_kernel(kernel, endpoint)
        err = float(np.abs(family.trans - generic.trans).max())
        checks.append(("bridge closed form vs kernel recursion", err, 1e-10))
        sums = family.trans.sum(axis=3)
        err = float(np.abs(np.where(family.reachable, sums - 1.0, 0.0)).max())
        checks.append(("bridge rows sum to one on support", err, 1e-12))

    if suite in ("likelihood", "all"):
        table = likelihood_table(scans, model, grid)
        ref = np.array(
            [
                [single_obs_likelihood(scans[t, 0], i, model, grid) for i in range(grid.n_states)]
                for t in range(horizon + 1)
            ]
        )
        checks.append(
            ("single-scan table vs scalar reference", float(np.abs(table - ref).max()), 1e-13)
        )
        gridm, _, _, horm, _, modelm, scansm = _oracle_instance(seed, multi=True)
        tablem = likelihood_table(scansm, modelm, gridm)
        refm = np.array(
            [
                [
                    multi_obs_likelihood(scansm[t], i, modelm, gridm)
                    for i in range(gridm.n_states)
                ]
                for t in range(horm + 1)
            ]
        )
        checks.append(
            ("multi-scan table vs scalar reference", float(np.abs(tablem - refm).max()), 1e-13)
        )
        bf = brute_force_sequence_likelihood(("rc", endpoint, base), scans, model, grid)
        res = hrc_filter(endpoint, family, likelihood_table(scans, model, grid))
        err = abs(np.exp(res.loglik) - bf) / max(bf, 1e-300)
        checks.append(("joint sequence likelihood vs enumeration", float(err), 1e-9))

    if suite in ("filter", "all"):
        table = likelihood_table(scans, model, grid)
        res = hrc_filter(endpoint, family, table)
        post = brute_force_posterior(("rc", endpoint, base), scans, model, grid)
        checks.append(
            ("reciprocal filter marginals vs enumeration", float(np.abs(res.marginals - post).max()), 1e-9)
        )
        initial = endpoint.sum(axis=1)
        steps_t = np.ascontiguousarray(np.broadcast_to(base.T, (horizon, *base.shape)))
        resm = chain_filter(initial, steps_t, table)
        postm = brute_force_posterior(("chain", initial, base), scans, model, grid)
        checks.append(
            ("markov filter marginals vs enumeration", float(np.abs(resm.marginals - postm).max()), 1e-9)
        )
        bridge = solve_schrodinger(base, initial, endpoint.sum(axis=0), horizon)
        ress = chain_filter(initial, bridge.transposed(), table, kind="hsc")
        posts = brute_force_posterior(
            ("chain", initial, bridge.transitions), scans, model, grid
        )
        checks.append(
            ("pinned-marginal filter vs enumeration", float(np.abs(ress.marginals - posts).max()), 1e-9)
        )

    failures = 0
    for name, err, tol in checks:
        ok = err <= tol
        failures += 0 if ok else 1
        status = "ok" if ok else "FAIL"
        if verbose or not ok:
            print(f"{status}: {name} (err={err:.3e}, tol={tol:.0e})")
    print(f"oracle-check: {len(checks) - failures}/{len(checks)} checks passed")
    return 0 if failures == 0 else 1


def _cmd_oracle_check(args) -> int:
    if args.suite not in _SUITES:
        return _fail(2, f"oracle-check: unknown suite {args.suite!r}; choose from {_SUITES}")
    seed = args.seed if args.seed is not None else 0
    return _run_oracle_suite(args.suite, seed, args.perturb, args.verbose)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_common(sub, out_required: bool = True):
    sub.add_argument("--config", help="experiment configuration JSON")
    if out_required:
        sub.add_argument("--out", required=True, help="output file or directory")
    else:
        sub.add_argument("--out", help="output file (stdout when omitted)")
    sub.add_argument("--seed", type=int, help="override the config seed")
    sub.add_argument("--trials", type=int, help="override the config trial count")
    sub.add_argument("--threads", type=int, help="override the config thread count")
    sub.add_argument("--verbose", action="store_true", help="print extra detail")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hrctrack",
        description="Destination-aware target tracking and track extraction toolkit",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("model", help="write the built model matrices as JSON")
    _add_common(p, out_required=False)
    p.set_defaults(func=_cmd_model)

    p = subs.add_parser("simulate", help="sample target tracks and observation scans")
    _add_common(p)
    p.add_argument(
        "--hypothesis",
        choices=("target", "clutter"),
        default="target",
        help="sample target-present or clutter-only sequences",
    )
    p.set_defaults(func=_cmd_simulate)

    p = subs.add_parser("filter", help="run the configured trackers on scans")
    _add_common(p)
    p.add_argument("--observations", help="simulate output to filter (defaults to fresh draws)")
    p.set_defaults(func=_cmd_filter)

    p = subs.add_parser("detect", help="log-likelihood-ratio scores per sequence")
    _add_common(p)
    p.add_argument("--observations", help="simulate output to score (defaults to fresh draws)")
    p.set_defaults(func=_cmd_detect)

    p = subs.add_parser("experiment", help="run a full study and write report files")
    _add_common(p)
    p.set_defaults(func=_cmd_experiment)

    p = subs.add_parser("sweep", help="run one experiment per sweep value")
    _add_common(p)
    p.set_defaults(func=_cmd_sweep)

    p = subs.add_parser("oracle-check", help="cross-check fast paths against enumeration")
    p.add_argument("--suite", default="all", help=f"one of {_SUITES}")
    p.add_argument(
        "--perturb",
        action="store_true",
        help="corrupt one bridge entry first; the battery must then fail",
    )
    p.add_argument("--seed", type=int, help="seed for the check instance")
    p.add_argument("--verbose", action="store_true", help="print every check line")
    p.set_defaults(func=_cmd_oracle_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(2, f"config error: {exc}")
    except ZeroEvidenceError as exc:
        return _fail(3, f"model error: {exc}")
    except ChainModelError as exc:
        return _fail(3, f"model error: {exc}")
    except ValueError as exc:
        return _fail(3, f"model error: {exc}")
    except OSError as exc:
        return _fail(3, f"io error: {exc}")


def entry() -> None:
    sys.exit(main())
