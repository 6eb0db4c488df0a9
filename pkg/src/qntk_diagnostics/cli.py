"""Batch command-line entry point: JSON configs in, CSV/JSON artifacts out.

Commands: dataset, diagnose, train, compare, fourier, sweep. Every run
directory receives a manifest.json echoing the resolved configuration, and
identical configurations reproduce byte-identical outputs. QNTK_THREADS caps
the sweep worker pool.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
import numpy as np

from . import __version__, analysis, datasets, models, qntk, serialize, training
from .errors import (
    ConfigurationError,
    DivergenceError,
    NumericalIntegrityError,
    SingularKernelError,
    StructuralError,
)

COMMANDS = ("dataset", "diagnose", "train", "compare", "fourier", "sweep")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_TOP_KEYS = {
    "command",
    "model",
    "dataset",
    "train",
    "seeds",
    "eta_mode",
    "out_dir",
    "cutoff_rel",
    "layers_list",
    "fourier",
}

REGRESSION_SWEEP = tuple(range(5, 51, 5))
MOONS_SWEEP = (5, 15, 25, 35, 45)


def _require(condition, message):
    if not condition:
        raise ConfigurationError(message)


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    return validate_config(raw)


def validate_config(raw: dict) -> dict:
    _require(isinstance(raw, dict), "config must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    _require(not unknown, f"unknown config keys: {sorted(unknown)}")
    command = raw.get("command")
    _require(command in COMMANDS, f"command must be one of {COMMANDS}, got {command!r}")

    if command != "dataset":
        _require("model" in raw, "config needs a 'model' section")
        models.ModelConfig.from_dict(raw["model"])  # validates keys and values
    if command in ("dataset", "diagnose", "train", "compare", "sweep"):
        _require("dataset" in raw, "config needs a 'dataset' section")
        _validate_dataset_spec(raw["dataset"])
    seeds = raw.get("seeds", [0])
    _require(
        isinstance(seeds, list) and seeds and all(isinstance(s, int) for s in seeds),
        "'seeds' must be a non-empty list of integers",
    )
    raw["seeds"] = seeds
    raw["eta_mode"] = _validate_eta_mode(raw.get("eta_mode", {"mode": "crit"}))
    train_keys = {"max_epochs", "convergence_tol"}
    train = raw.get("train", {})
    _require(isinstance(train, dict), "'train' must be an object")
    _require(not set(train) - train_keys, f"unknown train keys: {sorted(set(train) - train_keys)}")
    raw["train"] = train
    cutoff = raw.get("cutoff_rel", qntk.DEFAULT_CUTOFF_REL)
    _require(isinstance(cutoff, (int, float)) and cutoff > 0, "'cutoff_rel' must be positive")
    raw["cutoff_rel"] = float(cutoff)
    if "layers_list" in raw:
        ll = raw["layers_list"]
        _require(
            isinstance(ll, list) and ll and all(isinstance(v, int) and v >= 1 for v in ll),
            "'layers_list' must be a non-empty list of positive integers",
        )
    fourier = raw.get("fourier", {})
    _require(isinstance(fourier, dict), "'fourier' must be an object")
    _require(
        not set(fourier) - {"grid_size"},
        f"unknown fourier keys: {sorted(set(fourier) - {'grid_size'})}",
    )
    raw["fourier"] = fourier
    return raw


def _validate_eta_mode(spec) -> dict:
    _require(isinstance(spec, dict), "'eta_mode' must be an object")
    _require(not set(spec) - {"mode", "value"}, "eta_mode allows only 'mode' and 'value'")
    mode = spec.get("mode", "crit")
    _require(mode in ("crit", "fraction", "absolute"), f"unknown eta mode {mode!r}")
    value = spec.get("value")
    if mode != "crit":
        _require(
            isinstance(value, (int, float)) and value > 0,
            f"eta mode {mode!r} needs a positive 'value'",
        )
    return {"mode": mode, "value": None if mode == "crit" else float(value)}


_DATASET_KEYS = {
    "tfim": {"kind", "n_spins", "coupling", "h_min", "h_max", "n_fields", "split_seed"},
    "sinusoid": {"kind", "n_points", "noise_std", "noise_amplitude", "seed"},
    "moons": {"kind", "n_points", "noise_std", "seed"},
}


def _validate_dataset_spec(spec):
    _require(isinstance(spec, dict), "'dataset' must be an object")
    kind = spec.get("kind")
    _require(kind in _DATASET_KEYS, f"dataset kind must be one of {sorted(_DATASET_KEYS)}")
    unknown = set(spec) - _DATASET_KEYS[kind]
    _require(not unknown, f"unknown dataset keys for {kind}: {sorted(unknown)}")


def build_dataset(spec: dict) -> datasets.Dataset:
    kind = spec["kind"]
    if kind == "tfim":
        n_fields = spec.get("n_fields", 20)
        h_values = tuple(
            np.linspace(spec.get("h_min", -5.0), spec.get("h_max", 4.5), n_fields)
        )
        config = datasets.TfimConfig(
            n_spins=spec.get("n_spins", 6),
            coupling=spec.get("coupling", 1.0),
            h_values=h_values,
        )
        return datasets.make_tfim_dataset(config, split_seed=spec.get("split_seed", 0))
    if kind == "sinusoid":
        return datasets.make_sinusoid_dataset(
            n_points=spec.get("n_points", 20),
            noise_std=spec.get("noise_std", 0.5),
            seed=spec.get("seed", 0),
            noise_amplitude=spec.get("noise_amplitude", 0.4),
        )
    return datasets.make_moons_dataset(
        n_points=spec.get("n_points", 20),
        noise_std=spec.get("noise_std", 0.2),
        seed=spec.get("seed", 0),
    )


def resolve_eta(mode: str, value, diag) -> float:
    """CLI-facing learning-rate resolution; see analysis.resolve_eta."""
    return analysis.resolve_eta(mode, value, diag)


def _write_manifest(out_dir, config, extras=None):
    manifest = {"version": __version__, "config": config}
    if extras:
        manifest.update(extras)
    serialize.write_json(os.path.join(out_dir, "manifest.json"), manifest)


def _write_dataset_files(out_dir, dataset):
    header, rows = analysis.dataset_csv_rows(dataset)
    serialize.write_csv(os.path.join(out_dir, "dataset.csv"), header, rows)
    serialize.write_json(os.path.join(out_dir, "dataset.json"), dataset.sidecar_dict())


def cmd_dataset(config, out_dir) -> dict:
    dataset = build_dataset(config["dataset"])
    _write_dataset_files(out_dir, dataset)
    return {}


def cmd_diagnose(config, out_dir) -> dict:
    dataset = build_dataset(config["dataset"])
    model_config = models.ModelConfig.from_dict(config["model"])
    model = models.build_model(model_config)
    rows, errors, etas = [], {}, {}
    for seed in config["seeds"]:
        theta0 = training.initial_parameters(model.param_count, seed)
        try:
            bundle = qntk.kernel_matrix(
                model, theta0, dataset.train_inputs, config["cutoff_rel"]
            )
            diag = qntk.diagnostics(bundle)
        except SingularKernelError as exc:
            errors[str(seed)] = str(exc)
            continue
        d = diag
        rows.append((seed, d.lambda_min, d.lambda_max, d.kappa, d.eta_crit, d.tau))
        etas[str(seed)] = d.eta_crit
        header = qntk.merged_index_header(dataset.train_inputs.shape[0], model_config.n_outputs)
        serialize.write_csv(
            os.path.join(out_dir, f"kernel_seed{seed}.csv"), header, bundle.matrix
        )
    serialize.write_csv(
        os.path.join(out_dir, "diagnostics.csv"),
        ["seed", "lambda_min", "lambda_max", "kappa", "eta_crit", "tau"],
        rows,
    )
    return {"eta_crit": etas, "seed_errors": errors}


def _train_one_seed(model, dataset, config, seed):
    theta0 = training.initial_parameters(model.param_count, seed)
    mode = config["eta_mode"]
    diag = None
    if mode["mode"] in ("crit", "fraction"):
        bundle = qntk.kernel_matrix(model, theta0, dataset.train_inputs, config["cutoff_rel"])
        diag = qntk.diagnostics(bundle)
    eta = resolve_eta(mode["mode"], mode["value"], diag)
    tc = training.TrainConfig(eta=eta, seed=seed, **config["train"])
    return eta, training.train(model, dataset, tc)


def cmd_train(config, out_dir) -> dict:
    dataset = build_dataset(config["dataset"])
    model_config = models.ModelConfig.from_dict(config["model"])
    model = models.build_model(model_config)
    rows, errors, etas = [], {}, {}
    for seed in config["seeds"]:
        try:
            eta, log = _train_one_seed(model, dataset, config, seed)
        except (SingularKernelError, DivergenceError) as exc:
            errors[str(seed)] = str(exc)
            continue
        etas[str(seed)] = eta
        rows.append((seed, log.epochs_run, log.final_loss, training.lazy_metrics(log)))
        serialize.write_csv(
            os.path.join(out_dir, f"trainlog_seed{seed}.csv"),
            ["epoch", "loss", "step_norm"],
            log.csv_rows(),
        )
        serialize.write_json(
            os.path.join(out_dir, f"trainlog_seed{seed}.json"), log.summary_dict()
        )
    serialize.write_csv(
        os.path.join(out_dir, "training.csv"),
        ["seed", "epochs", "final_loss", "rel_param_change"],
        rows,
    )
    return {"resolved_eta": etas, "seed_errors": errors}


def _run_compare(config, out_dir) -> analysis.DiagnosticReport:
    dataset = build_dataset(config["dataset"])
    model_config = models.ModelConfig.from_dict(config["model"])
    base = training.TrainConfig(eta=1.0, seed=0, **config["train"])
    mode = config["eta_mode"]
    report = analysis.build_report(
        model_config,
        dataset,
        config["seeds"],
        train_config=base,
        eta_mode=(mode["mode"], mode["value"]),
        cutoff_rel=config["cutoff_rel"],
    )
    _write_dataset_files(out_dir, dataset)
    serialize.write_json(os.path.join(out_dir, "report.json"), report.to_json_dict())
    header, rows = analysis.diagnostics_csv_rows(report.outcomes)
    serialize.write_csv(os.path.join(out_dir, "diagnostics.csv"), header, rows)
    header, rows = analysis.training_csv_rows(report.outcomes)
    serialize.write_csv(os.path.join(out_dir, "training.csv"), header, rows)
    header, rows = analysis.predictions_csv_rows(report)
    serialize.write_csv(os.path.join(out_dir, "predictions.csv"), header, rows)
    return report


def cmd_compare(config, out_dir) -> dict:
    report = _run_compare(config, out_dir)
    etas = {str(o.seed): o.eta for o in report.outcomes if o.status == "ok"}
    errors = {str(o.seed): o.error for o in report.outcomes if o.status != "ok"}
    return {"resolved_eta": etas, "seed_errors": errors}


def cmd_fourier(config, out_dir) -> dict:
    model_config = models.ModelConfig.from_dict(config["model"])
    model = models.build_model(model_config)
    report = analysis.fourier_spectrum(
        model,
        seeds=config["seeds"],
        grid_size=config["fourier"].get("grid_size", analysis.FOURIER_GRID),
    )
    header, rows = analysis.spectrum_csv_rows(report)
    serialize.write_csv(os.path.join(out_dir, "spectrum.csv"), header, rows)
    return {}


def _sweep_worker(payload):
    config_json, depth, subdir = payload
    config = json.loads(config_json)
    config["model"]["layers"] = depth
    serialize.ensure_dir(subdir)
    report = _run_compare(config, subdir)
    _write_manifest(subdir, config)
    diag_rows = [
        (depth,) + row for row in analysis.diagnostics_csv_rows(report.outcomes)[1]
    ]
    r2s = {o.seed: o.r2_qntk for o in report.outcomes if o.status == "ok"}
    diag_rows = [row + (r2s.get(row[1]),) for row in diag_rows]
    train_rows = [
        (depth,) + row + (next((o.aad_value for o in report.outcomes if o.seed == row[0]), None),)
        for row in analysis.training_csv_rows(report.outcomes)[1]
    ]
    return depth, diag_rows, train_rows


def cmd_sweep(config, out_dir) -> dict:
    depths = config.get("layers_list")
    if not depths:
        depths = list(MOONS_SWEEP if config["dataset"]["kind"] == "moons" else REGRESSION_SWEEP)
    payloads = [
        (json.dumps(config), depth, os.path.join(out_dir, f"L{depth}")) for depth in depths
    ]
    workers = _worker_count()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, payloads))
    else:
        results = [_sweep_worker(p) for p in payloads]
    results.sort(key=lambda r: r[0])
    diag_rows = [row for _, rows, _ in results for row in rows]
    train_rows = [row for _, _, rows in results for row in rows]
    serialize.write_csv(
        os.path.join(out_dir, "diagnostics.csv"),
        ["layers", "seed", "lambda_min", "lambda_max", "kappa", "eta_crit", "tau", "r2_qntk"],
        diag_rows,
    )
    serialize.write_csv(
        os.path.join(out_dir, "training.csv"),
        ["layers", "seed", "epochs", "final_loss", "rel_param_change", "aad"],
        train_rows,
    )
    return {"layers": depths}


def _worker_count() -> int:
    raw = os.environ.get("QNTK_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigurationError(f"QNTK_THREADS must be an integer, got {raw!r}")


_DISPATCH = {
    "dataset": cmd_dataset,
    "diagnose": cmd_diagnose,
    "train": cmd_train,
    "compare": cmd_compare,
    "fourier": cmd_fourier,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qntk",
        description="Tangent-kernel diagnostics for quantum neural networks",
    )
    parser.add_argument("--config", required=True, help="path to a JSON run configuration")
    parser.add_argument("--command", choices=COMMANDS, help="override the config's command")
    parser.add_argument("--out", help="output directory (overrides config out_dir)")
    parser.add_argument("--seeds", help="comma-separated seed list (overrides config)")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args.config)
        if args.command:
            config["command"] = args.command
        if args.seeds:
            try:
                config["seeds"] = [int(s) for s in args.seeds.split(",") if s.strip()]
            except ValueError:
                raise ConfigurationError(f"--seeds must be a comma-separated integer list")
            _require(config["seeds"], "--seeds must name at least one seed")
        out_dir = args.out or config.get("out_dir")
        _require(out_dir, "an output directory is required (--out or out_dir)")
        config = validate_config(config)

        serialize.ensure_dir(out_dir)
        extras = _DISPATCH[config["command"]](config, out_dir)
        _write_manifest(out_dir, config, extras)
    except (ConfigurationError, StructuralError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalIntegrityError as exc:
        print(f"numerical-integrity error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
