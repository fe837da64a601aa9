"""Command-line surface: gen, train-teacher, distill, eval, peakcount, bench.

Every command reads one JSON config (strictly validated: unknown keys are
errors), takes ``--out`` for its artifact directory and ``--seed`` to
override the config seed, and writes a ``manifest.json`` listing the
artifacts it produced plus wall-clock timings. Numeric artifacts are
byte-identical across re-runs with the same config and seed.
"""

import argparse
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import backend
from .distill import DistillConfig, select_best, sweep, write_run_log
from .errors import ConfigError, WavedistillError
from .evalkit import (
    activation_map,
    cascade,
    compression_rate,
    dump_curve_csv,
    dump_matrix_csv,
    linear_head_fit,
    linear_head_predict,
    max_coeff_features,
    ridge_cv,
    wavelet_distance,
)
from .attribution import saliency
from .filters import load_filter, save_filter, standard_bank
from .nnet import (
    TeacherModel,
    forward_batch,
    init_teacher,
    load_teacher,
    save_teacher,
)
from .peakcount import (
    PeakFilter,
    classify_maps,
    extract_subfilters,
    fit_peak_pipeline,
    find_peaks,
    map_histogram,
    steepness,
    tune_bin_range,
)
from .synth import (
    SynthData,
    SynthSpec,
    gaussian_bump_maps,
    generate,
    initial_filters,
    train_teacher,
)
from .transform import (
    TransformConfig,
    dump_coeffs_csv,
    dwt1d,
    dwt1d_batch,
    dwt2d,
    idwt1d_batch,
)

_SCHEMAS = {
    "gen": {
        "required": ("seed",),
        "optional": ("n_train", "n_test", "dim", "bank", "beta_value",
                     "n_active", "active_scale", "levels", "noise_sigma",
                     "desk_scale"),
    },
    "train-teacher": {
        "required": ("seed", "data_dir"),
        "optional": ("learning_rate", "epochs", "batch_size"),
    },
    "distill": {
        "required": ("seed", "data_dir", "teacher"),
        "optional": ("init", "init_noise", "lambda_grid", "gamma_grid",
                     "learning_rate", "epochs", "batch_size", "levels",
                     "select_by"),
    },
    "eval": {
        "required": ("seed", "filters", "reference"),
        "optional": ("cascade_iterations", "data_dir", "teacher", "levels",
                     "threshold", "max_signals", "activation", "linear_head"),
    },
    "peakcount": {
        "required": ("seed", "classes"),
        "optional": ("n_maps_per_class", "size", "n_bumps", "bump_width",
                     "noise_sigma", "filter", "filters_file", "subfilter_band",
                     "n_bins", "lo", "hi", "train_fraction", "val_fraction"),
    },
    "bench": {
        "required": ("seed",),
        "optional": ("batch", "length", "levels", "reps", "teacher_hidden"),
    },
}


def _load_config(command, path, seed_override):
    try:
        with open(path) as fh:
            config = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("config root must be a JSON object")
    schema = _SCHEMAS[command]
    allowed = set(schema["required"]) | set(schema["optional"])
    for key in config:
        if key not in allowed:
            raise ConfigError(f"unknown config key {key!r} for {command}")
    missing = [k for k in schema["required"] if k not in config]
    if seed_override is not None:
        config["seed"] = seed_override
        missing = [k for k in missing if k != "seed"]
    if missing:
        raise ConfigError(f"missing required config keys: {missing}")
    return config


def _resolve_filters(ref):
    """A bank name or a .json filter-file path."""
    if isinstance(ref, str) and ref.endswith(".json"):
        return load_filter(ref)
    return standard_bank(ref)


def _save_npy(path, array):
    np.save(path, np.ascontiguousarray(array))


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def cmd_gen(config, out):
    spec_kwargs = {k: v for k, v in config.items()
                   if k not in ("desk_scale",)}
    if config.get("desk_scale"):
        spec = SynthSpec.desk_scale(**spec_kwargs)
    else:
        spec = SynthSpec(**spec_kwargs)
    data = generate(spec)
    artifacts = {}
    for name, arr in (("x_train", data.x_train), ("y_train", data.y_train),
                      ("x_test", data.x_test), ("y_test", data.y_test)):
        _save_npy(out / f"{name}.npy", arr)
        artifacts[name] = f"{name}.npy"
    truth_doc = {
        "bank": data.truth.bank,
        "levels": data.truth.levels,
        "active_scale": data.truth.active_scale,
        "band_indices": [int(i) for i in data.truth.band_indices],
        "beta_value": data.truth.beta_value,
        "spec": asdict(spec),
    }
    _write_json(out / "groundtruth.json", truth_doc)
    return list(artifacts.values()) + ["groundtruth.json"]


def _load_dataset(data_dir):
    data_dir = Path(data_dir)
    return (np.load(data_dir / "x_train.npy"), np.load(data_dir / "y_train.npy"),
            np.load(data_dir / "x_test.npy"), np.load(data_dir / "y_test.npy"))


def cmd_train_teacher(config, out):
    x_train, y_train, x_test, y_test = _load_dataset(config["data_dir"])
    data = SynthData(x_train, y_train, x_test, y_test, truth=None)
    model, r2 = train_teacher(
        data, seed=config["seed"],
        learning_rate=config.get("learning_rate", 0.01),
        epochs=config.get("epochs", 20),
        batch_size=config.get("batch_size", 64),
    )
    save_teacher(model, out / "teacher.json")
    train_mse = float(np.mean((forward_batch(model, x_train) - y_train) ** 2))
    _write_json(out / "teacher_metrics.json",
                {"test_r2": r2, "train_mse": train_mse})
    return ["teacher.json", "teacher_metrics.json"]


def cmd_distill(config, out):
    x_train, _, _, _ = _load_dataset(config["data_dir"])
    model = load_teacher(config["teacher"])
    base = DistillConfig(
        learning_rate=config.get("learning_rate", 0.001),
        epochs=config.get("epochs", 50),
        batch_size=config.get("batch_size", 128),
        levels=config.get("levels", 3),
        init=config.get("init", "db5"),
        seed=config["seed"],
    )
    init_name = config.get("init", "db5")
    init_pair = initial_filters(init_name, seed=config["seed"],
                                noise_sigma=config.get("init_noise", 0.05))
    lambda_grid = config.get("lambda_grid", [0.005])
    gamma_grid = config.get("gamma_grid", [0.04])
    records = sweep(x_train, model, lambda_grid, gamma_grid, base,
                    init_pair=init_pair)

    artifacts = []
    cells = []
    for idx, record in enumerate(records):
        stem = f"cell_{idx:03d}"
        if not record.diverged:
            save_filter(record.final_filters, out / f"{stem}.filt.json")
            write_run_log(record, out / f"{stem}_log.csv")
            artifacts += [f"{stem}.filt.json", f"{stem}_log.csv"]
        cells.append({
            "index": idx,
            "lam": record.config.lam,
            "gamma": record.config.gamma,
            "diverged": record.diverged,
            "final_loss": None if record.diverged else record.final_loss,
            "filter_file": None if record.diverged else f"{stem}.filt.json",
            "failure": record.failure,
        })
    best = select_best(records, lambda r: r.final_loss)
    manifest = {
        "init": init_name,
        "lambda_grid": [float(v) for v in lambda_grid],
        "gamma_grid": [float(v) for v in gamma_grid],
        "cells": cells,
        "best_by_loss": {"lam": best.config.lam, "gamma": best.config.gamma},
    }
    _write_json(out / "sweep_manifest.json", manifest)
    return artifacts + ["sweep_manifest.json"]


def cmd_eval(config, out):
    iterations = config.get("cascade_iterations", 8)
    learned = _resolve_filters(config["filters"])
    reference = _resolve_filters(config["reference"])
    phi_l, psi_l = cascade(learned, iterations)
    phi_r, psi_r = cascade(reference, iterations)
    artifacts = []
    for stem, curve in (("phi_learned", phi_l), ("psi_learned", psi_l),
                        ("phi_reference", phi_r), ("psi_reference", psi_r)):
        dump_curve_csv(curve, out / f"{stem}.csv")
        artifacts.append(f"{stem}.csv")
    report = {"wavelet_distance": wavelet_distance(psi_l, psi_r)}

    if "data_dir" in config and "teacher" in config:
        x_train, y_train, x_test, y_test = _load_dataset(config["data_dir"])
        model = load_teacher(config["teacher"])
        levels = config.get("levels", 3)
        threshold = config.get("threshold", 1e-3)
        limit = config.get("max_signals", 500)
        rates = {}
        tf_config = TransformConfig(levels)
        for tag, pair in (("learned", learned), ("reference", reference)):
            coeff_sets, attr_sets = [], []
            for row in x_test[:limit]:
                coeffs = dwt1d(row, pair, tf_config)
                coeff_sets.append(coeffs)
                attr_sets.append(saliency(model, coeffs, pair))
            rates[tag] = compression_rate(coeff_sets, attr_sets, threshold)
            if tag == "learned":
                dump_coeffs_csv(coeff_sets[0], out / "coeffs_learned.csv",
                                attributions=attr_sets[0])
                artifacts.append("coeffs_learned.csv")
        report["compression_rate"] = rates

        if "linear_head" in config:
            head = config["linear_head"]
            per_scale = head.get("per_scale", 6)
            ridges = head.get("ridges", [0.0, 0.01, 0.1, 1.0, 10.0])
            folds = head.get("folds", 5)
            feats_train = np.array([
                max_coeff_features(dwt1d(row, learned, tf_config), per_scale)
                for row in x_train])
            feats_test = np.array([
                max_coeff_features(dwt1d(row, learned, tf_config), per_scale)
                for row in x_test])
            ridge = ridge_cv(feats_train, y_train, ridges, folds=folds,
                             seed=config["seed"])
            w, b = linear_head_fit(feats_train, y_train, ridge)
            pred = linear_head_predict(feats_test, w, b)
            ss_res = float(np.sum((y_test - pred) ** 2))
            ss_tot = float(np.sum((y_test - y_test.mean()) ** 2))
            report["linear_head"] = {
                "per_scale": per_scale,
                "ridge": ridge,
                "test_r2": 1.0 - ss_res / ss_tot,
            }

    if "activation" in config:
        act = config["activation"]
        size = act.get("size", 16)
        top_k = act.get("top_k", 40)
        steps = act.get("steps", 50)
        rng = np.random.default_rng(config["seed"])
        image = gaussian_bump_maps(1, size, 8, 1.0, 0.2, 1.5, 0.05,
                                   config["seed"])[0]
        weights = rng.normal(size=(1, size * size)) / size
        linear = TeacherModel([(weights, np.zeros(1), "identity")])
        levels = act.get("levels", 2)
        amap = activation_map(image, linear, learned, top_k, levels,
                              steps=steps)
        dump_matrix_csv(image, out / "activation_input.csv")
        dump_matrix_csv(amap, out / "activation_map.csv")
        artifacts += ["activation_input.csv", "activation_map.csv"]

    _write_json(out / "eval_report.json", report)
    return artifacts + ["eval_report.json"]


def _peak_filter_from_config(config):
    kind = config.get("filter", "laplace")
    if kind == "subfilter":
        ref = config.get("filters_file", "db5")
        pair = _resolve_filters(ref)
        band = config.get("subfilter_band", "hh")
        return PeakFilter("subfilter", extract_subfilters(pair)[band])
    return PeakFilter(kind)


def cmd_peakcount(config, out):
    size = config.get("size", 32)
    n_per_class = config.get("n_maps_per_class", 60)
    n_bumps = config.get("n_bumps", 25)
    bump_width = config.get("bump_width", 1.2)
    noise_sigma = config.get("noise_sigma", 0.05)
    seed = config["seed"]
    maps, labels = [], []
    for cls_idx, cls in enumerate(config["classes"]):
        class_maps = gaussian_bump_maps(
            n_per_class, size, n_bumps, cls["amp_mean"],
            cls.get("amp_sigma", 0.15), bump_width, noise_sigma,
            seed + 1000 * cls_idx,
        )
        maps.extend(class_maps)
        labels.extend([cls["label"]] * n_per_class)
    maps = np.array(maps)
    labels = list(labels)

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(maps))
    n_train = int(len(maps) * config.get("train_fraction", 0.5))
    n_val = int(len(maps) * config.get("val_fraction", 0.2))
    train_idx = order[:n_train]
    val_idx = order[n_train:n_train + n_val]
    test_idx = order[n_train + n_val:]

    peak_filter = _peak_filter_from_config(config)
    n_bins = config.get("n_bins", 22)
    if "lo" in config and "hi" in config:
        lo, hi = config["lo"], config["hi"]
        width = (hi - lo) / n_bins
        hi = lo + width * n_bins
        val_accuracy = None
    else:
        lo, hi, width, val_accuracy = tune_bin_range(
            maps[train_idx], [labels[i] for i in train_idx],
            maps[val_idx], [labels[i] for i in val_idx],
            peak_filter, n_bins=n_bins,
        )
    classes = fit_peak_pipeline(
        maps[train_idx], [labels[i] for i in train_idx],
        peak_filter, lo, hi, width,
    )
    predicted = classify_maps(maps[test_idx], peak_filter, lo, hi, width,
                              classes)
    actual = [labels[i] for i in test_idx]

    with open(out / "histograms.csv", "w", newline="") as fh:
        header = ["map", "label", "predicted"]
        header += [f"bin_{i}" for i in range(n_bins)]
        fh.write(",".join(header) + "\n")
        for row, (idx, pred) in enumerate(zip(test_idx, predicted)):
            hist = map_histogram(maps[idx], peak_filter, lo, hi, width)
            cells = [str(row), str(labels[idx]), str(pred)]
            cells += [str(int(c)) for c in hist.counts]
            fh.write(",".join(cells) + "\n")
    class_labels = [c["label"] for c in config["classes"]]
    confusion = {a: {p: 0 for p in class_labels} for a in class_labels}
    for a, p in zip(actual, predicted):
        confusion[a][p] += 1
    accuracy = float(np.mean([a == p for a, p in zip(actual, predicted)]))

    _write_json(out / "class_models.json", {
        "bins": {"lo": lo, "hi": hi, "width": width},
        "filter": peak_filter.kind,
        "classes": [
            {"label": str(m.label),
             "mean": [float(v) for v in m.mean],
             "covariance": [[float(v) for v in row] for row in m.covariance]}
            for m in classes
        ],
    })
    with open(out / "confusion.csv", "w", newline="") as fh:
        fh.write("actual," + ",".join(str(c) for c in class_labels) + "\n")
        for a in class_labels:
            fh.write(str(a) + ","
                     + ",".join(str(confusion[a][p]) for p in class_labels)
                     + "\n")
    _write_json(out / "peakcount_metrics.json", {
        "test_accuracy": accuracy,
        "validation_accuracy": val_accuracy,
        "n_test": len(actual),
    })
    return ["class_models.json", "confusion.csv", "histograms.csv",
            "peakcount_metrics.json"]


def _time_stage(fn, reps):
    start = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - start) / reps


def cmd_bench(config, out):
    seed = config["seed"]
    batch = config.get("batch", 128)
    length = config.get("length", 64)
    levels = config.get("levels", 3)
    reps = config.get("reps", 20)
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(batch, length))
    pair = standard_bank("db5")
    hidden = tuple(config.get("teacher_hidden", (32, 32)))
    model = init_teacher((length, *hidden, 1), seed)

    rows = []
    for name in ("cython", "python"):
        try:
            kernels = backend.get_backend(name)
        except ImportError:
            continue
        xc = np.ascontiguousarray(x)
        half = np.ascontiguousarray(xc[:, :length // 2])
        rows.append((f"kernel_analysis[{name}]", _time_stage(
            lambda: kernels.analysis(xc, pair.lowpass), reps)))
        rows.append((f"kernel_synthesis[{name}]", _time_stage(
            lambda: kernels.synthesis(half, pair.lowpass, length), reps)))
        rows.append((f"kernel_tap_grad[{name}]", _time_stage(
            lambda: kernels.tap_grad(xc, half, pair.support), reps)))
    rows.append(("dwt_batch", _time_stage(
        lambda: dwt1d_batch(x, pair, levels), reps)))
    approx, details = dwt1d_batch(x, pair, levels)
    rows.append(("idwt_batch", _time_stage(
        lambda: idwt1d_batch(approx, details, pair), reps)))
    rows.append(("teacher_forward", _time_stage(
        lambda: forward_batch(model, x), reps)))
    image = rng.normal(size=(64, 64))
    rows.append(("dwt2d_64x64", _time_stage(
        lambda: dwt2d(image, pair, TransformConfig(2)), reps)))
    rows.append(("find_peaks_64x64", _time_stage(
        lambda: find_peaks(image), reps)))
    peaks = find_peaks(image)
    laplace = PeakFilter("laplace")
    rows.append(("steepness_laplace", _time_stage(
        lambda: steepness(image, peaks, laplace), reps)))

    with open(out / "bench.csv", "w", newline="") as fh:
        fh.write("stage,seconds_per_call\n")
        for name, seconds in rows:
            fh.write(f"{name},{seconds:.9f}\n")
    return ["bench.csv"]


_COMMANDS = {
    "gen": cmd_gen,
    "train-teacher": cmd_train_teacher,
    "distill": cmd_distill,
    "eval": cmd_eval,
    "peakcount": cmd_peakcount,
    "bench": cmd_bench,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="wavedistill",
        description="Distill wavelet filter banks from a trained regressor.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True)
        cmd.add_argument("--out", required=True)
        cmd.add_argument("--seed", type=int, default=None,
                         help="override the config seed")
    args = parser.parse_args(argv)

    try:
        config = _load_config(args.command, args.config, args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        start = time.perf_counter()
        artifacts = _COMMANDS[args.command](config, out)
        elapsed = time.perf_counter() - start
        for name in artifacts:
            target = out / name
            if not target.exists() or target.stat().st_size == 0:
                raise WavedistillError(f"artifact {name} missing or empty")
        _write_json(out / "manifest.json", {
            "command": args.command,
            "config": str(args.config),
            "seed": config["seed"],
            "out_dir": str(out),
            "artifacts": artifacts,
            "timings": {"total_seconds": elapsed},
        })
    except WavedistillError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
