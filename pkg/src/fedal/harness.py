"""Experiment-matrix execution and result persistence.

An arm is one (strategy, gamma) cell or one baseline mode; every arm runs
once per seed against the same per-seed dataset. Outputs are a per-round
``curves.csv`` and a ``summary.json`` with per-arm means, stds, per-client
breakdowns, and paired t-test p-values against the ensemble arm. Files
carry no timestamps, so a replay is byte-identical.
"""

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .active import Strategy
from .config import ExperimentConfig
from .data import from_csv_files, generate, four_hospital_spec
from .federation import MODE_FEDAL, RunSettings, run_experiment
from .metrics import paired_t_test

CURVES_HEADER = ["arm", "strategy", "gamma", "seed", "round", "sample_ratio",
                 "client", "micro_f1", "macro_f1", "auc"]
ABLATION_STRATEGIES = ("local_entropy", "global_entropy", "ensemble_entropy")
METRIC_NAMES = ("micro_f1", "macro_f1", "auc")


@dataclass(frozen=True)
class Arm:
    arm_id: str
    mode: str  # "fedal" or a baseline mode
    strategy: object  # strategy key for fedal arms, None for baselines
    gamma: float


def _gamma_tag(gamma):
    return f"{gamma:g}"


def fedal_arm_id(strategy, gamma):
    return f"{strategy}@g{_gamma_tag(gamma)}"


def enumerate_arms(config: ExperimentConfig, ablation=False):
    """Canonical arm list; iteration order fixes the output row order."""
    arms = []
    if ablation:
        for strategy in ABLATION_STRATEGIES:
            for gamma in config.ablation_gammas:
                arms.append(Arm(fedal_arm_id(strategy, gamma), MODE_FEDAL,
                                strategy, gamma))
    else:
        for strategy in config.strategies:
            for gamma in config.gamma_grid:
                arms.append(Arm(fedal_arm_id(strategy, gamma), MODE_FEDAL,
                                strategy, gamma))
        for baseline in config.baselines:
            arms.append(Arm(baseline, baseline, None, 1.0))
    return arms


def build_dataset(config: ExperimentConfig, seed):
    ds = config.dataset
    if ds.csv_paths:
        return from_csv_files(ds.csv_paths, ds.num_classes, seed)
    spec = four_hospital_spec(feature_dim=ds.feature_dim, divisor=ds.divisor,
                       class_mean_scale=ds.class_mean_scale,
                       client_shift_scale=ds.client_shift_scale,
                       noise_std=ds.noise_std)
    return generate(spec, seed)


def build_settings(config: ExperimentConfig, arm: Arm) -> RunSettings:
    strategy = Strategy.parse(arm.strategy) if arm.strategy is not None else None
    return RunSettings(
        schedule=config.schedule,
        strategy=strategy,
        gamma=arm.gamma,
        init_label_fraction=config.init_label_fraction,
        hidden_dims=tuple(config.model.hidden_dims),
        batch_size=config.model.batch_size,
        learning_rate=config.optimizer.learning_rate,
        weight_decay=config.optimizer.weight_decay,
        beta1=config.optimizer.beta1,
        beta2=config.optimizer.beta2,
        epsilon=config.optimizer.epsilon,
        parallel_clients=config.parallel_clients,
    )


def execute_arms(config: ExperimentConfig, arms):
    """Run every (arm, seed); a failure quarantines the arm, not the matrix.

    Returns (histories, failures): histories maps arm_id -> list of
    RunHistory in seed order, failures maps arm_id -> message.
    """
    datasets = {seed: build_dataset(config, seed) for seed in config.seeds}
    tasks = [(arm, seed) for arm in arms for seed in config.seeds]

    def work(task):
        arm, seed = task
        return run_experiment(datasets[seed], build_settings(config, arm),
                              seed, mode=arm.mode)

    outcomes = {}
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            futures = {pool.submit(work, task): task for task in tasks}
            for future, task in futures.items():
                try:
                    outcomes[(task[0].arm_id, task[1])] = future.result()
                except Exception as exc:
                    outcomes[(task[0].arm_id, task[1])] = exc
    else:
        for task in tasks:
            try:
                outcomes[(task[0].arm_id, task[1])] = work(task)
            except Exception as exc:
                outcomes[(task[0].arm_id, task[1])] = exc

    histories, failures = {}, {}
    for arm in arms:
        runs = [outcomes[(arm.arm_id, seed)] for seed in config.seeds]
        errors = [r for r in runs if isinstance(r, Exception)]
        if errors:
            failures[arm.arm_id] = f"{type(errors[0]).__name__}: {errors[0]}"
        else:
            histories[arm.arm_id] = runs
    return histories, failures


def _csv_float(x):
    return repr(float(x))


def write_curves(path, config, arms, histories):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVES_HEADER)
        for arm in arms:
            if arm.arm_id not in histories:
                continue
            strategy = arm.strategy if arm.strategy is not None else "none"
            for seed, history in zip(config.seeds, histories[arm.arm_id]):
                for record in history.rounds:
                    for rec in record.test_records:
                        writer.writerow([
                            arm.arm_id, strategy, _csv_float(arm.gamma), seed,
                            record.round, _csv_float(rec.sample_ratio),
                            rec.client_id, _csv_float(rec.micro_f1),
                            _csv_float(rec.macro_f1), _csv_float(rec.auc)])
                    macro = record.macro_record
                    writer.writerow([
                        arm.arm_id, strategy, _csv_float(arm.gamma), seed,
                        record.round, _csv_float(record.global_sample_ratio),
                        macro.client_id, _csv_float(macro.micro_f1),
                        _csv_float(macro.macro_f1), _csv_float(macro.auc)])


def _mean_std(values):
    values = np.asarray(values, dtype=np.float64)
    defined = values[~np.isnan(values)]
    if defined.size == 0:
        return None, None
    mean = float(defined.mean())
    std = float(defined.std(ddof=1)) if defined.size > 1 else 0.0
    return mean, std


def _metric_stats(records):
    out = {}
    for name in METRIC_NAMES:
        mean, std = _mean_std([getattr(r, name) for r in records])
        out[name] = {"mean": mean, "std": std}
    return out


def _primary_for(arm: Arm, arm_ids, config):
    for candidate in (fedal_arm_id("ensemble_entropy", arm.gamma),
                      fedal_arm_id("ensemble_entropy", config.gamma)):
        if candidate in arm_ids and candidate != arm.arm_id:
            return candidate
    return None


def summarize(config: ExperimentConfig, arms, histories, failures):
    arm_ids = {a.arm_id for a in arms if a.arm_id in histories}
    finals = {a.arm_id: [h.final for h in histories[a.arm_id]]
              for a in arms if a.arm_id in histories}
    summary_arms = {}
    for arm in arms:
        if arm.arm_id not in histories:
            continue
        arm_finals = finals[arm.arm_id]
        macro_records = [f.macro_record for f in arm_finals]
        n_clients = len(arm_finals[0].test_records)
        per_client = {
            str(m): _metric_stats([f.test_records[m] for f in arm_finals])
            for m in range(n_clients)
        }
        p_values = None
        primary = _primary_for(arm, arm_ids, config)
        if primary is not None and len(config.seeds) >= 2:
            primary_records = [f.macro_record for f in finals[primary]]
            p_values = {}
            for name in METRIC_NAMES:
                a_vals = np.asarray([getattr(r, name) for r in macro_records])
                b_vals = np.asarray([getattr(r, name) for r in primary_records])
                if np.isnan(a_vals).any() or np.isnan(b_vals).any():
                    p_values[name] = None
                else:
                    _, p = paired_t_test(a_vals, b_vals)
                    p_values[name] = p
        summary_arms[arm.arm_id] = {
            "mode": arm.mode,
            "strategy": arm.strategy,
            "gamma": arm.gamma,
            "seeds": list(config.seeds),
            "best_rounds": [f.best_round for f in arm_finals],
            "final_sample_ratio": _mean_std(
                [r.sample_ratio for r in macro_records])[0],
            "macro": _metric_stats(macro_records),
            "per_client": per_client,
            "p_vs_ensemble": p_values,
            "compared_to": primary,
        }
    primary_arm = fedal_arm_id("ensemble_entropy", config.gamma)
    return {
        "arms": summary_arms,
        "failed": dict(sorted(failures.items())),
        "primary_arm": primary_arm if primary_arm in arm_ids else None,
        "std_over": "seeds",
        "auc_scheme": "one-vs-rest, macro over classes present in y_true",
        "config": config.to_dict(),
    }


def _sanitize(obj):
    """JSON-safe copy: tuples to lists, NumPy scalars to Python, NaN to None."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def write_summary(path, summary):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_sanitize(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_matrix(config: ExperimentConfig, ablation=False):
    """Run all arms x seeds and write curves/summary files.

    Returns (summary dict, number of failed arms). Ablation mode sweeps
    the entropy-source arms over the ablation gamma grid and prefixes the
    output file names.
    """
    arms = enumerate_arms(config, ablation=ablation)
    histories, failures = execute_arms(config, arms)
    os.makedirs(config.out_dir, exist_ok=True)
    prefix = "ablation_" if ablation else ""
    write_curves(os.path.join(config.out_dir, f"{prefix}curves.csv"),
                 config, arms, histories)
    summary = summarize(config, arms, histories, failures)
    write_summary(os.path.join(config.out_dir, f"{prefix}summary.json"), summary)
    return summary, len(failures)


def _fmt_cell(stats, p_value):
    if stats["mean"] is None:
        return "n/a"
    mark = "*" if p_value is not None and p_value < 0.05 else ""
    return f"{stats['mean']:.4f}±{stats['std']:.4f}{mark}"


def emit_report(summary, out=None):
    """Fixed-width comparison table, best Macro-F1 first; ``*`` marks
    arms significantly different from the ensemble arm (p < 0.05)."""
    import sys

    out = out or sys.stdout
    header = (f"{'arm':<28} {'gamma':>6} {'micro_f1':>16} {'macro_f1':>16} "
              f"{'auc':>16} {'p(macro_f1)':>12}")
    print(header, file=out)
    print("-" * len(header), file=out)
    arms = summary.get("arms", {})

    def sort_key(item):
        arm_id, info = item
        mean = info["macro"]["macro_f1"]["mean"]
        return (-(mean if mean is not None else -np.inf), arm_id)

    for arm_id, info in sorted(arms.items(), key=sort_key):
        p = (info.get("p_vs_ensemble") or {})
        p_macro = p.get("macro_f1")
        cells = [
            _fmt_cell(info["macro"][name], p.get(name)) for name in METRIC_NAMES
        ]
        p_text = f"{p_macro:.4f}" if p_macro is not None else "-"
        print(f"{arm_id:<28} {info['gamma']:>6g} {cells[0]:>16} {cells[1]:>16} "
              f"{cells[2]:>16} {p_text:>12}", file=out)
