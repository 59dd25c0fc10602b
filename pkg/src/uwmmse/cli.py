"""Experiment command line: dataset generation, training, evaluation, sweeps,
timing, and self-test.

All commands read a JSON config (--config) whose keys are validated against
the command's known key set, write CSVs plus a JSON run-manifest into
--out-dir, and embed enough seeds/config in every output to regenerate its
inputs exactly. Exit codes: 0 success, 1 usage/config error, 2 runtime error.
"""

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .channel import apply_density, gen_topology, resize, sample_channel
from .datasets import load_dataset, write_dataset
from .errors import NumericalDegeneracyError, ParamFileError
from .model import inference_fn, init_model, load_params, save_params
from .rates import sum_rate
from .training import ChannelSource, TrainConfig, evaluate, train
from .wmmse import solve_power

CSV_SCHEMA_VERSION = 1
FULL_WMMSE_ITERS = 100
TRUNCATED_ITERS = 4
ALL_METHODS = ("wmmse", "tr_wmmse", "uwmmse", "ro_uwmmse")


class ConfigError(ValueError):
    pass


def _load_config(path, allowed: dict):
    """Read a JSON config, rejecting unknown keys. `allowed` maps key ->
    default (None means required)."""
    cfg = dict()
    if path:
        with open(path) as f:
            loaded = json.load(f)
        for key in loaded:
            if key not in allowed:
                raise ConfigError(f"unknown config key {key!r} (known: {sorted(allowed)})")
        cfg.update(loaded)
    for key, default in allowed.items():
        if key not in cfg:
            if default is None:
                raise ConfigError(f"missing required config key {key!r}")
            cfg[key] = default
    return cfg


def _file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict, outputs: list[str],
                    checkpoints: dict | None = None):
    doc = {
        "tool": f"uwmmse {__version__}",
        "command": command,
        "config": config,
        "outputs": outputs,
        "checkpoints": {
            name: {"path": str(p), "sha256": _file_hash(p)}
            for name, p in (checkpoints or {}).items()
        },
    }
    path = out_dir / "run_manifest.json"
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
    return path


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def _sample_seeds(seed: int, n: int, stream_index: int = 0) -> list[int]:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(3, stream_index)))
    return [int(s) for s in rng.integers(2 ** 31, size=n)]


def _method_solvers(cfg, checkpoint=None, ro_checkpoint=None):
    """Map method name -> callable(ChannelMatrix) -> power vector."""
    p_max = cfg["p_max"]
    solvers = {
        "wmmse": lambda ch: solve_power(ch, p_max, FULL_WMMSE_ITERS),
        "tr_wmmse": lambda ch: solve_power(ch, p_max, TRUNCATED_ITERS),
    }
    if checkpoint is not None:
        solvers["uwmmse"] = inference_fn(load_params(checkpoint))
    if ro_checkpoint is not None:
        solvers["ro_uwmmse"] = inference_fn(load_params(ro_checkpoint))
    return solvers


# ---------------------------------------------------------------------------
# commands

GENERATE_KEYS = {"m": 20, "sigma": 2.6e-5, "seed": 0, "n_samples": 6400, "shard_size": 256}


def cmd_generate(args):
    cfg = _load_config(args.config, GENERATE_KEYS)
    if args.seed is not None:
        cfg["seed"] = args.seed
    out_dir = Path(args.out_dir)
    top = gen_topology(cfg["m"], cfg["seed"])
    seeds = _sample_seeds(cfg["seed"], cfg["n_samples"])
    batches, batch = [], []
    for s in seeds:
        batch.append((s, sample_channel(top, cfg["sigma"], s)))
        if len(batch) == cfg["shard_size"]:
            batches.append(batch)
            batch = []
    if batch:
        batches.append(batch)
    manifest = write_dataset(out_dir, batches, cfg)
    print(f"wrote {cfg['n_samples']} samples to {out_dir} ({manifest.name})")
    return 0


TRAIN_KEYS = {
    "m": 10, "sigma": 2.6e-5, "p_max": 1.0, "n_layers": 4,
    "batch_size": 64, "learning_rate": 1e-3, "steps": 1000,
    "optimizer": "adam", "seed": 0, "regime": "fixed_topology",
    "d_range": [0.5, 5.0], "m_range": [10, 30],
    "eval_samples": 512, "eval_interval": 100, "grad_clip": 0.0,
}


def cmd_train(args):
    cfg = _load_config(args.config, TRAIN_KEYS)
    if args.seed is not None:
        cfg["seed"] = args.seed
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tc = TrainConfig(
        m=cfg["m"], sigma=cfg["sigma"], p_max=cfg["p_max"], n_layers=cfg["n_layers"],
        batch_size=cfg["batch_size"], learning_rate=cfg["learning_rate"],
        steps=cfg["steps"], optimizer=cfg["optimizer"], seed=cfg["seed"],
        regime=cfg["regime"], d_range=tuple(cfg["d_range"]),
        m_range=tuple(cfg["m_range"]), eval_samples=cfg["eval_samples"],
        eval_interval=cfg["eval_interval"],
        grad_clip=cfg["grad_clip"] or None,
    )
    start = params = None
    if args.checkpoint:
        start = load_params(args.checkpoint)
    params, log = train(
        tc, params=start,
        progress=lambda step, loss, score: print(
            f"step {step:6d}  loss {loss:10.4f}  held-out mean sum-rate {score:8.4f}"),
    )
    ckpt = out_dir / "checkpoint.json"
    save_params(params, ckpt)
    log_rows = [(CSV_SCHEMA_VERSION, i + 1, loss, sec)
                for i, (loss, sec) in enumerate(zip(log.losses, log.step_seconds))]
    _write_csv(out_dir / "train_log.csv",
               ["schema_version", "step", "loss", "step_seconds"], log_rows)
    _write_csv(out_dir / "eval_log.csv",
               ["schema_version", "step", "heldout_mean_sum_rate"],
               [(CSV_SCHEMA_VERSION, s, r) for s, r in zip(log.eval_steps, log.eval_mean_sum_rates)])
    _write_manifest(out_dir, "train", cfg, ["checkpoint.json", "train_log.csv", "eval_log.csv"],
                    {"trained": ckpt})
    print(f"checkpoint: {ckpt}")
    return 0


EVAL_KEYS = {"p_max": 1.0}


def cmd_eval(args):
    cfg = _load_config(args.config, EVAL_KEYS)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    samples, ds_manifest = load_dataset(args.dataset)
    if not samples:
        raise RuntimeError("dataset is empty")
    methods = args.methods.split(",") if args.methods else ["wmmse", "tr_wmmse", "uwmmse"]
    for m in methods:
        if m not in ALL_METHODS:
            raise ConfigError(f"unknown method {m!r} (known: {ALL_METHODS})")
    solvers = _method_solvers(cfg, args.checkpoint, args.ro_checkpoint)
    missing = [m for m in methods if m not in solvers]
    if missing:
        raise ConfigError(f"methods {missing} need --checkpoint/--ro-checkpoint")
    rows, summary = [], []
    means = {}
    for method in methods:
        solver = solvers[method]
        rates = np.empty(len(samples))
        t0 = time.perf_counter()
        for i, (seed, ch) in enumerate(samples):
            rates[i] = sum_rate(ch, solver(ch))
        per_sample_s = (time.perf_counter() - t0) / len(samples)
        for i, (seed, ch) in enumerate(samples):
            rows.append((CSV_SCHEMA_VERSION, method, i, seed, ch.n_pairs, rates[i]))
        q1, med, q3 = np.percentile(rates, [25, 50, 75])
        summary.append((CSV_SCHEMA_VERSION, method, len(samples), rates.mean(),
                        rates.std(), q1, med, q3, per_sample_s))
        means[method] = float(rates.mean())
    _write_csv(out_dir / "eval_samples.csv",
               ["schema_version", "method", "sample", "seed", "m", "sum_rate"], rows)
    _write_csv(out_dir / "eval_summary.csv",
               ["schema_version", "method", "n_samples", "mean_sum_rate", "std_sum_rate",
                "q1", "median", "q3", "per_sample_seconds"], summary)
    ckpts = {}
    if args.checkpoint:
        ckpts["uwmmse"] = args.checkpoint
    if args.ro_checkpoint:
        ckpts["ro_uwmmse"] = args.ro_checkpoint
    _write_manifest(out_dir, "eval", {**cfg, "dataset": str(args.dataset), "methods": methods},
                    ["eval_samples.csv", "eval_summary.csv"], ckpts)
    for method, mean in means.items():
        print(f"{method:10s} mean sum-rate {mean:.4f}")
    if "uwmmse" in means and "tr_wmmse" in means:
        ok = means["uwmmse"] >= means["tr_wmmse"]
        print(f"ordering mean(uwmmse) >= mean(tr_wmmse): {'PASS' if ok else 'FAIL'}")
    return 0


SWEEP_KEYS = {"m": 20, "sigma": 2.6e-5, "p_max": 1.0, "seed": 0, "n_samples": 512}


def _run_sweep(args, sweep_param: str, values: list, make_topology):
    cfg = _load_config(args.config, SWEEP_KEYS)
    if args.seed is not None:
        cfg["seed"] = args.seed
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    methods = args.methods.split(",") if args.methods else list(ALL_METHODS)
    solvers = _method_solvers(cfg, args.checkpoint, args.ro_checkpoint)
    missing = [m for m in methods if m not in solvers]
    if missing:
        raise ConfigError(f"methods {missing} need --checkpoint/--ro-checkpoint")
    base = gen_topology(cfg["m"], cfg["seed"])
    rows = []
    for vi, value in enumerate(values):
        seeds = _sample_seeds(cfg["seed"], cfg["n_samples"], stream_index=vi + 1)
        channels = []
        for s in seeds:
            top = make_topology(base, value, s)
            channels.append(sample_channel(top, cfg["sigma"], s))
        for method in methods:
            solver = solvers[method]
            rates = np.array([sum_rate(ch, solver(ch)) for ch in channels])
            rows.append((CSV_SCHEMA_VERSION, sweep_param, value, method,
                         cfg["n_samples"], rates.mean(), rates.std()))
            print(f"{sweep_param}={value}  {method:10s} mean sum-rate {rates.mean():.4f}")
    name = f"sweep_{sweep_param}.csv"
    _write_csv(out_dir / name,
               ["schema_version", "sweep_param", "value", "method",
                "n_samples", "mean_sum_rate", "std_sum_rate"], rows)
    ckpts = {}
    if args.checkpoint:
        ckpts["uwmmse"] = args.checkpoint
    if args.ro_checkpoint:
        ckpts["ro_uwmmse"] = args.ro_checkpoint
    _write_manifest(out_dir, f"sweep-{sweep_param}",
                    {**cfg, "values": values, "methods": methods}, [name], ckpts)
    return 0


def cmd_sweep_density(args):
    values = [float(v) for v in args.d_list.split(",")]
    if not values:
        raise ConfigError("empty density list")
    return _run_sweep(args, "d", values, lambda base, d, s: apply_density(base, d, s))


def cmd_sweep_size(args):
    values = [int(v) for v in args.n_list.split(",")]
    if not values:
        raise ConfigError("empty size list")
    return _run_sweep(args, "n", values, lambda base, n, s: resize(base, n, s))


BENCH_KEYS = {"m": 20, "sigma": 2.6e-5, "p_max": 1.0, "seed": 0,
              "n_batches": 20, "batch_size": 64}


def cmd_bench_time(args):
    cfg = _load_config(args.config, BENCH_KEYS)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = load_params(args.checkpoint) if args.checkpoint else init_model(
        TRUNCATED_ITERS, cfg["p_max"], cfg["sigma"], cfg["seed"])
    top = gen_topology(cfg["m"], cfg["seed"])
    seeds = _sample_seeds(cfg["seed"], cfg["batch_size"] * (cfg["n_batches"] + 1))
    channels = [sample_channel(top, cfg["sigma"], s) for s in seeds]
    methods = {
        "wmmse": lambda ch: solve_power(ch, cfg["p_max"], FULL_WMMSE_ITERS),
        "tr_wmmse": lambda ch: solve_power(ch, cfg["p_max"], TRUNCATED_ITERS),
        "uwmmse": inference_fn(params),
    }
    per_sample_ms = {}
    for name, solver in methods.items():
        batch_times = []
        for b in range(cfg["n_batches"] + 1):
            chunk = channels[b * cfg["batch_size"]:(b + 1) * cfg["batch_size"]]
            t0 = time.perf_counter()
            for ch in chunk:
                solver(ch)
            batch_times.append((time.perf_counter() - t0) / cfg["batch_size"] * 1e3)
        per_sample_ms[name] = batch_times[1:]  # first batch is warm-up
    wmmse_median = float(np.median(per_sample_ms["wmmse"]))
    rows = []
    for name, times in per_sample_ms.items():
        med, mean = float(np.median(times)), float(np.mean(times))
        rows.append((CSV_SCHEMA_VERSION, name, med, mean, med / wmmse_median))
        print(f"{name:10s} median {med:8.4f} ms/sample  mean {mean:8.4f}  "
              f"ratio vs wmmse {med / wmmse_median:.3f}")
    _write_csv(out_dir / "timing.csv",
               ["schema_version", "method", "median_ms_per_sample",
                "mean_ms_per_sample", "ratio_vs_wmmse"], rows)
    _write_manifest(out_dir, "bench-time", cfg, ["timing.csv"],
                    {"uwmmse": args.checkpoint} if args.checkpoint else None)
    return 0


def cmd_selftest(args):
    """Quick invariant checks (the full suite lives in pytest)."""
    from .channel import ChannelMatrix
    from .model import forward
    from .wmmse import truncated_wmmse, wmmse

    seed = args.seed if args.seed is not None else 0
    rng = np.random.default_rng(seed)
    failures = 0

    def check(name, ok):
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failures += 0 if ok else 1

    for m in (5, 10):
        top = gen_topology(m, seed + m)
        ch = sample_channel(top, 2.6e-5, seed + m)
        _, trace = wmmse(ch, p_max=1.0)
        diffs = np.diff(trace.objective_values)
        check(f"monotone objective (M={m})",
              bool(np.all(diffs <= 1e-9 * np.abs(trace.objective_values[:-1]))))
        alloc, _ = truncated_wmmse(ch, 1.0, 4)
        params = init_model(4, 1.0, 2.6e-5, seed)
        model_alloc, _ = forward(ch, params)
        check(f"identity init == truncated solver (M={m})",
              bool(np.max(np.abs(alloc.p - model_alloc.p)) <= 1e-12))
        perm = rng.permutation(m)
        pi = np.eye(m)[perm]
        p1 = solve_power(ChannelMatrix(pi @ ch.h @ pi.T, ch.sigma), 1.0, 50)
        p2 = solve_power(ch, 1.0, 50)
        check(f"permutation equivariance (M={m})",
              bool(np.max(np.abs(p1 - pi @ p2)) <= 1e-9))
    violations = 0
    for i in range(200):
        m = int(rng.integers(2, 8))
        h = np.abs(rng.normal(size=(m, m))) + np.eye(m)
        ch = ChannelMatrix(h, 1e-3)
        params = init_model(2, 1.0, 1e-3, i)
        for t in params.tensors():
            t.data += rng.normal(scale=0.5, size=t.data.shape)
        p = inference_fn(params)(ch)
        if np.any(p < 0) or np.any(p > 1.0):
            violations += 1
    check("feasibility fuzz (200 random models)", violations == 0)
    return 2 if failures else 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uwmmse",
        description="Power-allocation lab: classical WMMSE, its trainable unfolding, and experiment tooling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, checkpoint=False, methods=False):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--out-dir", default="out", help="output directory")
        if checkpoint:
            p.add_argument("--checkpoint", help="trained model parameters (uwmmse)")
            p.add_argument("--ro-checkpoint", help="robust-trained model parameters (ro_uwmmse)")
        if methods:
            p.add_argument("--methods", help="comma-separated subset of " + ",".join(ALL_METHODS))

    p = sub.add_parser("generate", help="write a channel dataset + manifest")
    common(p)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("train", help="train an unfolded model")
    common(p)
    p.add_argument("--checkpoint", help="resume from this checkpoint")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate methods on a dataset")
    common(p, checkpoint=True, methods=True)
    p.add_argument("--dataset", required=True, help="dataset directory or manifest path")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("sweep-density", help="mean sum-rate vs density factor")
    common(p, checkpoint=True, methods=True)
    p.add_argument("--d-list", default="1.0,2.0,3.0,4.0,5.0")
    p.set_defaults(fn=cmd_sweep_density)

    p = sub.add_parser("sweep-size", help="mean sum-rate vs network size")
    common(p, checkpoint=True, methods=True)
    p.add_argument("--n-list", default="10,15,20,25,30")
    p.set_defaults(fn=cmd_sweep_size)

    p = sub.add_parser("bench-time", help="per-sample timing comparison")
    common(p)
    p.add_argument("--checkpoint", help="trained model parameters")
    p.set_defaults(fn=cmd_bench_time)

    p = sub.add_parser("selftest", help="quick invariant checks")
    common(p)
    p.set_defaults(fn=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ConfigError, ParamFileError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalDegeneracyError, FloatingPointError, RuntimeError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
