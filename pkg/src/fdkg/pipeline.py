"""Config-driven experiment runner: datasets, training regimes, metrics.

One run generates a source environment dataset and several target
environment datasets, trains the selected algorithms, and scores every
(algorithm, target environment, SNR) cell by feature NMSE, key error rate,
key generation ratio, and optionally the randomness battery over the keys.

Normalization statistics are per environment and per band: the source
normalizers come from the source training set, a target environment's from
its adaptation split.  All algorithms share the same normalized feature
spaces, the same network initialization, and the same data, so metric
differences are attributable to the training regime alone.

Everything is a deterministic function of the configuration; wall-clock
timing is the one exception and can be disabled (``record_wall_time``) when
byte-identical reports are required.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .channel_sim import (
    Environment,
    EnvironmentDataset,
    EnvironmentSpec,
    OfdmConfig,
    build_environment,
    generate_env_dataset,
)
from .errors import ConfigError
from .features import Normalizer, complex_to_features, fit_normalizer, normalize
from .keygen import (
    QuantizerConfig,
    align_keys,
    key_generation_ratio,
    quantize_guardband,
)
from .neuralnet import NetworkParams, TrainConfig, forward, init_network
from .randomness import run_battery
from .strategies import (
    MetaConfig,
    PairSet,
    adapt,
    meta_train,
    partition_source_into_tasks,
    train_supervised,
)

KNOWN_ALGORITHMS = ("direct", "joint", "dtl", "meta", "identity")

NMSE_DEGENERATE_FLOOR = 1e-12

CSV_COLUMNS = ("algorithm", "env", "snr_db", "nmse", "ker", "kgr", "wall_time_s", "seed")
SWEEP_COLUMNS = ("axis", "axis_value") + CSV_COLUMNS


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class TaskSplitConfig:
    """How the pooled source data is cut into meta-learning tasks."""

    n_tasks: int = 400
    samples_per_task: int = 100
    support_fraction: float = 0.5


@dataclass(frozen=True)
class ExperimentConfig:
    ofdm: OfdmConfig
    source_envs: list[EnvironmentSpec]
    target_envs: list[EnvironmentSpec]
    n_source: int
    n_target: int
    n_adapt: int
    n_test: int
    snr_list_db: list[float]
    train_snr_db: float
    algorithms: list[str]
    quantizer_epsilon: float
    hidden_dims: list[int]
    train: TrainConfig
    meta: MetaConfig
    meta_tasks: TaskSplitConfig
    seed: int = 0
    scale_factor: float = 1.0
    record_wall_time: bool = True
    compute_randomness: bool = False

    def __post_init__(self) -> None:
        if not self.source_envs or not self.target_envs:
            raise ConfigError("need at least one source and one target environment")
        for alg in self.algorithms:
            if alg not in KNOWN_ALGORITHMS:
                raise ConfigError(f"unknown algorithm {alg!r}; choose from {KNOWN_ALGORITHMS}")
        if not self.algorithms:
            raise ConfigError("no algorithms selected")
        if not self.snr_list_db:
            raise ConfigError("snr_list_db must be non-empty")
        if not 0.0 < self.scale_factor <= 1.0:
            raise ConfigError(f"scale_factor must lie in (0, 1], got {self.scale_factor}")
        QuantizerConfig(self.quantizer_epsilon)  # validates epsilon
        if self.n_source < 1 or self.n_target < 1:
            raise ConfigError("n_source and n_target must be >= 1")
        if self.n_adapt < 1 or self.n_test < 1 or self.n_adapt + self.n_test > self.n_target:
            raise ConfigError(
                f"need n_adapt + n_test <= n_target, got {self.n_adapt}+{self.n_test} > {self.n_target}"
            )

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "scale_factor": self.scale_factor,
            "ofdm": self.ofdm.to_dict(),
            "environments": {
                "source": [e.to_dict() for e in self.source_envs],
                "targets": [e.to_dict() for e in self.target_envs],
            },
            "sizes": {
                "n_source": self.n_source,
                "n_target": self.n_target,
                "n_adapt": self.n_adapt,
                "n_test": self.n_test,
            },
            "snr_list_db": list(self.snr_list_db),
            "train_snr_db": self.train_snr_db,
            "algorithms": list(self.algorithms),
            "quantizer_epsilon": self.quantizer_epsilon,
            "hidden_dims": list(self.hidden_dims),
            "train": {
                "batch_size": self.train.batch_size,
                "learning_rate": self.train.learning_rate,
                "max_iterations": self.train.max_iterations,
                "seed": self.train.seed,
                "eval_interval": self.train.eval_interval,
            },
            "meta": {
                "inner_lr": self.meta.inner_lr,
                "outer_lr": self.meta.outer_lr,
                "inner_steps": self.meta.inner_steps,
                "task_batch": self.meta.task_batch,
                "adapt_steps": self.meta.adapt_steps,
                "max_meta_iterations": self.meta.max_meta_iterations,
                "adapt_batch_size": self.meta.adapt_batch_size,
            },
            "meta_tasks": {
                "n_tasks": self.meta_tasks.n_tasks,
                "samples_per_task": self.meta_tasks.samples_per_task,
                "support_fraction": self.meta_tasks.support_fraction,
            },
            "record_wall_time": self.record_wall_time,
            "compute_randomness": self.compute_randomness,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            envs = d["environments"]
            sizes = d["sizes"]
            return cls(
                ofdm=OfdmConfig.from_dict(d["ofdm"]),
                source_envs=[EnvironmentSpec.from_dict(e) for e in envs["source"]],
                target_envs=[EnvironmentSpec.from_dict(e) for e in envs["targets"]],
                n_source=sizes["n_source"],
                n_target=sizes["n_target"],
                n_adapt=sizes["n_adapt"],
                n_test=sizes["n_test"],
                snr_list_db=[float(v) for v in d["snr_list_db"]],
                train_snr_db=float(d["train_snr_db"]),
                algorithms=list(d["algorithms"]),
                quantizer_epsilon=float(d["quantizer_epsilon"]),
                hidden_dims=[int(v) for v in d["hidden_dims"]],
                train=TrainConfig(**d["train"]),
                meta=MetaConfig(**d["meta"]),
                meta_tasks=TaskSplitConfig(**d["meta_tasks"]),
                seed=int(d.get("seed", 0)),
                scale_factor=float(d.get("scale_factor", 1.0)),
                record_wall_time=bool(d.get("record_wall_time", True)),
                compute_randomness=bool(d.get("compute_randomness", False)),
            )
        except KeyError as exc:
            raise ConfigError(f"missing config field: {exc}") from exc
        except TypeError as exc:
            raise ConfigError(f"bad config structure: {exc}") from exc

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def _default_envs(seed: int) -> tuple[list[EnvironmentSpec], list[EnvironmentSpec]]:
    def env(env_id: int) -> EnvironmentSpec:
        return EnvironmentSpec(
            env_id=env_id,
            n_paths_range=(48, 64),
            delay_spread_s=200e-9,
            gain_decay=4.0,
            seed=seed * 1000 + env_id,
        )

    return [env(1)], [env(2), env(3)]


def paper_profile(seed: int = 0) -> ExperimentConfig:
    """Full-size configuration: one 40k-sample source, two 5k-sample targets."""
    source, targets = _default_envs(seed)
    return ExperimentConfig(
        ofdm=OfdmConfig(),
        source_envs=source,
        target_envs=targets,
        n_source=40000,
        n_target=5000,
        n_adapt=1000,
        n_test=4000,
        snr_list_db=[0.0, 10.0, 20.0, 30.0, 40.0],
        train_snr_db=20.0,
        algorithms=["direct", "joint", "dtl", "meta"],
        quantizer_epsilon=0.1,
        hidden_dims=[512, 1024, 1024, 512],
        train=TrainConfig(batch_size=128, learning_rate=1e-3, max_iterations=20000, seed=seed),
        meta=MetaConfig(
            inner_lr=1e-3,
            outer_lr=1e-3,
            inner_steps=1,
            task_batch=32,
            adapt_steps=300,
            max_meta_iterations=400,
        ),
        meta_tasks=TaskSplitConfig(n_tasks=400, samples_per_task=100, support_fraction=0.5),
        seed=seed,
    )


def desk_profile(seed: int = 0) -> ExperimentConfig:
    """Shrunk configuration for interactive checks and CI (same structure)."""
    source, targets = _default_envs(seed)
    return ExperimentConfig(
        ofdm=OfdmConfig(),
        source_envs=source,
        target_envs=targets,
        n_source=4000,
        n_target=1000,
        n_adapt=500,
        n_test=500,
        snr_list_db=[20.0],
        train_snr_db=20.0,
        algorithms=["direct", "joint", "dtl", "meta"],
        quantizer_epsilon=0.1,
        hidden_dims=[128, 256, 256, 128],
        train=TrainConfig(batch_size=128, learning_rate=1e-3, max_iterations=4000, seed=seed),
        meta=MetaConfig(
            inner_lr=1e-3,
            outer_lr=1e-3,
            inner_steps=1,
            task_batch=32,
            adapt_steps=300,
            max_meta_iterations=120,
        ),
        meta_tasks=TaskSplitConfig(n_tasks=40, samples_per_task=100, support_fraction=0.5),
        seed=seed,
    )


def apply_scale(cfg: ExperimentConfig) -> ExperimentConfig:
    """Shrink sample counts, task count and hidden widths by scale_factor."""
    s = cfg.scale_factor
    if s == 1.0:
        return cfg
    shrink = lambda v, floor=1: max(floor, int(round(v * s)))
    return replace(
        cfg,
        n_source=shrink(cfg.n_source),
        n_target=shrink(cfg.n_target),
        n_adapt=shrink(cfg.n_adapt),
        n_test=shrink(cfg.n_test),
        hidden_dims=[shrink(h, floor=8) for h in cfg.hidden_dims],
        meta_tasks=replace(cfg.meta_tasks, n_tasks=shrink(cfg.meta_tasks.n_tasks)),
        scale_factor=1.0,
    )


# ---------------------------------------------------------------------------
# report structures


@dataclass(frozen=True)
class ReportRow:
    algorithm: str
    env: int
    snr_db: float
    nmse: float
    ker: float
    kgr: float
    wall_time_s: float
    seed: int
    axis: str | None = None
    axis_value: float | None = None


@dataclass(frozen=True)
class RandomnessRow:
    algorithm: str
    env: int
    snr_db: float
    test_name: str
    mode: str
    pass_ratio: float
    n_keys: int


@dataclass(frozen=True)
class ExperimentReport:
    rows: list[ReportRow]
    randomness: list[RandomnessRow] = field(default_factory=list)

    def cell(self, algorithm: str, env: int, snr_db: float) -> ReportRow:
        for row in self.rows:
            if row.algorithm == algorithm and row.env == env and row.snr_db == snr_db:
                return row
        raise KeyError(f"no report row for ({algorithm}, {env}, {snr_db})")


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.9g}"
    return "" if value is None else str(value)


def emit_report(report: ExperimentReport, fmt: str, path: str | Path) -> None:
    """Write the report as long-format CSV or as JSON.

    CSV columns are exactly (algorithm, env, snr_db, nmse, ker, kgr,
    wall_time_s, seed); sweep reports prepend (axis, axis_value).
    """
    path = Path(path)
    if fmt == "csv":
        swept = any(r.axis is not None for r in report.rows)
        columns = SWEEP_COLUMNS if swept else CSV_COLUMNS
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in report.rows:
            writer.writerow([_fmt(getattr(row, c)) for c in columns])
        path.write_text(buf.getvalue())
    elif fmt == "json":
        doc = {
            "rows": [
                {
                    **{c: getattr(row, c) for c in CSV_COLUMNS},
                    **({"axis": row.axis, "axis_value": row.axis_value} if row.axis else {}),
                }
                for row in report.rows
            ],
            "randomness": [
                {
                    "algorithm": r.algorithm,
                    "env": r.env,
                    "snr_db": r.snr_db,
                    "test_name": r.test_name,
                    "mode": r.mode,
                    "pass_ratio": r.pass_ratio,
                    "n_keys": r.n_keys,
                }
                for r in report.randomness
            ],
        }
        path.write_text(json.dumps(doc, indent=2) + "\n")
    else:
        raise ConfigError(f"unknown report format {fmt!r}")


def report_from_json(path: str | Path) -> ExperimentReport:
    doc = json.loads(Path(path).read_text())
    rows = [
        ReportRow(
            algorithm=r["algorithm"],
            env=int(r["env"]),
            snr_db=float(r["snr_db"]),
            nmse=float(r["nmse"]),
            ker=float(r["ker"]),
            kgr=float(r["kgr"]),
            wall_time_s=float(r["wall_time_s"]),
            seed=int(r["seed"]),
            axis=r.get("axis"),
            axis_value=r.get("axis_value"),
        )
        for r in doc["rows"]
    ]
    rand = [
        RandomnessRow(
            algorithm=r["algorithm"],
            env=int(r["env"]),
            snr_db=float(r["snr_db"]),
            test_name=r["test_name"],
            mode=r["mode"],
            pass_ratio=float(r["pass_ratio"]),
            n_keys=int(r["n_keys"]),
        )
        for r in doc.get("randomness", [])
    ]
    return ExperimentReport(rows=rows, randomness=rand)


# ---------------------------------------------------------------------------
# metrics


def nmse(
    predicted: np.ndarray, actual: np.ndarray, return_excluded: bool = False
) -> float | tuple[float, int]:
    """Mean of per-sample squared-error to squared-norm ratios.

    Samples whose target norm falls below 1e-12 are excluded; requesting
    ``return_excluded`` also reports how many were dropped.
    """
    predicted = np.atleast_2d(np.asarray(predicted, dtype=float))
    actual = np.atleast_2d(np.asarray(actual, dtype=float))
    if predicted.shape != actual.shape:
        raise ValueError(f"shape mismatch: {predicted.shape} vs {actual.shape}")
    norms = np.sum(actual * actual, axis=1)
    keep = norms >= NMSE_DEGENERATE_FLOOR
    n_excluded = int(np.count_nonzero(~keep))
    if not np.any(keep):
        raise ValueError("all samples have degenerate target norms")
    err = np.sum((predicted[keep] - actual[keep]) ** 2, axis=1)
    value = float(np.mean(err / norms[keep]))
    return (value, n_excluded) if return_excluded else value


@dataclass(frozen=True)
class KeyMetrics:
    ker: float
    kgr: float
    alice_keys: list[np.ndarray]
    bob_keys: list[np.ndarray]


def score_keys(
    predicted: np.ndarray, actual: np.ndarray, epsilon: float, n_subcarriers: int
) -> KeyMetrics:
    """Quantize both parties per sample, align, and pool error statistics.

    KER is total disagreeing bits over total aligned bits (1.0 when nothing
    aligns anywhere); KGR is the mean per-sample aligned bits per subcarrier.
    """
    qcfg = QuantizerConfig(epsilon)
    errors = 0
    total = 0
    kgr_sum = 0.0
    alice_keys: list[np.ndarray] = []
    bob_keys: list[np.ndarray] = []
    for i in range(predicted.shape[0]):
        ka = quantize_guardband(predicted[i], qcfg, party="alice")
        kb = quantize_guardband(actual[i], qcfg, party="bob")
        bits_a, bits_b = align_keys(ka, kb)
        errors += int(np.count_nonzero(bits_a != bits_b))
        total += bits_a.size
        kgr_sum += key_generation_ratio(bits_a.size, n_subcarriers)
        if bits_a.size:
            alice_keys.append(bits_a)
            bob_keys.append(bits_b)
    ker = errors / total if total else 1.0
    return KeyMetrics(
        ker=ker, kgr=kgr_sum / predicted.shape[0], alice_keys=alice_keys, bob_keys=bob_keys
    )


# ---------------------------------------------------------------------------
# pipeline


@dataclass(frozen=True)
class _TargetData:
    spec: EnvironmentSpec
    adapt_pairs: PairSet
    test_pairs: dict[float, PairSet]


def _feature_pairs(ds: EnvironmentDataset, alice: Normalizer, bob: Normalizer) -> PairSet:
    return PairSet(
        inputs=normalize(alice, complex_to_features(ds.h_ul)),
        targets=normalize(bob, complex_to_features(ds.h_dl)),
    )


def _prepare_data(cfg: ExperimentConfig) -> tuple[PairSet, list[_TargetData]]:
    source_parts = []
    for spec in cfg.source_envs:
        env = build_environment(spec)
        ds = generate_env_dataset(env, cfg.n_source, cfg.train_snr_db, cfg.ofdm)
        source_parts.append(ds)
    src_ul = np.concatenate([complex_to_features(ds.h_ul) for ds in source_parts])
    src_dl = np.concatenate([complex_to_features(ds.h_dl) for ds in source_parts])
    alice_src = fit_normalizer(src_ul)
    bob_src = fit_normalizer(src_dl)
    source_pairs = PairSet(inputs=normalize(alice_src, src_ul), targets=normalize(bob_src, src_dl))

    targets = []
    test_start = cfg.n_target - cfg.n_test
    for spec in cfg.target_envs:
        env = build_environment(spec)
        adapt_ds = generate_env_dataset(env, cfg.n_adapt, cfg.train_snr_db, cfg.ofdm)
        alice_t = fit_normalizer(complex_to_features(adapt_ds.h_ul))
        bob_t = fit_normalizer(complex_to_features(adapt_ds.h_dl))
        adapt_pairs = _feature_pairs(adapt_ds, alice_t, bob_t)
        test_pairs = {}
        for snr in cfg.snr_list_db:
            test_ds = generate_env_dataset(env, cfg.n_test, snr, cfg.ofdm, start_index=test_start)
            test_pairs[snr] = _feature_pairs(test_ds, alice_t, bob_t)
        targets.append(_TargetData(spec=spec, adapt_pairs=adapt_pairs, test_pairs=test_pairs))
    return source_pairs, targets


def _max_workers() -> int:
    try:
        return max(1, int(os.environ.get("FDKG_THREADS", "1")))
    except ValueError:
        return 1


def run_pipeline(cfg: ExperimentConfig, key_sink=None) -> ExperimentReport:
    """Run every selected algorithm over every (target env, SNR) cell.

    ``key_sink(algorithm, env_id, snr_db, alice_keys, bob_keys)`` is called
    per cell when given, e.g. to write ASCII key dumps for external
    randomness suites.
    """
    cfg = apply_scale(cfg)
    clock = time.perf_counter if cfg.record_wall_time else (lambda: 0.0)

    source_pairs, targets = _prepare_data(cfg)
    dim = 2 * cfg.ofdm.n_subcarriers
    dims = [dim, *cfg.hidden_dims, dim]
    init = init_network(dims, seed=cfg.seed)

    # per-algorithm model preparation, timed
    prep_time: dict[tuple[str, int], float] = {}
    nets: dict[tuple[str, int], NetworkParams | None] = {}

    pretrained = None
    pretrain_elapsed = 0.0
    if any(a in cfg.algorithms for a in ("direct", "dtl")):
        t0 = clock()
        pretrained = train_supervised(init, source_pairs, cfg.train)
        pretrain_elapsed = clock() - t0

    meta_init = None
    meta_elapsed = 0.0
    if "meta" in cfg.algorithms:
        tasks = partition_source_into_tasks(
            source_pairs,
            cfg.meta_tasks.n_tasks,
            cfg.meta_tasks.samples_per_task,
            cfg.meta_tasks.support_fraction,
            seed=cfg.seed + 101,
        )
        t0 = clock()
        meta_init = meta_train(init, tasks, cfg.meta, seed=cfg.seed + 211)
        meta_elapsed = clock() - t0

    for env_idx, target in enumerate(targets):
        env_id = target.spec.env_id
        adapt_seed = cfg.seed + 307 + env_idx
        for alg in cfg.algorithms:
            key = (alg, env_id)
            if alg == "identity":
                nets[key] = None
                prep_time[key] = 0.0
            elif alg == "direct":
                nets[key] = pretrained
                prep_time[key] = pretrain_elapsed
            elif alg == "joint":
                t0 = clock()
                pooled = PairSet.concat([source_pairs, target.adapt_pairs])
                nets[key] = train_supervised(init, pooled, cfg.train)
                prep_time[key] = clock() - t0
            elif alg == "dtl":
                t0 = clock()
                nets[key] = adapt(pretrained, target.adapt_pairs, cfg.meta, seed=adapt_seed)
                prep_time[key] = pretrain_elapsed + (clock() - t0)
            elif alg == "meta":
                t0 = clock()
                nets[key] = adapt(meta_init, target.adapt_pairs, cfg.meta, seed=adapt_seed)
                prep_time[key] = meta_elapsed + (clock() - t0)

    cells = [
        (alg, target, snr)
        for alg in cfg.algorithms
        for target in targets
        for snr in cfg.snr_list_db
    ]

    def evaluate(cell) -> tuple[ReportRow, list[RandomnessRow]]:
        alg, target, snr = cell
        env_id = target.spec.env_id
        test = target.test_pairs[snr]
        t0 = clock()
        net = nets[(alg, env_id)]
        preds = test.inputs if net is None else forward(net, test.inputs)
        cell_nmse = nmse(preds, test.targets)
        keys = score_keys(preds, test.targets, cfg.quantizer_epsilon, cfg.ofdm.n_subcarriers)
        if key_sink is not None:
            key_sink(alg, env_id, snr, keys.alice_keys, keys.bob_keys)
        elapsed = (clock() - t0) + prep_time[(alg, env_id)]
        row = ReportRow(
            algorithm=alg,
            env=env_id,
            snr_db=snr,
            nmse=cell_nmse,
            ker=keys.ker,
            kgr=keys.kgr,
            wall_time_s=elapsed,
            seed=cfg.seed,
        )
        rand_rows: list[RandomnessRow] = []
        if cfg.compute_randomness and keys.alice_keys:
            for b in run_battery(keys.alice_keys):
                rand_rows.append(
                    RandomnessRow(
                        algorithm=alg,
                        env=env_id,
                        snr_db=snr,
                        test_name=b.test_name,
                        mode=b.mode,
                        pass_ratio=b.pass_ratio,
                        n_keys=b.n_keys,
                    )
                )
        return row, rand_rows

    workers = _max_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(evaluate, cells))
    else:
        results = [evaluate(c) for c in cells]

    order = {alg: i for i, alg in enumerate(KNOWN_ALGORITHMS)}
    results.sort(key=lambda pair: (order[pair[0].algorithm], pair[0].env, pair[0].snr_db))
    rows = [r for r, _ in results]
    randomness = [rr for _, rand in results for rr in rand]
    return ExperimentReport(rows=rows, randomness=randomness)


# ---------------------------------------------------------------------------
# sweeps

SWEEP_AXES = ("snr", "n_ad", "g_ad", "g_tr", "e_batch")


def _with_axis(cfg: ExperimentConfig, axis: str, value: float) -> ExperimentConfig:
    if axis == "n_ad":
        return replace(cfg, n_adapt=int(value))
    if axis == "g_ad":
        return replace(cfg, meta=replace(cfg.meta, adapt_steps=int(value)))
    if axis == "g_tr":
        return replace(cfg, meta=replace(cfg.meta, inner_steps=int(value)))
    if axis == "e_batch":
        return replace(cfg, meta=replace(cfg.meta, task_batch=int(value)))
    raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")


def sweep(cfg: ExperimentConfig, axis: str, values: list[float]) -> ExperimentReport:
    """Re-run the pipeline per axis value with shared seeds for pairing.

    The SNR axis is a single run (training is shared across test SNRs);
    other axes re-run the pipeline once per value.  Rows carry the axis name
    and value for plot-ready long-format output.
    """
    if not values:
        raise ConfigError("sweep values must be non-empty")
    if axis == "snr":
        report = run_pipeline(replace(cfg, snr_list_db=[float(v) for v in values]))
        rows = [replace(r, axis="snr", axis_value=r.snr_db) for r in report.rows]
        return ExperimentReport(rows=rows, randomness=report.randomness)
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    rows: list[ReportRow] = []
    randomness: list[RandomnessRow] = []
    for value in values:
        report = run_pipeline(_with_axis(cfg, axis, value))
        rows.extend(replace(r, axis=axis, axis_value=float(value)) for r in report.rows)
        randomness.extend(report.randomness)
    return ExperimentReport(rows=rows, randomness=randomness)
