"""Imputation experiment: one (order, rate, seed, model) cell and rate x seed sweeps."""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .data import CoauthorshipDataset, ImputationTask, accuracy, load_coauthorship, make_task, synth_coauthorship
from .learn import train
from .scnn import ScnnModel, init_model, init_snn, predict

MODELS = ("scnn", "snn")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to rerun a sweep bit-for-bit.

    ``dataset`` is a coauthorship JSON path; when it is None a synthetic
    dataset is generated from the ``synth_*`` fields.
    """

    dataset: str | None = None
    synth_authors: int = 40
    synth_papers: int = 120
    synth_K: int = 3
    synth_seed: int = 0
    orders: tuple[int, ...] = (2,)
    rates: tuple[float, ...] = (0.1,)
    seeds: tuple[int, ...] = tuple(range(10))
    models: tuple[str, ...] = MODELS
    layers: int = 3
    features: int = 30
    l1: int = 2
    l2: int = 2
    nonlinearity: str = "leaky_relu"
    normalize: bool = True
    lr: float = 1e-3
    iters: int = 1000
    out: str = "results"

    def __post_init__(self):
        if not self.rates or any(not 0 < r < 1 for r in self.rates):
            raise ValueError(f"rates must be nonempty and lie in (0, 1): {self.rates}")
        if not self.orders or any(k < 0 for k in self.orders):
            raise ValueError(f"orders must be nonempty and nonnegative: {self.orders}")
        if not self.seeds:
            raise ValueError("need at least one seed")
        bad = set(self.models) - set(MODELS)
        if bad:
            raise ValueError(f"unknown model(s) {sorted(bad)}; choose from {MODELS}")

    def to_json(self) -> dict:
        d = asdict(self)
        for key in ("orders", "rates", "seeds", "models"):
            d[key] = list(d[key])
        return {"format": 1, **d}

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        obj = dict(obj)
        if obj.pop("format", 1) != 1:
            raise ValueError("unsupported config format")
        for key in ("orders", "rates", "seeds", "models"):
            if key in obj:
                obj[key] = tuple(obj[key])
        return cls(**obj)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def load_dataset(cfg: ExperimentConfig) -> CoauthorshipDataset:
    if cfg.dataset:
        return load_coauthorship(cfg.dataset)
    return synth_coauthorship(cfg.synth_authors, cfg.synth_papers, cfg.synth_K, cfg.synth_seed)


@dataclass
class CellResult:
    order: int
    rate: float
    seed: int
    model: str
    accuracy: float
    accuracy_all: float
    final_loss: float
    trace: np.ndarray = field(repr=False)
    trained: ScnnModel | None = field(default=None, repr=False, compare=False)
    task: ImputationTask | None = field(default=None, repr=False, compare=False)


def run_cell(
    ds: CoauthorshipDataset, cfg: ExperimentConfig, order: int, rate: float, seed: int, model: str
) -> CellResult:
    """Train one model on one masked draw and score it.

    The SNN gets filters of the same total length as the SCNN,
    i.e. polynomials of degree l1 + l2 in the Hodge Laplacian.
    """
    k = order
    if not 0 <= k <= ds.complex.K:
        raise ValueError(f"order {k} outside [0, {ds.complex.K}]")
    task = make_task(ds, k, rate, seed)
    X = ds.complex
    if model == "scnn":
        m = init_model(X, k, cfg.layers, cfg.features, cfg.l1, cfg.l2, cfg.nonlinearity, seed, normalize=cfg.normalize)
    elif model == "snn":
        m = init_snn(X, k, cfg.layers, cfg.features, cfg.l1 + cfg.l2, cfg.nonlinearity, seed, normalize=cfg.normalize)
    else:
        raise ValueError(f"unknown model {model!r}")
    trained, trace = train(m, task, cfg.iters, cfg.lr)
    pred = predict(trained, task.input)
    acc = accuracy(pred, task.target, task.missing) if task.missing.any() else float("nan")
    acc_all = accuracy(pred, task.target, np.ones_like(task.mask))
    final = float(trace[-1]) if len(trace) else float("nan")
    return CellResult(k, rate, seed, model, acc, acc_all, final, trace, trained, task)


def _run_cell_args(args):
    return run_cell(*args)


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("HODGEFLOW_THREADS", "1")))
    except ValueError:
        return 1


def sweep(cfg: ExperimentConfig, ds: CoauthorshipDataset | None = None) -> list[CellResult]:
    """All order x rate x seed x model cells in a fixed order (parallel if HODGEFLOW_THREADS > 1)."""
    ds = load_dataset(cfg) if ds is None else ds
    jobs = [(ds, cfg, k, r, s, m) for k in cfg.orders for r in cfg.rates for s in cfg.seeds for m in cfg.models]
    workers = min(max_workers(), len(jobs))
    if workers <= 1:
        return [_run_cell_args(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_cell_args, jobs))


RESULT_FIELDS = ["order", "rate", "seed", "model", "accuracy", "accuracy_all", "final_loss"]


def write_results(results: list[CellResult], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_FIELDS)
        for r in results:
            w.writerow([r.order, r.rate, r.seed, r.model, repr(r.accuracy), repr(r.accuracy_all), repr(r.final_loss)])


def aggregate(results: list[CellResult]) -> list[dict]:
    """Mean and (population) standard deviation over seeds per (order, rate, model)."""
    groups: dict[tuple, list[CellResult]] = {}
    for r in results:
        groups.setdefault((r.order, r.rate, r.model), []).append(r)
    rows = []
    for (order, rate, model), rs in groups.items():
        acc = np.array([r.accuracy for r in rs])
        acc_all = np.array([r.accuracy_all for r in rs])
        loss = np.array([r.final_loss for r in rs])
        rows.append(
            {
                "order": order,
                "rate": rate,
                "model": model,
                "n": len(rs),
                "accuracy_mean": acc.mean(),
                "accuracy_std": acc.std(),
                "accuracy_all_mean": acc_all.mean(),
                "accuracy_all_std": acc_all.std(),
                "final_loss_mean": loss.mean(),
                "final_loss_std": loss.std(),
            }
        )
    return rows


def write_table(rows: list[dict], sizes: dict[int, int], path) -> None:
    """Wide accuracy table: one row per (rate, model), mean and std columns per order.

    The first data row (rate ``N_k``) holds the number of simplices of each order.
    """
    orders = sorted({r["order"] for r in rows})
    cells = {(r["rate"], r["model"], r["order"]): r for r in rows}
    # baseline first within each rate
    keys = sorted({(r["rate"], r["model"] != "snn", r["model"]) for r in rows})
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rate", "model"] + [f"k{k}_{stat}" for k in orders for stat in ("mean", "std")])
        w.writerow(["N_k", ""] + [v for k in orders for v in (sizes[k], "")])
        for rate, _, model in keys:
            line = [rate, model]
            for k in orders:
                c = cells.get((rate, model, k))
                line += [repr(float(c["accuracy_mean"])), repr(float(c["accuracy_std"]))] if c else ["", ""]
            w.writerow(line)


def write_summary(rows: list[dict], path) -> None:
    if not rows:
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(float(v)) if isinstance(v, float) else v for k, v in row.items()})


def write_trace(trace: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "loss"])
        for i, v in enumerate(trace):
            w.writerow([i, repr(float(v))])


def write_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(cfg.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
