"""``hodgeflow`` command line: build, decompose, gradcheck, train, eval."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .complex import load_complex, save_complex_binary
from .experiment import (
    MODELS,
    ExperimentConfig,
    aggregate,
    load_dataset,
    run_cell,
    sweep,
    write_config,
    write_results,
    write_summary,
    write_table,
    write_trace,
)
from .learn import GRAD_RTOL, gradcheck_suite
from .spectral import hodge_basis, hodge_components, sft

log = logging.getLogger("hodgeflow")


def _int_list(text: str) -> tuple[int, ...]:
    """``"3"``, ``"0,2,5"`` or ``"0-9"`` (inclusive range)."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1) if not part.startswith("-") else part[1:].split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return tuple(out)


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip())


def read_signal(path) -> np.ndarray:
    """Last column of a CSV (header row optional) as a float vector."""
    values = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                values.append(float(row[-1]))
            except ValueError:
                if values:
                    raise ValueError(f"{path}: non-numeric value {row[-1]!r}") from None
    return np.array(values, dtype=np.float64)


def cmd_build(args) -> int:
    X = load_complex(args.input)
    if args.out:
        save_complex_binary(X, args.out)
    if args.summary or not args.out:
        print("N: " + " ".join(str(n) for n in X.N))
        print("order  count  max_neighbors")
        for k, n in enumerate(X.N):
            D = X.neighbors(k, 0).max_degree if n else 0
            print(f"{k:>5}  {n:>5}  {D:>13}")
    return 0


def cmd_decompose(args) -> int:
    X = load_complex(args.complex)
    k = args.order
    x = read_signal(args.signal)
    if x.shape[0] != X.N[k]:
        raise ValueError(f"signal has {x.shape[0]} entries but the complex has {X.N[k]} simplices of order {k}")
    x_G, x_C, x_H = hodge_components(X, k, x)
    basis = hodge_basis(X, k)
    emb = sft(basis, x)
    out = Path(args.out)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "simplex", "x", "x_G", "x_C", "x_H"])
        for i, s in enumerate(X.simplices[k]):
            w.writerow([i, "-".join(map(str, s))] + [repr(float(v[i])) for v in (x, x_G, x_C, x_H)])
    emb_path = out.with_name(out.stem + "_embedding" + out.suffix)
    with open(emb_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["component", "frequency", "coefficient"])
        for name, lam, coef in (
            ("harmonic", np.zeros(len(emb.harmonic)), emb.harmonic),
            ("gradient", basis.lam_G, emb.gradient),
            ("curl", basis.lam_C, emb.curl),
        ):
            for l, c in zip(lam, coef):
                w.writerow([name, repr(float(l)), repr(float(c))])
    N_H, N_G, N_C = basis.dims
    print(f"N_H={N_H} N_G={N_G} N_C={N_C}")
    print(f"|x_G|={np.linalg.norm(x_G):.6g} |x_C|={np.linalg.norm(x_C):.6g} |x_H|={np.linalg.norm(x_H):.6g}")
    return 0


def cmd_gradcheck(args) -> int:
    reports = gradcheck_suite(args.seed, args.configs)
    worst = max(r.max_rel_error for r in reports)
    for i, r in enumerate(reports):
        print(f"config {i}: max_rel_error={r.max_rel_error:.3e} checked={r.n_checked} skipped={r.n_skipped}")
    print(f"max relative error: {worst:.3e}")
    return 0 if worst <= GRAD_RTOL else 1


def _config_from_args(args) -> ExperimentConfig:
    base = ExperimentConfig()
    if getattr(args, "config", None):
        with open(args.config) as fh:
            base = ExperimentConfig.from_json(json.load(fh))
    models = None
    if args.model:
        models = tuple(m for group in args.model for m in group.split(","))
    return base.with_overrides(
        dataset=args.complex,
        synth_authors=args.synth_authors,
        synth_papers=args.synth_papers,
        synth_K=args.synth_K,
        synth_seed=args.synth_seed,
        orders=args.order,
        rates=args.rate,
        seeds=args.seed,
        models=models,
        layers=args.layers,
        features=args.features,
        l1=args.l1,
        l2=args.l2,
        nonlinearity=args.nonlinearity,
        normalize=args.normalize,
        lr=args.lr,
        iters=args.iters,
        out=args.out,
    )


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    if any(len(v) != 1 for v in (cfg.orders, cfg.rates, cfg.seeds, cfg.models)):
        raise ValueError("train runs a single cell: give exactly one --order, --rate, --seed and --model")
    ds = load_dataset(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    res = run_cell(ds, cfg, cfg.orders[0], cfg.rates[0], cfg.seeds[0], cfg.models[0])
    write_trace(res.trace, out / "loss.csv")
    write_config(cfg, out / "config.json")
    res.task.to_csv(out / "task.csv")
    with open(out / "model.json", "w") as fh:
        json.dump(res.trained.to_json(), fh)
    print(
        f"order={res.order} rate={res.rate} seed={res.seed} model={res.model} "
        f"final_loss={res.final_loss:.6g} accuracy={res.accuracy:.4f}"
    )
    return 0


def cmd_eval(args) -> int:
    cfg = _config_from_args(args)
    ds = load_dataset(cfg)
    out = Path(cfg.out)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    results = sweep(cfg, ds)
    write_results(results, out / "results.csv")
    rows = aggregate(results)
    write_summary(rows, out / "summary.csv")
    write_table(rows, {k: ds.complex.N[k] for k in cfg.orders}, out / "table.csv")
    write_config(cfg, out / "config.json")
    for r in results:
        write_trace(r.trace, out / "traces" / f"{r.model}_k{r.order}_r{r.rate:g}_s{r.seed}.csv")
    print("N_k: " + " ".join(f"k{k}={ds.complex.N[k]}" for k in cfg.orders))
    for row in rows:
        print(
            f"order={row['order']} rate={row['rate']:<5g} model={row['model']:<4} accuracy={row['accuracy_mean']:.3f} ± {row['accuracy_std']:.3f}"
            f"  (all entries {row['accuracy_all_mean']:.3f} ± {row['accuracy_all_std']:.3f})"
        )
    return 0


def _add_experiment_flags(p: argparse.ArgumentParser, single: bool) -> None:
    p.add_argument("--config", help="experiment config JSON; flags override its fields")
    p.add_argument("--complex", help="coauthorship JSON ({'K', 'papers'}); synthetic data when omitted")
    p.add_argument("--synth-authors", type=int)
    p.add_argument("--synth-papers", type=int)
    p.add_argument("--synth-K", type=int)
    p.add_argument("--synth-seed", type=int)
    p.add_argument("--order", type=_int_list, help="simplex order(s): '2', '0,1,2' or '0-3'")
    p.add_argument("--rate", type=_float_list, help="missing rate(s), comma separated")
    p.add_argument("--seed", type=_int_list, help="seed(s): '3', '0,1,2' or '0-9'")
    p.add_argument("--model", action="append", help=f"one of {MODELS}" + ("" if single else "; repeatable"))
    p.add_argument("--layers", type=int)
    p.add_argument("--features", type=int)
    p.add_argument("--l1", type=int)
    p.add_argument("--l2", type=int)
    p.add_argument("--nonlinearity", help="leaky_relu[:slope], tanh or identity")
    p.add_argument(
        "--normalize",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="shift by L / lambda_max(L_k) (default) or by the raw Laplacians",
    )
    p.add_argument("--lr", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hodgeflow", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="close a complex JSON and report its size")
    p.add_argument("--input", required=True)
    p.add_argument("--out", help="write the closed complex as a binary (.npz) archive")
    p.add_argument("--summary", action="store_true")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("decompose", help="Hodge components and Fourier embedding of a signal")
    p.add_argument("--complex", required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--signal", required=True, help="CSV whose last column holds the signal")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("gradcheck", help="finite-difference check of the backward pass")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--configs", type=int, default=10)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("train", help="train one (order, rate, seed, model) cell")
    _add_experiment_flags(p, single=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="sweep rates x seeds x models and aggregate accuracies")
    _add_experiment_flags(p, single=False)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"hodgeflow {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
