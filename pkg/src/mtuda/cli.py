"""``mtuda synth | run | sweep``.

Tables are written as TSV (header row, ``repr``-style floats), mirrored to
JSON with ``--json``. ``MTUDA_LOG`` sets the log level (default WARNING).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .data import DataError, LabeledDataset, SyntheticSpec, generate_synthetic, load_csv
from .graph import build_laplacian
from .kernel import AUTO, KernelSpec, gram
from .pipeline import PipelineConfig, accuracy, decision_grid, run
from .solver import HyperParams, nn_baseline

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("mtuda")

SWEEPABLE = ("gamma_m_hat", "gamma_a_hat", "gamma_i_hat", "gamma_d_hat", "p", "bandwidth")
GAMMA_FLAGS = {"m": "gamma_m_hat", "a": "gamma_a_hat", "i": "gamma_i_hat", "d": "gamma_d_hat"}

CONFIG_SCHEMA = {
    "seed": None,
    "out": None,
    "data": {"source", "target", "source_label_column", "target_label_column", "header"},
    "synthetic": {"source_centers", "target_centers", "per_class_count", "std_dev"},
    "kernel": {"kind", "bandwidth", "jitter"},
    "hyper": {"gamma_m_hat", "gamma_a_hat", "gamma_i_hat", "gamma_d_hat"},
    "pipeline": {"p", "iterations", "solver", "normalize_m", "normalize_l"},
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# output helpers


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(path: Path, header, rows, as_json: bool = False) -> None:
    lines = ["\t".join(header)]
    for r in rows:
        if len(r) != len(header):
            raise ValueError("row width does not match header")
        lines.append("\t".join(fmt(v) for v in r))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    if as_json:
        records = [dict(zip(header, (_jsonable(v) for v in r))) for r in rows]
        path.with_suffix(".json").write_text(json.dumps(records, indent=1) + "\n", encoding="utf-8")


def _jsonable(v):
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float) and not np.isfinite(v):
        return None
    return v


# ---------------------------------------------------------------------------
# configuration


def load_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    with path.open("rb") as fh:
        try:
            cfg = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    for key, value in cfg.items():
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"{path}: unknown key {key!r}")
        allowed = CONFIG_SCHEMA[key]
        if allowed is None:
            continue
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: [{key}] must be a section")
        unknown = set(value) - allowed
        if unknown:
            raise ConfigError(f"{path}: unknown key(s) in [{key}]: {sorted(unknown)}")
    if "data" in cfg and "synthetic" in cfg:
        raise ConfigError(f"{path}: give either [data] or [synthetic], not both")
    data = cfg.get("data")
    if data is not None:
        for k in ("source", "target"):
            if k not in data:
                raise ConfigError(f"{path}: [data] needs {k!r}")
            p = Path(data[k])
            if not p.is_absolute():
                p = path.parent / p
            if not p.is_file():
                raise ConfigError(f"{path}: data file not found: {p}")
            data[k] = p
    return cfg


def _apply_flags(cfg: dict, args) -> dict:
    cfg = {k: (dict(v) if isinstance(v, dict) else v) for k, v in cfg.items()}
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        cfg["out"] = args.out
    kern = cfg.setdefault("kernel", {})
    if getattr(args, "kernel", None):
        kern["kind"] = args.kernel
    if getattr(args, "bandwidth", None) is not None:
        kern["bandwidth"] = args.bandwidth
    hyper = cfg.setdefault("hyper", {})
    for short, name in GAMMA_FLAGS.items():
        v = getattr(args, f"gamma_{short}", None)
        if v is not None:
            hyper[name] = v
    pipe = cfg.setdefault("pipeline", {})
    for flag, key in (("p", "p"), ("iters", "iterations"), ("solver", "solver")):
        v = getattr(args, flag, None)
        if v is not None:
            pipe[key] = v
    return cfg


def _bandwidth(value):
    if value is None or value == AUTO:
        return AUTO
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bandwidth must be a positive number or 'auto', got {value!r}") from None


def pipeline_config(cfg: dict) -> PipelineConfig:
    k = cfg.get("kernel", {})
    h = cfg.get("hyper", {})
    p = cfg.get("pipeline", {})
    try:
        return PipelineConfig(
            kernel=KernelSpec(k.get("kind", "gaussian"), _bandwidth(k.get("bandwidth")), k.get("jitter")),
            hp=HyperParams(**{name: float(v) for name, v in h.items()}),
            neighbor_count=int(p.get("p", 5)),
            iterations=int(p.get("iterations", 10)),
            solver=p.get("solver", "rls"),
            normalize_m=bool(p.get("normalize_m", True)),
            normalize_l=p.get("normalize_l", True),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_datasets(cfg: dict):
    """Return ``(source, target_unlabeled, target_truth_or_None)``."""
    data = cfg.get("data")
    if data is None:
        syn = dict(cfg.get("synthetic", {}))
        spec = SyntheticSpec(rng_seed=int(cfg.get("seed", 0)), **syn)
        source, target = generate_synthetic(spec)
        return source, target.unlabeled(), target.labels
    header = bool(data.get("header", False))
    source = load_csv(data["source"], data.get("source_label_column", -1), header)
    if not isinstance(source, LabeledDataset):
        raise ConfigError("source data needs a label column")
    tcol = data.get("target_label_column")
    target = load_csv(data["target"], tcol, header)
    truth = None
    if isinstance(target, LabeledDataset):
        # map target label values onto the source encoding
        index = {name: k for k, name in enumerate(source.label_names)}
        try:
            truth = np.array([index[target.label_names[c]] for c in target.labels])
        except KeyError as exc:
            raise ConfigError(f"target label {exc.args[0]!r} does not occur in the source") from None
        target = target.unlabeled()
    if source.dim != target.dim:
        raise ConfigError(f"dimension mismatch: source has {source.dim} features, target {target.dim}")
    return source, target, truth


# ---------------------------------------------------------------------------
# commands


def cmd_synth(args) -> int:
    out = Path(args.out or "mtuda_synth")
    out.mkdir(parents=True, exist_ok=True)
    spec = SyntheticSpec(per_class_count=args.per_class, std_dev=args.std_dev, rng_seed=args.seed)
    source, target = generate_synthetic(spec)
    tu, truth = target.unlabeled(), target.labels
    hp = _hyper_from_flags(args)
    nn_acc = accuracy(nn_baseline(source, tu), truth)

    rows = []
    X = np.hstack([source.features, target.features])
    pad = 0.5
    bounds = ((X[0].min() - pad, X[0].max() + pad), (X[1].min() - pad, X[1].max() + pad))
    for kind in ("linear", "gaussian"):
        kspec = KernelSpec(kind, _bandwidth(args.bandwidth) if kind == "gaussian" else AUTO)
        gb = gram(source, tu, kspec)
        lap = build_laplacian(tu, args.p, True)
        for method in ("rls", "svm", "shared"):
            cfg = PipelineConfig(kernel=kspec, hp=hp, neighbor_count=args.p, iterations=args.iters, solver=method)
            res = run(source, tu, cfg, truth, gram_bundle=gb, lap=lap)
            rows.append(("mtuda-rls" if method == "rls" else "mtuda-svm" if method == "svm" else "shared",
                         kind, res.final_accuracy, int(res.label_changes[-1])))
            if method in ("rls", "shared"):
                xs, ys, cls = decision_grid(res.model, bounds, args.resolution)
                gx, gy = np.meshgrid(xs, ys)
                write_table(
                    out / f"grid_{'mtuda-rls' if method == 'rls' else 'shared'}_{kind}.tsv",
                    ("x", "y", "class"),
                    zip(gx.ravel(), gy.ravel(), cls.ravel().astype(int)),
                    args.json,
                )
        rows.append(("nn", kind, nn_acc, 0))
    order = {"mtuda-rls": 0, "mtuda-svm": 1, "shared": 2, "nn": 3}
    rows.sort(key=lambda r: (r[1] != "linear", order[r[0]]))
    write_table(out / "accuracy.tsv", ("method", "kernel", "accuracy", "final_label_changes"), rows, args.json)
    for name, ds in (("source", source), ("target", target)):
        write_table(out / f"{name}.tsv", ("x", "y", "label"),
                    zip(ds.features[0], ds.features[1], ds.labels), args.json)
    for r in rows:
        print(f"{r[0]:10s} {r[1]:9s} {r[2]:.4f}")
    return 0


def _hyper_from_flags(args) -> HyperParams:
    kw = {}
    for short, name in GAMMA_FLAGS.items():
        v = getattr(args, f"gamma_{short}", None)
        if v is not None:
            kw[name] = v
    return HyperParams(**kw)


def cmd_run(args) -> int:
    cfg = _apply_flags(load_config(args.config), args)
    pcfg = pipeline_config(cfg)
    source, target, truth = load_datasets(cfg)
    out = Path(cfg.get("out") or "mtuda_run")
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    gb = gram(source, target, pcfg.kernel)
    res = run(source, target, pcfg, truth, gram_bundle=gb)
    wall = time.perf_counter() - t0

    iters = []
    for i, n_changed in enumerate(res.label_changes):
        acc = res.accuracies[i] if res.accuracies.size else float("nan")
        iters.append((i + 1, int(n_changed), acc, res.reports[i].objective_value))
    write_table(out / "iterations.tsv", ("iteration", "labels_changed", "accuracy", "objective"), iters, args.json)
    hp = pcfg.hp
    report = [
        ("solver", pcfg.solver),
        ("kernel", pcfg.kernel.kind),
        ("bandwidth", gb.resolved_bandwidth if gb.resolved_bandwidth is not None else "none"),
        ("jitter", gb.jitter),
        ("gamma_m_hat", hp.gamma_m_hat),
        ("gamma_a_hat", hp.gamma_a_hat),
        ("gamma_i_hat", hp.gamma_i_hat),
        ("gamma_d_hat", hp.gamma_d_hat),
        ("p", pcfg.neighbor_count),
        ("iterations", pcfg.iterations),
        ("normalize_m", pcfg.normalize_m),
        ("normalize_l", pcfg.normalize_l),
        ("n_source", source.n_samples),
        ("n_target", target.n_samples),
        ("classes", source.class_count),
        ("initial_accuracy", res.initial_accuracy if res.initial_accuracy is not None else float("nan")),
        ("final_accuracy", res.final_accuracy if res.final_accuracy is not None else float("nan")),
        ("wall_time_s", round(wall, 3)),
    ]
    write_table(out / "report.tsv", ("key", "value"), report, args.json)
    write_table(out / "predictions.tsv", ("index", "label"),
                ((i, source.label_names[c]) for i, c in enumerate(res.pseudo_labels)), args.json)
    for k, v in report:
        print(f"{k}\t{fmt(v)}")
    return 0


def _parse_values(param: str, raw: str):
    vals = [v.strip() for v in raw.split(",") if v.strip()]
    if not vals:
        raise ConfigError("empty value list")
    if param == "p":
        return [int(v) for v in vals]
    if param == "bandwidth":
        return [_bandwidth(v) for v in vals]
    return [float(v) for v in vals]


def cmd_sweep(args) -> int:
    if args.param not in SWEEPABLE:
        raise ConfigError(f"unknown sweep parameter {args.param!r}; choose from {', '.join(SWEEPABLE)}")
    cfg = _apply_flags(load_config(args.config), args)
    base = pipeline_config(cfg)
    values = _parse_values(args.param, args.values)
    source, target, truth = load_datasets(cfg)
    if truth is None:
        raise ConfigError("sweeps need target ground truth (target_label_column or synthetic data)")
    out = Path(cfg.get("out") or "mtuda_sweep")
    out.mkdir(parents=True, exist_ok=True)

    shared_gram = None if args.param == "bandwidth" else gram(source, target, base.kernel)
    shared_lap = None
    if args.param != "p":
        shared_lap = build_laplacian(target, base.neighbor_count, base.normalize_l)

    def one(value):
        try:
            if args.param == "p":
                c = replace(base, neighbor_count=value)
            elif args.param == "bandwidth":
                c = replace(base, kernel=replace(base.kernel, bandwidth=value))
            else:
                c = replace(base, hp=replace(base.hp, **{args.param: value}))
            res = run(source, target, c, truth, gram_bundle=shared_gram, lap=shared_lap)
            return (value, res.final_accuracy, "ok")
        except Exception as exc:  # recorded per value; --strict turns it fatal
            log.error("%s=%s failed: %s", args.param, value, exc)
            return (value, float("nan"), f"error: {exc}".replace("\t", " ").replace("\n", " "))

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        rows = list(pool.map(one, values))
    write_table(out / f"sweep_{args.param}.tsv", (args.param, "accuracy", "status"), rows, args.json)
    for r in rows:
        print("\t".join(fmt(v) for v in r))
    failed = [r for r in rows if r[2] != "ok"]
    if failed and args.strict:
        print(f"mtuda: {len(failed)} sweep value(s) failed", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, defaults: bool) -> None:
    d = (lambda v: v) if defaults else (lambda v: None)
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--kernel", choices=("linear", "gaussian"))
    p.add_argument("--bandwidth", default=d(AUTO), help="Gaussian sigma or 'auto' (median distance)")
    for short, name in GAMMA_FLAGS.items():
        p.add_argument(f"--gamma-{short}", type=float, dest=f"gamma_{short}", help=f"{name}")
    p.add_argument("--p", type=int, default=d(5), help="neighbours in the target graph")
    p.add_argument("--iters", type=int, default=d(10))
    p.add_argument("--solver", choices=("rls", "svm", "shared"))
    p.add_argument("--out")
    p.add_argument("--json", action="store_true", help="mirror every table as JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mtuda", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="two-Gaussian demo: accuracy table and decision grids")
    _common(s, defaults=True)
    s.add_argument("--std-dev", type=float, default=0.5)
    s.add_argument("--per-class", type=int, default=100)
    s.add_argument("--resolution", type=int, default=60)
    s.set_defaults(func=cmd_synth)

    r = sub.add_parser("run", help="run the pipeline from a TOML config")
    r.add_argument("config")
    _common(r, defaults=False)
    r.set_defaults(func=cmd_run)

    w = sub.add_parser("sweep", help="accuracy over a list of values of one parameter")
    w.add_argument("config")
    w.add_argument("--param", required=True)
    w.add_argument("--values", required=True, help="comma-separated list")
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--strict", action="store_true", help="exit nonzero if any value fails")
    _common(w, defaults=False)
    w.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("MTUDA_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataError, ValueError, RuntimeError, OSError) as exc:
        print(f"mtuda: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
