"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable, malformed
or corrupted input files), 3 contract violation (invalid parameter values).
Machine-readable output goes to ``--out`` (or standard output when
``--out`` is absent); a short human summary is printed otherwise.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import architectures as arch
from . import datagen, ga, margin, modelfile
from .errors import ContractViolation, DataError

DEFAULT_DATASET = "dataset.csv"
DEFAULT_MODEL = "model.hdcm"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _read_config(path) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"--config: cannot read {path}: {e.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"--config: invalid JSON in {path}: {e}") from None
    if not isinstance(doc, dict):
        raise UsageError("--config: top level must be an object")
    return doc


def _build(cls, overrides: dict, section: str):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise UsageError(f"--config: unknown field(s) in {section!r}: {', '.join(unknown)}")
    try:
        return cls(**overrides)
    except TypeError as e:
        raise ContractViolation(f"--config {section}: {e}") from None


def _model_config(doc: dict) -> arch.ModelConfig:
    section = dict(doc.get("model", {}))
    known = {f.name for f in fields(arch.ModelConfig)}
    unknown = sorted(set(section) - known)
    if unknown:
        raise UsageError(f"--config: unknown field(s) in 'model': {', '.join(unknown)}")
    if "position" in section:
        _build(arch.PositionConfig, section["position"], "model.position")
    try:
        return arch.ModelConfig.from_dict(section)
    except (TypeError, ValueError) as e:
        raise ContractViolation(f"--config model: {e}") from None


def _load_dataset(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"--dataset: no such file {path}")
    return datagen.load(path)


def _load_model(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"--model: no such file {path}")
    return modelfile.load_model(path)


def _fmt(args) -> str:
    if args.format:
        return args.format
    if args.out and Path(args.out).suffix.lower() == ".csv":
        return "csv"
    return "json"


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _emit(args, doc: dict, csv_rows=None, csv_text: str | None = None, summary: str = ""):
    """Write machine output to --out (or stdout) and the summary to stdout."""
    if _fmt(args) == "csv":
        if csv_text is None:
            if csv_rows is None:
                raise UsageError(f"--format csv is not available for '{args.command}'")
            csv_text = _csv(csv_rows)
        text = csv_text
    else:
        text = json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        if summary:
            print(summary)
    else:
        sys.stdout.write(text)


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x).__name__)


def _echo(args, **extra) -> dict:
    """Arguments that determine the result (worker count excluded)."""
    skip = {"func", "workers", "out", "format"}
    doc = {k: v for k, v in vars(args).items() if k not in skip}
    doc.update(extra)
    return doc


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_datagen(args):
    doc = _read_config(args.config)
    overrides = dict(doc.get("datagen", doc))
    if args.seed is not None:
        overrides["seed"] = args.seed
    if "paired_positions" in overrides:
        overrides["paired_positions"] = tuple(tuple(p) for p in overrides["paired_positions"])
    cfg = _build(datagen.GenConfig, overrides, "datagen")
    ds = datagen.generate(cfg)
    out = Path(args.out or DEFAULT_DATASET)
    datagen.save(ds, out)
    print(f"wrote {len(ds)} windows to {out} (manifest {datagen.manifest_path(out)})")


def cmd_train(args):
    doc = _read_config(args.config)
    config = _model_config(doc)
    seed = 0 if args.seed is None else args.seed
    ds = _load_dataset(args.dataset)
    enc = arch.encode(ds, seed, config)
    model = arch.train(args.arch, enc, config, seed)
    out = Path(args.out or DEFAULT_MODEL)
    modelfile.save_model(model, out)
    print(f"trained {args.arch} on {len(enc)} samples; wrote {out}")


def cmd_eval(args):
    model = _load_model(args.model)
    ds = _load_dataset(args.dataset)
    enc = arch.encode(ds, model.seed, model.config)
    report = arch.evaluate(model, enc)
    doc = {"config": _echo(args, model_seed=model.seed, model_config=model.config.to_dict()),
           "report": report.to_dict()}
    _emit(args, doc, _eval_rows(report, enc.position),
          summary=f"{report.architecture}: accuracy {report.accuracy:.4f} on {report.n_samples} samples")


def _eval_rows(report, positions):
    rows = [["position", "n_samples", "accuracy"]]
    for p, acc in report.per_position.items():
        rows.append([p, int(np.sum(positions == p)), repr(acc)])
    rows.append(["all", report.n_samples, repr(report.accuracy)])
    return rows


def cmd_crossval(args):
    doc = _read_config(args.config)
    config = _model_config(doc)
    seed = 0 if args.seed is None else args.seed
    ds = _load_dataset(args.dataset)
    enc = arch.encode(ds, seed, config)
    cv = arch.CrossValidator(enc, args.folds, seed, config, args.granularity, args.workers)
    archs = [a.value for a in arch.Architecture] if args.arch == "all" else [args.arch]
    reports = {a: cv.run(a).to_dict() for a in archs}
    out = {"config": _echo(args, seed=seed, model=config.to_dict()),
           "reports": reports}
    if len(archs) == 1:
        out["accuracy"] = reports[archs[0]]["accuracy"]
    rows = [["architecture", "position", "accuracy"]]
    for a, r in reports.items():
        for p, acc in r["per_position_accuracy"].items():
            rows.append([a, p, repr(acc)])
        rows.append([a, "all", repr(r["accuracy"])])
    summary = "\n".join(f"{a}: {args.folds}-fold accuracy {r['accuracy']:.4f}"
                        for a, r in reports.items())
    _emit(args, out, rows, summary=summary)


def cmd_margin_sim(args):
    doc = _read_config(args.config)
    overrides = dict(doc.get("margin", doc))
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg = _build(margin.MarginSimConfig, overrides, "margin")
    result = margin.sweep(cfg, args.workers)
    n, d0 = result.argmax_improvement()
    summary = (f"{len(result.cells)} cells; largest margin gain "
               f"{result.improvement().max():.4f} at {n} contexts, d0={d0}")
    if _fmt(args) == "csv":
        _emit(args, {}, csv_text=result.to_csv(), summary=summary)
    else:
        _emit(args, json.loads(result.to_json()), summary=summary)


def cmd_ga(args):
    doc = _read_config(args.config)
    config = _model_config(doc)
    overrides = dict(doc.get("ga", {}))
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.folds is not None:
        overrides["folds"] = args.folds
    gcfg = _build(ga.GaConfig, overrides, "ga")
    ds = _load_dataset(args.dataset)
    result = ga.optimize(ds, gcfg, model_config=config, workers=args.workers)
    doc = result.to_dict()
    doc["config"] = {"ga": asdict(gcfg), "model": config.to_dict(), "dataset": args.dataset}
    rows = [["generation", "best", "mean"]] + [[h["generation"], repr(h["best"]), repr(h["mean"])]
                                               for h in result.history]
    b = result.best
    summary = (f"best fitness {result.best_fitness:.4f}: levels {b.levels}, "
               f"d_max {tuple(round(x, 3) for x in b.dmax)}")
    _emit(args, doc, rows, summary=summary)


def cmd_footprint(args):
    model = _load_model(args.model)
    fp = arch.footprint_bits(model, args.count_memories, args.convention)
    single = len(model.gesture_ids) * model.dim
    doc = {"config": _echo(args), "footprint": fp.to_dict(), "single_am_bits": single,
           "overhead_vs_single_am": fp.total_bits / single - 1.0}
    rows = [["field", "value"]] + [[k, v] for k, v in fp.to_dict().items()]
    _emit(args, doc, rows, summary=f"{fp.architecture}: {fp.total_bits} bits "
                                   f"({fp.total_bits / single - 1.0:+.2%} vs single AM)")


def cmd_context_matrix(args):
    ds = _load_dataset(args.dataset)
    if args.model:
        model = _load_model(args.model)
        cims, seed, params = arch.cims_for(model.seed, model.config.cim_params, model.dim), \
            model.seed, model.config.cim_params
    else:
        config = _model_config(_read_config(args.config))
        seed = 0 if args.seed is None else args.seed
        params = config.cim_params
        cims = arch.cims_for(seed, params, config.dim)
    # only accelerometer values and positions matter here; the EMG column is a placeholder
    enc = arch.EncodedSet(np.zeros((len(ds), 1), np.uint64), ds.accel, ds.gesture, ds.position,
                          64, 0)
    mat = arch.context_distance_matrix(cims, enc, seed)
    pids = sorted(set(ds.position.tolist()))
    doc = {"config": _echo(args, seed=seed, cim_params=[[c.levels, c.d_max] for c in params]),
           "position_ids": pids, "distances": mat.tolist()}
    rows = [["position"] + pids] + [[p] + [repr(float(x)) for x in row] for p, row in zip(pids, mat)]
    off = mat + np.eye(len(pids)) * 9
    i, j = np.unravel_index(np.argmin(off), off.shape)
    _emit(args, doc, rows, summary=f"closest positions: {pids[i]} and {pids[j]} "
                                   f"(distance {mat[i, j]:.4f})")


def cmd_update(args):
    model = _load_model(args.model)
    ds = _load_dataset(args.dataset)
    enc = arch.encode(ds, model.seed, model.config)
    new = arch.update(model, enc)
    out = Path(args.out or args.model)
    modelfile.save_model(new, out)
    print(f"added {len(enc)} samples to {model.architecture.value} model; wrote {out}")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

ARCH_CHOICES = [a.value for a in arch.Architecture]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hdgesture", description="Limb-position-aware HD gesture classification.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        return sp

    def common(sp, *, dataset=False, model=False, arch_=False, folds=False, fmt=True,
               workers=False, model_required=True):
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--config", default=None, help="JSON config file")
        sp.add_argument("--out", default=None)
        if fmt:
            sp.add_argument("--format", choices=["json", "csv"], default=None)
        if dataset:
            sp.add_argument("--dataset", default=DEFAULT_DATASET)
        if model:
            sp.add_argument("--model", default=DEFAULT_MODEL if model_required else None)
        if arch_:
            sp.add_argument("--arch", choices=arch_, default=arch_[0] if len(arch_) == 1 else "dual")
        if folds:
            sp.add_argument("--folds", type=int, default=10)
        if workers:
            sp.add_argument("--workers", type=int, default=None,
                            help=f"threads (default from ${arch.THREADS_ENV} or 1)")

    common(add("datagen", cmd_datagen, "generate a synthetic dataset"), fmt=False)
    common(add("train", cmd_train, "train a model"), dataset=True, arch_=ARCH_CHOICES, fmt=False)
    common(add("eval", cmd_eval, "evaluate a saved model"), dataset=True, model=True)
    sp = add("crossval", cmd_crossval, "k-fold cross-validation")
    common(sp, dataset=True, arch_=ARCH_CHOICES + ["all"], folds=True, workers=True)
    sp.add_argument("--granularity", choices=["sample", "repetition"], default="sample")
    common(add("margin-sim", cmd_margin_sim, "classification-margin simulation"), workers=True)
    sp = add("ga", cmd_ga, "genetic search of CIM parameters")
    common(sp, dataset=True, workers=True)
    sp.add_argument("--folds", type=int, default=None, help="fitness folds (default 10)")
    sp = add("footprint", cmd_footprint, "parameter memory of a saved model")
    common(sp, model=True)
    sp.add_argument("--count-memories", action="store_true",
                    help="also count item, context and continuous item memories")
    sp.add_argument("--convention", choices=["support-vectors", "primal"],
                    default="support-vectors", help="position classifier accounting")
    common(add("context-matrix", cmd_context_matrix, "distances between position contexts"),
           dataset=True, model=True, model_required=False)
    common(add("update", cmd_update, "add training samples to a saved model"),
           dataset=True, model=True, fmt=False)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(sys.argv[1:] if argv is None else list(argv))
    except SystemExit as e:         # --help exits 0, bad usage 1
        return e.code
    try:
        args.func(args)
    except UsageError as e:
        print(f"hdgesture {args.command}: error: {e}", file=sys.stderr)
        return 1
    except DataError as e:
        print(f"hdgesture {args.command}: data error: {e}", file=sys.stderr)
        return 2
    except ContractViolation as e:
        print(f"hdgesture {args.command}: invalid value: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
