"""Monte-Carlo classification-margin analysis of context superposition.

Random class prototypes are generated for several contexts, bound to
per-context HVs, and superposed per class. Retrieval error is the distance
from a bound position-specific prototype to the superposition of its own
class; the wrong-class distance compares it to the other classes'
superpositions. The margin is ``(d_wrong - d_retrieve) / (d_wrong +
d_retrieve)``.

``mode="direct"`` uses one shared context HV for every context (plain
superposition); ``mode="context"`` draws an independent random HV per
context (context-based orthogonalization).
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import hv
from .architectures import default_workers
from .errors import ContractViolation

MODES = ("direct", "context")


@dataclass(frozen=True)
class MarginSimConfig:
    dim: int = hv.DEFAULT_DIM
    n_classes: int = 13
    context_counts: tuple = (3, 5, 7, 9, 11, 13, 15)
    d0_grid: tuple = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45)
    n_trials: int = 25
    seed: int = 0
    superposition: str = "majority"
    wrong_class: str = "mean"

    def __post_init__(self):
        object.__setattr__(self, "context_counts", tuple(int(n) for n in self.context_counts))
        object.__setattr__(self, "d0_grid", tuple(float(d) for d in self.d0_grid))
        for n in self.context_counts:
            if n < 1 or n % 2 == 0:
                raise ContractViolation(f"context counts must be odd and positive, got {n}")
        for d0 in self.d0_grid:
            _check_d0(d0)
        if self.n_classes < 2:
            raise ContractViolation("need at least two classes")
        if self.n_trials < 1:
            raise ContractViolation("need at least one trial")
        if self.superposition not in ("majority", "sum"):
            raise ContractViolation(f"unknown superposition {self.superposition!r}")
        if self.wrong_class not in ("mean", "nearest"):
            raise ContractViolation(f"unknown wrong-class rule {self.wrong_class!r}")


def _check_d0(d0: float):
    if not 0.0 <= d0 <= 0.5:
        raise ContractViolation(f"d0 must lie in [0, 0.5], got {d0}")


def flip_fraction(d0: float) -> float:
    """Per-element flip probability giving expected pairwise distance ``d0``.

    Two independent flips of a shared base disagree with probability
    ``2 f (1 - f)``; this inverts that relation.
    """
    _check_d0(d0)
    return (1.0 - np.sqrt(1.0 - 2.0 * d0)) / 2.0


def _prototypes(G, n_contexts, d0, dim, rng) -> np.ndarray:
    f = flip_fraction(d0)
    base = hv.random_bipolar(rng, (dim,))
    flips = rng.random((G, n_contexts, dim)) < f
    return np.where(flips, -base, base).astype(np.int8)


def gen_prototypes(G: int, n_contexts: int, d0: float, dim: int = hv.DEFAULT_DIM,
                   rng: np.random.Generator | None = None) -> np.ndarray:
    """Packed prototypes, shape ``(G, n_contexts, n_words)``.

    Every prototype is a shared random base with each element flipped
    independently, so any two prototypes are ``d0`` apart on average.
    """
    rng = rng if rng is not None else hv.make_rng(0)
    return hv.pack_rows(_prototypes(G, n_contexts, d0, dim, rng))


@dataclass
class CellResult:
    n_contexts: int
    d0: float
    mode: str
    d_retrieve: float
    d_wrong: float
    margin: float
    stderr_retrieve: float
    stderr_wrong: float
    stderr_margin: float
    d0_measured: float = float("nan")


def _trial(G, n, d0, dim, mode, rng, superposition, wrong_class):
    protos = _prototypes(G, n, d0, dim, rng)
    flat = protos.reshape(G * n, dim)
    d0_measured = (flat[1:] != flat[:-1]).mean() if G * n > 1 else 0.0
    if mode == "direct":
        ctx = np.broadcast_to(hv.random_bipolar(rng, (dim,)), (n, dim))
    else:
        ctx = hv.random_bipolar(rng, (n, dim))
    bound = protos * ctx[None]
    sums = bound.sum(axis=1, dtype=np.int32)
    if superposition == "majority":
        am = hv.sign_with_ties(sums, rng)
    else:
        am = np.where(sums >= 0, 1, -1).astype(np.int8)

    q = bound.reshape(G * n, dim).astype(np.float32)
    dots = (q @ am.T.astype(np.float32)).reshape(G, n, G)
    dist = (dim - dots.astype(np.float64)) / (2.0 * dim)
    own = np.arange(G)
    d_r = dist[own, :, own]                       # (G, n)
    others = np.where(np.eye(G, dtype=bool)[:, None, :], np.nan, dist)
    d_w = np.nanmin(others, axis=2) if wrong_class == "nearest" else np.nanmean(others, axis=2)
    total = d_w + d_r
    m = np.divide(d_w - d_r, total, out=np.zeros_like(total), where=total > 0)
    return d_r.mean(), d_w.mean(), m.mean(), d0_measured


def run_cell(G: int, n_contexts: int, d0: float, dim: int = hv.DEFAULT_DIM, mode: str = "context",
             n_trials: int = 25, rng: np.random.Generator | None = None,
             superposition: str = "majority", wrong_class: str = "mean") -> CellResult:
    """Average retrieval error, wrong-class distance and margin over trials."""
    if mode not in MODES:
        raise ContractViolation(f"mode must be one of {MODES}, got {mode!r}")
    _check_d0(d0)
    rng = rng if rng is not None else hv.make_rng(0)
    stats = np.array([_trial(G, n_contexts, d0, dim, mode, rng, superposition, wrong_class)
                      for _ in range(n_trials)])
    mean = stats.mean(axis=0)
    se = stats.std(axis=0, ddof=1) / np.sqrt(n_trials) if n_trials > 1 else np.zeros(4)
    return CellResult(n_contexts, d0, mode, *map(float, mean[:3]), *map(float, se[:3]),
                      d0_measured=float(mean[3]))


def cell_rng(seed: int, n_contexts: int, d0: float, mode: str) -> np.random.Generator:
    """Generator of one grid cell; independent of the rest of the grid."""
    return hv.make_rng(seed, "margin", n_contexts, f"{d0:.6f}", mode)


@dataclass
class MarginSweepResult:
    config: MarginSimConfig
    cells: list = field(default_factory=list)

    def cell(self, n_contexts: int, d0: float, mode: str) -> CellResult:
        for c in self.cells:
            if c.n_contexts == n_contexts and abs(c.d0 - d0) < 1e-12 and c.mode == mode:
                return c
        raise KeyError((n_contexts, d0, mode))

    def grid(self, field_name: str, mode: str) -> np.ndarray:
        """Array of ``field_name`` indexed by (context count, d0)."""
        return np.array([[getattr(self.cell(n, d0, mode), field_name) for d0 in self.config.d0_grid]
                         for n in self.config.context_counts])

    def improvement(self) -> np.ndarray:
        """Margin gain of context encoding over direct superposition."""
        return self.grid("margin", "context") - self.grid("margin", "direct")

    def improvement_stderr(self) -> np.ndarray:
        return np.hypot(self.grid("stderr_margin", "context"), self.grid("stderr_margin", "direct"))

    def argmax_improvement(self) -> tuple[int, float]:
        imp = self.improvement()
        i, j = np.unravel_index(np.argmax(imp), imp.shape)
        return self.config.context_counts[i], self.config.d0_grid[j]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n_contexts", "d0", "mode", "d_retrieve", "d_wrong", "margin", "stderr"])
        for c in self.cells:
            w.writerow([c.n_contexts, repr(c.d0), c.mode, repr(c.d_retrieve), repr(c.d_wrong),
                        repr(c.margin), repr(c.stderr_margin)])
        return buf.getvalue()

    def to_json(self) -> str:
        cfg = asdict(self.config)
        cfg["context_counts"] = list(cfg["context_counts"])
        cfg["d0_grid"] = list(cfg["d0_grid"])
        n, d0 = self.argmax_improvement()
        doc = {
            "config": cfg,
            "cells": [asdict(c) for c in self.cells],
            "improvement": self.improvement().tolist(),
            "argmax_improvement": {"n_contexts": n, "d0": d0},
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def sweep(config: MarginSimConfig = MarginSimConfig(), workers: int | None = None) -> MarginSweepResult:
    """Run every (context count, d0, mode) cell of the grid.

    Each cell draws from its own derived generator, so results are identical
    for any ``workers`` count (default: the thread environment variable, or 1).
    """
    workers = workers or default_workers()
    jobs = [(n, d0, mode) for n in config.context_counts for d0 in config.d0_grid for mode in MODES]

    def one(job):
        n, d0, mode = job
        return run_cell(config.n_classes, n, d0, config.dim, mode, config.n_trials,
                        cell_rng(config.seed, n, d0, mode), config.superposition,
                        config.wrong_class)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        cells = list(pool.map(one, jobs))
    return MarginSweepResult(config, cells)
