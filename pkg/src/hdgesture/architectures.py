"""Gesture classifiers for multiple limb positions.

Four architectures share the same EMG encoding and differ in how limb
position enters the associative memory:

``direct``
    All training HVs of a gesture are superposed into one prototype,
    regardless of position.
``dual``
    One associative memory per position; a linear accelerometer classifier
    picks which memory answers the query.
``ctx-ortho``
    Each training HV is bound to the random context HV of its position
    before superposition into a single memory. At inference the query is
    bound to the context HV of the position predicted from the
    accelerometer.
``ctx-cim``
    Each training HV and each query is bound to a context HV encoded
    directly from its own accelerometer mean through three continuous item
    memories; no discrete positions are used.

Prototypes are the bipolarized integer sums of their training HVs, so a
model trained on a set of samples is fully determined by per-class counts.
:class:`CrossValidator` exploits this: it sums every fold once and obtains
each training set's counts by subtraction, which gives exactly the model
:func:`train` would produce on that training set.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from . import hv
from .encoders import EncodedSample, EncodedSet, context_rows, encode_stream
from .errors import ContractViolation
from .memories import (AssociativeMemory, CimParams, ContextMemory, ContinuousItemMemory,
                       ItemMemory, build_cim, build_context_memory, build_item_memory)
from .position import (LinearPositionModel, PositionConfig, parameter_bits, train_position)

THREADS_ENV = "HDGESTURE_THREADS"

DEFAULT_CIMS = (CimParams(59, 1.0), CimParams(55, 0.5), CimParams(14, 0.6))


class Architecture(str, Enum):
    DIRECT = "direct"
    DUAL = "dual"
    CTX_ORTHO = "ctx-ortho"
    CTX_CIM = "ctx-cim"

    @property
    def uses_positions(self) -> bool:
        return self in (Architecture.DUAL, Architecture.CTX_ORTHO)


@dataclass(frozen=True)
class ModelConfig:
    dim: int = hv.DEFAULT_DIM
    n_channels: int = 64
    cim_params: tuple = DEFAULT_CIMS
    position: PositionConfig = PositionConfig()

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ContractViolation(f"dim must be a positive integer, got {self.dim}")
        if int(self.n_channels) != self.n_channels or self.n_channels < 1:
            raise ContractViolation(f"n_channels must be a positive integer, got {self.n_channels}")
        if len(self.cim_params) != 3:
            raise ContractViolation(f"need one CIM per accelerometer axis, got {len(self.cim_params)}")

    def to_dict(self) -> dict:
        return {"dim": self.dim, "n_channels": self.n_channels,
                "cim_params": [[c.levels, c.d_max] for c in self.cim_params],
                "position": asdict(self.position)}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        if "cim_params" in d:
            d["cim_params"] = tuple(CimParams(int(L), float(m)) for L, m in d["cim_params"])
        if "position" in d:
            d["position"] = PositionConfig(**d["position"])
        return cls(**d)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# Memories derived from a model seed
# ---------------------------------------------------------------------------

def item_memory_for(seed: int, config: ModelConfig = ModelConfig()) -> ItemMemory:
    return build_item_memory(config.n_channels, config.dim, hv.child_seed(seed, "item-memory"))


def context_memory_for(seed: int, position_ids, dim: int) -> ContextMemory:
    return build_context_memory(list(position_ids), dim, hv.child_seed(seed, "context-memory"))


def cims_for(seed: int, params: Sequence[CimParams], dim: int) -> list[ContinuousItemMemory]:
    return [build_cim(p, dim, hv.child_seed(seed, "cim", axis)) for axis, p in enumerate(params)]


def fit_position_model(accel, positions, config: PositionConfig) -> LinearPositionModel:
    """Train the position classifier; a single position gets a constant model."""
    ids = sorted(set(np.asarray(positions).tolist()))
    if len(ids) == 1:
        return LinearPositionModel(np.zeros((1, 3)), np.zeros(1), ids)
    return train_position(accel, positions, config)


def _am_seed(seed: int, index: int) -> int:
    return hv.child_seed(seed, "am", index)


def encode(dataset, seed: int = 0, config: ModelConfig = ModelConfig()) -> EncodedSet:
    """Encode a dataset with the item memory belonging to ``seed``."""
    return encode_stream(dataset, item_memory_for(seed, config), seed)


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

@dataclass
class Model:
    architecture: Architecture
    seed: int
    config: ModelConfig
    gesture_ids: list
    position_ids: list
    item_memory: ItemMemory
    ams: list[AssociativeMemory]
    context_memory: ContextMemory | None = None
    cims: list[ContinuousItemMemory] | None = None
    position_model: LinearPositionModel | None = None

    def __post_init__(self):
        arch = self.architecture
        expected = len(self.position_ids) if arch is Architecture.DUAL else 1
        if len(self.ams) != expected:
            raise ContractViolation(
                f"{arch.value} model needs {expected} associative memories, got {len(self.ams)}")
        if arch.uses_positions and self.position_model is None:
            raise ContractViolation(f"{arch.value} models need a position classifier")
        if arch is Architecture.CTX_CIM and self.cims is None:
            raise ContractViolation("ctx-cim models need continuous item memories")

    @property
    def dim(self) -> int:
        return self.config.dim

    @property
    def am(self) -> AssociativeMemory:
        if len(self.ams) != 1:
            raise ContractViolation("dual-stage models have one memory per position")
        return self.ams[0]


def _index_of(values: np.ndarray, ids: Sequence, what: str) -> np.ndarray:
    lookup = {v: i for i, v in enumerate(ids)}
    try:
        return np.array([lookup[v] for v in values.tolist()], dtype=np.int64)
    except KeyError as e:
        raise ContractViolation(f"unknown {what} label {e.args[0]!r}") from None


def _group_bitsums(words: np.ndarray, groups: np.ndarray, n_groups: int, dim: int):
    """Per-group count of +1 elements and group sizes."""
    bitsum = np.zeros((n_groups, dim), dtype=np.int64)
    sizes = np.bincount(groups, minlength=n_groups).astype(np.int64)
    order = np.argsort(groups, kind="stable")
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    for g in np.flatnonzero(sizes):
        rows = order[bounds[g] : bounds[g + 1]]
        for s in range(0, rows.size, 512):
            bitsum[g] += hv.unpack_bits(words[rows[s : s + 512]], dim).sum(axis=0, dtype=np.int64)
    return bitsum, sizes


def _counts(bitsum, sizes):
    return 2 * bitsum - sizes[..., None]


class _Labels:
    """Label bookkeeping shared by training and cross-validation."""

    def __init__(self, enc: EncodedSet, gesture_ids=None, position_ids=None):
        self.gesture_ids = list(gesture_ids) if gesture_ids is not None else \
            sorted(set(enc.gesture.tolist()))
        self.position_ids = list(position_ids) if position_ids is not None else \
            sorted(set(enc.position.tolist()))
        self.g = _index_of(enc.gesture, self.gesture_ids, "gesture")
        self.p = _index_of(enc.position, self.position_ids, "position")


def _check_encoding(enc: EncodedSet, seed: int, config: ModelConfig):
    if enc.dim != config.dim:
        raise ContractViolation(f"samples have dim {enc.dim}, config says {config.dim}")
    expected = hv.child_seed(seed, "item-memory")
    if enc.item_memory_seed != expected:
        raise ContractViolation("samples were encoded with a different seed's item memory; "
                                "use architectures.encode(dataset, seed)")


def _bound_rows(arch: Architecture, emg, p_idx, accel, cm, cims, dim):
    if arch is Architecture.CTX_ORTHO:
        return hv.bind_rows(emg, cm.words[p_idx], dim)
    if arch is Architecture.CTX_CIM:
        return hv.bind_rows(emg, context_rows(accel, cims), dim)
    return emg


def _class_bitsums(arch, enc, labels: _Labels, cm, cims):
    """Bit sums grouped by (position, gesture) or by gesture, shape (P|1, G, D)."""
    G, P, D = len(labels.gesture_ids), len(labels.position_ids), enc.dim
    if arch in (Architecture.DUAL, Architecture.CTX_ORTHO, Architecture.DIRECT):
        bitsum, sizes = _group_bitsums(enc.emg, labels.p * G + labels.g, P * G, D)
        return bitsum.reshape(P, G, D), sizes.reshape(P, G)
    rows = _bound_rows(arch, enc.emg, labels.p, enc.accel_mean, cm, cims, D)
    bitsum, sizes = _group_bitsums(rows, labels.g, G, D)
    return bitsum[None], sizes[None]


def _memories_from_counts(arch, counts, sizes, seed, gesture_ids, cm):
    """Build finalized associative memories from (P|1, G, D) grouped counts."""
    dim = counts.shape[-1]
    if arch is Architecture.DUAL:
        ams = []
        for p in range(counts.shape[0]):
            am = AssociativeMemory(gesture_ids, dim, _am_seed(seed, p))
            am.add_counts(counts[p], sizes[p])
            ams.append(am.finalize())
        return ams
    if arch is Architecture.CTX_ORTHO:
        acc = np.einsum("pgd,pd->gd", counts, cm.bipolar.astype(np.int64))
    else:
        acc = counts.sum(axis=0)
    am = AssociativeMemory(gesture_ids, dim, _am_seed(seed, 0))
    am.add_counts(acc, sizes.sum(axis=0))
    return [am.finalize()]


def train(architecture, samples: EncodedSet, config: ModelConfig = ModelConfig(), seed: int = 0,
          position_model: LinearPositionModel | None = None) -> Model:
    """Train a classifier of the given architecture.

    ``samples`` must come from :func:`encode` with the same ``seed`` and
    ``config``. For ``dual`` and ``ctx-ortho`` a position classifier is fit on
    the samples' accelerometer means unless ``position_model`` is supplied.
    """
    arch = Architecture(architecture)
    _check_encoding(samples, seed, config)
    if len(samples) == 0:
        raise ContractViolation("no training samples")
    labels = _Labels(samples)
    cm = context_memory_for(seed, labels.position_ids, config.dim) \
        if arch is Architecture.CTX_ORTHO else None
    cims = cims_for(seed, config.cim_params, config.dim) if arch is Architecture.CTX_CIM else None

    bitsum, sizes = _class_bitsums(arch, samples, labels, cm, cims)
    ams = _memories_from_counts(arch, _counts(bitsum, sizes), sizes, seed, labels.gesture_ids, cm)
    if arch.uses_positions and position_model is None:
        position_model = fit_position_model(samples.accel_mean, samples.position, config.position)
    return Model(arch, seed, config, labels.gesture_ids, labels.position_ids,
                 item_memory_for(seed, config), ams, cm, cims,
                 position_model if arch.uses_positions else None)


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------

def _predicted_position_index(model: Model, accel) -> np.ndarray:
    labels = model.position_model.predict(accel)
    return _index_of(labels, model.position_ids, "position")


def decide(model: Model, samples: EncodedSet):
    """Classify a batch.

    Returns ``(gesture_index, distances)`` where ``distances[i, g]`` is the
    normalized Hamming distance from sample ``i``'s (bound) query to the
    prototype of gesture ``g`` in the memory that answered it.
    """
    if samples.dim != model.dim:
        raise ContractViolation(f"samples have dim {samples.dim}, model has {model.dim}")
    if any(not am.finalized for am in model.ams):
        raise ContractViolation("model is not trained")
    arch = model.architecture
    emg = samples.emg
    if arch is Architecture.DUAL:
        p_hat = _predicted_position_index(model, samples.accel_mean)
        dist = np.empty((len(samples), len(model.gesture_ids)))
        for p in np.unique(p_hat):
            rows = p_hat == p
            dist[rows] = model.ams[p].distances(emg[rows])
    else:
        if arch is Architecture.CTX_ORTHO:
            p_idx = _predicted_position_index(model, samples.accel_mean)
        else:
            p_idx = None
        query = _bound_rows(arch, emg, p_idx, samples.accel_mean, model.context_memory,
                            model.cims, model.dim)
        dist = model.am.distances(query)
    return np.argmin(dist, axis=1), dist


def infer(model: Model, sample: EncodedSample):
    """Classify one sample; returns ``(gesture label, distance per gesture)``."""
    enc = EncodedSet(sample.emg_hv.words[None], sample.accel_mean[None], [sample.gesture],
                     [sample.position], sample.emg_hv.dim, model.item_memory.seed)
    idx, dist = decide(model, enc)
    return model.gesture_ids[idx[0]], dist[0]


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

@dataclass
class EvalReport:
    architecture: str
    accuracy: float
    per_position: dict
    confusion: np.ndarray
    gesture_ids: list
    position_ids: list
    n_samples: int
    predictions: np.ndarray = field(repr=False)
    truth: np.ndarray = field(repr=False)
    distances: np.ndarray = field(repr=False)
    fold_accuracies: list | None = None
    position_accuracy: float | None = None
    interference: dict | None = None

    def to_dict(self) -> dict:
        return {
            "architecture": self.architecture,
            "accuracy": self.accuracy,
            "per_position_accuracy": {str(k): v for k, v in self.per_position.items()},
            "confusion": self.confusion.tolist(),
            "gesture_ids": list(self.gesture_ids),
            "position_ids": list(self.position_ids),
            "n_samples": self.n_samples,
            "fold_accuracies": self.fold_accuracies,
            "position_accuracy": self.position_accuracy,
            "interference": self.interference,
        }


def _report(arch, gesture_ids, truth_g, pred_g, positions, distances, **extra) -> EvalReport:
    G = len(gesture_ids)
    confusion = np.zeros((G, G), dtype=np.int64)
    np.add.at(confusion, (truth_g, pred_g), 1)
    correct = truth_g == pred_g
    position_ids = sorted(set(positions.tolist()))
    per_position = {p: float(correct[positions == p].mean()) for p in position_ids}
    return EvalReport(Architecture(arch).value, float(correct.mean()), per_position, confusion,
                      list(gesture_ids), position_ids, int(correct.size), pred_g, truth_g,
                      distances, **extra)


def evaluate(model: Model, samples: EncodedSet) -> EvalReport:
    if len(samples) == 0:
        raise ContractViolation("empty test set")
    truth = _index_of(samples.gesture, model.gesture_ids, "gesture")
    pred, dist = decide(model, samples)
    pos_acc = None
    if model.position_model is not None:
        pos_acc = float(np.mean(model.position_model.predict(samples.accel_mean) == samples.position))
    return _report(model.architecture, model.gesture_ids, truth, pred, samples.position, dist,
                   position_accuracy=pos_acc)


def stratified_folds(samples: EncodedSet, k: int, seed: int, granularity: str = "sample") -> np.ndarray:
    """Assign each sample to one of ``k`` folds, stratified by (gesture, position).

    With ``granularity="sample"`` samples of each stratum are shuffled and
    dealt round-robin; with ``"repetition"`` whole repetitions are dealt, so
    ``k`` may not exceed the number of repetitions per stratum.
    """
    if k < 2:
        raise ContractViolation(f"need at least 2 folds, got {k}")
    if granularity not in ("sample", "repetition"):
        raise ContractViolation(f"unknown fold granularity {granularity!r}")
    rng = hv.make_rng(seed, "folds")
    labels = _Labels(samples)
    stratum = labels.g * len(labels.position_ids) + labels.p
    folds = np.empty(len(samples), dtype=np.int64)
    offset = 0
    for s in np.unique(stratum):
        idx = np.flatnonzero(stratum == s)
        if granularity == "sample":
            units = rng.permutation(idx.size)
            folds[idx[units]] = (np.arange(idx.size) + offset) % k
            offset += idx.size
        else:
            reps = np.unique(samples.repetition[idx])
            if reps.size < k:
                raise ContractViolation(
                    f"repetition-level folds need >= {k} repetitions per stratum, got {reps.size}")
            order = rng.permutation(reps.size)
            for rank, r in enumerate(reps[order]):
                folds[idx[samples.repetition[idx] == r]] = (rank + offset) % k
            offset += reps.size
    return folds


class CrossValidator:
    """k-fold evaluation that sums each fold's HVs only once.

    Folds and per-fold EMG sums are computed on construction and reused by
    every :meth:`run`, which makes repeated runs (several architectures,
    or many CIM settings during parameter search) cheap.
    """

    def __init__(self, samples: EncodedSet, k: int = 10, seed: int = 0,
                 config: ModelConfig = ModelConfig(), granularity: str = "sample",
                 workers: int | None = None):
        _check_encoding(samples, seed, config)
        self.samples = samples
        self.k = k
        self.seed = seed
        self.config = config
        self.workers = workers or default_workers()
        self.labels = _Labels(samples)
        self.folds = stratified_folds(samples, k, seed, granularity)
        G, P = len(self.labels.gesture_ids), len(self.labels.position_ids)
        self.G, self.P = G, P
        for f in range(k):
            if not (self.folds == f).any():
                raise ContractViolation(f"fold {f} has no test samples")
            train_g = self.labels.g[self.folds != f]
            if np.unique(train_g).size != G:
                raise ContractViolation(f"a gesture class is absent from training fold {f}")
        group = (self.folds * P + self.labels.p) * G + self.labels.g
        bitsum, sizes = _group_bitsums(samples.emg, group, k * P * G, samples.dim)
        self._emg_bitsum = bitsum.reshape(k, P, G, -1)
        self._emg_sizes = sizes.reshape(k, P, G)
        self._position_models: dict = {}

    def _position_model(self, f: int) -> LinearPositionModel:
        if f not in self._position_models:
            tr = self.folds != f
            self._position_models[f] = fit_position_model(
                self.samples.accel_mean[tr], self.samples.position[tr], self.config.position)
        return self._position_models[f]

    def fold_model(self, architecture, f: int, config: ModelConfig | None = None) -> Model:
        """The model trained on every fold except ``f``."""
        arch = Architecture(architecture)
        config = config or self.config
        ids, pids = self.labels.gesture_ids, self.labels.position_ids
        cm = context_memory_for(self.seed, pids, config.dim) if arch is Architecture.CTX_ORTHO else None
        cims = cims_for(self.seed, config.cim_params, config.dim) \
            if arch is Architecture.CTX_CIM else None
        if arch is Architecture.CTX_CIM:
            bitsum, sizes = self._cim_sums(cims)
        else:
            bitsum, sizes = self._emg_bitsum, self._emg_sizes
        tr_bits = bitsum.sum(axis=0) - bitsum[f]
        tr_sizes = sizes.sum(axis=0) - sizes[f]
        ams = _memories_from_counts(arch, _counts(tr_bits, tr_sizes), tr_sizes, self.seed, ids, cm)
        pm = self._position_model(f) if arch.uses_positions else None
        return Model(arch, self.seed, config, ids, pids, item_memory_for(self.seed, config), ams,
                     cm, cims, pm)

    def _cim_sums(self, cims):
        key = tuple((c.params.levels, c.params.d_max) for c in cims)
        cache = getattr(self, "_cim_cache", None)
        if cache is not None and cache[0] == key:
            return cache[1]
        rows = hv.bind_rows(self.samples.emg, context_rows(self.samples.accel_mean, cims),
                            self.samples.dim)
        bitsum, sizes = _group_bitsums(rows, self.folds * self.G + self.labels.g,
                                       self.k * self.G, self.samples.dim)
        out = (bitsum.reshape(self.k, 1, self.G, -1), sizes.reshape(self.k, 1, self.G))
        self._cim_cache = (key, out)
        return out

    def _run_fold(self, arch, f, config):
        model = self.fold_model(arch, f, config)
        test = np.flatnonzero(self.folds == f)
        sub = self.samples.subset(test)
        pred, dist = decide(model, sub)
        interference = None
        if arch is not Architecture.DUAL:
            interference = self._interference(model, sub, test, f, dist)
        pos_pred = None
        if model.position_model is not None:
            pos_pred = model.position_model.predict(sub.accel_mean)
        return test, pred, dist, interference, pos_pred

    def _interference(self, model, sub, test, f, dist):
        """Distance to the superposed true-class prototype minus distance to the
        prototype built from the sample's own position only."""
        tr_bits = self._emg_bitsum.sum(axis=0) - self._emg_bitsum[f]
        tr_sizes = self._emg_sizes.sum(axis=0) - self._emg_sizes[f]
        counts = _counts(tr_bits, tr_sizes)
        g, p = self.labels.g[test], self.labels.p[test]
        own = np.empty(test.size)
        for pi in np.unique(p):
            am = AssociativeMemory(model.gesture_ids, model.dim, _am_seed(self.seed, pi))
            am.add_counts(counts[pi], tr_sizes[pi])
            am.finalize()
            rows = p == pi
            d = am.distances(sub.emg[rows])
            own[rows] = d[np.arange(rows.sum()), g[rows]]
        sup = dist[np.arange(test.size), g]
        return float(np.sum(sup - own)), int(test.size)

    def run(self, architecture, config: ModelConfig | None = None) -> EvalReport:
        arch = Architecture(architecture)
        config = config or self.config
        n = len(self.samples)
        pred = np.empty(n, dtype=np.int64)
        dist = np.empty((n, self.G))
        pos_pred = np.empty(n, dtype=self.samples.position.dtype) if arch.uses_positions else None
        fold_acc = []
        interf_sum, interf_n = 0.0, 0
        if arch.uses_positions:
            # position models are shared by architectures; build them serially
            for f in range(self.k):
                self._position_model(f)
        if arch is Architecture.CTX_CIM:
            self._cim_sums(cims_for(self.seed, config.cim_params, config.dim))
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            results = list(pool.map(lambda f: self._run_fold(arch, f, config), range(self.k)))
        for test, p, d, interference, pp in results:
            pred[test] = p
            dist[test] = d
            fold_acc.append(float(np.mean(p == self.labels.g[test])))
            if interference is not None:
                interf_sum += interference[0]
                interf_n += interference[1]
            if pos_pred is not None:
                pos_pred[test] = pp
        extra = {"fold_accuracies": fold_acc}
        if pos_pred is not None:
            extra["position_accuracy"] = float(np.mean(pos_pred == self.samples.position))
        if interf_n:
            extra["interference"] = {"mean_distance_gap": interf_sum / interf_n}
        return _report(arch, self.labels.gesture_ids, self.labels.g, pred, self.samples.position,
                       dist, **extra)


def cross_validate(architecture, samples: EncodedSet, k: int = 10, seed: int = 0,
                   config: ModelConfig = ModelConfig(), granularity: str = "sample",
                   workers: int | None = None) -> EvalReport:
    return CrossValidator(samples, k, seed, config, granularity, workers).run(architecture)


# ---------------------------------------------------------------------------
# Footprint, context distances, online update
# ---------------------------------------------------------------------------

@dataclass
class Footprint:
    architecture: str
    prototype_bits: int
    position_model_bits: int
    memory_bits: int
    counted_memories: bool

    @property
    def total_bits(self) -> int:
        return self.prototype_bits + self.position_model_bits + self.memory_bits

    def to_dict(self) -> dict:
        return {"architecture": self.architecture, "prototype_bits": self.prototype_bits,
                "position_model_bits": self.position_model_bits, "memory_bits": self.memory_bits,
                "counted_memories": self.counted_memories, "total_bits": self.total_bits}


def footprint_bits(model: Model, count_memories: bool = False,
                   position_convention: str = "support-vectors", n_support_vectors: int = 50) -> Footprint:
    """Parameter memory of a trained model.

    Prototypes cost one bit per element. The position classifier is counted
    with :func:`hdgesture.position.parameter_bits`. Item, context and
    continuous item memories are regenerated from the seed, so they cost
    nothing unless ``count_memories`` is set.
    """
    protos = len(model.ams) * len(model.gesture_ids) * model.dim
    pos_bits = 0
    if model.position_model is not None:
        pos_bits = parameter_bits(model.position_model, position_convention, n_support_vectors)
    mem = 0
    if count_memories:
        mem += len(model.item_memory) * model.dim
        if model.context_memory is not None:
            mem += len(model.context_memory) * model.dim
        if model.cims is not None:
            mem += sum(c.params.levels for c in model.cims) * model.dim
    return Footprint(model.architecture.value, protos, pos_bits, mem, count_memories)


def context_distance_matrix(cims, samples: EncodedSet, seed: int = 0) -> np.ndarray:
    """Distances between per-position mean context HVs.

    ``cims`` is a trained ``ctx-cim`` model or a list of three CIMs. Each
    position's mean context is the majority vote of the context HVs of its
    samples.
    """
    if isinstance(cims, Model):
        if cims.cims is None:
            raise ContractViolation("model has no continuous item memories")
        seed = cims.seed
        cims = cims.cims
    pids = sorted(set(samples.position.tolist()))
    p_idx = _index_of(samples.position, pids, "position")
    dim = cims[0].dim
    rows = context_rows(samples.accel_mean, cims)
    bitsum, sizes = _group_bitsums(rows, p_idx, len(pids), dim)
    means = np.stack([
        hv.pack_rows(hv.sign_with_ties(_counts(bitsum[i], sizes[i]), hv.make_rng(seed, "ctx-mean", i)))
        for i in range(len(pids))
    ])
    return hv.hamming_counts(means, means) / dim


def update(model: Model, samples: EncodedSet) -> Model:
    """Superpose new training samples into a copy of ``model``.

    The position classifier (if any) is kept as is; only the associative
    memories learn.
    """
    if len(samples) == 0:
        return replace(model, ams=[am.copy() for am in model.ams])
    _check_encoding(samples, model.seed, model.config)
    arch = model.architecture
    if arch.uses_positions:
        known = set(model.position_ids)
        bad = [p for p in set(samples.position.tolist()) if p not in known]
        if bad:
            raise ContractViolation(f"samples have unknown position labels {bad}")
    labels = _Labels(samples, model.gesture_ids,
                     model.position_ids if arch.uses_positions else None)
    bitsum, sizes = _class_bitsums(arch, samples, labels, model.context_memory, model.cims)
    counts = _counts(bitsum, sizes)
    ams = [am.copy() for am in model.ams]
    if arch is Architecture.DUAL:
        for p, am in enumerate(ams):
            am.add_counts(counts[p], sizes[p])
    else:
        if arch is Architecture.CTX_ORTHO:
            acc = np.einsum("pgd,pd->gd", counts, model.context_memory.bipolar.astype(np.int64))
        else:
            acc = counts.sum(axis=0)
        ams[0].add_counts(acc, sizes.sum(axis=0))
    for am in ams:
        am.finalize()
    return replace(model, ams=ams)
