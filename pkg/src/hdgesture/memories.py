"""Hypervector stores: item, continuous item, associative and context memories."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Sequence

import numpy as np

from . import hv
from .errors import ContractViolation
from .hv import Hypervector


class _HVTable:
    """Read-only table of packed HVs with list-like access."""

    def __init__(self, words: np.ndarray, dim: int):
        words = np.array(words, dtype=hv.WORD)
        words.flags.writeable = False
        self.words = words
        self.dim = dim

    def __len__(self) -> int:
        return self.words.shape[0]

    def __getitem__(self, i: int) -> Hypervector:
        return Hypervector(self.words[i], self.dim)

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @cached_property
    def bipolar(self) -> np.ndarray:
        out = hv.unpack_rows(self.words, self.dim)
        out.flags.writeable = False
        return out

    def pairwise_distances(self) -> np.ndarray:
        return hv.hamming_counts(self.words, self.words) / self.dim


class ItemMemory(_HVTable):
    """Random, quasi-orthogonal HVs for a set of symbols (EMG channels)."""

    def __init__(self, words, dim: int, seed: int):
        super().__init__(words, dim)
        self.seed = seed

    @property
    def entries(self) -> list[Hypervector]:
        return list(self)


def _random_table(n: int, dim: int, seed: int) -> np.ndarray:
    if n < 1:
        raise ContractViolation(f"need at least one entry, got {n}")
    rng = hv.make_rng(seed)
    return hv.pack_rows(hv.random_bipolar(rng, (n, dim)))


def build_item_memory(n_channels: int, dim: int = hv.DEFAULT_DIM, seed: int = 0) -> ItemMemory:
    return ItemMemory(_random_table(n_channels, dim, seed), dim, seed)


@dataclass(frozen=True)
class CimParams:
    levels: int
    d_max: float

    def __post_init__(self):
        if int(self.levels) != self.levels or self.levels < 2:
            raise ContractViolation(f"CIM needs at least 2 levels, got {self.levels}")
        if not 0.0 <= self.d_max <= 1.0:
            raise ContractViolation(f"d_max must lie in [0, 1], got {self.d_max}")


class ContinuousItemMemory(_HVTable):
    """A chain of HVs for ordered levels; endpoints are ``d_max`` apart.

    Level ``i + 1`` is level ``i`` with one batch of a fixed random position
    set flipped. Batches are disjoint, so no position flips twice and the
    distance between two levels is proportional to the number of batches
    between them.
    """

    def __init__(self, params: CimParams, words, dim: int, seed: int):
        super().__init__(words, dim)
        self.params = params
        self.seed = seed

    def lookup(self, level: int) -> Hypervector:
        if not 0 <= level < self.params.levels:
            raise ContractViolation(
                f"level {level} outside [0, {self.params.levels - 1}]"
            )
        return self[int(level)]


def build_cim(params: CimParams, dim: int = hv.DEFAULT_DIM, seed: int = 0) -> ContinuousItemMemory:
    rng = hv.make_rng(seed)
    L = params.levels
    start = hv.random_bipolar(rng, (dim,))
    n_flip = int(round(params.d_max * dim))
    flip_positions = rng.permutation(dim)[:n_flip]
    # array_split gives the earlier batches the extra element
    batches = np.array_split(flip_positions, L - 1)
    levels = np.empty((L, dim), dtype=np.int8)
    levels[0] = start
    for i, batch in enumerate(batches):
        levels[i + 1] = levels[i]
        levels[i + 1, batch] *= -1
    return ContinuousItemMemory(params, hv.pack_rows(levels), dim, seed)


def cim_lookup(cim: ContinuousItemMemory, level: int) -> Hypervector:
    return cim.lookup(level)


class AssociativeMemory:
    """Class prototypes backed by integer accumulators.

    Training examples are added with :meth:`add` (or in bulk with
    :meth:`add_counts`); :meth:`finalize` bipolarizes every accumulator into
    a prototype. Ties are broken by a generator derived from
    ``(tiebreak_seed, class index)``, so finalizing is reproducible and does
    not depend on the order of updates.
    """

    def __init__(self, class_ids: Sequence[Hashable], dim: int = hv.DEFAULT_DIM,
                 tiebreak_seed: int = 0):
        if len(class_ids) != len(set(class_ids)):
            raise ContractViolation("class ids must be unique")
        self.class_ids = list(class_ids)
        self.dim = dim
        self.tiebreak_seed = tiebreak_seed
        self.counts = np.zeros((len(self.class_ids), dim), dtype=np.int64)
        self.n_added = np.zeros(len(self.class_ids), dtype=np.int64)
        self._index = {c: i for i, c in enumerate(self.class_ids)}
        self.prototypes: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.class_ids)

    def class_index(self, class_id) -> int:
        try:
            return self._index[class_id]
        except KeyError:
            raise ContractViolation(f"unknown class {class_id!r}") from None

    def accumulator(self, class_id) -> hv.Accumulator:
        i = self.class_index(class_id)
        return hv.Accumulator(self.counts[i].copy(), int(self.n_added[i]))

    def add(self, class_id, vector: Hypervector, weight: int = 1) -> None:
        i = self.class_index(class_id)
        if vector.dim != self.dim:
            raise ContractViolation(f"dimension mismatch: {vector.dim} != {self.dim}")
        acc = hv.accumulate(self.accumulator(class_id), vector, weight)
        self.counts[i] = acc.counts
        self.n_added[i] = acc.n_added
        self.prototypes = None

    def add_counts(self, counts: np.ndarray, n_added: np.ndarray) -> None:
        """Add pre-summed bipolar counts, one row per class."""
        if counts.shape != self.counts.shape:
            raise ContractViolation(f"counts shape {counts.shape} != {self.counts.shape}")
        self.counts += counts
        self.n_added += n_added
        self.prototypes = None

    def finalize(self) -> "AssociativeMemory":
        protos = np.empty((len(self), hv.n_words(self.dim)), dtype=hv.WORD)
        for i in range(len(self)):
            rng = hv.make_rng(self.tiebreak_seed, i)
            protos[i] = hv.pack_rows(hv.sign_with_ties(self.counts[i], rng))
        self.prototypes = protos
        return self

    @property
    def finalized(self) -> bool:
        return self.prototypes is not None

    def prototype(self, class_id) -> Hypervector:
        self._require_final()
        return Hypervector(self.prototypes[self.class_index(class_id)], self.dim)

    def _require_final(self):
        if len(self) == 0:
            raise ContractViolation("associative memory has no classes")
        if self.prototypes is None:
            raise ContractViolation("associative memory is not finalized")

    def distances(self, queries: np.ndarray) -> np.ndarray:
        """Normalized distances from packed query rows to every prototype."""
        self._require_final()
        return hv.hamming_counts(queries, self.prototypes) / self.dim

    def query(self, query: Hypervector):
        """Nearest prototype; returns ``(class_id, distances)``.

        Ties go to the lowest class index.
        """
        if query.dim != self.dim:
            raise ContractViolation(f"dimension mismatch: {query.dim} != {self.dim}")
        d = self.distances(query.words[None, :])[0]
        return self.class_ids[int(np.argmin(d))], d

    def copy(self) -> "AssociativeMemory":
        out = AssociativeMemory(self.class_ids, self.dim, self.tiebreak_seed)
        out.counts = self.counts.copy()
        out.n_added = self.n_added.copy()
        out.prototypes = None if self.prototypes is None else self.prototypes.copy()
        return out


def am_add(am: AssociativeMemory, class_id, vector: Hypervector, weight: int = 1) -> None:
    am.add(class_id, vector, weight)


def am_query(am: AssociativeMemory, query: Hypervector):
    return am.query(query)


class ContextMemory(_HVTable):
    """One random, quasi-orthogonal HV per limb position."""

    def __init__(self, position_ids: Sequence[Hashable], words, dim: int, seed: int):
        super().__init__(words, dim)
        self.position_ids = list(position_ids)
        self.seed = seed
        self._index = {p: i for i, p in enumerate(self.position_ids)}

    def for_position(self, position) -> Hypervector:
        try:
            return self[self._index[position]]
        except KeyError:
            raise ContractViolation(f"unknown position {position!r}") from None


def build_context_memory(n_positions: int | Sequence[Hashable], dim: int = hv.DEFAULT_DIM,
                         seed: int = 0) -> ContextMemory:
    ids = list(range(n_positions)) if isinstance(n_positions, int) else list(n_positions)
    return ContextMemory(ids, _random_table(len(ids), dim, seed), dim, seed)
