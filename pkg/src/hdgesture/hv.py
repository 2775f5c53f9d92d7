"""Bipolar hypervector algebra on packed bits.

A hypervector (HV) of dimension ``dim`` is a vector in {-1, +1}^dim. It is
stored as little-endian 64-bit words where bit value 1 means element +1 and
bit value 0 means element -1. Element ``i`` lives in bit ``i % 64`` of word
``i // 64``; padding bits past ``dim`` are always zero.

With this mapping binding (element-wise product) is XNOR and the Hamming
distance is a popcount of the XOR.

Batches of HVs are plain ``(n, n_words)`` arrays of ``<u8`` words; the
``pack_rows`` / ``unpack_rows`` helpers move between that layout and
``int8`` bipolar matrices.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractViolation

DEFAULT_DIM = 10_000
WORD = np.dtype("<u8")


# ---------------------------------------------------------------------------
# Random sources
# ---------------------------------------------------------------------------

def _key(k) -> int:
    if isinstance(k, (int, np.integer)):
        if k < 0:
            raise ContractViolation(f"seed keys must be non-negative, got {k}")
        return int(k)
    return zlib.crc32(str(k).encode())


def make_rng(seed: int, *keys) -> np.random.Generator:
    """Return a generator for ``seed`` and an optional derivation path.

    Children derived with different ``keys`` are statistically independent
    and do not depend on the order in which they are created, so parallel
    work can draw from them without changing results.
    """
    if seed < 0:
        raise ContractViolation(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def child_seed(seed: int, *keys) -> int:
    """Derive a 64-bit integer seed from ``seed`` and ``keys``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key(k) for k in keys))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


# ---------------------------------------------------------------------------
# Packing
# ---------------------------------------------------------------------------

def n_words(dim: int) -> int:
    return (dim + 63) // 64


def pack_rows(bipolar: np.ndarray) -> np.ndarray:
    """Pack a ``(..., dim)`` array of +/-1 values into ``(..., n_words)`` words."""
    bipolar = np.asarray(bipolar)
    dim = bipolar.shape[-1]
    bits = np.packbits(bipolar > 0, axis=-1, bitorder="little")
    pad = n_words(dim) * 8 - bits.shape[-1]
    if pad:
        widths = [(0, 0)] * (bits.ndim - 1) + [(0, pad)]
        bits = np.pad(bits, widths)
    return np.ascontiguousarray(bits).view(WORD)


def unpack_bits(words: np.ndarray, dim: int) -> np.ndarray:
    """Unpack words into a ``(..., dim)`` array of 0/1 ``uint8`` values."""
    words = np.ascontiguousarray(words, dtype=WORD)
    return np.unpackbits(words.view(np.uint8), axis=-1, count=dim, bitorder="little")


def unpack_rows(words: np.ndarray, dim: int) -> np.ndarray:
    """Unpack words into a ``(..., dim)`` ``int8`` bipolar array."""
    bits = unpack_bits(words, dim).view(np.int8)
    return 2 * bits - 1


def _tail_mask(dim: int) -> np.ndarray:
    mask = np.full(n_words(dim), np.iinfo(np.uint64).max, dtype=WORD)
    rem = dim % 64
    if rem:
        mask[-1] = np.uint64((1 << rem) - 1)
    return mask


# ---------------------------------------------------------------------------
# Hypervector
# ---------------------------------------------------------------------------

class Hypervector:
    """An immutable bipolar hypervector."""

    __slots__ = ("_words", "dim")

    def __init__(self, words: np.ndarray, dim: int):
        words = np.array(words, dtype=WORD).reshape(-1)
        if dim <= 0:
            raise ContractViolation(f"dim must be positive, got {dim}")
        if words.shape != (n_words(dim),):
            raise ContractViolation(
                f"expected {n_words(dim)} words for dim={dim}, got {words.shape[0]}"
            )
        words &= _tail_mask(dim)
        words.flags.writeable = False
        self._words = words
        self.dim = int(dim)

    @property
    def words(self) -> np.ndarray:
        return self._words

    @classmethod
    def from_bipolar(cls, values) -> "Hypervector":
        values = np.asarray(values)
        if values.ndim != 1:
            raise ContractViolation("from_bipolar expects a 1-D array")
        if not np.all(np.abs(values) == 1):
            raise ContractViolation("bipolar values must be -1 or +1")
        return cls(pack_rows(values), values.shape[0])

    def to_bipolar(self) -> np.ndarray:
        return unpack_rows(self._words, self.dim)

    def __len__(self) -> int:
        return self.dim

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hypervector):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self._words, other._words)

    def __hash__(self) -> int:
        return hash((self.dim, self._words.tobytes()))

    def __neg__(self) -> "Hypervector":
        return negate(self)

    def __mul__(self, other: "Hypervector") -> "Hypervector":
        return bind(self, other)

    def __repr__(self) -> str:
        ones = int(np.bitwise_count(self._words).sum())
        return f"Hypervector(dim={self.dim}, n_plus={ones})"


def _check_dims(*hvs: Hypervector) -> int:
    dim = hvs[0].dim
    for h in hvs[1:]:
        if h.dim != dim:
            raise ContractViolation(f"dimension mismatch: {dim} != {h.dim}")
    return dim


def random_hv(rng: np.random.Generator, dim: int = DEFAULT_DIM) -> Hypervector:
    """Draw an HV whose elements are independent fair +/-1 coins."""
    return Hypervector(pack_rows(random_bipolar(rng, (dim,))), dim)


def random_bipolar(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.integers(0, 2, size=shape, dtype=np.int8) * 2 - 1).astype(np.int8)


def identity(dim: int = DEFAULT_DIM) -> Hypervector:
    """The all-(+1) vector, neutral element of ``bind``."""
    return Hypervector(_tail_mask(dim), dim)


def negate(a: Hypervector) -> Hypervector:
    return Hypervector(~a.words, a.dim)


def bind(a: Hypervector, b: Hypervector) -> Hypervector:
    """Element-wise product (XNOR on packed bits)."""
    dim = _check_dims(a, b)
    return Hypervector(~(a.words ^ b.words), dim)


def bind_rows(a: np.ndarray, b: np.ndarray, dim: int) -> np.ndarray:
    """Bind packed rows element-wise (broadcasting like ``a ^ b``)."""
    return ~(a ^ b) & _tail_mask(dim)


def permute(a: Hypervector, k: int) -> Hypervector:
    """Cyclically rotate elements ``k`` positions toward higher indices."""
    return Hypervector(pack_rows(np.roll(a.to_bipolar(), k)), a.dim)


def sign_with_ties(values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Bipolar sign of ``values``; zeros become fair coin flips.

    Always draws one coin per element so the amount of randomness consumed
    does not depend on how many ties occur.
    """
    values = np.asarray(values)
    coins = random_bipolar(rng, values.shape)
    out = np.sign(values).astype(np.int8)
    ties = out == 0
    out[ties] = coins[ties]
    return out


def bundle(hvs: Sequence[Hypervector], rng: np.random.Generator) -> Hypervector:
    """Element-wise majority with random tiebreaks."""
    if len(hvs) == 0:
        raise ContractViolation("cannot bundle an empty list")
    dim = _check_dims(*hvs)
    acc = Accumulator.zeros(dim)
    for h in hvs:
        acc = accumulate(acc, h)
    return bipolarize(acc, rng)


# ---------------------------------------------------------------------------
# Integer superposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Accumulator:
    """Signed per-element counts of a superposition of HVs."""

    counts: np.ndarray
    n_added: int = 0

    @property
    def dim(self) -> int:
        return self.counts.shape[0]

    @classmethod
    def zeros(cls, dim: int = DEFAULT_DIM) -> "Accumulator":
        return cls(np.zeros(dim, dtype=np.int64), 0)


def accumulate(acc: Accumulator, hv: Hypervector, weight: int = 1) -> Accumulator:
    """Return ``acc`` with ``weight * hv`` added."""
    if acc.dim != hv.dim:
        raise ContractViolation(f"dimension mismatch: {acc.dim} != {hv.dim}")
    if int(weight) != weight:
        raise ContractViolation("accumulator weights must be integers")
    weight = int(weight)
    counts = acc.counts + weight * hv.to_bipolar().astype(np.int64)
    return Accumulator(counts, acc.n_added + abs(weight))


def bipolarize(acc: Accumulator, rng: np.random.Generator) -> Hypervector:
    """Sign of the accumulated counts, zeros resolved by ``rng``."""
    return Hypervector(pack_rows(sign_with_ties(acc.counts, rng)), acc.dim)


# ---------------------------------------------------------------------------
# Similarity
# ---------------------------------------------------------------------------

def hamming(a: Hypervector, b: Hypervector) -> float:
    """Normalized Hamming distance in [0, 1]."""
    dim = _check_dims(a, b)
    return int(np.bitwise_count(a.words ^ b.words).sum()) / dim


def dot(a: Hypervector, b: Hypervector) -> int:
    dim = _check_dims(a, b)
    diff = int(np.bitwise_count(a.words ^ b.words).sum())
    return dim - 2 * diff


def hamming_counts(queries: np.ndarray, refs: np.ndarray) -> np.ndarray:
    """Differing-element counts between packed rows, shape ``(n_q, n_ref)``."""
    queries = np.atleast_2d(queries)
    refs = np.atleast_2d(refs)
    if queries.shape[-1] != refs.shape[-1]:
        raise ContractViolation("packed rows have different word counts")
    out = np.empty((queries.shape[0], refs.shape[0]), dtype=np.int64)
    step = max(1, 2_000_000 // max(1, refs.size))
    for i in range(0, queries.shape[0], step):
        q = queries[i : i + step, None, :]
        out[i : i + step] = np.bitwise_count(q ^ refs[None, :, :]).sum(-1, dtype=np.int64)
    return out


def stack(hvs: Iterable[Hypervector]) -> np.ndarray:
    """Stack HVs into a packed ``(n, n_words)`` array."""
    hvs = list(hvs)
    if hvs:
        _check_dims(*hvs)
    return np.stack([h.words for h in hvs]) if hvs else np.zeros((0, 0), dtype=WORD)
