"""Projection of EMG and accelerometer features into hypervectors.

EMG: each 50 ms window of per-channel MAV values is spatially encoded as the
bipolarized, MAV-weighted sum of the channel item memory. Five consecutive
spatial HVs are then combined by permute-and-bind into one temporal HV that
covers 250 ms, sliding one window at a time.

Accelerometer: each axis is clamped to [-1 g, +1 g], quantized uniformly and
looked up in its own continuous item memory; the three level HVs are bound
into a single context HV.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from . import hv
from .errors import ContractViolation
from .hv import Hypervector
from .memories import ContinuousItemMemory, ItemMemory

N_TEMPORAL = 5


class ShortRepetitionWarning(UserWarning):
    """A repetition had fewer windows than the temporal span and was skipped."""


@dataclass(frozen=True)
class FeatureWindow:
    mav: np.ndarray
    accel: np.ndarray
    gesture: Hashable
    position: Hashable
    repetition: int
    window_index: int


@dataclass(frozen=True)
class EncodedSample:
    emg_hv: Hypervector
    accel_mean: np.ndarray
    gesture: Hashable
    position: Hashable
    context_hv: Hypervector | None = None


class EncodedSet:
    """A batch of encoded samples stored column-wise.

    Behaves as a read-only sequence of :class:`EncodedSample`; the array
    attributes are what the classifiers work on.
    """

    def __init__(self, emg, accel_mean, gesture, position, dim: int, item_memory_seed: int,
                 repetition=None, start_window=None):
        self.emg = np.asarray(emg, dtype=hv.WORD).reshape(-1, hv.n_words(dim))
        n = self.emg.shape[0]
        self.accel_mean = np.asarray(accel_mean, dtype=np.float64).reshape(n, 3)
        self.gesture = np.asarray(gesture)
        self.position = np.asarray(position)
        self.repetition = np.zeros(n, np.int64) if repetition is None else np.asarray(repetition)
        self.start_window = (np.zeros(n, np.int64) if start_window is None
                             else np.asarray(start_window))
        self.dim = dim
        self.item_memory_seed = item_memory_seed
        for name in ("gesture", "position", "repetition", "start_window"):
            if getattr(self, name).shape != (n,):
                raise ContractViolation(f"{name} must have one entry per sample")

    def __len__(self) -> int:
        return self.emg.shape[0]

    def __getitem__(self, i):
        if isinstance(i, (int, np.integer)):
            return EncodedSample(Hypervector(self.emg[i], self.dim), self.accel_mean[i].copy(),
                                 self.gesture[i].item(), self.position[i].item())
        return self.subset(np.arange(len(self))[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def subset(self, idx) -> "EncodedSet":
        idx = np.asarray(idx)
        return EncodedSet(self.emg[idx], self.accel_mean[idx], self.gesture[idx],
                          self.position[idx], self.dim, self.item_memory_seed,
                          self.repetition[idx], self.start_window[idx])

    def with_labels(self, gesture=None, position=None) -> "EncodedSet":
        return EncodedSet(self.emg, self.accel_mean,
                          self.gesture if gesture is None else gesture,
                          self.position if position is None else position,
                          self.dim, self.item_memory_seed, self.repetition, self.start_window)

    @classmethod
    def from_samples(cls, samples: Sequence[EncodedSample], item_memory_seed: int) -> "EncodedSet":
        if not samples:
            raise ContractViolation("no samples")
        dim = samples[0].emg_hv.dim
        return cls(np.stack([s.emg_hv.words for s in samples]),
                   np.stack([s.accel_mean for s in samples]),
                   np.array([s.gesture for s in samples]),
                   np.array([s.position for s in samples]), dim, item_memory_seed)

    @staticmethod
    def concat(parts: Sequence["EncodedSet"]) -> "EncodedSet":
        first = parts[0]
        for p in parts[1:]:
            if p.dim != first.dim or p.item_memory_seed != first.item_memory_seed:
                raise ContractViolation("cannot concatenate sets from different item memories")
        return EncodedSet(np.concatenate([p.emg for p in parts]),
                          np.concatenate([p.accel_mean for p in parts]),
                          np.concatenate([p.gesture for p in parts]),
                          np.concatenate([p.position for p in parts]),
                          first.dim, first.item_memory_seed,
                          np.concatenate([p.repetition for p in parts]),
                          np.concatenate([p.start_window for p in parts]))


# ---------------------------------------------------------------------------
# EMG
# ---------------------------------------------------------------------------

def _spatial_rows(mav: np.ndarray, im: ItemMemory, seed: int, keys) -> np.ndarray:
    """Spatially encode a ``(m, n_channels)`` block; returns int8 bipolar rows."""
    sums = mav @ im.bipolar.astype(np.float64)
    out = np.sign(sums).astype(np.int8)
    for r in np.flatnonzero((out == 0).any(axis=1)):
        rng = hv.make_rng(seed, "spatial", *keys[r])
        out[r] = hv.sign_with_ties(sums[r], rng)
    return out


def encode_spatial(mav, im: ItemMemory, rng: np.random.Generator) -> Hypervector:
    """Bipolarized sum of channel HVs weighted by their MAV values."""
    mav = np.asarray(mav, dtype=np.float64)
    if mav.shape != (len(im),):
        raise ContractViolation(f"expected {len(im)} channel weights, got shape {mav.shape}")
    sums = mav @ im.bipolar.astype(np.float64)
    return Hypervector(hv.pack_rows(hv.sign_with_ties(sums, rng)), im.dim)


def _temporal_rows(spatial: np.ndarray) -> np.ndarray:
    m = spatial.shape[0]
    n_out = m - N_TEMPORAL + 1
    out = np.ones((n_out, spatial.shape[1]), dtype=np.int8)
    for i in range(N_TEMPORAL):
        shift = N_TEMPORAL - 1 - i
        rolled = np.roll(spatial[i : i + n_out], shift, axis=1) if shift else spatial[i : i + n_out]
        out *= rolled
    return out


def encode_temporal(spatials: Sequence[Hypervector]) -> Hypervector:
    """Bind five spatial HVs, oldest first; the oldest is rotated 4 places, the newest 0."""
    if len(spatials) != N_TEMPORAL:
        raise ContractViolation(f"temporal encoding needs {N_TEMPORAL} HVs, got {len(spatials)}")
    out = hv.identity(spatials[0].dim)
    for i, s in enumerate(spatials):
        out = hv.bind(out, hv.permute(s, N_TEMPORAL - 1 - i))
    return out


def _group_runs(gesture, position, repetition, window_index):
    """Yield index arrays for each (gesture, position, repetition) run, time-ordered."""
    n = len(gesture)
    if n == 0:
        return
    keys = np.array([f"{g}\x1f{p}\x1f{r}" for g, p, r in zip(gesture, position, repetition)])
    order = np.lexsort((np.asarray(window_index), keys))
    sorted_keys = keys[order]
    cuts = np.flatnonzero(sorted_keys[1:] != sorted_keys[:-1]) + 1
    yield from np.split(order, cuts)


def _as_columns(windows):
    if hasattr(windows, "mav") and not isinstance(windows, FeatureWindow):
        return (np.asarray(windows.mav, float), np.asarray(windows.accel, float),
                np.asarray(windows.gesture), np.asarray(windows.position),
                np.asarray(windows.repetition), np.asarray(windows.window_index))
    windows = list(windows)
    if not windows:
        return (np.zeros((0, 0)), np.zeros((0, 3)), np.zeros(0, int), np.zeros(0, int),
                np.zeros(0, int), np.zeros(0, int))
    return (np.stack([w.mav for w in windows]).astype(float),
            np.stack([w.accel for w in windows]).astype(float),
            np.array([w.gesture for w in windows]), np.array([w.position for w in windows]),
            np.array([w.repetition for w in windows]), np.array([w.window_index for w in windows]))


def encode_stream(windows, im: ItemMemory, seed: int = 0) -> EncodedSet:
    """Encode every 5-window span (stride 1) of every repetition.

    ``windows`` is a sequence of :class:`FeatureWindow` or any object with
    the column arrays ``mav``, ``accel``, ``gesture``, ``position``,
    ``repetition`` and ``window_index`` (such as a generated dataset).
    Spatial ties are broken by a generator derived from ``seed`` and the
    window's labels, so the result does not depend on processing order.
    Repetitions shorter than five windows are skipped with a
    :class:`ShortRepetitionWarning`.
    """
    mav, accel, gesture, position, repetition, window_index = _as_columns(windows)
    if mav.size and mav.shape[1] != len(im):
        raise ContractViolation(f"windows have {mav.shape[1]} channels, item memory has {len(im)}")
    if mav.size and (mav < 0).any():
        raise ContractViolation("MAV values must be non-negative")

    emg, acc, g_out, p_out, r_out, w_out = [], [], [], [], [], []
    for run in _group_runs(gesture, position, repetition, window_index):
        if len(run) < N_TEMPORAL:
            warnings.warn(
                f"repetition (gesture={gesture[run[0]]}, position={position[run[0]]}, "
                f"rep={repetition[run[0]]}) has {len(run)} windows; skipped",
                ShortRepetitionWarning, stacklevel=2)
            continue
        keys = [(gesture[i], position[i], repetition[i], window_index[i]) for i in run]
        spatial = _spatial_rows(mav[run], im, seed, keys)
        emg.append(hv.pack_rows(_temporal_rows(spatial)))
        n_out = len(run) - N_TEMPORAL + 1
        a = accel[run]
        csum = np.concatenate([np.zeros((1, 3)), np.cumsum(a, axis=0)])
        acc.append((csum[N_TEMPORAL:] - csum[:n_out]) / N_TEMPORAL)
        g_out.append(gesture[run[:n_out]])
        p_out.append(position[run[:n_out]])
        r_out.append(repetition[run[:n_out]])
        w_out.append(window_index[run[:n_out]])

    if not emg:
        return EncodedSet(np.zeros((0, hv.n_words(im.dim)), hv.WORD), np.zeros((0, 3)),
                          np.zeros(0, int), np.zeros(0, int), im.dim, im.seed)
    return EncodedSet(np.concatenate(emg), np.concatenate(acc), np.concatenate(g_out),
                      np.concatenate(p_out), im.dim, im.seed,
                      np.concatenate(r_out), np.concatenate(w_out))


# ---------------------------------------------------------------------------
# Accelerometer
# ---------------------------------------------------------------------------

def quantize_accel(a, levels: int):
    """Map acceleration in g to a level in ``[0, levels - 1]`` after clamping to +/-1 g."""
    if levels < 2:
        raise ContractViolation(f"need at least 2 levels, got {levels}")
    a = np.clip(np.asarray(a, dtype=np.float64), -1.0, 1.0)
    q = np.rint((a + 1.0) / 2.0 * (levels - 1)).astype(np.int64)
    return int(q) if q.ndim == 0 else q


def context_rows(accel: np.ndarray, cims: Sequence[ContinuousItemMemory]) -> np.ndarray:
    """Packed context HVs for a ``(n, 3)`` array of accelerometer means."""
    if len(cims) != 3:
        raise ContractViolation(f"need one CIM per axis, got {len(cims)}")
    accel = np.asarray(accel, dtype=np.float64).reshape(-1, 3)
    dim = cims[0].dim
    q = [quantize_accel(accel[:, k], cims[k].params.levels) for k in range(3)]
    yz = hv.bind_rows(cims[1].words[q[1]], cims[2].words[q[2]], dim)
    return hv.bind_rows(cims[0].words[q[0]], yz, dim)


def encode_accel_context(accel, cims: Sequence[ContinuousItemMemory]) -> Hypervector:
    """Bind the x, y and z level HVs of one accelerometer triple."""
    accel = np.asarray(accel, dtype=np.float64)
    if accel.shape != (3,):
        raise ContractViolation(f"accelerometer triple expected, got shape {accel.shape}")
    return Hypervector(context_rows(accel, cims)[0], cims[0].dim)
