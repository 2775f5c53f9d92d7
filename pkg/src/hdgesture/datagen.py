"""Seeded synthetic EMG + accelerometer datasets and their on-disk format.

The generator follows a fixed protocol: every gesture is held in every limb
position for a number of repetitions, and each repetition contributes a run
of 50 ms feature windows (64 channel MAV values plus mean x/y/z acceleration).

EMG model. The 64 channels form an 8 x 8 ring-by-sector grid around the
forearm. Each gesture has a non-negative pattern: a tonic baseline shared
by all gestures plus a log-normal activation blob on its own grid cell (the
rest gesture has none). Every limb position except position 0 blends the
pattern with a copy rotated around the forearm by a position-specific
number of sectors, with per-channel gains; ``position_distortion`` is the
blend weight. Because rotation moves one gesture's blob onto another's
cell, positions create cross-gesture confusions rather than plain noise.
Repetitions and windows add multiplicative log-normal noise.

Accelerometer model. Gravity only: each position has a fixed unit vector in
the sensor frame, with Gaussian noise per window. Positions listed in
``paired_positions`` share an orientation up to a small rotation, so they
are hard to tell apart from the accelerometer alone.

File format: see :func:`save`.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import hv
from .encoders import FeatureWindow
from .errors import ChecksumError, ContractViolation, MalformedFileError, MissingColumnsError

# Sensor-frame gravity directions for the first positions. Position 4 is left
# equal to position 0 because it is paired with it by default.
_ORIENTATIONS = np.array([
    (0.0, 0.0, 1.0),
    (1.0, 0.0, 0.0),
    (-1.0, 0.0, 0.0),
    (0.0, 1.0, 0.0),
    (0.0, 0.0, 1.0),
    (0.0, -1.0, 0.0),
    (0.0, 0.0, -1.0),
    (0.7071067811865476, 0.7071067811865476, 0.0),
])


@dataclass(frozen=True)
class GenConfig:
    n_gestures: int = 13
    n_positions: int = 8
    n_reps: int = 3
    windows_per_rep: int = 80
    n_channels: int = 64
    emg_noise_sigma: float = 0.25
    rep_noise_sigma: float = 0.05
    position_distortion: float = 0.6
    accel_noise_sigma: float = 0.005
    paired_positions: tuple = ((0, 4),)
    pair_angle_deg: float = 2.0
    active_channels: int = 8
    baseline: float = 0.3
    seed: int = 0

    def __post_init__(self):
        for name in ("n_gestures", "n_positions", "n_reps", "windows_per_rep", "n_channels"):
            if getattr(self, name) < 1:
                raise ContractViolation(f"{name} must be at least 1")
        if not 0.0 <= self.position_distortion <= 1.0:
            raise ContractViolation("position_distortion must lie in [0, 1]")
        if not 0.0 <= self.pair_angle_deg <= 2.0:
            raise ContractViolation("pair_angle_deg must lie in [0, 2]")
        pairs = tuple(tuple(int(x) for x in p) for p in self.paired_positions)
        for a, b in pairs:
            if not (0 <= a < self.n_positions and 0 <= b < self.n_positions) or a == b:
                raise ContractViolation(f"invalid position pair {(a, b)}")
        object.__setattr__(self, "paired_positions", pairs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["paired_positions"] = [list(p) for p in self.paired_positions]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        d = dict(d)
        if "paired_positions" in d:
            d["paired_positions"] = tuple(tuple(p) for p in d["paired_positions"])
        return cls(**d)


@dataclass
class Dataset:
    """Feature windows stored column-wise, one row per window."""

    mav: np.ndarray
    accel: np.ndarray
    gesture: np.ndarray
    position: np.ndarray
    repetition: np.ndarray
    window_index: np.ndarray
    manifest: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.mav.shape[0]

    @property
    def windows(self) -> list[FeatureWindow]:
        return [FeatureWindow(self.mav[i], self.accel[i], int(self.gesture[i]),
                              int(self.position[i]), int(self.repetition[i]),
                              int(self.window_index[i])) for i in range(len(self))]

    def subset(self, mask) -> "Dataset":
        return Dataset(self.mav[mask], self.accel[mask], self.gesture[mask], self.position[mask],
                       self.repetition[mask], self.window_index[mask], dict(self.manifest))


def _unit(v):
    return v / np.linalg.norm(v)


def _rotate_away(u: np.ndarray, angle_rad: float, rng) -> np.ndarray:
    """Rotate unit vector ``u`` by ``angle_rad`` towards a random perpendicular."""
    r = rng.normal(size=3)
    perp = _unit(r - (r @ u) * u)
    return np.cos(angle_rad) * u + np.sin(angle_rad) * perp


def gravity_vectors(config: GenConfig) -> np.ndarray:
    """Noise-free sensor-frame gravity vector of every position, shape ``(P, 3)``."""
    rng = hv.make_rng(config.seed, "gravity")
    P = config.n_positions
    g = np.empty((P, 3))
    for p in range(P):
        g[p] = _ORIENTATIONS[p] if p < len(_ORIENTATIONS) else _unit(rng.normal(size=3))
    for a, b in config.paired_positions:
        g[b] = _rotate_away(g[a], np.deg2rad(config.pair_angle_deg), rng)
    return g


def _grid(n_channels: int):
    sectors = max(1, int(round(np.sqrt(n_channels))))
    ch = np.arange(n_channels)
    return ch // sectors, ch % sectors, sectors


def _rotate_sectors(pattern: np.ndarray, shift: int, sectors: int) -> np.ndarray:
    """Cyclically shift channels around the forearm (within each ring)."""
    C = pattern.shape[-1]
    ch = np.arange(C)
    ring, sector = ch // sectors, ch % sectors
    src = ring * sectors + (sector - shift) % sectors
    src = np.where(src < C, src, ch)
    return pattern[..., src]


def gesture_patterns(config: GenConfig) -> np.ndarray:
    """Position-distorted mean MAV pattern, shape ``(G, P, n_channels)``.

    Channels form a ring x sector grid around the forearm. Each active
    gesture adds a log-normal blob centred on its own grid cell. A position
    blends the pattern with a copy rotated around the forearm by a
    position-specific number of sectors and scaled by per-channel gains.
    """
    rng = hv.make_rng(config.seed, "patterns")
    G, P, C = config.n_gestures, config.n_positions, config.n_channels
    ring, sector, n_sectors = _grid(C)
    baseline = config.baseline * rng.lognormal(0.0, 0.3, C)
    base = np.tile(baseline, (G, 1))
    centres = rng.choice(C, size=min(G, C), replace=False)
    width = max(0.5, np.sqrt(config.active_channels) / 2.0)
    for g in range(1, G):
        c = centres[g % len(centres)]
        dr = ring - ring[c]
        ds = (sector - sector[c] + n_sectors // 2) % n_sectors - n_sectors // 2
        blob = np.exp(-(dr ** 2 + ds ** 2) / (2 * width ** 2))
        base[g] += rng.lognormal(0.0, 0.3) * blob

    delta = config.position_distortion
    out = np.empty((G, P, C))
    for p in range(P):
        if p == 0:
            out[:, p] = base
            continue
        shift = int(rng.integers(1, n_sectors)) if n_sectors > 1 else 0
        gain = rng.lognormal(0.0, 0.3, C)
        out[:, p] = (1.0 - delta) * base + delta * gain * _rotate_sectors(base, shift, n_sectors)
    return out


def generate(config: GenConfig = GenConfig()) -> Dataset:
    G, P, R, W, C = (config.n_gestures, config.n_positions, config.n_reps,
                     config.windows_per_rep, config.n_channels)
    patterns = gesture_patterns(config)
    gravity = gravity_vectors(config)
    rng = hv.make_rng(config.seed, "noise")

    # row order: position, gesture, repetition, window
    pos, ges, rep, win = np.meshgrid(np.arange(P), np.arange(G), np.arange(R), np.arange(W),
                                     indexing="ij")
    pos, ges, rep, win = (a.reshape(-1) for a in (pos, ges, rep, win))

    rep_gain = rng.lognormal(0.0, config.rep_noise_sigma, (P, G, R, C))
    win_gain = rng.lognormal(0.0, config.emg_noise_sigma, (pos.size, C))
    mav = patterns[ges, pos] * rep_gain[pos, ges, rep] * win_gain
    accel = gravity[pos] + rng.normal(0.0, config.accel_noise_sigma, (pos.size, 3))

    ds = Dataset(mav, accel, ges, pos, rep, win)
    ds.manifest = {"config": config.to_dict(), "n_rows": len(ds)}
    return ds


# ---------------------------------------------------------------------------
# Text table I/O
# ---------------------------------------------------------------------------

def columns(n_channels: int = 64) -> list[str]:
    return (["position", "gesture", "repetition", "window_index"]
            + [f"mav_{i}" for i in range(n_channels)] + ["acc_x", "acc_y", "acc_z"])


def manifest_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".manifest.json")


def _table_text(ds: Dataset) -> str:
    buf = io.StringIO()
    n_ch = ds.mav.shape[1]
    buf.write(",".join(columns(n_ch)) + "\n")
    ints = np.column_stack([ds.position, ds.gesture, ds.repetition, ds.window_index]).astype(np.int64)
    floats = np.column_stack([ds.mav, ds.accel])
    for i in range(len(ds)):
        buf.write(",".join(str(v) for v in ints[i]))
        buf.write(",")
        buf.write(",".join(format(v, ".6g") for v in floats[i]))
        buf.write("\n")
    return buf.getvalue()


def save(ds: Dataset, path) -> Path:
    """Write ``ds`` as a CSV table plus a JSON manifest sidecar.

    Table: a header row, then one row per window with columns ``position,
    gesture, repetition, window_index, mav_0 .. mav_63, acc_x, acc_y,
    acc_z``; labels are integers, features use 6 significant digits.
    The sidecar ``<path>.manifest.json`` holds the generator config, the row
    count, the channel count and the SHA-256 of the table bytes.
    """
    path = Path(path)
    data = _table_text(ds).encode()
    path.write_bytes(data)
    manifest = dict(ds.manifest)
    manifest.update(n_rows=len(ds), n_channels=int(ds.mav.shape[1]),
                    sha256=hashlib.sha256(data).hexdigest())
    manifest_path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load(path, verify: bool = True) -> Dataset:
    """Read a table written by :func:`save`.

    Raises:
      MissingColumnsError: the header lacks required columns.
      MalformedFileError: unparseable rows or a row count that disagrees
        with the manifest (e.g. a truncated file).
      ChecksumError: the table bytes do not match the manifest checksum.
    """
    path = Path(path)
    data = path.read_bytes()
    mpath = manifest_path(path)
    manifest = None
    if mpath.exists():
        try:
            manifest = json.loads(mpath.read_text())
        except json.JSONDecodeError as e:
            raise MalformedFileError(f"{mpath}: manifest is not valid JSON ({e})") from None
    elif verify:
        raise MalformedFileError(f"{path}: manifest sidecar {mpath.name} not found")

    lines = data.decode("utf-8", errors="replace").splitlines()
    if not lines:
        raise MalformedFileError(f"{path}: empty file")
    header = lines[0].strip().split(",")
    n_ch = sum(1 for h in header if h.startswith("mav_"))
    expected = columns(n_ch)
    missing = [c for c in columns(n_ch if n_ch else 64) if c not in header]
    if missing or n_ch == 0:
        raise MissingColumnsError(f"{path}: missing columns {missing[:5]}{'...' if len(missing) > 5 else ''}")
    col = [header.index(c) for c in expected]

    rows = [ln for ln in lines[1:] if ln.strip()]
    table = np.empty((len(rows), len(expected)))
    for i, ln in enumerate(rows):
        fields = ln.split(",")
        if len(fields) != len(header):
            raise MalformedFileError(
                f"{path}: row {i + 2} has {len(fields)} fields, expected {len(header)}")
        try:
            vals = [float(fields[j]) for j in col]
        except ValueError:
            raise MalformedFileError(f"{path}: row {i + 2} has a non-numeric field") from None
        table[i] = vals

    if manifest is not None:
        if "n_rows" in manifest and manifest["n_rows"] != len(rows):
            raise MalformedFileError(
                f"{path}: {len(rows)} rows but manifest says {manifest['n_rows']} (truncated?)")
        if verify and manifest.get("sha256") != hashlib.sha256(data).hexdigest():
            raise ChecksumError(f"{path}: content does not match manifest checksum")

    labels = table[:, :4]
    if not np.array_equal(labels, np.rint(labels)):
        raise MalformedFileError(f"{path}: label columns must be integers")
    labels = labels.astype(np.int64)
    mav = table[:, 4 : 4 + n_ch]
    if (mav < 0).any():
        raise MalformedFileError(f"{path}: negative MAV value")
    return Dataset(mav, table[:, 4 + n_ch :], labels[:, 1], labels[:, 0], labels[:, 2],
                   labels[:, 3], manifest or {})


def config_of(ds: Dataset) -> GenConfig | None:
    cfg = ds.manifest.get("config")
    return GenConfig.from_dict(cfg) if cfg else None
