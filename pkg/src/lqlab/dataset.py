"""HELLO-beacon traces, windowed samples and environment-partitioned sets."""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .channel import ChannelParams, draw_links

TWO_CLASS = "two-class"
FOUR_CLASS = "four-class"
SCHEMES = (TWO_CLASS, FOUR_CLASS)

LOST, RECEIVED = 0, 1
G, MG, MB, B = 0, 1, 2, 3
LABEL_NAMES = {
    TWO_CLASS: ("Lost", "Received"),
    FOUR_CLASS: ("G", "MG", "MB", "B"),
}

DEFAULT_K = 10
DEFAULT_HORIZON = 3
DEFAULT_SENTINEL_DBM = -110.0


def n_classes(scheme: str) -> int:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    return 2 if scheme == TWO_CLASS else 4


def label_lookahead(scheme: str, horizon: int = DEFAULT_HORIZON) -> int:
    """Number of cycles after the window that a label consumes."""
    return 1 if n_classes(scheme) == 2 else horizon


@dataclass(frozen=True)
class BeaconTrace:
    distance: float
    received: np.ndarray
    rssi_dbm: np.ndarray
    sentinel_dbm: float = DEFAULT_SENTINEL_DBM

    def __post_init__(self) -> None:
        if self.received.shape != self.rssi_dbm.shape or self.received.ndim != 1:
            raise ValueError("received and rssi_dbm must be 1-d arrays of equal length")

    def __len__(self) -> int:
        return len(self.received)

    @classmethod
    def from_pattern(cls, pattern: str, distance: float = 1.0,
                     rssi_dbm: float = -60.0,
                     sentinel_dbm: float = DEFAULT_SENTINEL_DBM) -> "BeaconTrace":
        """Build a trace from a string such as ``"RRLR"`` (testing helper)."""
        rec = np.array([c == "R" for c in pattern.upper()], dtype=bool)
        rssi = np.where(rec, rssi_dbm, sentinel_dbm)
        return cls(distance, rec, rssi.astype(float), sentinel_dbm)


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    label: int
    env_id: int


@dataclass(frozen=True)
class EnvDescriptor:
    """One environment: a distance (``lo == hi``) or a distance bin.

    ``pair_distances`` lists the node-pair distances actually simulated
    inside the bin and ``pair_counts`` how many samples each contributed.
    """

    env_id: int
    lo: float
    hi: float
    pair_distances: tuple[float, ...]
    pair_counts: tuple[int, ...]

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def to_dict(self) -> dict:
        return {
            "env_id": self.env_id,
            "lo": self.lo,
            "hi": self.hi,
            "pair_distances": list(self.pair_distances),
            "pair_counts": list(self.pair_counts),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnvDescriptor":
        return cls(int(d["env_id"]), float(d["lo"]), float(d["hi"]),
                   tuple(float(x) for x in d["pair_distances"]),
                   tuple(int(x) for x in d["pair_counts"]))


@dataclass
class SampleSet:
    """Labeled windows. ``features`` holds raw values, interleaved per cycle
    as ``[bit_0, rssi_0, bit_1, rssi_1, ...]`` with RSSI in dBm."""

    features: np.ndarray
    labels: np.ndarray
    env_ids: np.ndarray
    distances: np.ndarray
    envs: tuple[EnvDescriptor, ...]
    scheme: str
    K: int
    sentinel_dbm: float = DEFAULT_SENTINEL_DBM
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.labels)
        if self.features.shape != (n, 2 * self.K):
            raise ValueError(f"features must have shape ({n}, {2 * self.K})")
        if len(self.env_ids) != n or len(self.distances) != n:
            raise ValueError("per-sample arrays differ in length")
        m = n_classes(self.scheme)
        if n and (self.labels.min() < 0 or self.labels.max() >= m):
            raise ValueError(f"labels outside 0..{m - 1}")
        known = {e.env_id for e in self.envs}
        if n and not set(np.unique(self.env_ids).tolist()) <= known:
            raise ValueError("sample references an unknown environment")

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[Sample]:
        for x, t, e in zip(self.features, self.labels, self.env_ids):
            yield Sample(x, int(t), int(e))

    @property
    def n_classes(self) -> int:
        return n_classes(self.scheme)

    def env(self, env_id: int) -> EnvDescriptor:
        for e in self.envs:
            if e.env_id == env_id:
                return e
        raise KeyError(env_id)

    def subset(self, index) -> "SampleSet":
        """Rows selected by a boolean mask or an index array; keeps all envs."""
        return SampleSet(self.features[index], self.labels[index],
                         self.env_ids[index], self.distances[index], self.envs,
                         self.scheme, self.K, self.sentinel_dbm, dict(self.meta))


def generate_trace(d: float, n_cycles: int, params: ChannelParams,
                   rng: np.random.Generator,
                   sentinel_dbm: float = DEFAULT_SENTINEL_DBM) -> BeaconTrace:
    """Simulate ``n_cycles`` HELLO broadcasts over a link of length ``d``.

    Every cycle is an independent shadowing draw. Lost cycles carry
    ``sentinel_dbm`` in place of an RSSI reading.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    _, rssi, rec = draw_links(d, n_cycles, params, rng)
    rssi = np.where(rec, rssi, sentinel_dbm)
    return BeaconTrace(float(d), rec, rssi, sentinel_dbm)


def window_features(trace: BeaconTrace, K: int, n_windows: int, stride: int = 1) -> np.ndarray:
    """The first ``n_windows`` windows of ``K`` cycles, interleaved, starting
    every ``stride`` cycles."""
    bits = trace.received.astype(float)
    cols = np.empty((len(trace), 2))
    cols[:, 0] = bits
    cols[:, 1] = trace.rssi_dbm
    view = np.lib.stride_tricks.sliding_window_view(cols, K, axis=0)[::stride][:n_windows]
    # view is (n, 2, K); interleave to (n, K, 2) then flatten
    return np.ascontiguousarray(view.transpose(0, 2, 1)).reshape(n_windows, 2 * K)


def _n_windows(n_cycles: int, K: int, lookahead: int, stride: int) -> int:
    span = n_cycles - K - lookahead + 1
    return 0 if span < 1 else (span - 1) // stride + 1


def window_two_class(trace: BeaconTrace, K: int,
                     stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Windows of ``K`` cycles labeled by reception in the following cycle.

    Returns ``(features, labels)``; with the default stride of 1 there are
    ``len(trace) - K`` rows.
    """
    n = _n_windows(len(trace), K, 1, stride)
    if K < 1 or n < 1:
        raise ValueError(f"trace of {len(trace)} cycles yields no samples for K={K}")
    X = window_features(trace, K, n, stride)
    y = trace.received[K::stride][:n].astype(np.int64)
    return X, y


def window_four_class(trace: BeaconTrace, K: int, horizon: int = DEFAULT_HORIZON,
                      stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Windows labeled G/MG/MB/B by the receptions in the next ``horizon`` cycles.

    A stride of ``horizon`` makes the label cycles of successive windows
    disjoint, so the labels are independent draws.
    """
    if horizon != 3:
        raise ValueError("four-class labels are defined over a 3-cycle horizon")
    n = _n_windows(len(trace), K, horizon, stride)
    if K < 1 or n < 1:
        raise ValueError(
            f"trace of {len(trace)} cycles yields no samples for K={K}, horizon={horizon}")
    X = window_features(trace, K, n, stride)
    ahead = np.lib.stride_tricks.sliding_window_view(
        trace.received[K:].astype(np.int64), horizon)[::stride][:n]
    y = horizon - ahead.sum(axis=1)
    return X, y.astype(np.int64)


def window(trace: BeaconTrace, K: int, scheme: str,
           stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    if n_classes(scheme) == 2:
        return window_two_class(trace, K, stride=stride)
    return window_four_class(trace, K, stride=stride)


def _as_interval(where) -> tuple[float, float]:
    if np.ndim(where) == 0:
        d = float(where)
        return d, d
    lo, hi = (float(v) for v in where)
    if not 0 <= lo < hi:
        raise ValueError(f"bad distance bin {where!r}")
    return lo, hi


def assemble(entries: Sequence[tuple], scheme: str, K: int, params: ChannelParams,
             rng: np.random.Generator, pairs_per_env: int = 1,
             sentinel_dbm: float = DEFAULT_SENTINEL_DBM, stride: int = 1) -> SampleSet:
    """Build a sample set with one environment per ``(where, count)`` entry.

    ``where`` is either a fixed distance or a ``(lo, hi)`` bin; for a bin,
    ``pairs_per_env`` node pairs are placed uniformly inside it and the
    ``count`` samples are shared between their traces as evenly as possible.
    Each entry gets its own child stream, so results do not depend on the
    order in which environments are generated. ``stride`` is the window
    step along each trace.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    n_classes(scheme)
    children = rng.spawn(len(entries))
    lookahead = label_lookahead(scheme)
    X_parts, y_parts, e_parts, d_parts, envs = [], [], [], [], []
    for env_id, ((where, count), child) in enumerate(zip(entries, children)):
        count = int(count)
        if count < 1:
            raise ValueError("sample counts must be >= 1")
        lo, hi = _as_interval(where)
        n_pairs = 1 if lo == hi else max(1, min(pairs_per_env, count))
        if lo == hi:
            dists = np.array([lo])
        else:
            dists = child.uniform(lo, hi, size=n_pairs)
            # uniform() may return lo exactly; distances must stay positive
            dists = np.where(dists > 0, dists, np.nextafter(lo, hi))
        counts = np.full(n_pairs, count // n_pairs)
        counts[: count % n_pairs] += 1
        for d, c in zip(dists, counts):
            if c == 0:
                continue
            n_cycles = (int(c) - 1) * stride + K + lookahead
            trace = generate_trace(d, n_cycles, params, child, sentinel_dbm)
            X, y = window(trace, K, scheme, stride)
            X_parts.append(X)
            y_parts.append(y)
            e_parts.append(np.full(len(y), env_id))
            d_parts.append(np.full(len(y), d))
        envs.append(EnvDescriptor(env_id, lo, hi, tuple(float(v) for v in dists),
                                  tuple(int(c) for c in counts)))
    return SampleSet(np.concatenate(X_parts), np.concatenate(y_parts),
                     np.concatenate(e_parts), np.concatenate(d_parts), tuple(envs),
                     scheme, K, sentinel_dbm,
                     {"params": params.to_dict(), "pairs_per_env": pairs_per_env,
                      "stride": stride})


def uniform_bins(r0: float, lo: float = 0.0, hi: float = 2.5, width: float = 0.05,
                 count: int = 100) -> list[tuple[tuple[float, float], int]]:
    """Equal-width distance bins over ``(lo*r0, hi*r0)`` with ``count`` samples each."""
    n_bins = int(round((hi - lo) / width))
    edges = r0 * np.linspace(lo, hi, n_bins + 1)
    return [((float(a), float(b)), count) for a, b in zip(edges[:-1], edges[1:])]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split(sset: SampleSet, train_fraction: float,
          rng: np.random.Generator) -> tuple[SampleSet, SampleSet]:
    """Stratified train/test split; ``round(fraction * |S_i|)`` of each env trains.

    Environments with fewer than two samples go entirely to the train side.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    train_mask = np.zeros(len(sset), dtype=bool)
    for env in sset.envs:
        idx = np.flatnonzero(sset.env_ids == env.env_id)
        if len(idx) == 0:
            continue
        if len(idx) < 2:
            warnings.warn(f"environment {env.env_id} has {len(idx)} sample(s); "
                          "assigned to the training side", stacklevel=2)
            train_mask[idx] = True
            continue
        n_train = _round_half_up(train_fraction * len(idx))
        train_mask[rng.permutation(idx)[:n_train]] = True
    return sset.subset(train_mask), sset.subset(~train_mask)


@dataclass(frozen=True)
class RssiScaler:
    """Min-max scaling of RSSI columns using bounds of received readings.

    Lost cycles carry the sentinel, which lies below every received reading
    and therefore maps below zero.
    """

    lo: float
    hi: float

    @classmethod
    def fit(cls, features: np.ndarray, sentinel_dbm: float = DEFAULT_SENTINEL_DBM) -> "RssiScaler":
        bits = features[:, 0::2] > 0.5
        rssi = features[:, 1::2][bits]
        if rssi.size == 0:
            return cls(sentinel_dbm, sentinel_dbm + 1.0)
        lo, hi = float(rssi.min()), float(rssi.max())
        if hi <= lo:
            hi = lo + 1.0
        return cls(lo, hi)

    def transform(self, features: np.ndarray) -> np.ndarray:
        out = np.array(features, dtype=float, copy=True)
        out[:, 1::2] = (out[:, 1::2] - self.lo) / (self.hi - self.lo)
        return out


# --- persistence -----------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def save_csv(sset: SampleSet, path, extra_meta: dict | None = None) -> Path:
    """Write ``env_id,distance_m,label,f_0..f_{2K-1}`` plus a JSON sidecar.

    The sidecar (``<path>.meta.json``) records scheme, K, sentinel, the
    environment table and whatever else is in ``sset.meta``/``extra_meta``.
    Both files are written to a temporary name and renamed into place.
    """
    path = Path(path)
    header = ["env_id", "distance_m", "label"] + [f"f_{j}" for j in range(2 * sset.K)]
    lines = [",".join(header)]
    for x, t, e, d in zip(sset.features, sset.labels, sset.env_ids, sset.distances):
        lines.append(",".join([str(int(e)), _fmt(d), str(int(t))] + [_fmt(v) for v in x]))
    atomic_write_text(path, "\n".join(lines) + "\n")
    meta = dict(sset.meta)
    meta.update(extra_meta or {})
    meta.update({
        "scheme": sset.scheme,
        "K": sset.K,
        "sentinel_dbm": sset.sentinel_dbm,
        "n_samples": len(sset),
        "envs": [e.to_dict() for e in sset.envs],
    })
    atomic_write_text(sidecar_path(path), json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def load_csv(path) -> SampleSet:
    path = Path(path)
    meta = json.loads(sidecar_path(path).read_text())
    K = int(meta["K"])
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["env_id", "distance_m", "label"] or len(header) != 3 + 2 * K:
            raise ValueError(f"{path}: header does not match K={K}")
        rows = [list(map(float, r)) for r in reader if r]
    arr = np.array(rows, dtype=float).reshape(len(rows), 3 + 2 * K)
    envs = tuple(EnvDescriptor.from_dict(e) for e in meta.pop("envs"))
    scheme = meta.pop("scheme")
    sentinel = float(meta.pop("sentinel_dbm"))
    meta.pop("K")
    meta.pop("n_samples", None)
    return SampleSet(arr[:, 3:], arr[:, 2].astype(np.int64), arr[:, 0].astype(np.int64),
                     arr[:, 1], envs, scheme, K, sentinel, meta)


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)
