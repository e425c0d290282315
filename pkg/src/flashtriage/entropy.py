"""Sliding-window Shannon entropy profiles.

Windows are consecutive and non-overlapping (stride equals the window
size); a trailing partial window is dropped and its length recorded.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InsufficientDataError
from .image import FirmwareImage

DEFAULT_WINDOW = 4096
LOW_THRESHOLD = 1.0
HIGH_THRESHOLD = 7.0
MAX_ENTROPY = 8.0

# Windows per bincount batch; bounds the temporary index array.
_BATCH = 1024


@dataclass(frozen=True)
class EntropyProfile:
    window_size: int
    window_entropies: tuple[float, ...]
    window_offsets: tuple[int, ...]
    mean: float
    std: float
    low_fraction: float
    high_fraction: float
    low_threshold: float = LOW_THRESHOLD
    high_threshold: float = HIGH_THRESHOLD
    dropped_bytes: int = 0
    source: str | None = None

    @property
    def window_count(self) -> int:
        return len(self.window_entropies)

    @property
    def profiled_length(self) -> int:
        return self.window_count * self.window_size

    def bands(self) -> list[str]:
        return [band_of(h, self.low_threshold, self.high_threshold) for h in self.window_entropies]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window_entropies"] = list(self.window_entropies)
        d["window_offsets"] = list(self.window_offsets)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EntropyProfile":
        d = dict(d)
        d["window_entropies"] = tuple(float(x) for x in d["window_entropies"])
        d["window_offsets"] = tuple(int(x) for x in d["window_offsets"])
        return cls(**d)


def band_of(h: float, low: float = LOW_THRESHOLD, high: float = HIGH_THRESHOLD) -> str:
    if h < low:
        return "LOW"
    if h > high:
        return "HIGH"
    return "MID"


def window_entropy(window: bytes | bytearray | memoryview) -> float:
    """Shannon entropy of one window in bits per byte."""
    if len(window) == 0:
        raise ValueError("window must be non-empty")
    arr = np.frombuffer(window, dtype=np.uint8)
    counts = np.bincount(arr, minlength=256)[None, :]
    return float(_entropy_rows(counts, len(arr))[0])


def _entropy_rows(counts: np.ndarray, n: int) -> np.ndarray:
    p = counts / n
    logs = np.zeros_like(p)
    np.log2(p, out=logs, where=p > 0)
    h = -(p * logs).sum(axis=1)
    # -0.0 and last-ulp overshoot past log2(256)
    return np.clip(h + 0.0, 0.0, MAX_ENTROPY)


def window_entropies(payload, window_size: int = DEFAULT_WINDOW) -> np.ndarray:
    """Entropy of every complete window of ``payload``, in offset order."""
    if window_size <= 0:
        raise ValueError("window_size must be positive")
    n = len(payload) // window_size
    data = np.frombuffer(payload, dtype=np.uint8, count=n * window_size)
    out = np.empty(n, dtype=np.float64)
    for start in range(0, n, _BATCH):
        stop = min(start + _BATCH, n)
        rows = data[start * window_size:stop * window_size].reshape(stop - start, window_size)
        shift = (np.arange(stop - start, dtype=np.int64) * 256)[:, None]
        counts = np.bincount((rows + shift).ravel(), minlength=(stop - start) * 256)
        out[start:stop] = _entropy_rows(counts.reshape(stop - start, 256), window_size)
    return out


def _exact_mean(values: Sequence[float]) -> float:
    # Exact rational sum so k identical windows give exactly that window's value.
    return float(sum(map(Fraction, values), Fraction(0)) / len(values))


def summarize(
    entropies: Sequence[float],
    window_size: int = DEFAULT_WINDOW,
    low_threshold: float = LOW_THRESHOLD,
    high_threshold: float = HIGH_THRESHOLD,
    dropped_bytes: int = 0,
    source: str | None = None,
) -> EntropyProfile:
    """Build a profile from an already computed entropy series."""
    values = tuple(float(h) for h in entropies)
    if not values:
        raise InsufficientDataError("profile needs at least one window")
    n = len(values)
    mean = _exact_mean(values)
    std = math.sqrt(math.fsum((h - mean) ** 2 for h in values) / n)
    low = sum(1 for h in values if h < low_threshold)
    high = sum(1 for h in values if h > high_threshold)
    return EntropyProfile(
        window_size=window_size,
        window_entropies=values,
        window_offsets=tuple(i * window_size for i in range(n)),
        mean=mean,
        std=std,
        low_fraction=low / n,
        high_fraction=high / n,
        low_threshold=low_threshold,
        high_threshold=high_threshold,
        dropped_bytes=dropped_bytes,
        source=source,
    )


def profile(
    image: FirmwareImage,
    window_size: int = DEFAULT_WINDOW,
    low_threshold: float = LOW_THRESHOLD,
    high_threshold: float = HIGH_THRESHOLD,
) -> EntropyProfile:
    if window_size <= 0:
        raise ValueError("window_size must be positive")
    if low_threshold > high_threshold:
        raise ValueError("low_threshold must not exceed high_threshold")
    size = len(image.payload)
    if size < window_size:
        raise InsufficientDataError(
            f"payload of {size} bytes is shorter than one {window_size}-byte window"
        )
    values = window_entropies(image.payload, window_size)
    return summarize(
        values.tolist(),
        window_size,
        low_threshold,
        high_threshold,
        dropped_bytes=size % window_size,
        source=image.digest.hex,
    )


def emit_profile(prof: EntropyProfile, fmt: str = "csv") -> bytes:
    fmt = fmt.lower()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["offset", "entropy_bits_per_byte"])
        for off, h in zip(prof.window_offsets, prof.window_entropies):
            writer.writerow([off, f"{h:.6f}"])
        return buf.getvalue().encode()
    if fmt == "json":
        return (json.dumps(prof.to_dict(), sort_keys=True) + "\n").encode()
    raise ValueError(f"unknown profile format {fmt!r}")


def parse_profile_json(data: bytes | str) -> EntropyProfile:
    return EntropyProfile.from_dict(json.loads(data))
