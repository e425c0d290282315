"""Cross-dump comparison: digest equality, first differing byte, signature maps."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .image import FirmwareImage
from .signatures import DEFAULT_CATALOG, SignatureCatalog, SignatureHit, map_deltas, scan, signature_map

_BLOCK = 1 << 20


@dataclass(frozen=True)
class ConsistencyReport:
    digest_equal: bool
    first_divergence: int | None
    signature_map_equal: bool
    signature_deltas: list[tuple[int, str, str]] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return self.digest_equal and self.signature_map_equal

    def summary(self) -> str:
        if self.first_divergence is None:
            return "CONSISTENT"
        return f"DIVERGES AT 0x{self.first_divergence:X}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "digest_equal": self.digest_equal,
            "first_divergence": self.first_divergence,
            "first_divergence_hex": None if self.first_divergence is None else f"0x{self.first_divergence:X}",
            "signature_map_equal": self.signature_map_equal,
            "signature_deltas": [
                {"offset": o, "format": f, "present_in": side} for o, f, side in self.signature_deltas
            ],
            "summary": self.summary(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def first_divergence(a, b) -> int | None:
    """Lowest differing offset; the shorter length when one payload prefixes the other."""
    n = min(len(a), len(b))
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        xa = np.frombuffer(a, dtype=np.uint8, count=stop - start, offset=start)
        xb = np.frombuffer(b, dtype=np.uint8, count=stop - start, offset=start)
        diff = np.flatnonzero(xa != xb)
        if diff.size:
            return start + int(diff[0])
    return None if len(a) == len(b) else n


def compare(a: FirmwareImage, b: FirmwareImage, catalog: SignatureCatalog = DEFAULT_CATALOG,
            hits_a: Sequence[SignatureHit] | None = None,
            hits_b: Sequence[SignatureHit] | None = None) -> ConsistencyReport:
    """Compare two dumps; precomputed hits may be passed to skip rescanning."""
    digest_equal = a.digest.value == b.digest.value
    if digest_equal:
        return ConsistencyReport(True, None, True, [])
    map_a = signature_map(hits_a if hits_a is not None else scan(a, catalog))
    map_b = signature_map(hits_b if hits_b is not None else scan(b, catalog))
    return ConsistencyReport(
        digest_equal=False,
        first_divergence=first_divergence(a.payload, b.payload),
        signature_map_equal=map_a == map_b,
        signature_deltas=map_deltas(map_a, map_b),
    )
