"""Three-tier dump validation and flash layout region maps.

Tier 1 checks the dump length against the declared flash capacity, tier 2
checks that repeated reads hash identically, tier 3 combines the entropy
profile with structural hits to decide whether the bytes are firmware.
"""

from __future__ import annotations

import enum
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

from .entropy import DEFAULT_WINDOW, EntropyProfile, profile
from .errors import InsufficientDataError
from .image import Digest, FirmwareImage
from .signatures import DEFAULT_CATALOG, FormatClass, SignatureCatalog, SignatureHit, scan


class Tier(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    UNEVALUATED = "UNEVALUATED"


class Content(str, enum.Enum):
    VALIDATED_FIRMWARE = "VALIDATED_FIRMWARE"
    ERASED = "ERASED"
    INDETERMINATE = "INDETERMINATE"


class Layout(str, enum.Enum):
    DENSE = "DENSE"
    SPARSE = "SPARSE"
    EMPTY = "EMPTY"
    MIXED = "MIXED"


class Overall(str, enum.Enum):
    VALIDATED = "VALIDATED"
    INCOMPLETE = "INCOMPLETE"


@dataclass(frozen=True)
class ContentRules:
    """Cut points for tier-3 classification (fractions of profiled windows)."""

    erased_low_fraction: float = 0.85
    dense_high_fraction: float = 0.5
    sparse_low_fraction: float = 0.3


DEFAULT_RULES = ContentRules()

_STRUCTURAL = {FormatClass.KERNEL, FormatClass.FILESYSTEM, FormatClass.BOOTLOADER_STAGE}


def overall_of(tier1: Tier, tier2: Tier, tier3: Content) -> Overall:
    ok = tier1 is Tier.PASS and tier2 is Tier.PASS and tier3 is Content.VALIDATED_FIRMWARE
    return Overall.VALIDATED if ok else Overall.INCOMPLETE


@dataclass(frozen=True)
class ValidationVerdict:
    tier1: Tier
    tier2: Tier
    tier3: Content
    layout_character: Layout
    overall: Overall
    evidence: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.overall is not overall_of(self.tier1, self.tier2, self.tier3):
            raise ValueError("overall status inconsistent with tier results")
        if self.tier3 is Content.ERASED and self.layout_character is not Layout.EMPTY:
            raise ValueError("erased content must have EMPTY layout")

    @classmethod
    def from_tiers(cls, tier1: Tier, tier2: Tier, tier3: Content, layout: Layout,
                   evidence: dict[str, Any] | None = None) -> "ValidationVerdict":
        return cls(tier1, tier2, tier3, layout, overall_of(tier1, tier2, tier3), evidence or {})

    @property
    def tier_line(self) -> str:
        return f"{self.tier1.value}/{self.tier2.value}/{self.tier3.value}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "tier1": self.tier1.value,
            "tier2": self.tier2.value,
            "tier3": self.tier3.value,
            "layout_character": self.layout_character.value,
            "overall": self.overall.value,
            "evidence": self.evidence,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def report(self) -> str:
        ev = self.evidence
        t1 = ev.get("tier1", {})
        t2 = ev.get("tier2", {})
        t3 = ev.get("tier3", {})
        size = f"{t1.get('length', '?')} of {t1.get('declared_capacity', '?')} bytes"
        reads = f"{t2.get('reads', 0)} read(s), {len(t2.get('distinct_digests', []))} distinct digest(s)"
        if "mean" in t3:
            stats = (f"mean {t3['mean']:.3f} b/B, low {100 * t3['low_fraction']:.1f}%, "
                     f"high {100 * t3['high_fraction']:.1f}%, {t3['hit_count']} signature(s)")
        else:
            stats = t3.get("note", "not profiled")
        return (
            f"tier 1 size        {self.tier1.value:<19} {size}\n"
            f"tier 2 consistency {self.tier2.value:<19} {reads}\n"
            f"tier 3 content     {self.tier3.value:<19} {self.layout_character.value}; {stats}\n"
            f"{self.tier_line} -> {self.overall.value}\n"
        )


def tier1_size(image: FirmwareImage) -> Tier:
    if image.declared_capacity <= 0:
        raise ValueError("declared_capacity must be positive")
    return Tier.PASS if len(image.payload) == image.declared_capacity else Tier.FAIL


def tier2_consistency(digests: Sequence[Digest]) -> Tier:
    if len(digests) < 2:
        return Tier.UNEVALUATED
    first = digests[0].value
    return Tier.PASS if all(d.value == first for d in digests) else Tier.FAIL


def _check_same_source(prof: EntropyProfile, hits: Sequence[SignatureHit]) -> None:
    sources = {s for s in [prof.source, *(h.source for h in hits)] if s is not None}
    if len(sources) > 1:
        raise ValueError("profile and hits come from different images")


def tier3_content(prof: EntropyProfile, hits: Sequence[SignatureHit],
                  rules: ContentRules = DEFAULT_RULES) -> tuple[Content, Layout]:
    _check_same_source(prof, hits)
    classes = {h.format_class for h in hits}
    erased_entropy = prof.low_fraction >= rules.erased_low_fraction
    if erased_entropy and not classes & _STRUCTURAL:
        return Content.ERASED, Layout.EMPTY
    if FormatClass.KERNEL in classes and FormatClass.FILESYSTEM in classes:
        if prof.high_fraction >= rules.dense_high_fraction:
            return Content.VALIDATED_FIRMWARE, Layout.DENSE
        if prof.low_fraction >= rules.sparse_low_fraction:
            return Content.VALIDATED_FIRMWARE, Layout.SPARSE
        return Content.VALIDATED_FIRMWARE, Layout.MIXED
    return Content.INDETERMINATE, Layout.EMPTY if erased_entropy else Layout.MIXED


def _hit_offsets(hits: Sequence[SignatureHit], cls: FormatClass) -> list[str]:
    return [f"{h.format.value}@0x{h.offset:X}" for h in hits if h.format_class is cls]


def analyze(image: FirmwareImage, window_size: int = DEFAULT_WINDOW,
            catalog: SignatureCatalog = DEFAULT_CATALOG) -> tuple[EntropyProfile | None, list[SignatureHit]]:
    hits = scan(image, catalog)
    try:
        prof = profile(image, window_size)
    except InsufficientDataError:
        prof = None
    return prof, hits


def validate(images: Sequence[FirmwareImage], rules: ContentRules = DEFAULT_RULES,
             window_size: int = DEFAULT_WINDOW,
             catalog: SignatureCatalog = DEFAULT_CATALOG) -> ValidationVerdict:
    """Run all three tiers over repeated reads of one target.

    Every tier is reported even when an earlier one fails; tier 3 always
    looks at the first image.
    """
    if not images:
        raise ValueError("validate needs at least one image")
    models = {img.metadata.device_model for img in images}
    if len(models) > 1:
        raise ValueError(f"images come from different device models: {sorted(models)}")

    first = images[0]
    t1_all = [tier1_size(img) for img in images]
    tier1 = t1_all[0]
    ev1: dict[str, Any] = {"length": len(first.payload), "declared_capacity": first.declared_capacity}
    if len(set(t1_all)) > 1 or len({img.declared_capacity for img in images}) > 1:
        ev1["discrepancy"] = [
            {"length": len(img.payload), "declared_capacity": img.declared_capacity, "tier1": t.value}
            for img, t in zip(images, t1_all)
        ]

    digests = [img.digest for img in images]
    tier2 = tier2_consistency(digests)
    ev2 = {"reads": len(images), "distinct_digests": sorted({d.hex for d in digests})}

    prof, hits = analyze(first, window_size, catalog)
    if prof is None:
        tier3, layout = Content.INDETERMINATE, Layout.MIXED
        ev3: dict[str, Any] = {"note": f"payload shorter than one {window_size}-byte window",
                               "hit_count": len(hits)}
    else:
        tier3, layout = tier3_content(prof, hits, rules)
        ev3 = {
            "windows": prof.window_count,
            "mean": prof.mean,
            "std": prof.std,
            "low_fraction": prof.low_fraction,
            "high_fraction": prof.high_fraction,
            "hit_count": len(hits),
            "kernel": _hit_offsets(hits, FormatClass.KERNEL),
            "filesystem": _hit_offsets(hits, FormatClass.FILESYSTEM),
            "bootloader": _hit_offsets(hits, FormatClass.BOOTLOADER_STAGE),
            "rules": asdict(rules),
        }
    return ValidationVerdict.from_tiers(tier1, tier2, tier3, layout,
                                        {"tier1": ev1, "tier2": ev2, "tier3": ev3})


# ------------------------------------------------------------------ region maps

BAND_CHARS = {"LOW": ".", "MID": "-", "HIGH": "#"}
_BAND_RANK = {"LOW": 0, "MID": 1, "HIGH": 2}


@dataclass(frozen=True)
class Region:
    start: int
    end: int
    band: str
    labels: tuple[str, ...] = ()


@dataclass(frozen=True)
class RegionMap:
    regions: tuple[Region, ...]
    window_size: int = DEFAULT_WINDOW

    @property
    def length(self) -> int:
        return self.regions[-1].end if self.regions else 0

    def window_bands(self) -> list[str]:
        out: list[str] = []
        for r in self.regions:
            out.extend([r.band] * ((r.end - r.start) // self.window_size))
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "window_size": self.window_size,
            "regions": [
                {"start": r.start, "end": r.end, "start_hex": f"0x{r.start:X}",
                 "end_hex": f"0x{r.end:X}", "band": r.band, "labels": list(r.labels)}
                for r in self.regions
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def bar(self, width: int = 64) -> str:
        """One character per ceil(windows/width) windows: '.' low, '-' mid, '#' high."""
        bands = self.window_bands()
        if not bands:
            return ""
        per = max(1, math.ceil(len(bands) / width))
        chars = []
        for i in range(0, len(bands), per):
            counts = Counter(bands[i:i + per])
            # majority band, ties go to the higher band
            band = max(counts, key=lambda b: (counts[b], _BAND_RANK[b]))
            chars.append(BAND_CHARS[band])
        return "".join(chars)


def layout_map(prof: EntropyProfile, hits: Sequence[SignatureHit]) -> RegionMap:
    bands = prof.bands()
    ws = prof.window_size
    spans: list[list[Any]] = []
    for i, band in enumerate(bands):
        if spans and spans[-1][2] == band:
            spans[-1][1] = (i + 1) * ws
        else:
            spans.append([i * ws, (i + 1) * ws, band])
    regions = []
    for start, end, band in spans:
        labels = sorted({h.format.value for h in hits if start <= h.offset < end})
        regions.append(Region(start, end, band, tuple(labels)))
    return RegionMap(tuple(regions), ws)


def render_map_text(rmap: RegionMap, width: int = 64) -> str:
    lines = [rmap.bar(width)]
    for r in rmap.regions:
        if r.labels:
            lines.append(f"0x{r.start:08X}-0x{r.end:08X} {r.band:<4} {', '.join(r.labels)}")
    return "\n".join(lines) + "\n"
