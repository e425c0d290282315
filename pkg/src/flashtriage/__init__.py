"""Validation and triage of raw firmware flash dumps."""

__version__ = "0.1.0"

from .consistency import ConsistencyReport, compare
from .entropy import EntropyProfile, emit_profile, profile, window_entropy
from .image import (AcquisitionMetadata, Digest, FirmwareImage, Fixture, Interface, PowerSource,
                    ingest_image, load_image, verify_digest)
from .signatures import DEFAULT_CATALOG, Format, FormatClass, SignatureHit, parse_header, scan, signature_map
from .validation import (Content, Layout, Overall, Tier, ValidationVerdict, layout_map, tier1_size,
                         tier2_consistency, tier3_content, validate)
