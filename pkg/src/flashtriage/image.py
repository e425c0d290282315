"""Firmware image model: raw payload, acquisition metadata and SHA-256 digest."""

from __future__ import annotations

import enum
import hashlib
import io
import json
import mmap
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, BinaryIO, Union

from .errors import IngestionError

# Above this size a file-backed payload is memory-mapped instead of read.
RESIDENT_LIMIT = 64 * 1024 * 1024
_CHUNK = 1 << 20

Payload = Union[bytes, mmap.mmap]


class Interface(str, enum.Enum):
    SPI = "SPI"
    SWD = "SWD"
    UART = "UART"
    OTHER = "OTHER"


class Fixture(str, enum.Enum):
    ALLIGATOR = "ALLIGATOR"
    HOOK = "HOOK"
    DIRECT = "DIRECT"
    NONE = "NONE"


class PowerSource(str, enum.Enum):
    BENCH = "BENCH"
    BATTERY = "BATTERY"
    PROGRAMMER = "PROGRAMMER"
    UNKNOWN = "UNKNOWN"


def utc_now() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


def format_timestamp(ts: datetime) -> str:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def parse_timestamp(text: str) -> datetime:
    ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


@dataclass(frozen=True)
class Digest:
    """SHA-256 digest; renders as 64 lowercase hex characters."""

    value: bytes
    algorithm: str = field(default="SHA-256", init=False)

    def __post_init__(self) -> None:
        if not isinstance(self.value, (bytes, bytearray)) or len(self.value) != 32:
            raise ValueError("SHA-256 digest must be exactly 32 bytes")
        object.__setattr__(self, "value", bytes(self.value))

    @classmethod
    def of(cls, data: Payload) -> "Digest":
        h = hashlib.sha256()
        view = memoryview(data)
        for start in range(0, len(view), _CHUNK):
            h.update(view[start:start + _CHUNK])
        return cls(h.digest())

    @classmethod
    def from_hex(cls, text: str) -> "Digest":
        text = text.strip().lower()
        if len(text) != 64:
            raise ValueError(f"expected 64 hex characters, got {len(text)}")
        return cls(bytes.fromhex(text))

    @property
    def hex(self) -> str:
        return self.value.hex()

    def __str__(self) -> str:
        return self.hex


@dataclass(frozen=True)
class AcquisitionMetadata:
    device_model: str
    interface: Interface = Interface.SPI
    fixture: Fixture = Fixture.NONE
    power_source: PowerSource = PowerSource.UNKNOWN
    captured_at: datetime = field(default_factory=utc_now)
    notes: str = ""

    def __post_init__(self) -> None:
        if not self.device_model or not self.device_model.strip():
            raise ValueError("device_model must be non-empty")
        object.__setattr__(self, "interface", Interface(self.interface))
        object.__setattr__(self, "fixture", Fixture(self.fixture))
        object.__setattr__(self, "power_source", PowerSource(self.power_source))
        ts = self.captured_at
        if isinstance(ts, str):
            ts = parse_timestamp(ts)
        elif ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
        object.__setattr__(self, "captured_at", ts.astimezone(timezone.utc))

    def to_dict(self) -> dict[str, Any]:
        return {
            "device_model": self.device_model,
            "interface": self.interface.value,
            "fixture": self.fixture.value,
            "power_source": self.power_source.value,
            "captured_at": format_timestamp(self.captured_at),
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "AcquisitionMetadata":
        return cls(
            device_model=data["device_model"],
            interface=Interface(data.get("interface", "SPI")),
            fixture=Fixture(data.get("fixture", "NONE")),
            power_source=PowerSource(data.get("power_source", "UNKNOWN")),
            captured_at=parse_timestamp(data["captured_at"]) if data.get("captured_at") else utc_now(),
            notes=data.get("notes", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "AcquisitionMetadata":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class FirmwareImage:
    """Immutable dump payload plus what we know about how it was captured.

    ``declared_capacity`` is the vendor-nominal flash size; a payload of a
    different length is still a valid image (tier 1 judges the mismatch).
    """

    payload: Payload
    declared_capacity: int
    metadata: AcquisitionMetadata
    digest: Digest = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if isinstance(self.payload, (bytearray, memoryview)):
            object.__setattr__(self, "payload", bytes(self.payload))
        if self.declared_capacity <= 0:
            raise ValueError("declared_capacity must be positive")
        computed = Digest.of(self.payload)
        if self.digest is not None and self.digest != computed:
            raise ValueError("supplied digest does not match payload")
        object.__setattr__(self, "digest", computed)

    def __len__(self) -> int:
        return len(self.payload)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FirmwareImage):
            return NotImplemented
        return (
            self.digest == other.digest
            and self.declared_capacity == other.declared_capacity
            and self.metadata == other.metadata
        )

    def __hash__(self) -> int:
        return hash((self.digest, self.declared_capacity))

    def recompute_digest(self) -> Digest:
        return Digest.of(self.payload)

    def with_payload(self, payload: bytes) -> "FirmwareImage":
        return FirmwareImage(payload, self.declared_capacity, self.metadata)


def ingest_image(
    source: BinaryIO, declared_capacity: int, metadata: AcquisitionMetadata
) -> FirmwareImage:
    """Read ``source`` to the end and wrap it as a FirmwareImage."""
    if declared_capacity <= 0:
        raise ValueError("declared_capacity must be positive")
    buf = io.BytesIO()
    try:
        while True:
            chunk = source.read(_CHUNK)
            if not chunk:
                break
            buf.write(chunk)
    except (OSError, ValueError) as exc:
        raise IngestionError(f"could not read dump source: {exc}") from exc
    return FirmwareImage(buf.getvalue(), declared_capacity, metadata)


def load_image(
    path: str | os.PathLike, declared_capacity: int, metadata: AcquisitionMetadata
) -> FirmwareImage:
    """Ingest a dump file; files over RESIDENT_LIMIT are mapped read-only."""
    if declared_capacity <= 0:
        raise ValueError("declared_capacity must be positive")
    path = Path(path)
    try:
        size = path.stat().st_size
        if size > RESIDENT_LIMIT:
            with open(path, "rb") as fh:
                mapped = mmap.mmap(fh.fileno(), 0, access=mmap.ACCESS_READ)
            return FirmwareImage(mapped, declared_capacity, metadata)
        with open(path, "rb") as fh:
            return ingest_image(fh, declared_capacity, metadata)
    except OSError as exc:
        raise IngestionError(f"{path}: {exc.strerror or exc}") from exc


def verify_digest(image: FirmwareImage, expected: Digest) -> bool:
    return image.recompute_digest().value == expected.value


def image_from_bytes(
    payload: bytes, declared_capacity: int | None = None, device_model: str = "UNKNOWN", **meta: Any
) -> FirmwareImage:
    """Test and fixture convenience; capacity defaults to the payload length."""
    cap = declared_capacity if declared_capacity is not None else max(len(payload), 1)
    return FirmwareImage(bytes(payload), cap, AcquisitionMetadata(device_model=device_model, **meta))
