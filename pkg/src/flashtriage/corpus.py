"""Directory-backed extraction ledger.

``attempts.jsonl`` is append-only: one acquisition attempt per line.
``dumps.jsonl`` holds registered dumps; the only rewrite it ever sees is
an explicit canonical demotion.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import os
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterator

from .errors import ConflictError, PersistenceError, RecordValidationError
from .image import Digest, Fixture, Interface, format_timestamp, parse_timestamp, utc_now

ATTEMPTS_FILE = "attempts.jsonl"
DUMPS_FILE = "dumps.jsonl"
STORE_ENV = "FLASHTRIAGE_STORE"


class Outcome(str, enum.Enum):
    SUCCESS = "SUCCESS"
    FAILURE = "FAILURE"


class FailureType(str, enum.Enum):
    NONE = "NONE"
    CLIP_MISALIGNMENT = "CLIP_MISALIGNMENT"
    NO_CHIP_DETECTED = "NO_CHIP_DETECTED"
    BAD_RDID = "BAD_RDID"
    INTERMITTENT_CONTACT = "INTERMITTENT_CONTACT"
    UNSTABLE_DETECTION = "UNSTABLE_DETECTION"
    CORRUPT_DUMP = "CORRUPT_DUMP"
    NO_SERIAL_OUTPUT = "NO_SERIAL_OUTPUT"
    OTHER = "OTHER"


@dataclass(frozen=True)
class AttemptRecord:
    device_model: str
    interface: Interface
    fixture: Fixture
    outcome: Outcome
    failure_type: FailureType = FailureType.NONE
    notes: str = ""
    recorded_at: datetime = field(default_factory=utc_now)

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "interface", Interface(self.interface))
            object.__setattr__(self, "fixture", Fixture(self.fixture))
            object.__setattr__(self, "outcome", Outcome(self.outcome))
            object.__setattr__(self, "failure_type", FailureType(self.failure_type))
        except ValueError as exc:
            raise RecordValidationError(str(exc)) from None
        if isinstance(self.recorded_at, str):
            object.__setattr__(self, "recorded_at", parse_timestamp(self.recorded_at))
        if not self.device_model:
            raise RecordValidationError("device_model must be non-empty")
        if self.outcome is Outcome.SUCCESS and self.failure_type is not FailureType.NONE:
            raise RecordValidationError("a successful attempt cannot carry a failure type")
        if self.outcome is Outcome.FAILURE and self.failure_type is FailureType.NONE:
            raise RecordValidationError("a failed attempt needs a failure type")

    @property
    def cell(self) -> tuple[str, Interface, Fixture]:
        return (self.device_model, self.interface, self.fixture)

    def to_dict(self) -> dict[str, Any]:
        return {
            "device_model": self.device_model,
            "interface": self.interface.value,
            "fixture": self.fixture.value,
            "outcome": self.outcome.value,
            "failure_type": self.failure_type.value,
            "notes": self.notes,
            "recorded_at": format_timestamp(self.recorded_at),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "AttemptRecord":
        return cls(**d)


@dataclass(frozen=True)
class DumpRecord:
    digest: Digest
    device_model: str
    interface: Interface
    fixture: Fixture
    canonical: bool = False
    verdict_summary: str = ""
    file_reference: str = ""

    def __post_init__(self) -> None:
        if isinstance(self.digest, str):
            object.__setattr__(self, "digest", Digest.from_hex(self.digest))
        try:
            object.__setattr__(self, "interface", Interface(self.interface))
            object.__setattr__(self, "fixture", Fixture(self.fixture))
        except ValueError as exc:
            raise RecordValidationError(str(exc)) from None
        if not self.device_model:
            raise RecordValidationError("device_model must be non-empty")

    @property
    def cell(self) -> tuple[str, Interface, Fixture]:
        return (self.device_model, self.interface, self.fixture)

    def to_dict(self) -> dict[str, Any]:
        return {
            "digest": self.digest.hex,
            "device_model": self.device_model,
            "interface": self.interface.value,
            "fixture": self.fixture.value,
            "canonical": self.canonical,
            "verdict_summary": self.verdict_summary,
            "file_reference": self.file_reference,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DumpRecord":
        return cls(**d)


@dataclass(frozen=True)
class RateResult:
    attempts: int
    successes: int

    @property
    def rate(self) -> Fraction | None:
        """Exact success ratio; None (undefined) when nothing was attempted."""
        return Fraction(self.successes, self.attempts) if self.attempts else None

    def rendered(self) -> str:
        return render_rate(self.rate)


def render_rate(rate: Fraction | None) -> str:
    if rate is None:
        return "n/a"
    pct = (Decimal(rate.numerator) * 100 / Decimal(rate.denominator)).quantize(
        Decimal(1), rounding=ROUND_HALF_UP)
    return f"~{pct}%"


def interface_label(interface: Interface, fixture: Fixture) -> str:
    if fixture is Fixture.NONE:
        return interface.value
    name = {Fixture.ALLIGATOR: "alligator", Fixture.HOOK: "hooks", Fixture.DIRECT: "direct"}[fixture]
    return f"{interface.value} ({name})"


@dataclass(frozen=True)
class SummaryRow:
    device_model: str
    interface: Interface
    fixture: Fixture
    attempts: int
    successes: int
    hashes_identical: str  # YES | NO | N/A

    @property
    def rate(self) -> Fraction | None:
        return Fraction(self.successes, self.attempts) if self.attempts else None

    @property
    def interface_fixture(self) -> str:
        return interface_label(self.interface, self.fixture)


@dataclass(frozen=True)
class CorpusSummary:
    rows: tuple[SummaryRow, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["device_model", "interface_fixture", "attempts", "successes", "rate",
                    "rate_display", "hashes_identical"])
        for r in self.rows:
            rate = "" if r.rate is None else f"{r.rate.numerator}/{r.rate.denominator}"
            w.writerow([r.device_model, r.interface_fixture, r.attempts, r.successes, rate,
                        render_rate(r.rate), r.hashes_identical])
        return buf.getvalue()


class CorpusStore:
    """Single-writer store rooted at a directory; callers serialize writes."""

    def __init__(self, root: str | os.PathLike) -> None:
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise PersistenceError(f"cannot create store at {self.root}: {exc}") from exc

    @property
    def attempts_path(self) -> Path:
        return self.root / ATTEMPTS_FILE

    @property
    def dumps_path(self) -> Path:
        return self.root / DUMPS_FILE

    def _append(self, path: Path, record: dict[str, Any]) -> None:
        line = json.dumps(record, sort_keys=True) + "\n"
        try:
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise PersistenceError(f"cannot append to {path}: {exc}") from exc

    def _read(self, path: Path) -> Iterator[dict[str, Any]]:
        if not path.exists():
            return
        try:
            with open(path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, 1):
                    if line.strip():
                        try:
                            yield json.loads(line)
                        except json.JSONDecodeError as exc:
                            raise PersistenceError(f"{path}:{lineno}: {exc}") from exc
        except OSError as exc:
            raise PersistenceError(f"cannot read {path}: {exc}") from exc

    # -- attempts

    def record_attempt(self, record: AttemptRecord) -> AttemptRecord:
        self._append(self.attempts_path, record.to_dict())
        return record

    def attempts(self, device_model: str | None = None, interface: Interface | str | None = None,
                 fixture: Fixture | str | None = None) -> list[AttemptRecord]:
        out = []
        for d in self._read(self.attempts_path):
            rec = AttemptRecord.from_dict(d)
            if device_model is not None and rec.device_model != device_model:
                continue
            if interface is not None and rec.interface is not Interface(interface):
                continue
            if fixture is not None and rec.fixture is not Fixture(fixture):
                continue
            out.append(rec)
        return out

    def success_rate(self, device_model: str, interface: Interface | str,
                     fixture: Fixture | str) -> RateResult:
        recs = self.attempts(device_model, interface, fixture)
        return RateResult(len(recs), sum(r.outcome is Outcome.SUCCESS for r in recs))

    def failure_histogram(self, device_model: str | None = None) -> Counter:
        return Counter(r.failure_type for r in self.attempts(device_model)
                       if r.outcome is Outcome.FAILURE)

    # -- dumps

    def dumps(self, device_model: str | None = None) -> list[DumpRecord]:
        recs = [DumpRecord.from_dict(d) for d in self._read(self.dumps_path)]
        return [r for r in recs if device_model is None or r.device_model == device_model]

    def canonical(self, device_model: str) -> DumpRecord | None:
        return next((r for r in self.dumps(device_model) if r.canonical), None)

    def register_dump(self, record: DumpRecord) -> DumpRecord:
        if record.canonical:
            prior = self.canonical(record.device_model)
            if prior is not None:
                raise ConflictError(
                    f"{record.device_model} already has canonical dump {prior.digest.hex}; demote it first")
        self._append(self.dumps_path, record.to_dict())
        return record

    def demote_canonical(self, device_model: str) -> DumpRecord | None:
        """Clear the canonical flag for ``device_model``; returns the demoted record."""
        recs = self.dumps()
        demoted = None
        for i, r in enumerate(recs):
            if r.canonical and r.device_model == device_model:
                demoted = r
                recs[i] = DumpRecord(r.digest, r.device_model, r.interface, r.fixture, False,
                                     r.verdict_summary, r.file_reference)
        if demoted is None:
            return None
        tmp = self.dumps_path.with_suffix(".jsonl.tmp")
        try:
            with open(tmp, "w", encoding="utf-8") as fh:
                for r in recs:
                    fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")
            os.replace(tmp, self.dumps_path)
        except OSError as exc:
            raise PersistenceError(f"cannot rewrite {self.dumps_path}: {exc}") from exc
        return demoted

    # -- summaries

    def summarize(self) -> CorpusSummary:
        counts: dict[tuple, list[int]] = defaultdict(lambda: [0, 0])
        for rec in self.attempts():
            c = counts[rec.cell]
            c[0] += 1
            c[1] += rec.outcome is Outcome.SUCCESS
        digests: dict[tuple, list[bytes]] = defaultdict(list)
        for d in self.dumps():
            digests[d.cell].append(d.digest.value)
        rows = []
        for cell in sorted(set(counts) | set(digests), key=lambda c: (c[0], c[1].value, c[2].value)):
            attempts, successes = counts.get(cell, (0, 0))
            seen = digests.get(cell, [])
            if len(seen) < 2:
                identical = "N/A"
            else:
                identical = "YES" if len(set(seen)) == 1 else "NO"
            rows.append(SummaryRow(cell[0], cell[1], cell[2], attempts, successes, identical))
        return CorpusSummary(tuple(rows))


def default_store_path() -> str | None:
    return os.environ.get(STORE_ENV)
