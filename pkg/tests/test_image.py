import io
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings, strategies as st

from flashtriage.errors import IngestionError
from flashtriage.image import (AcquisitionMetadata, Digest, Fixture, FirmwareImage, Interface,
                               PowerSource, ingest_image, load_image, verify_digest)

MiB = 1 << 20
META = AcquisitionMetadata("HS175D", Interface.SPI, Fixture.HOOK, PowerSource.BENCH,
                           datetime(2024, 3, 1, 12, 0, tzinfo=timezone.utc), "bench run 3")

# FIPS 180-4 SHA-256 reference vectors
EMPTY_SHA = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
ABC_SHA = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
HS175D_SHA = "4a7f46cc581c45cbc46e28663d910a960f340f822fd3e05c1c5da4bf7fd8a7ff"
HS720_SHA = "0b327498562ac286c4dd14e57f87a1b4ba1f8986b4c0baa153bc4ce830c2a351"


def test_ingest_empty_stream():
    img = ingest_image(io.BytesIO(b""), 8 * MiB, META)
    assert len(img) == 0
    assert img.digest.hex == EMPTY_SHA


def test_ingest_abc():
    assert ingest_image(io.BytesIO(b"abc"), 8 * MiB, META).digest.hex == ABC_SHA


def test_zero_capacity_rejected():
    with pytest.raises(ValueError):
        ingest_image(io.BytesIO(b"abc"), 0, META)


def test_size_mismatch_is_not_an_ingest_error():
    img = ingest_image(io.BytesIO(b"\xff" * 100), 8 * MiB, META)
    assert len(img) == 100 and img.declared_capacity == 8 * MiB


def test_unreadable_source():
    class Broken(io.RawIOBase):
        def read(self, n=-1):
            raise OSError("bus error")

    with pytest.raises(IngestionError):
        ingest_image(Broken(), MiB, META)


def test_load_missing_file(tmp_path):
    with pytest.raises(IngestionError):
        load_image(tmp_path / "nope.bin", MiB, META)


def test_load_large_file_is_mapped(tmp_path, monkeypatch):
    import mmap
    from flashtriage import image as image_mod

    path = tmp_path / "big.bin"
    path.write_bytes(b"abc" * 100)
    monkeypatch.setattr(image_mod, "RESIDENT_LIMIT", 16)
    img = load_image(path, MiB, META)
    assert isinstance(img.payload, mmap.mmap)
    assert img.digest == Digest.of(b"abc" * 100)


def test_digest_rendering():
    d = Digest.from_hex(HS175D_SHA.upper())
    assert d.hex == HS175D_SHA and len(str(d)) == 64 and len(d.value) == 32
    assert d.algorithm == "SHA-256"
    with pytest.raises(ValueError):
        Digest(b"\0" * 31)
    with pytest.raises(ValueError):
        Digest.from_hex(HS720_SHA[:-1])


def test_verify_digest_identity_and_flip():
    img = FirmwareImage(b"firmware" * 64, MiB, META)
    assert verify_digest(img, img.digest)
    flipped = bytearray(img.payload)
    flipped[5] ^= 0x01
    assert not verify_digest(img, Digest.of(bytes(flipped)))
    assert Digest.of(bytes(flipped)) != img.digest


def test_canonical_hashes_do_not_match_synthetic_data():
    # The real dumps are not available; the reference values only parse.
    img = FirmwareImage(b"\xff" * 4096, 16 * MiB, META)
    assert not verify_digest(img, Digest.from_hex(HS175D_SHA))
    assert not verify_digest(img, Digest.from_hex(HS720_SHA))


def test_metadata_requires_model():
    with pytest.raises(ValueError):
        AcquisitionMetadata("  ")


def test_image_immutable():
    img = FirmwareImage(bytearray(b"abc"), MiB, META)
    assert isinstance(img.payload, bytes)
    with pytest.raises(AttributeError):
        img.payload = b"x"  # type: ignore[misc]


def test_supplied_digest_must_match():
    with pytest.raises(ValueError):
        FirmwareImage(b"abc", MiB, META, Digest.of(b"abd"))


@given(st.binary(max_size=2048))
def test_digest_deterministic(data):
    a = ingest_image(io.BytesIO(data), MiB, META)
    b = ingest_image(io.BytesIO(data), MiB, META)
    assert a.digest == b.digest == a.recompute_digest()


@given(st.binary(min_size=1, max_size=2048), st.data())
def test_digest_sensitive_to_any_byte(data, draw):
    i = draw.draw(st.integers(0, len(data) - 1))
    delta = draw.draw(st.integers(1, 255))
    mutated = bytearray(data)
    mutated[i] = (mutated[i] + delta) % 256
    assert Digest.of(bytes(mutated)) != Digest.of(data)


metadata_strategy = st.builds(
    AcquisitionMetadata,
    device_model=st.text(min_size=1, max_size=20).filter(str.strip),
    interface=st.sampled_from(Interface),
    fixture=st.sampled_from(Fixture),
    power_source=st.sampled_from(PowerSource),
    captured_at=st.datetimes(min_value=datetime(2000, 1, 1), max_value=datetime(2100, 1, 1),
                             timezones=st.just(timezone.utc)).map(lambda t: t.replace(microsecond=0)),
    notes=st.text(max_size=40),
)


@settings(max_examples=60)
@given(metadata_strategy)
def test_metadata_round_trip(meta):
    assert AcquisitionMetadata.from_json(meta.to_json()) == meta
