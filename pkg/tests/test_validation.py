import dataclasses
import json

import pytest
from hypothesis import given, settings, strategies as st

from flashtriage.entropy import profile, summarize
from flashtriage.image import Digest, FirmwareImage, image_from_bytes
from flashtriage.signatures import Format, make_hit
from flashtriage.validation import (Content, ContentRules, Layout, Overall, Tier,
                                    ValidationVerdict, layout_map, render_map_text, tier1_size,
                                    tier2_consistency, tier3_content, validate)

MiB = 1 << 20
KERNEL = make_hit(Format.ARM_ZIMAGE, 0x1000, {"endianness": "little", "image_size": 100})
FS = make_hit(Format.SQUASHFS, 0x9000, {"version_major": 4, "version_minor": 0, "compression_id": 4,
                                        "compression": "xz", "bytes_used": 100, "inode_count": 3,
                                        "block_size": 131072, "mkfs_time": 0})
BMP = make_hit(Format.BMP, 0x2000, {"width": 1, "height": 1, "bits_per_pixel": 8,
                                    "compression": 0, "file_size": 58})


def prof(low, mid, high):
    return summarize([0.0] * low + [4.0] * mid + [8.0] * high)


def test_tier1():
    assert tier1_size(image_from_bytes(b"\xff" * 4096, 4096)) is Tier.PASS
    assert tier1_size(image_from_bytes(b"\xff" * 4095, 4096)) is Tier.FAIL


def test_tier2():
    a, b = Digest.of(b"a"), Digest.of(b"b")
    assert tier2_consistency([a]) is Tier.UNEVALUATED
    assert tier2_consistency([a, a, a]) is Tier.PASS
    assert tier2_consistency([a, a, b]) is Tier.FAIL


def test_tier3_cases():
    assert tier3_content(prof(9, 1, 0), []) == (Content.ERASED, Layout.EMPTY)
    assert tier3_content(prof(9, 1, 0), [BMP]) == (Content.ERASED, Layout.EMPTY)
    assert tier3_content(prof(9, 1, 0), [KERNEL]) == (Content.INDETERMINATE, Layout.EMPTY)
    assert tier3_content(prof(1, 2, 7), [KERNEL, FS]) == (Content.VALIDATED_FIRMWARE, Layout.DENSE)
    assert tier3_content(prof(5, 4, 1), [KERNEL, FS]) == (Content.VALIDATED_FIRMWARE, Layout.SPARSE)
    assert tier3_content(prof(1, 8, 1), [KERNEL, FS]) == (Content.VALIDATED_FIRMWARE, Layout.MIXED)
    assert tier3_content(prof(1, 2, 7), [KERNEL]) == (Content.INDETERMINATE, Layout.MIXED)
    assert tier3_content(prof(0, 0, 10), []) == (Content.INDETERMINATE, Layout.MIXED)


def test_tier3_rules_are_configurable():
    rules = ContentRules(erased_low_fraction=0.95)
    assert tier3_content(prof(9, 1, 0), [], rules) == (Content.INDETERMINATE, Layout.MIXED)


def test_tier3_rejects_hits_from_another_image():
    a = profile(image_from_bytes(b"\0" * 4096))
    foreign = make_hit(Format.BMP, 0, BMP.fields, source=Digest.of(b"other").hex)
    with pytest.raises(ValueError):
        tier3_content(a, [foreign])


def test_validate_dense(dense):
    imgs = [dense.image(16 * MiB, device_model="HS175D") for _ in range(3)]
    v = validate(imgs)
    assert (v.tier1, v.tier2, v.tier3, v.layout_character, v.overall) == \
        (Tier.PASS, Tier.PASS, Content.VALIDATED_FIRMWARE, Layout.DENSE, Overall.VALIDATED)
    assert v.tier_line == "PASS/PASS/VALIDATED_FIRMWARE"
    assert v.report().splitlines()[-1] == "PASS/PASS/VALIDATED_FIRMWARE -> VALIDATED"
    doc = json.loads(v.to_json())
    assert doc["overall"] == "VALIDATED" and doc["evidence"]["tier3"]["kernel"]


def test_validate_single_read_is_incomplete(sparse_image):
    v = validate([sparse_image])
    assert v.tier2 is Tier.UNEVALUATED and v.overall is Overall.INCOMPLETE
    assert v.tier3 is Content.VALIDATED_FIRMWARE and v.layout_character is Layout.SPARSE


def test_validate_truncated_read(dense):
    v = validate([dense.image(32 * MiB, device_model="X")])
    assert v.tier1 is Tier.FAIL and v.tier3 is Content.VALIDATED_FIRMWARE
    assert v.overall is Overall.INCOMPLETE


def test_validate_capacity_discrepancy_recorded():
    a = image_from_bytes(b"\xff" * 8192, 8192, device_model="M")
    b = image_from_bytes(b"\xff" * 8192, 16384, device_model="M")
    v = validate([a, b])
    assert "discrepancy" in v.evidence["tier1"]


def test_validate_rejects_bad_input():
    with pytest.raises(ValueError):
        validate([])
    with pytest.raises(ValueError):
        validate([image_from_bytes(b"a", device_model="A"), image_from_bytes(b"a", device_model="B")])


def test_validate_tiny_payload():
    v = validate([image_from_bytes(b"\xff" * 100, 100)])
    assert v.tier3 is Content.INDETERMINATE and v.layout_character is Layout.MIXED


def test_verdict_invariants():
    with pytest.raises(ValueError):
        ValidationVerdict(Tier.PASS, Tier.FAIL, Content.VALIDATED_FIRMWARE, Layout.DENSE,
                          Overall.VALIDATED)
    with pytest.raises(ValueError):
        ValidationVerdict(Tier.PASS, Tier.PASS, Content.ERASED, Layout.DENSE, Overall.INCOMPLETE)


def test_layout_map_regions():
    data = b"\x00" * 8192 + bytes(range(256)) * 32
    p = profile(image_from_bytes(data))
    hits = [dataclasses.replace(KERNEL, offset=8192), dataclasses.replace(BMP, offset=100)]
    rmap = layout_map(p, hits)
    assert [(r.start, r.end, r.band) for r in rmap.regions] == [(0, 8192, "LOW"), (8192, 16384, "HIGH")]
    assert rmap.regions[0].labels == ("BMP",) and rmap.regions[1].labels == ("ARM_ZIMAGE",)
    assert rmap.bar(4) == "..##"
    assert rmap.bar(2) == ".#"
    assert json.loads(rmap.to_json())["regions"][1]["start_hex"] == "0x2000"
    assert render_map_text(rmap, 4).splitlines()[0] == "..##"


def test_bar_ties_favor_higher_band():
    rmap = layout_map(prof(1, 0, 1), [])
    assert rmap.bar(1) == "#"


@settings(max_examples=200)
@given(st.sampled_from(Tier), st.sampled_from(Tier), st.sampled_from(Content))
def test_overall_iff_all_pass(t1, t2, t3):
    layout = Layout.EMPTY if t3 is Content.ERASED else Layout.MIXED
    v = ValidationVerdict.from_tiers(t1, t2, t3, layout)
    assert (v.overall is Overall.VALIDATED) == (
        t1 is Tier.PASS and t2 is Tier.PASS and t3 is Content.VALIDATED_FIRMWARE)


@settings(max_examples=200)
@given(st.integers(0, 20), st.integers(0, 20), st.integers(0, 20),
       st.lists(st.sampled_from([KERNEL, FS, BMP]), max_size=4))
def test_tier3_total_and_consistent(low, mid, high, hits):
    if low + mid + high == 0:
        return
    content, layout = tier3_content(prof(low, mid, high), hits)
    if content is Content.ERASED:
        assert layout is Layout.EMPTY
    if content is Content.VALIDATED_FIRMWARE:
        assert KERNEL in hits and FS in hits
