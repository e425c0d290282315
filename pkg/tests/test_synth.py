import json

import pytest
from hypothesis import given, settings, strategies as st

from flashtriage import synth
from flashtriage.entropy import profile
from flashtriage.image import Digest
from flashtriage.signatures import scan

MiB = 1 << 20


def test_dense_deterministic(dense):
    again = synth.make_dense(1)
    assert Digest.of(again.payload) == Digest.of(dense.payload)
    assert len(dense.payload) == 16 * MiB


def test_seed_changes_bytes_not_layout(dense):
    other = synth.make_dense(2)
    assert other.payload != dense.payload
    assert other.expected_hits == dense.expected_hits


def test_sparse_entropy_character(sparse_image):
    p = profile(sparse_image)
    assert 0.3 <= p.low_fraction <= 0.7
    assert p.high_fraction < 0.05


def test_dense_entropy_character(dense_image):
    assert profile(dense_image).high_fraction >= 0.5


def test_erased_entropy_character(erased_image):
    p = profile(erased_image)
    assert p.low_fraction >= 0.85 and p.high_fraction == 0.0
    assert scan(erased_image) == []


def test_erased_pure():
    f = synth.make_erased(1 * MiB, 0, 0)
    assert f.payload == b"\xff" * MiB


def test_erased_noise_count():
    f = synth.make_erased(1 * MiB, 10, 4)
    assert len(f.extents) == 10
    bands = profile(f.image()).bands()
    assert sum(b != "LOW" for b in bands) == 10


def test_erased_bad_arguments():
    with pytest.raises(ValueError):
        synth.make_erased(MiB, MiB // 4096 + 1)
    with pytest.raises(ValueError):
        synth.make_erased(0)


def test_overlap_rejected():
    plan = synth.FixturePlan(64 * 1024, [synth.Placement(0, "blob", {"size": 4096}),
                                         synth.Placement(100, "blob", {"size": 10})])
    with pytest.raises(ValueError, match="overlap"):
        synth.render_plan(plan)


def test_out_of_bounds_rejected():
    plan = synth.FixturePlan(1024, [synth.Placement(1000, "blob", {"size": 100})])
    with pytest.raises(ValueError):
        synth.render_plan(plan)


def test_manifest(dense):
    doc = json.loads(dense.manifest_json())
    assert doc["fixture"] == "dense" and doc["seed"] == 1
    assert [h["offset_hex"] for h in doc["expected_hits"]][:2] == ["0x29EE4", "0x40E00"]
    assert doc["placements"][0]["length"] == 6455


def test_bitflips_are_distinct_bits(dense_image):
    out = synth.corrupt(dense_image, synth.BitFlips(64, 5))
    diff = sum(bin(a ^ b).count("1") for a, b in zip(out.payload, dense_image.payload))
    assert diff == 64


def test_truncate_and_fill(dense_image):
    t = synth.corrupt(dense_image, synth.Truncate(1000))
    assert t.payload == dense_image.payload[:1000]
    f = synth.corrupt(dense_image, synth.SectorFill(0, 4096, 0x00))
    assert f.payload[:4096] == bytes(4096) and f.payload[4096:] == dense_image.payload[4096:]
    with pytest.raises(ValueError):
        synth.corrupt(dense_image, synth.Truncate(len(dense_image) + 1))
    with pytest.raises(ValueError):
        synth.corrupt(dense_image, synth.SectorFill(len(dense_image) - 1, 2, 0))


def test_shuffle_is_a_permutation():
    img = synth.make_mixed(3, 64 * 1024).image()
    out = synth.corrupt(img, synth.SectorShuffle(9))
    sectors = lambda b: sorted(b[i:i + 4096] for i in range(0, len(b), 4096))
    assert sectors(out.payload) == sectors(img.payload)
    assert out.payload != img.payload


def test_corruption_leaves_input_untouched(dense_image):
    before = dense_image.digest
    synth.corrupt(dense_image, synth.BitFlips(10, 1))
    assert dense_image.recompute_digest() == before


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**64 - 1))
def test_mixed_fixture_determinism(seed):
    a, b = synth.make_mixed(seed, 64 * 1024), synth.make_mixed(seed, 64 * 1024)
    assert a.payload == b.payload and a.expected_hits == b.expected_hits


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**64 - 1))
def test_mixed_fixture_ground_truth(seed):
    f = synth.make_mixed(seed, 64 * 1024)
    assert [(h.offset, h.format) for h in scan(f.image())] == f.expected_hits
