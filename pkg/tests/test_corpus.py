from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from flashtriage.corpus import (AttemptRecord, CorpusStore, DumpRecord, FailureType, Outcome,
                                RateResult, render_rate)
from flashtriage.errors import ConflictError, PersistenceError, RecordValidationError
from flashtriage.image import Digest, Fixture, Interface

from ledger_seed import ROWS, seed_store

HS175D_SHA = "4a7f46cc581c45cbc46e28663d910a960f340f822fd3e05c1c5da4bf7fd8a7ff"


def attempt(ok=True, failure=FailureType.NONE, model="HS175D", fixture=Fixture.HOOK):
    return AttemptRecord(model, Interface.SPI, fixture,
                         Outcome.SUCCESS if ok else Outcome.FAILURE, failure)


def test_record_invariants():
    attempt()
    with pytest.raises(RecordValidationError):
        attempt(True, FailureType.BAD_RDID)
    with pytest.raises(RecordValidationError):
        attempt(False, FailureType.NONE)
    with pytest.raises(RecordValidationError):
        attempt(model="")
    with pytest.raises(RecordValidationError):
        AttemptRecord("X", "USB", Fixture.HOOK, Outcome.SUCCESS)
    with pytest.raises(RecordValidationError):
        DumpRecord(HS175D_SHA, "X", Interface.SPI, "TAPE")


def test_failure_appears_in_histogram(tmp_path):
    store = CorpusStore(tmp_path)
    store.record_attempt(attempt(False, FailureType.CLIP_MISALIGNMENT, fixture=Fixture.ALLIGATOR))
    assert store.failure_histogram("HS175D") == Counter({FailureType.CLIP_MISALIGNMENT: 1})


@pytest.mark.parametrize("n, k, rate", [(8, 6, Fraction(3, 4)), (10, 4, Fraction(2, 5))])
def test_rates(tmp_path, n, k, rate):
    store = CorpusStore(tmp_path)
    for i in range(n):
        store.record_attempt(attempt(i < k, FailureType.NONE if i < k else FailureType.OTHER))
    r = store.success_rate("HS175D", Interface.SPI, Fixture.HOOK)
    assert (r.attempts, r.successes, r.rate) == (n, k, rate)


def test_undefined_rate(tmp_path):
    r = CorpusStore(tmp_path).success_rate("HS175D", "SPI", "HOOK")
    assert r.rate is None and r.rendered() == "n/a"
    assert RateResult(3, 0).rate == 0


def test_rendering_rounds_half_up():
    assert render_rate(Fraction(5, 8)) == "~63%"
    assert render_rate(Fraction(1, 200)) == "~1%"
    assert render_rate(Fraction(2, 5)) == "~40%"


def test_seeded_summary(tmp_path):
    summary = seed_store(CorpusStore(tmp_path)).summarize()
    got = {(r.device_model, r.fixture): r for r in summary.rows}
    for model, fixture, n, k, _, identical in ROWS:
        row = got[(model, fixture)]
        assert (row.attempts, row.successes) == (n, k)
        assert row.hashes_identical == ("YES" if identical else "NO")
    csv_lines = summary.to_csv().splitlines()
    assert csv_lines[0].startswith("device_model,interface_fixture")
    assert "HS175D,SPI (alligator),8,5,5/8,~63%,YES" in csv_lines


def test_empty_summary(tmp_path):
    assert CorpusStore(tmp_path).summarize().rows == ()


def test_single_dump_is_not_applicable(tmp_path):
    store = CorpusStore(tmp_path)
    store.register_dump(DumpRecord(HS175D_SHA, "HS175D", Interface.SPI, Fixture.HOOK))
    assert store.summarize().rows[0].hashes_identical == "N/A"


def test_canonical_conflict_and_demotion(tmp_path):
    store = CorpusStore(tmp_path)
    first = DumpRecord(HS175D_SHA, "HS175D", Interface.SPI, Fixture.HOOK, canonical=True)
    store.register_dump(first)
    store.register_dump(DumpRecord(HS175D_SHA, "HS175D", Interface.SPI, Fixture.HOOK))
    with pytest.raises(ConflictError):
        store.register_dump(DumpRecord(Digest.of(b"x"), "HS175D", Interface.SPI, Fixture.HOOK,
                                       canonical=True))
    assert store.canonical("HS175D").digest.hex == HS175D_SHA
    assert store.demote_canonical("HS175D") == first
    assert store.canonical("HS175D") is None
    assert len(store.dumps("HS175D")) == 2
    store.register_dump(DumpRecord(Digest.of(b"x"), "HS175D", Interface.SPI, Fixture.HOOK,
                                   canonical=True))
    assert store.demote_canonical("HS720") is None


def test_persistence_round_trip(tmp_path):
    a = seed_store(CorpusStore(tmp_path)).summarize()
    b = CorpusStore(tmp_path).summarize()
    assert a == b and a.to_csv() == b.to_csv()


def test_corrupt_ledger_line(tmp_path):
    store = CorpusStore(tmp_path)
    store.attempts_path.write_text("{not json\n")
    with pytest.raises(PersistenceError):
        store.attempts()


def test_unwritable_root(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(PersistenceError):
        CorpusStore(blocker / "store")


outcomes = st.lists(st.tuples(st.sampled_from(["HS175D", "HS720"]), st.booleans(),
                              st.sampled_from([f for f in FailureType if f is not FailureType.NONE])),
                    max_size=30)


@settings(max_examples=25, deadline=None)
@given(outcomes)
def test_histogram_conserves_failures(tmp_path_factory, records):
    store = CorpusStore(tmp_path_factory.mktemp("h"))
    for model, ok, failure in records:
        store.record_attempt(attempt(ok, FailureType.NONE if ok else failure, model=model))
    hist = store.failure_histogram()
    assert sum(hist.values()) == sum(1 for _, ok, _ in records if not ok)
    total = sum(r.attempts for r in store.summarize().rows)
    assert total == len(records)
    for row in store.summarize().rows:
        assert 0 <= row.successes <= row.attempts
