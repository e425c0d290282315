"""Extraction counts used to seed a corpus store in tests."""

from flashtriage.corpus import AttemptRecord, CorpusStore, DumpRecord, FailureType, Outcome
from flashtriage.image import Digest, Fixture, Interface

# (model, fixture, attempts, successes, failure type, dumps identical)
ROWS = [
    ("HS175D", Fixture.ALLIGATOR, 8, 5, FailureType.CLIP_MISALIGNMENT, True),
    ("HS175D", Fixture.HOOK, 8, 6, FailureType.INTERMITTENT_CONTACT, True),
    ("HS720", Fixture.ALLIGATOR, 8, 4, FailureType.BAD_RDID, True),
    ("HS720", Fixture.HOOK, 8, 6, FailureType.UNSTABLE_DETECTION, True),
    ("HS360S", Fixture.HOOK, 10, 4, FailureType.CORRUPT_DUMP, False),
]


def seed_store(store: CorpusStore) -> CorpusStore:
    for model, fixture, attempts, successes, failure, identical in ROWS:
        for i in range(attempts):
            ok = i < successes
            store.record_attempt(AttemptRecord(
                model, Interface.SPI, fixture, Outcome.SUCCESS if ok else Outcome.FAILURE,
                FailureType.NONE if ok else failure))
        for i in range(2):
            digest = Digest.of(model.encode() if identical else f"{model}-{i}".encode())
            store.register_dump(DumpRecord(digest, model, Interface.SPI, fixture))
    return store
