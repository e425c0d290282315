"""Populate a corpus store with a bench campaign and print its summary."""

import argparse
import tempfile

from flashtriage.corpus import AttemptRecord, CorpusStore, DumpRecord, FailureType, Outcome
from flashtriage.image import Digest, Fixture, Interface

CAMPAIGN = [
    ("HS175D", Fixture.ALLIGATOR, 8, 5, FailureType.CLIP_MISALIGNMENT, True),
    ("HS175D", Fixture.HOOK, 8, 6, FailureType.INTERMITTENT_CONTACT, True),
    ("HS720", Fixture.ALLIGATOR, 8, 4, FailureType.BAD_RDID, True),
    ("HS720", Fixture.HOOK, 8, 6, FailureType.UNSTABLE_DETECTION, True),
    ("HS360S", Fixture.HOOK, 10, 4, FailureType.CORRUPT_DUMP, False),
]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--store", help="store directory (default: a temporary one)")
    args = ap.parse_args()
    root = args.store or tempfile.mkdtemp(prefix="flashtriage-")
    store = CorpusStore(root)
    for model, fixture, attempts, successes, failure, identical in CAMPAIGN:
        for i in range(attempts):
            ok = i < successes
            store.record_attempt(AttemptRecord(
                model, Interface.SPI, fixture, Outcome.SUCCESS if ok else Outcome.FAILURE,
                FailureType.NONE if ok else failure))
        for i in range(2):
            seed = model.encode() if identical else f"{model}/{i}".encode()
            store.register_dump(DumpRecord(Digest.of(seed), model, Interface.SPI, fixture))
    print(f"store: {root}")
    print(store.summarize().to_csv(), end="")
    print({k.value: v for k, v in store.failure_histogram().items()})


if __name__ == "__main__":
    main()
