"""Run the three-tier validator over repeated synthetic reads.

Cases: three identical dense reads, two identical sparse reads, two erased
reads whose noise differs, and a dense read cut short by a failed transfer.
"""

import argparse

from flashtriage import synth
from flashtriage.validation import validate

MiB = 1 << 20


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    s = args.seed

    dense = synth.make_dense_image(s)
    cases = {
        "dense x3": [dense] * 3,
        "sparse x2": [synth.make_sparse_image(s)] * 2,
        "erased, divergent noise": [synth.make_erased_image(8 * MiB, 190, s),
                                    synth.make_erased_image(8 * MiB, 190, s + 1)],
        "dense, truncated second read": [dense, synth.corrupt(dense, synth.Truncate(12 * MiB))],
    }
    for name, reads in cases.items():
        print(f"== {name}")
        print(validate(reads).report())


if __name__ == "__main__":
    main()
