"""Entropy statistics and layout bars for the three fixture archetypes."""

import argparse

from flashtriage import synth
from flashtriage.entropy import profile
from flashtriage.signatures import scan
from flashtriage.validation import layout_map


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--width", type=int, default=64)
    args = ap.parse_args()

    images = [
        ("dense", synth.make_dense_image(args.seed)),
        ("sparse", synth.make_sparse_image(args.seed)),
        ("erased", synth.make_erased_image(8 << 20, 190, args.seed)),
    ]
    print(f"{'fixture':<8}{'model':<8}{'mean':>7}{'std':>7}{'low %':>8}{'high %':>8}")
    for name, img in images:
        p = profile(img)
        print(f"{name:<8}{img.metadata.device_model:<8}{p.mean:>7.3f}{p.std:>7.3f}"
              f"{100 * p.low_fraction:>8.1f}{100 * p.high_fraction:>8.1f}")
    print()
    for name, img in images:
        print(f"{name:<8}{layout_map(profile(img), scan(img)).bar(args.width)}")


if __name__ == "__main__":
    main()
