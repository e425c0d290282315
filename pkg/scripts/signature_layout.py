"""Scan the dense and sparse fixtures and print their signature tables."""

import argparse

from flashtriage import synth
from flashtriage.signatures import Format, hits_to_table, scan


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--full", action="store_true", help="list every JFFS2 node of the sparse image")
    args = ap.parse_args()

    dense = synth.make_dense(args.seed)
    hits = scan(dense.image())
    print(f"dense fixture, seed {args.seed}")
    print(hits_to_table(hits))
    extra = {(h.offset, h.format) for h in hits} ^ set(dense.expected_hits)
    print(f"planted {len(dense.expected_hits)}, found {len(hits)}, mismatches {len(extra)}\n")

    sparse = synth.make_sparse(args.seed)
    shits = scan(sparse.image())
    shown = shits if args.full else [h for h in shits if h.format is not Format.JFFS2_NODE]
    print(f"sparse fixture, seed {args.seed}")
    print(hits_to_table(shown))
    jffs2 = [h for h in shits if h.format is Format.JFFS2_NODE]
    print(f"JFFS2 nodes: {len(jffs2)} between 0x{jffs2[0].offset:X} and 0x{jffs2[-1].offset:X}")


if __name__ == "__main__":
    main()
