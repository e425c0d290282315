"""flashtriage command line.

Exit codes: 0 ok/validated, 2 incomplete, 3 divergent, 64 usage, 70 internal.
Machine formats (csv, json, jsonl) go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .consistency import compare
from .corpus import (AttemptRecord, CorpusStore, DumpRecord, FailureType, Outcome,
                     default_store_path, render_rate, STORE_ENV)
from .entropy import DEFAULT_WINDOW, HIGH_THRESHOLD, LOW_THRESHOLD, emit_profile, profile
from .errors import CorpusError, HeaderError, IngestionError, InsufficientDataError, PersistenceError
from .image import AcquisitionMetadata, Digest, Fixture, Interface, load_image
from .signatures import DEFAULT_CATALOG, SignatureCatalog, hits_to_jsonl, hits_to_table, scan
from .synth import make_dense, make_erased, make_sparse
from .validation import Overall, layout_map, render_map_text, validate

EXIT_OK = 0
EXIT_INCOMPLETE = 2
EXIT_DIVERGENT = 3
EXIT_USAGE = 64
EXIT_INTERNAL = 70


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2, which means INCOMPLETE here
        raise UsageError(f"{self.prog}: {message}")


_SIZE = re.compile(r"^\s*(\d+)\s*(B|KiB|MiB|GiB)?\s*$", re.IGNORECASE)
_UNITS = {"b": 1, "kib": 1 << 10, "mib": 1 << 20, "gib": 1 << 30}


def parse_size(text: str) -> int:
    m = _SIZE.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"invalid size {text!r} (use bytes, KiB or MiB)")
    value = int(m.group(1)) * _UNITS[(m.group(2) or "b").lower()]
    if value <= 0:
        raise argparse.ArgumentTypeError("size must be positive")
    return value


def _metadata(path: Path, args: argparse.Namespace) -> AcquisitionMetadata:
    sidecar = Path(args.meta) if getattr(args, "meta", None) else path.with_name(path.name + ".meta.json")
    data: dict = {}
    if sidecar.exists():
        data = json.loads(sidecar.read_text())
    elif getattr(args, "meta", None):
        raise UsageError(f"metadata sidecar {sidecar} not found")
    if getattr(args, "model", None):
        data["device_model"] = args.model
    data.setdefault("device_model", "UNKNOWN")
    return AcquisitionMetadata.from_dict(data)


def _load(path_text: str, args: argparse.Namespace):
    path = Path(path_text)
    if not path.is_file():
        raise UsageError(f"{path_text}: no such file")
    capacity = getattr(args, "capacity", None) or max(path.stat().st_size, 1)
    return load_image(path, capacity, _metadata(path, args))


def _catalog(args: argparse.Namespace) -> SignatureCatalog:
    if getattr(args, "no_jffs2_crc", False):
        return SignatureCatalog(DEFAULT_CATALOG.entries, jffs2_header_crc=False)
    return DEFAULT_CATALOG


def _out(text: str | bytes) -> None:
    if isinstance(text, bytes):
        sys.stdout.flush()
        sys.stdout.buffer.write(text)
        sys.stdout.buffer.flush()
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------ subcommands

def cmd_entropy(args) -> int:
    img = _load(args.file, args)
    prof = profile(img, args.window, args.low, args.high)
    if args.format in ("csv", "json"):
        _out(emit_profile(prof, args.format))
    else:
        _out(f"file            {args.file}\n"
             f"windows         {prof.window_count} x {prof.window_size} bytes"
             f" ({prof.dropped_bytes} trailing bytes dropped)\n"
             f"mean            {prof.mean:.3f} bits/byte\n"
             f"std             {prof.std:.3f}\n"
             f"low  <{prof.low_threshold:g}       {100 * prof.low_fraction:.1f}%\n"
             f"high >{prof.high_threshold:g}       {100 * prof.high_fraction:.1f}%\n")
    return EXIT_OK


def cmd_scan(args) -> int:
    hits = scan(_load(args.file, args), _catalog(args))
    _out(hits_to_jsonl(hits) if args.format == "jsonl" else hits_to_table(hits))
    return EXIT_OK


def cmd_validate(args) -> int:
    images = [_load(f, args) for f in args.files]
    verdict = validate(images, window_size=args.window, catalog=_catalog(args))
    _out(verdict.to_json() if args.format == "json" else verdict.report())
    return EXIT_OK if verdict.overall is Overall.VALIDATED else EXIT_INCOMPLETE


def cmd_compare(args) -> int:
    report = compare(_load(args.a, args), _load(args.b, args), _catalog(args))
    if args.format == "json":
        _out(report.to_json())
    else:
        lines = [report.summary()]
        deltas = report.signature_deltas
        for off, fmt, side in deltas[:args.max_deltas]:
            lines.append(f"  only in {side}: {fmt} at 0x{off:X}")
        if len(deltas) > args.max_deltas:
            lines.append(f"  ... {len(deltas) - args.max_deltas} more (use --format json)")
        _out("\n".join(lines) + "\n")
    return EXIT_OK if report.digest_equal else EXIT_DIVERGENT


def cmd_map(args) -> int:
    img = _load(args.file, args)
    rmap = layout_map(profile(img, args.window), scan(img, _catalog(args)))
    _out(rmap.to_json() if args.format == "json" else render_map_text(rmap, args.width))
    return EXIT_OK


def _store(args) -> CorpusStore:
    root = args.store or default_store_path()
    if not root:
        raise UsageError(f"corpus store directory required (--store or ${STORE_ENV})")
    return CorpusStore(root)


def cmd_corpus_attempt(args) -> int:
    rec = AttemptRecord(args.model, Interface(args.interface), Fixture(args.fixture),
                        Outcome(args.outcome), FailureType(args.failure_type), args.notes)
    _store(args).record_attempt(rec)
    _out(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
    return EXIT_OK


def cmd_corpus_dump(args) -> int:
    if bool(args.digest) == bool(args.file):
        raise UsageError("corpus dump needs exactly one of --digest or --file")
    if args.file:
        path = Path(args.file)
        if not path.is_file():
            raise UsageError(f"{args.file}: no such file")
        digest = load_image(path, max(path.stat().st_size, 1),
                            AcquisitionMetadata(device_model=args.model)).digest
        ref = args.file
    else:
        digest = Digest.from_hex(args.digest)
        ref = ""
    rec = DumpRecord(digest, args.model, Interface(args.interface), Fixture(args.fixture),
                     args.canonical, args.verdict, ref)
    _store(args).register_dump(rec)
    _out(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
    return EXIT_OK


def cmd_corpus_summary(args) -> int:
    summary = _store(args).summarize()
    if args.format == "csv":
        _out(summary.to_csv())
        return EXIT_OK
    lines = [f"{'MODEL':<10}{'INTERFACE':<18}{'ATTEMPTS':>9}{'SUCCESS':>9}{'RATE':>7}  HASHES"]
    for r in summary.rows:
        lines.append(f"{r.device_model:<10}{r.interface_fixture:<18}{r.attempts:>9}"
                     f"{r.successes:>9}{render_rate(r.rate):>7}  {r.hashes_identical}")
    _out("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_corpus_failures(args) -> int:
    hist = _store(args).failure_histogram(args.model)
    _out(json.dumps({k.value: v for k, v in sorted(hist.items())}, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_corpus_demote(args) -> int:
    rec = _store(args).demote_canonical(args.model)
    if rec is None:
        print(f"no canonical dump for {args.model}", file=sys.stderr)
    else:
        _out(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.kind == "dense":
        fx = make_dense(args.seed)
    elif args.kind == "sparse":
        fx = make_sparse(args.seed)
    else:
        fx = make_erased(args.size, args.noise_windows, args.seed)
    out = Path(args.out)
    out.write_bytes(fx.payload)
    manifest = Path(args.manifest) if args.manifest else out.with_name(out.name + ".manifest.json")
    manifest.write_text(fx.manifest_json())
    print(f"wrote {out} ({len(fx.payload)} bytes) and {manifest}", file=sys.stderr)
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="flashtriage", description="Firmware flash-dump triage and validation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def image_opts(sp, capacity_required=False):
        sp.add_argument("--capacity", type=parse_size, required=capacity_required,
                        help="declared flash capacity (bytes, KiB or MiB)")
        sp.add_argument("--model", help="device model (overrides sidecar metadata)")
        sp.add_argument("--meta", help="metadata sidecar JSON (default: <file>.meta.json)")

    sp = sub.add_parser("entropy", help="sliding-window entropy profile")
    sp.add_argument("file")
    sp.add_argument("--window", type=parse_size, default=DEFAULT_WINDOW)
    sp.add_argument("--low", type=float, default=LOW_THRESHOLD)
    sp.add_argument("--high", type=float, default=HIGH_THRESHOLD)
    sp.add_argument("--format", choices=("table", "csv", "json"), default="table")
    image_opts(sp)
    sp.set_defaults(func=cmd_entropy)

    sp = sub.add_parser("scan", help="structural signature scan")
    sp.add_argument("file")
    sp.add_argument("--format", choices=("table", "jsonl"), default="table")
    sp.add_argument("--no-jffs2-crc", action="store_true", help="skip JFFS2 header CRC check")
    image_opts(sp)
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("validate", help="three-tier validation of repeated reads")
    sp.add_argument("files", nargs="+")
    sp.add_argument("--window", type=parse_size, default=DEFAULT_WINDOW)
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.add_argument("--no-jffs2-crc", action="store_true")
    image_opts(sp, capacity_required=True)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("compare", help="cross-dump consistency")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.add_argument("--max-deltas", type=int, default=20, help="signature deltas listed in text mode")
    sp.add_argument("--no-jffs2-crc", action="store_true")
    image_opts(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("map", help="flash layout region map")
    sp.add_argument("file")
    sp.add_argument("--window", type=parse_size, default=DEFAULT_WINDOW)
    sp.add_argument("--width", type=int, default=64)
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.add_argument("--no-jffs2-crc", action="store_true")
    image_opts(sp)
    sp.set_defaults(func=cmd_map)

    sp = sub.add_parser("corpus", help="extraction ledger")
    csub = sp.add_subparsers(dest="corpus_command", required=True, parser_class=_Parser)

    def store_opt(c):
        c.add_argument("--store", help=f"store directory (default ${STORE_ENV})")

    def cell_opts(c):
        c.add_argument("--model", required=True)
        c.add_argument("--interface", choices=[i.value for i in Interface], default="SPI")
        c.add_argument("--fixture", choices=[f.value for f in Fixture], default="NONE")

    c = csub.add_parser("attempt", help="record an acquisition attempt")
    store_opt(c)
    cell_opts(c)
    c.add_argument("--outcome", choices=[o.value for o in Outcome], required=True)
    c.add_argument("--failure-type", choices=[f.value for f in FailureType], default="NONE")
    c.add_argument("--notes", default="")
    c.set_defaults(func=cmd_corpus_attempt)

    c = csub.add_parser("dump", help="register a dump by digest or file")
    store_opt(c)
    cell_opts(c)
    c.add_argument("--digest")
    c.add_argument("--file")
    c.add_argument("--canonical", action="store_true")
    c.add_argument("--verdict", default="")
    c.set_defaults(func=cmd_corpus_dump)

    c = csub.add_parser("summary", help="success-rate summary")
    store_opt(c)
    c.add_argument("--format", choices=("table", "csv"), default="table")
    c.set_defaults(func=cmd_corpus_summary)

    c = csub.add_parser("failures", help="failure-type histogram")
    store_opt(c)
    c.add_argument("--model")
    c.set_defaults(func=cmd_corpus_failures)

    c = csub.add_parser("demote", help="clear a model's canonical dump flag")
    store_opt(c)
    c.add_argument("--model", required=True)
    c.set_defaults(func=cmd_corpus_demote)

    sp = sub.add_parser("synth", help="generate a synthetic fixture")
    sp.add_argument("kind", choices=("dense", "sparse", "erased"))
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
    sp.add_argument("--size", type=parse_size, default=8 << 20, help="erased image size")
    sp.add_argument("--noise-windows", type=int, default=0, help="erased image noise windows")
    sp.set_defaults(func=cmd_synth)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PersistenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (IngestionError, InsufficientDataError, HeaderError, CorpusError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
