"""Deterministic synthetic flash images and byte-level corruption modes.

Three archetypes are generated: a dense embedded-Linux image (16 MiB), a
sparse image of JFFS2 islands around a uImage (8 MiB) and an erased part
(0xFF with light noise). Every planted header is valid for its format; the
bodies are filler. Each generator returns the image together with the
ground truth (placements and the hits a scanner must report).
"""

from __future__ import annotations

import json
import lzma
import struct
import zlib
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Callable

import numpy as np

from .image import AcquisitionMetadata, FirmwareImage
from .rng import SplitMix64, derive_seed
from .signatures import FORMAT_ORDER, Format, jffs2_crc32

MiB = 1 << 20
SECTOR = 4096

DENSE_SIZE = 16 * MiB
SPARSE_SIZE = 8 * MiB
ERASED_SIZE = 8 * MiB


def _ts(y: int, m: int, d: int, hh: int = 0, mm: int = 0) -> int:
    return int(datetime(y, m, d, hh, mm, tzinfo=timezone.utc).timestamp())


# ------------------------------------------------------------------ bodies

@dataclass(frozen=True)
class Body:
    kind: str = "random"  # random | constant | structured
    value: int = 0

    def render(self, n: int, rng: SplitMix64) -> bytes:
        if n <= 0:
            return b""
        if self.kind == "random":
            return rng.random_bytes(n)
        if self.kind == "constant":
            return bytes([self.value]) * n
        if self.kind == "structured":
            # 64-symbol printable alphabet 0x20-0x5F: about 6 bits/byte.
            raw = np.frombuffer(rng.random_bytes(n), dtype=np.uint8)
            return ((raw & 0x3F) + 0x20).astype(np.uint8).tobytes()
        raise ValueError(f"unknown body kind {self.kind!r}")

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "value": self.value}


RANDOM = Body("random")
STRUCTURED = Body("structured")


# ------------------------------------------------------------------ builders
# Each builder returns (bytes, [(relative offset, Format), ...]).

Built = tuple[bytes, list[tuple[int, Format]]]


def build_fdt(rng: SplitMix64, total_size: int, version: int = 17, body: Body = STRUCTURED) -> Built:
    compat = b"vendor,board\0"
    strings = b"compatible\0firmware-blob\0"
    fixed = 40 + 16 + 8 + (12 + 16) + 12 + 8 + len(strings)
    if total_size < fixed + 4:
        raise ValueError(f"FDT total_size must be at least {fixed + 4}")
    slack = total_size - fixed
    blob_len = slack - slack % 4
    strings += b"\0" * (slack - blob_len)
    st = bytearray()
    st += struct.pack(">I", 1) + b"\0\0\0\0"
    st += struct.pack(">III", 3, len(compat), 0) + compat.ljust(16, b"\0")
    st += struct.pack(">III", 3, blob_len, 11) + body.render(blob_len, rng)
    st += struct.pack(">II", 2, 9)
    off_struct = 56
    off_strings = off_struct + len(st)
    header = struct.pack(">10I", 0xD00DFEED, total_size, off_struct, off_strings, 40,
                         version, 16, 0, len(strings), len(st))
    out = header + bytes(16) + bytes(st) + strings
    assert len(out) == total_size
    return out, [(0, Format.FDT)]


def build_gzip(rng: SplitMix64, data_size: int, name: str | None = None, mtime: int = 0,
               body: Body = RANDOM) -> Built:
    data = body.render(data_size, rng)
    flg = 0x08 if name else 0
    out = bytearray(struct.pack("<BBBBIBB", 0x1F, 0x8B, 8, flg, mtime, 2, 3))
    if name:
        out += name.encode("ascii") + b"\0"
    comp = zlib.compressobj(9, zlib.DEFLATED, -15)
    out += comp.compress(data) + comp.flush()
    out += struct.pack("<II", zlib.crc32(data), len(data) & 0xFFFFFFFF)
    return bytes(out), [(0, Format.GZIP)]


def build_uimage(rng: SplitMix64, data_size: int, name: str = "Linux", timestamp: int = 0,
                 os_id: int = 5, arch: int = 2, image_type: int = 2, comp: int = 0,
                 body: Body = STRUCTURED) -> Built:
    data = body.render(data_size, rng)
    fields = [0x27051956, 0, timestamp, len(data), 0x80008000, 0x80008000, zlib.crc32(data),
              os_id, arch, image_type, comp, name.encode("ascii")[:31]]
    header = struct.pack(">7I4B32s", *fields)
    fields[1] = zlib.crc32(header)
    return struct.pack(">7I4B32s", *fields) + data, [(0, Format.UIMAGE)]


def _zimage(rng: SplitMix64, size: int, body: Body) -> bytes:
    code = b"\x00\x00\xa0\xe1" * 8 + b"\x03\x00\x00\xea"
    head = code + struct.pack("<III", 0x016F2818, 0, size) + b"\x01\x02\x03\x04"
    return head + body.render(size - len(head), rng)


def build_android_boot(rng: SplitMix64, kernel_size: int, page_size: int = 2048,
                       board: str = "", cmdline: str = "console=ttyS0,115200",
                       body: Body = RANDOM) -> Built:
    """Boot image header page followed by an ARM zImage kernel of kernel_size bytes."""
    header = bytearray(page_size)
    struct.pack_into("<8s10I16s512s", header, 0, b"ANDROID!", kernel_size, 0x40008000, 0,
                     0x41000000, 0, 0x40F00000, 0x40000100, page_size, 0, 0,
                     board.encode(), cmdline.encode())
    return bytes(header) + _zimage(rng, kernel_size, body), [
        (0, Format.ANDROID_BOOTIMG), (page_size, Format.ARM_ZIMAGE)]


def build_zimage(rng: SplitMix64, size: int, body: Body = RANDOM) -> Built:
    return _zimage(rng, size, body), [(0, Format.ARM_ZIMAGE)]


def build_squashfs(rng: SplitMix64, bytes_used: int, inode_count: int, compression_id: int = 4,
                   block_size: int = 131072, mkfs_time: int = 0, body: Body = RANDOM) -> Built:
    block_log = block_size.bit_length() - 1
    # metadata tables packed into the last sixteenth of the filesystem
    step = bytes_used // 64
    tail = bytes_used - step
    sb = struct.pack("<IIiIIHHHHHHQQQQQQQQ", 0x73717368, inode_count, mkfs_time, block_size,
                     max(1, inode_count // 8), compression_id, block_log, 0x00C0, 1, 4, 0,
                     0x2A0, bytes_used, bytes_used - 0x10, 0xFFFFFFFFFFFFFFFF,
                     tail - 3 * step, tail - 2 * step, tail - step, tail)
    return sb + body.render(bytes_used - len(sb), rng), [(0, Format.SQUASHFS)]


def _jffs2_header(ntype: int, totlen: int) -> bytes:
    head = struct.pack("<HHI", 0x1985, ntype, totlen)
    return head + struct.pack("<I", jffs2_crc32(head))


def build_jffs2_inode(rng: SplitMix64, data_size: int, ino: int = 2, compress: bool = False,
                      body: Body = STRUCTURED) -> Built:
    plain = body.render(data_size, rng)
    data = zlib.compress(plain, 9) if compress else plain
    totlen = 0x44 + len(data)
    rest = struct.pack("<IIIHHIIIIIIIBBH", ino, 1, 0o100644, 0, 0, len(plain),
                       _ts(2022, 5, 31), _ts(2022, 5, 31), _ts(2022, 5, 31), 0,
                       len(data), len(plain), 6 if compress else 0, 0, 0)
    partial = _jffs2_header(0xE002, totlen) + rest
    node = partial + struct.pack("<II", jffs2_crc32(data), jffs2_crc32(partial)) + data
    hits = [(0, Format.JFFS2_NODE)]
    if compress:
        hits.append((0x44, Format.ZLIB))
    return node, hits


def build_jffs2_dirent(rng: SplitMix64, name: str = "config", ino: int = 2, pino: int = 1) -> Built:
    raw = name.encode()
    totlen = 40 + len(raw)
    partial = _jffs2_header(0xE001, totlen) + struct.pack("<IIIIBBH", pino, 1, ino,
                                                          _ts(2022, 5, 31), len(raw), 8, 0)
    node = partial + struct.pack("<II", jffs2_crc32(partial), jffs2_crc32(raw)) + raw
    return node, [(0, Format.JFFS2_NODE)]


def build_jffs2_cleanmarker(rng: SplitMix64) -> Built:
    return _jffs2_header(0x2003, 12), [(0, Format.JFFS2_NODE)]


def build_zlib(rng: SplitMix64, data_size: int, body: Body = STRUCTURED) -> Built:
    return zlib.compress(body.render(data_size, rng), 9), [(0, Format.ZLIB)]


def build_lzma(rng: SplitMix64, data_size: int, body: Body = STRUCTURED) -> Built:
    return lzma.compress(body.render(data_size, rng), format=lzma.FORMAT_ALONE), [(0, Format.LZMA)]


def build_bmp(rng: SplitMix64, width: int = 654, height: int = 270) -> Built:
    """8-bit RLE8 splash image: a few colour bands with a centred block."""
    colours = [rng.randbelow(256) for _ in range(4)]
    rows = bytearray()
    for y in range(height):
        band = colours[(y * 3) // height]
        if height // 3 <= y < 2 * height // 3:
            left = width // 4
            runs = [(left, band), (width - 2 * left, colours[3]), (left, band)]
        else:
            runs = [(width, band)]
        for count, colour in runs:
            while count > 0:
                n = min(count, 255)
                rows += bytes((n, colour))
                count -= n
        rows += b"\x00\x00"
    rows[-2:] = b"\x00\x01"
    palette = b"".join(bytes((i, (i * 7) & 0xFF, (i * 13) & 0xFF, 0)) for i in range(256))
    data_off = 14 + 40 + len(palette)
    size = data_off + len(rows)
    header = struct.pack("<2sIHHI", b"BM", size, 0, 0, data_off)
    dib = struct.pack("<IiiHHIIiiII", 40, width, height, 1, 8, 1, len(rows), 2835, 2835, 256, 0)
    return header + dib + palette + bytes(rows), [(0, Format.BMP)]


def build_blob(rng: SplitMix64, size: int, body: Body = RANDOM) -> Built:
    return body.render(size, rng), []


BUILDERS: dict[str, Callable[..., Built]] = {
    "fdt": build_fdt,
    "gzip": build_gzip,
    "uimage": build_uimage,
    "android_boot": build_android_boot,
    "zimage": build_zimage,
    "squashfs": build_squashfs,
    "jffs2_inode": build_jffs2_inode,
    "jffs2_dirent": build_jffs2_dirent,
    "jffs2_cleanmarker": build_jffs2_cleanmarker,
    "zlib": build_zlib,
    "lzma": build_lzma,
    "bmp": build_bmp,
    "blob": build_blob,
}


# ------------------------------------------------------------------ plans

@dataclass(frozen=True)
class Placement:
    offset: int
    kind: str
    params: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        params = {k: (v.to_dict() if isinstance(v, Body) else v) for k, v in self.params.items()}
        return {"offset": self.offset, "kind": self.kind, "params": params}


@dataclass
class FixturePlan:
    total_size: int
    placements: list[Placement]
    fill: int = 0xFF
    seed: int = 0


@dataclass
class Fixture:
    """A rendered plan: payload plus the ground truth needed to check it."""

    name: str
    plan: FixturePlan
    payload: bytes
    extents: list[tuple[int, int, str]]
    expected_hits: list[tuple[int, Format]]

    def image(self, declared_capacity: int | None = None, device_model: str | None = None,
              **meta: Any) -> FirmwareImage:
        md = AcquisitionMetadata(device_model=device_model or self.name,
                                 notes=f"synthetic {self.name} seed={self.plan.seed}", **meta)
        return FirmwareImage(self.payload, declared_capacity or self.plan.total_size, md)

    def manifest(self) -> dict[str, Any]:
        return {
            "fixture": self.name,
            "seed": self.plan.seed,
            "total_size": self.plan.total_size,
            "fill": self.plan.fill,
            "placements": [
                dict(p.to_dict(), length=end - start)
                for p, (start, end, _) in zip(self.plan.placements, self.extents)
            ],
            "expected_hits": [
                {"offset": off, "offset_hex": f"0x{off:X}", "format": fmt.value}
                for off, fmt in self.expected_hits
            ],
        }

    def manifest_json(self) -> str:
        return json.dumps(self.manifest(), indent=2, sort_keys=True) + "\n"


def render_plan(plan: FixturePlan, name: str = "custom") -> Fixture:
    if not 0 <= plan.fill <= 255:
        raise ValueError("fill must be a byte value")
    buf = bytearray([plan.fill]) * plan.total_size
    extents: list[tuple[int, int, str]] = []
    hits: list[tuple[int, Format]] = []
    for idx, p in enumerate(plan.placements):
        rng = SplitMix64(derive_seed(plan.seed, idx))
        data, rel_hits = BUILDERS[p.kind](rng, **p.params)
        start, end = p.offset, p.offset + len(data)
        if start < 0 or end > plan.total_size:
            raise ValueError(f"placement {p.kind} at 0x{start:X} exceeds image size")
        buf[start:end] = data
        extents.append((start, end, p.kind))
        hits.extend((start + r, fmt) for r, fmt in rel_hits)
    ordered = sorted(extents)
    for (s0, e0, k0), (s1, e1, k1) in zip(ordered, ordered[1:]):
        if s1 < e0:
            raise ValueError(f"placements {k0}@0x{s0:X} and {k1}@0x{s1:X} overlap")
    hits.sort(key=lambda h: (h[0], FORMAT_ORDER[h[1]]))
    return Fixture(name, plan, bytes(buf), extents, hits)


# ------------------------------------------------------------------ archetypes

def dense_plan(seed: int) -> FixturePlan:
    uboot_time = _ts(2023, 7, 10, 8, 42)
    return FixturePlan(DENSE_SIZE, [
        Placement(0x29EE4, "fdt", {"total_size": 6455}),
        Placement(0x40E00, "gzip", {"data_size": 168000, "name": "u-boot-nodtb.bin", "mtime": uboot_time}),
        Placement(0x6AA00, "gzip", {"data_size": 76000, "name": "tee.bin", "mtime": uboot_time}),
        Placement(0x7D800, "fdt", {"total_size": 10931}),
        Placement(0xB0000, "android_boot", {"kernel_size": 2790992, "page_size": 2048}),
        Placement(0x35A800, "fdt", {"total_size": 92240}),
        Placement(0x371200, "bmp", {"width": 654, "height": 270}),
        Placement(0x374600, "bmp", {"width": 654, "height": 270}),
        Placement(0x3B0000, "squashfs", {"bytes_used": 10609848, "inode_count": 1054,
                                         "mkfs_time": _ts(2023, 7, 10, 9, 15)}),
    ], fill=0xFF, seed=seed)


ZLIB_BAND = (0x621000, 0x6C0000)
JFFS2_SPAN = (0x390000, 0x7FD280)


def sparse_plan(seed: int) -> FixturePlan:
    rng = SplitMix64(derive_seed(seed, 0xFFFF))
    placements = [
        Placement(0x90000, "uimage", {"data_size": 0x300000 - 64, "name": "Linux-4.9.129",
                                      "timestamp": _ts(2022, 5, 31, 3, 12)}),
        Placement(JFFS2_SPAN[0], "jffs2_cleanmarker"),
    ]
    ino = 2
    for block in range(JFFS2_SPAN[0] + 0x10000, 0x7F0000, 0x20000):
        if ZLIB_BAND[0] - 0x10000 <= block < ZLIB_BAND[1]:
            continue
        pos = block
        placements.append(Placement(pos, "jffs2_dirent", {"name": f"cfg{ino:03d}", "ino": ino}))
        pos += 48
        for _ in range(rng.randrange(2, 9)):
            placements.append(Placement(pos, "jffs2_inode", {"data_size": 4096, "ino": ino}))
            pos += 0x44 + 4096
        ino += 1
    for k in range(16):
        placements.append(Placement(ZLIB_BAND[0] + k * 0xA000, "jffs2_inode",
                                    {"data_size": 4096, "ino": ino, "compress": True}))
        ino += 1
    placements.append(Placement(JFFS2_SPAN[1], "jffs2_dirent", {"name": "last", "ino": ino}))
    return FixturePlan(SPARSE_SIZE, placements, fill=0xFF, seed=seed)


def make_dense(seed: int) -> Fixture:
    return render_plan(dense_plan(seed), "dense")


def make_sparse(seed: int) -> Fixture:
    return render_plan(sparse_plan(seed), "sparse")


# Noise bytes stay below 0x10 so they can never start a catalog magic.
_NOISE_DENSITY = 64  # out of 256


def make_erased(size: int = ERASED_SIZE, noise_windows: int = 0, seed: int = 0) -> Fixture:
    if size <= 0:
        raise ValueError("size must be positive")
    if not 0 <= noise_windows <= size // SECTOR:
        raise ValueError(f"noise_windows must be within 0..{size // SECTOR}")
    rng = SplitMix64(derive_seed(seed, 0))
    buf = np.full(size, 0xFF, dtype=np.uint8)
    windows = sorted(rng.sample(size // SECTOR, noise_windows))
    for w in windows:
        mask = np.frombuffer(rng.random_bytes(SECTOR), dtype=np.uint8) < _NOISE_DENSITY
        vals = np.frombuffer(rng.random_bytes(SECTOR), dtype=np.uint8) & 0x0F
        region = buf[w * SECTOR:(w + 1) * SECTOR]
        region[mask] = vals[mask]
    plan = FixturePlan(size, [], fill=0xFF, seed=seed)
    extents = [(w * SECTOR, (w + 1) * SECTOR, "noise") for w in windows]
    return Fixture("erased", plan, buf.tobytes(), extents, [])


def make_dense_image(seed: int, **meta: Any) -> FirmwareImage:
    return make_dense(seed).image(DENSE_SIZE, device_model="HS175D", **meta)


def make_sparse_image(seed: int, **meta: Any) -> FirmwareImage:
    return make_sparse(seed).image(SPARSE_SIZE, device_model="HS720", **meta)


def make_erased_image(size: int = ERASED_SIZE, noise_windows: int = 0, seed: int = 0,
                      **meta: Any) -> FirmwareImage:
    return make_erased(size, noise_windows, seed).image(size, device_model="HS360S", **meta)


# ------------------------------------------------------------------ small mixed fixtures

_SMALL_KINDS = ("fdt", "gzip", "uimage", "android_boot", "squashfs", "jffs2_inode",
                "jffs2_dirent", "jffs2_cleanmarker", "zlib", "lzma", "bmp", "blob")


def small_params(kind: str, rng: SplitMix64) -> dict[str, Any]:
    if kind == "fdt":
        return {"total_size": rng.randrange(160, 4000)}
    if kind == "gzip":
        return {"data_size": rng.randrange(64, 3000),
                "name": ["u-boot.bin", "tee.bin", "data.bin", None][rng.randbelow(4)],
                "mtime": _ts(2023, 7, 10) + rng.randbelow(86400)}
    if kind == "uimage":
        return {"data_size": rng.randrange(16, 4000), "name": "Linux-4.9.129",
                "timestamp": _ts(2022, 5, 31)}
    if kind == "android_boot":
        return {"kernel_size": rng.randrange(256, 6000)}
    if kind == "zimage":
        return {"size": rng.randrange(0x40, 6000)}
    if kind == "squashfs":
        return {"bytes_used": rng.randrange(0x800, 0x3000), "inode_count": rng.randrange(1, 2000)}
    if kind == "jffs2_inode":
        return {"data_size": rng.randrange(32, 2048), "compress": bool(rng.randbelow(2))}
    if kind == "jffs2_dirent":
        return {"name": f"f{rng.randbelow(1000)}"}
    if kind in ("zlib", "lzma"):
        return {"data_size": rng.randrange(64, 2048)}
    if kind == "bmp":
        return {"width": rng.randrange(8, 200), "height": rng.randrange(4, 80)}
    if kind == "blob":
        body = [RANDOM, STRUCTURED, Body("constant", rng.randbelow(256))][rng.randbelow(3)]
        return {"size": rng.randrange(64, 8192), "body": body}
    return {}


def mixed_plan(seed: int, total_size: int = 256 * 1024) -> FixturePlan:
    """Random small layout mixing every builder, for scanner cross-checks."""
    rng = SplitMix64(derive_seed(seed, 0xABCD))
    fill = [0xFF, 0x00, 0xFF][rng.randbelow(3)]
    placements = []
    pos = rng.randbelow(64) * 4
    for _ in range(rng.randrange(6, 30)):
        kind = _SMALL_KINDS[rng.randbelow(len(_SMALL_KINDS))]
        params = small_params(kind, rng)
        probe = SplitMix64(derive_seed(seed, len(placements)))
        length = len(BUILDERS[kind](probe, **params)[0])
        if pos + length > total_size:
            break
        placements.append(Placement(pos, kind, params))
        pos += length + rng.randbelow(512) * 4
        pos = (pos + 3) & ~3
    return FixturePlan(total_size, placements, fill=fill, seed=seed)


def make_mixed(seed: int, total_size: int = 256 * 1024) -> Fixture:
    return render_plan(mixed_plan(seed, total_size), "mixed")


# ------------------------------------------------------------------ corruption

@dataclass(frozen=True)
class BitFlips:
    count: int
    seed: int


@dataclass(frozen=True)
class Truncate:
    new_length: int


@dataclass(frozen=True)
class SectorFill:
    start: int
    length: int
    byte: int


@dataclass(frozen=True)
class SectorShuffle:
    seed: int
    sector_size: int = SECTOR


CorruptionMode = BitFlips | Truncate | SectorFill | SectorShuffle


def corrupt(image: FirmwareImage, mode: CorruptionMode) -> FirmwareImage:
    """Return a corrupted copy of ``image``; the input is never modified."""
    data = bytearray(image.payload)
    n = len(data)
    if isinstance(mode, BitFlips):
        if not 0 <= mode.count <= n * 8:
            raise ValueError("bit flip count out of range")
        for bit in SplitMix64(mode.seed).sample(n * 8, mode.count):
            data[bit >> 3] ^= 1 << (bit & 7)
    elif isinstance(mode, Truncate):
        if not 0 <= mode.new_length <= n:
            raise ValueError("truncation length out of range")
        del data[mode.new_length:]
    elif isinstance(mode, SectorFill):
        if mode.start < 0 or mode.length < 0 or mode.start + mode.length > n:
            raise ValueError("fill range outside image")
        if not 0 <= mode.byte <= 255:
            raise ValueError("fill byte out of range")
        data[mode.start:mode.start + mode.length] = bytes([mode.byte]) * mode.length
    elif isinstance(mode, SectorShuffle):
        if mode.sector_size <= 0:
            raise ValueError("sector size must be positive")
        sectors = n // mode.sector_size
        order = list(range(sectors))
        SplitMix64(mode.seed).shuffle(order)
        src = bytes(data)
        for dst, s in enumerate(order):
            data[dst * mode.sector_size:(dst + 1) * mode.sector_size] = \
                src[s * mode.sector_size:(s + 1) * mode.sector_size]
    else:
        raise ValueError(f"unknown corruption mode {mode!r}")
    return image.with_payload(bytes(data))
