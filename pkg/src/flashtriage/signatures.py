"""Structural signature catalog, header parsers and the offset scanner.

Every catalog entry pairs a magic pattern with a header parser. The parser
doubles as the validator: a magic match becomes a hit only when the parser
accepts the header at that offset. Magic constants follow the published
format definitions:

    FDT       d0 0d fe ed            big-endian header
    gzip      1f 8b 08               RFC 1952
    uImage    27 05 19 56            64-byte header, CRC-32 over the header
    bootimg   "ANDROID!"             AOSP boot image v0-v2
    zImage    18 28 6f 01 at +0x24   ARM Linux decompressor header
    SquashFS  "hsqs"                 little-endian v4 superblock
    JFFS2     85 19                  little-endian node magic
    zlib      78 xx                  RFC 1950, (CMF*256+FLG) % 31 == 0
    LZMA      5d 00 00               .lzma "alone" header, lc=3 lp=0 pb=2
    BMP       "BM"                   BITMAPINFOHEADER family
"""

from __future__ import annotations

import enum
import json
import re
import struct
import zlib
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Callable, Iterable, Sequence

from .errors import HeaderError, MalformedHeaderError, TruncatedHeaderError
from .image import FirmwareImage


class Format(str, enum.Enum):
    FDT = "FDT"
    GZIP = "GZIP"
    UIMAGE = "UIMAGE"
    ANDROID_BOOTIMG = "ANDROID_BOOTIMG"
    ARM_ZIMAGE = "ARM_ZIMAGE"
    SQUASHFS = "SQUASHFS"
    JFFS2_NODE = "JFFS2_NODE"
    ZLIB = "ZLIB"
    LZMA = "LZMA"
    BMP = "BMP"


class FormatClass(str, enum.Enum):
    BOOTLOADER_STAGE = "BOOTLOADER_STAGE"
    KERNEL = "KERNEL"
    FILESYSTEM = "FILESYSTEM"
    COMPRESSED_DATA = "COMPRESSED_DATA"
    RESOURCE = "RESOURCE"


FORMAT_ORDER = {f: i for i, f in enumerate(Format)}

_BASE_CLASS = {
    Format.FDT: FormatClass.BOOTLOADER_STAGE,
    Format.GZIP: FormatClass.COMPRESSED_DATA,
    Format.UIMAGE: FormatClass.KERNEL,
    Format.ANDROID_BOOTIMG: FormatClass.KERNEL,
    Format.ARM_ZIMAGE: FormatClass.KERNEL,
    Format.SQUASHFS: FormatClass.FILESYSTEM,
    Format.JFFS2_NODE: FormatClass.FILESYSTEM,
    Format.ZLIB: FormatClass.COMPRESSED_DATA,
    Format.LZMA: FormatClass.COMPRESSED_DATA,
    Format.BMP: FormatClass.RESOURCE,
}

_BOOT_STAGE_NAME = re.compile(r"(u-?boot|\btee\b|^tee|spl|bl3[0-9])", re.IGNORECASE)

# Bytes that must follow a weak-magic header and must not all be equal.
WEAK_TAIL = 16
ZLIB_PROBE = 512
ZLIB_PROBE_OUT = 1 << 16
JFFS2_MAX_NODE = 0x40000


def format_class(fmt: Format, fields: dict[str, Any] | None = None) -> FormatClass:
    """Class of a hit; gzip members named like boot stages count as bootloader."""
    fmt = Format(fmt)
    if fmt is Format.GZIP and fields:
        name = fields.get("original_name") or ""
        if _BOOT_STAGE_NAME.search(name):
            return FormatClass.BOOTLOADER_STAGE
    return _BASE_CLASS[fmt]


@dataclass(frozen=True)
class SignatureHit:
    offset: int
    format: Format
    format_class: FormatClass
    fields: dict[str, Any]
    description: str
    source: str | None = field(default=None, compare=False, repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "offset": self.offset,
            "offset_hex": f"0x{self.offset:X}",
            "format": self.format.value,
            "class": self.format_class.value,
            "fields": self.fields,
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SignatureHit":
        return cls(
            offset=int(d["offset"]),
            format=Format(d["format"]),
            format_class=FormatClass(d["class"]),
            fields=dict(d["fields"]),
            description=d["description"],
        )


@dataclass(frozen=True)
class CatalogEntry:
    format: Format
    magic: bytes
    anchor: int
    min_header: int
    rule: str


@dataclass(frozen=True)
class SignatureCatalog:
    entries: tuple[CatalogEntry, ...]
    jffs2_header_crc: bool = True

    def __post_init__(self) -> None:
        seen = set()
        for e in self.entries:
            if not e.magic:
                raise ValueError(f"{e.format.value}: empty magic pattern")
            if e.rule not in _PARSERS:
                raise ValueError(f"unknown validator rule {e.rule!r}")
            key = (e.format, e.magic, e.anchor, e.min_header, e.rule)
            if key in seen:
                raise ValueError(f"duplicate catalog entry for {e.format.value}")
            seen.add(key)

    @property
    def max_header(self) -> int:
        return max(e.anchor + max(e.min_header, len(e.magic)) for e in self.entries)


# ---------------------------------------------------------------- helpers

def _need(buf, off: int, n: int, what: str) -> None:
    if off < 0 or off + n > len(buf):
        raise TruncatedHeaderError(f"{what} header at 0x{off:X} needs {n} bytes past end of image")


def _declared(buf, off: int, n: int, what: str) -> None:
    if off + n > len(buf):
        raise TruncatedHeaderError(
            f"{what} at 0x{off:X} declares {n:,} bytes but only {len(buf) - off:,} remain"
        )


def _weak_tail(buf, start: int, what: str) -> None:
    _need(buf, start, WEAK_TAIL, what)
    tail = bytes(buf[start:start + WEAK_TAIL])
    if tail.count(tail[0]) == WEAK_TAIL:
        raise MalformedHeaderError(f"{what} at 0x{start:X} is followed by constant fill")


def _cstring(raw: bytes) -> str:
    return raw.split(b"\0", 1)[0].decode("latin-1")


def _date(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%d")


def _iso(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def jffs2_crc32(data: bytes) -> int:
    """CRC-32 as JFFS2 stores it: reflected 0xEDB88320, zero seed, no final xor."""
    return zlib.crc32(data, 0xFFFFFFFF) ^ 0xFFFFFFFF


# ---------------------------------------------------------------- parsers
# Each parser takes (buf, off, opts) where off is the structure start and
# returns the field map, raising HeaderError subclasses on rejection.

def _parse_fdt(buf, off, opts):
    _need(buf, off, 40, "FDT")
    (magic, total, off_struct, off_strings, off_rsv, version, last_comp,
     _cpu, size_strings, size_struct) = struct.unpack_from(">10I", buf, off)
    if magic != 0xD00DFEED:
        raise MalformedHeaderError("bad FDT magic")
    if not 1 <= version <= 17 or last_comp > version:
        raise MalformedHeaderError(f"FDT version {version}/{last_comp} unsupported")
    if total < 40:
        raise MalformedHeaderError("FDT total size below header size")
    for o in (off_struct, off_strings, off_rsv):
        if not 40 <= o <= total:
            raise MalformedHeaderError("FDT block offset outside blob")
    if off_rsv % 8 or off_struct % 4:
        raise MalformedHeaderError("FDT block misaligned")
    if off_struct + size_struct > total or off_strings + size_strings > total:
        raise MalformedHeaderError("FDT block overruns blob")
    _declared(buf, off, total, "FDT")
    if size_struct < 4 or struct.unpack_from(">I", buf, off + off_struct)[0] != 1:
        raise MalformedHeaderError("FDT structure block does not open a node")
    return {"total_size": total, "version": version, "last_comp_version": last_comp}


_GZIP_FTEXT, _GZIP_FHCRC, _GZIP_FEXTRA, _GZIP_FNAME, _GZIP_FCOMMENT = 1, 2, 4, 8, 16


def _gzip_cstring(buf, pos, limit=1024):
    end = min(len(buf), pos + limit)
    raw = bytes(buf[pos:end])
    nul = raw.find(b"\0")
    if nul < 0:
        raise TruncatedHeaderError("gzip header string not terminated")
    text = raw[:nul]
    if any(c < 0x20 or c > 0x7E for c in text):
        raise MalformedHeaderError("gzip header string not printable")
    return text.decode("ascii"), pos + nul + 1


def _parse_gzip(buf, off, opts):
    _need(buf, off, 10, "gzip")
    id1, id2, cm, flg, mtime, xfl, os_id = struct.unpack_from("<BBBBIBB", buf, off)
    if (id1, id2, cm) != (0x1F, 0x8B, 8):
        raise MalformedHeaderError("bad gzip magic")
    if flg & 0xE0:
        raise MalformedHeaderError("gzip reserved flag bits set")
    if xfl not in (0, 2, 4):
        raise MalformedHeaderError("gzip extra flags invalid")
    if os_id > 13 and os_id != 255:
        raise MalformedHeaderError("gzip OS id invalid")
    pos = off + 10
    fields: dict[str, Any] = {}
    if flg & _GZIP_FEXTRA:
        _need(buf, pos, 2, "gzip")
        (xlen,) = struct.unpack_from("<H", buf, pos)
        pos += 2 + xlen
    if flg & _GZIP_FNAME:
        name, pos = _gzip_cstring(buf, pos)
        if not name:
            raise MalformedHeaderError("gzip original name empty")
        fields["original_name"] = name
    if flg & _GZIP_FCOMMENT:
        _, pos = _gzip_cstring(buf, pos)
    if flg & _GZIP_FHCRC:
        _need(buf, pos, 2, "gzip")
        (hcrc,) = struct.unpack_from("<H", buf, pos)
        if zlib.crc32(bytes(buf[off:pos])) & 0xFFFF != hcrc:
            raise MalformedHeaderError("gzip header CRC mismatch")
        pos += 2
    _weak_tail(buf, pos, "gzip")
    fields["mtime"] = mtime
    fields["header_size"] = pos - off
    return fields


_UIMAGE_OS = {1: "OpenBSD", 2: "NetBSD", 3: "FreeBSD", 4: "4.4BSD", 5: "Linux", 6: "SVR4",
              11: "VxWorks", 17: "U-Boot", 18: "QNX", 20: "RTEMS", 23: "ARM Trusted Firmware",
              24: "TEE"}
_UIMAGE_ARCH = {1: "Alpha", 2: "ARM", 3: "x86", 4: "IA64", 5: "MIPS", 6: "MIPS64", 7: "PowerPC",
                8: "S390", 9: "SuperH", 10: "SPARC", 11: "SPARC64", 15: "NIOS-II", 16: "Blackfin",
                17: "AVR32", 20: "Microblaze", 21: "NDS32", 22: "ARM64", 24: "x86_64", 26: "RISC-V"}
_UIMAGE_TYPE = {1: "standalone", 2: "kernel", 3: "ramdisk", 4: "multi", 5: "firmware",
                6: "script", 7: "filesystem", 8: "flat_dt"}
_UIMAGE_COMP = {0: "none", 1: "gzip", 2: "bzip2", 3: "lzma", 4: "lzo", 5: "lz4", 6: "zstd"}


def _parse_uimage(buf, off, opts):
    _need(buf, off, 64, "uImage")
    header = bytearray(buf[off:off + 64])
    (magic, hcrc, ts, size, _load, _ep, _dcrc, os_id, arch, itype, comp,
     name) = struct.unpack(">7I4B32s", header)
    if magic != 0x27051956:
        raise MalformedHeaderError("bad uImage magic")
    header[4:8] = b"\0\0\0\0"
    if zlib.crc32(bytes(header)) != hcrc:
        raise MalformedHeaderError("uImage header CRC mismatch")
    if itype not in _UIMAGE_TYPE or comp not in _UIMAGE_COMP:
        raise MalformedHeaderError("uImage type or compression unknown")
    _declared(buf, off, 64 + size, "uImage")
    return {
        "image_name": _cstring(name),
        "os": _UIMAGE_OS.get(os_id, f"os-{os_id}"),
        "architecture": _UIMAGE_ARCH.get(arch, f"arch-{arch}"),
        "image_type": _UIMAGE_TYPE[itype],
        "compression": _UIMAGE_COMP[comp],
        "build_timestamp": _iso(ts),
        "data_size": size,
    }


def _parse_bootimg(buf, off, opts):
    _need(buf, off, 608, "Android bootimg")
    if bytes(buf[off:off + 8]) != b"ANDROID!":
        raise MalformedHeaderError("bad bootimg magic")
    (kernel_size, _kaddr, ramdisk_size, _raddr, second_size, _saddr, _tags,
     page_size, header_version, _osv) = struct.unpack_from("<10I", buf, off + 8)
    if page_size not in (2048, 4096, 8192, 16384):
        raise MalformedHeaderError(f"bootimg page size {page_size} invalid")
    if header_version > 2:
        raise MalformedHeaderError("bootimg header version unsupported")
    if kernel_size == 0:
        raise MalformedHeaderError("bootimg has no kernel")
    _declared(buf, off, page_size + kernel_size, "Android bootimg")
    return {
        "kernel_size": kernel_size,
        "page_size": page_size,
        "ramdisk_size": ramdisk_size,
        "second_size": second_size,
        "board_name": _cstring(bytes(buf[off + 48:off + 64])),
    }


def _parse_zimage(buf, off, opts):
    _need(buf, off, 0x34, "ARM zImage")
    magic, start, end = struct.unpack_from("<3I", buf, off + 0x24)
    if magic != 0x016F2818:
        raise MalformedHeaderError("bad zImage magic")
    flag = bytes(buf[off + 0x30:off + 0x34])
    if flag == b"\x01\x02\x03\x04":
        endian = "little"
    elif flag == b"\x04\x03\x02\x01":
        endian = "big"
    else:
        raise MalformedHeaderError("zImage endianness flag missing")
    if end <= start or end - start < 0x34:
        raise MalformedHeaderError("zImage start/end inconsistent")
    _declared(buf, off, end - start, "ARM zImage")
    return {"endianness": endian, "image_size": end - start}


_SQUASHFS_COMP = {1: "gzip", 2: "lzma", 3: "lzo", 4: "xz", 5: "lz4", 6: "zstd"}
_SQUASHFS = struct.Struct("<IIiIIHHHHHHQQQQQQQQ")


def _parse_squashfs(buf, off, opts):
    _need(buf, off, _SQUASHFS.size, "SquashFS")
    (magic, inodes, mkfs_time, block_size, _frags, comp, block_log, _flags, _ids,
     major, minor, _root, bytes_used, *_tables) = _SQUASHFS.unpack_from(buf, off)
    if magic != 0x73717368:
        raise MalformedHeaderError("bad SquashFS magic")
    if major != 4:
        raise MalformedHeaderError(f"SquashFS version {major} unsupported")
    if comp not in _SQUASHFS_COMP:
        raise MalformedHeaderError("SquashFS compression id unknown")
    if not (4096 <= block_size <= 1 << 20) or block_size != 1 << block_log:
        raise MalformedHeaderError("SquashFS block size inconsistent")
    if inodes == 0 or bytes_used < _SQUASHFS.size:
        raise MalformedHeaderError("SquashFS superblock counts implausible")
    _declared(buf, off, bytes_used, "SquashFS")
    return {
        "version_major": major,
        "version_minor": minor,
        "compression_id": comp,
        "compression": _SQUASHFS_COMP[comp],
        "bytes_used": bytes_used,
        "inode_count": inodes,
        "block_size": block_size,
        "mkfs_time": mkfs_time,
    }


JFFS2_NODE_TYPES = {0xE001: "dirent", 0xE002: "inode", 0x2003: "cleanmarker",
                    0x2004: "padding", 0x2006: "summary", 0xE008: "xattr", 0xE009: "xref"}


def _parse_jffs2(buf, off, opts):
    _need(buf, off, 12, "JFFS2")
    if off % 4:
        raise MalformedHeaderError("JFFS2 node not word-aligned")
    magic, ntype, totlen, hdr_crc = struct.unpack_from("<HHII", buf, off)
    if magic != 0x1985:
        raise MalformedHeaderError("bad JFFS2 magic")
    if ntype not in JFFS2_NODE_TYPES:
        raise MalformedHeaderError(f"JFFS2 node type 0x{ntype:04X} unknown")
    if opts.get("jffs2_header_crc", True) and jffs2_crc32(bytes(buf[off:off + 8])) != hdr_crc:
        raise MalformedHeaderError("JFFS2 header CRC mismatch")
    if not 12 <= totlen <= JFFS2_MAX_NODE:
        raise MalformedHeaderError("JFFS2 node length implausible")
    _declared(buf, off, totlen, "JFFS2 node")
    return {"node_type": ntype, "node_type_name": JFFS2_NODE_TYPES[ntype], "node_length": totlen}


_ZLIB_LEVEL = ("fastest", "fast", "default", "best")


def _parse_zlib(buf, off, opts):
    _need(buf, off, 2, "zlib")
    cmf, flg = buf[off], buf[off + 1]
    if cmf != 0x78 or (cmf * 256 + flg) % 31:
        raise MalformedHeaderError("bad zlib header check")
    if flg & 0x20:
        raise MalformedHeaderError("zlib preset dictionary not supported")
    _weak_tail(buf, off + 2, "zlib")
    probe = bytes(buf[off:off + ZLIB_PROBE])
    try:
        zlib.decompressobj().decompress(probe, ZLIB_PROBE_OUT)
    except zlib.error as exc:
        raise MalformedHeaderError(f"zlib stream invalid: {exc}") from None
    return {"method": "deflate", "window_bits": 15, "compression_level": _ZLIB_LEVEL[flg >> 6]}


def _lzma_dict_ok(size: int) -> bool:
    if size < 1 << 12 or size > 1 << 30:
        return False
    low = size & -size
    return size == low or size == 3 * low


def _parse_lzma(buf, off, opts):
    _need(buf, off, 13, "LZMA")
    props, dict_size, usize = struct.unpack_from("<BIQ", buf, off)
    if props >= 225:
        raise MalformedHeaderError("LZMA properties byte out of range")
    if not _lzma_dict_ok(dict_size):
        raise MalformedHeaderError("LZMA dictionary size implausible")
    if usize != 0xFFFFFFFFFFFFFFFF and usize > 1 << 36:
        raise MalformedHeaderError("LZMA uncompressed size implausible")
    _weak_tail(buf, off + 13, "LZMA")
    pb, rem = divmod(props, 45)
    lp, lc = divmod(rem, 9)
    return {
        "properties": props,
        "lc": lc,
        "lp": lp,
        "pb": pb,
        "dictionary_size": dict_size,
        "uncompressed_size": None if usize == 0xFFFFFFFFFFFFFFFF else usize,
    }


_BMP_DIB_SIZES = (40, 52, 56, 108, 124)


def _parse_bmp(buf, off, opts):
    _need(buf, off, 54, "BMP")
    sig, file_size, r1, r2, data_off = struct.unpack_from("<2sIHHI", buf, off)
    dib, width, height, planes, bpp, compression = struct.unpack_from("<IiiHHI", buf, off + 14)
    if sig != b"BM":
        raise MalformedHeaderError("bad BMP magic")
    if r1 or r2:
        raise MalformedHeaderError("BMP reserved fields non-zero")
    if dib not in _BMP_DIB_SIZES or planes != 1:
        raise MalformedHeaderError("BMP info header invalid")
    if bpp not in (1, 4, 8, 16, 24, 32) or compression > 6:
        raise MalformedHeaderError("BMP pixel format invalid")
    if not (1 <= width <= 65535 and 1 <= abs(height) <= 65535):
        raise MalformedHeaderError("BMP dimensions out of range")
    if not 14 + dib <= data_off < file_size:
        raise MalformedHeaderError("BMP pixel data offset invalid")
    _declared(buf, off, file_size, "BMP")
    return {
        "width": width,
        "height": abs(height),
        "bits_per_pixel": bpp,
        "compression": compression,
        "file_size": file_size,
    }


_PARSERS: dict[str, Callable[[Any, int, dict], dict[str, Any]]] = {
    "fdt": _parse_fdt,
    "gzip": _parse_gzip,
    "uimage": _parse_uimage,
    "bootimg": _parse_bootimg,
    "zimage": _parse_zimage,
    "squashfs": _parse_squashfs,
    "jffs2": _parse_jffs2,
    "zlib": _parse_zlib,
    "lzma": _parse_lzma,
    "bmp": _parse_bmp,
}

DEFAULT_CATALOG = SignatureCatalog((
    CatalogEntry(Format.FDT, b"\xd0\x0d\xfe\xed", 0, 40, "fdt"),
    CatalogEntry(Format.GZIP, b"\x1f\x8b\x08", 0, 10, "gzip"),
    CatalogEntry(Format.UIMAGE, b"\x27\x05\x19\x56", 0, 64, "uimage"),
    CatalogEntry(Format.ANDROID_BOOTIMG, b"ANDROID!", 0, 608, "bootimg"),
    CatalogEntry(Format.ARM_ZIMAGE, b"\x18\x28\x6f\x01", 0x24, 0x34, "zimage"),
    CatalogEntry(Format.SQUASHFS, b"hsqs", 0, 96, "squashfs"),
    CatalogEntry(Format.JFFS2_NODE, b"\x85\x19", 0, 12, "jffs2"),
    CatalogEntry(Format.ZLIB, b"\x78", 0, 2, "zlib"),
    CatalogEntry(Format.LZMA, b"\x5d\x00\x00", 0, 13, "lzma"),
    CatalogEntry(Format.BMP, b"BM", 0, 54, "bmp"),
))

_RULE_FOR_FORMAT = {e.format: e.rule for e in DEFAULT_CATALOG.entries}


def _payload(image_or_buf):
    return image_or_buf.payload if isinstance(image_or_buf, FirmwareImage) else image_or_buf


def parse_header(fmt: Format | str, image: FirmwareImage | bytes, offset: int, *,
                 jffs2_header_crc: bool = True) -> dict[str, Any]:
    """Parse the ``fmt`` header whose structure starts at ``offset``."""
    fmt = Format(fmt)
    buf = _payload(image)
    if not 0 <= offset < max(len(buf), 1):
        raise TruncatedHeaderError(f"offset 0x{offset:X} outside image")
    return _PARSERS[_RULE_FOR_FORMAT[fmt]](buf, offset, {"jffs2_header_crc": jffs2_header_crc})


def describe(fmt: Format, fields: dict[str, Any]) -> str:
    """Human-readable one-line summary of a parsed header."""
    if fmt is Format.FDT:
        return f"Flattened Device Tree ({fields['total_size']:,} bytes, v{fields['version']})"
    if fmt is Format.GZIP:
        when = _date(fields["mtime"]) if fields["mtime"] else "no timestamp"
        name = fields.get("original_name")
        return f"gzip: {name} ({when})" if name else f"gzip compressed data ({when})"
    if fmt is Format.UIMAGE:
        return (f"uImage: {fields['image_name']}, {fields['architecture']} "
                f"({fields['build_timestamp'][:10]})")
    if fmt is Format.ANDROID_BOOTIMG:
        return f"Android bootimg; kernel ({fields['kernel_size']:,} bytes)"
    if fmt is Format.ARM_ZIMAGE:
        return f"ARM zImage ({fields['endianness']}-endian)"
    if fmt is Format.SQUASHFS:
        return (f"SquashFS v{fields['version_major']}.{fields['version_minor']}, "
                f"{fields['compression']}, {fields['bytes_used']:,} bytes, "
                f"{fields['inode_count']:,} inodes")
    if fmt is Format.JFFS2_NODE:
        return f"JFFS2 node ({fields['node_type_name']}, {fields['node_length']:,} bytes)"
    if fmt is Format.ZLIB:
        return f"Zlib compressed data, {fields['compression_level']} compression"
    if fmt is Format.LZMA:
        return (f"LZMA compressed data, properties: 0x{fields['properties']:02X}, "
                f"dictionary size: {fields['dictionary_size']:,} bytes")
    if fmt is Format.BMP:
        return (f"BMP image, {fields['width']} x {fields['height']}, "
                f"{fields['bits_per_pixel']}-bit")
    raise ValueError(fmt)


def make_hit(fmt: Format, offset: int, fields: dict[str, Any], source: str | None = None) -> SignatureHit:
    return SignatureHit(offset, fmt, format_class(fmt, fields), fields, describe(fmt, fields), source)


def try_entry(entry: CatalogEntry, buf, start: int, opts: dict) -> SignatureHit | None:
    """Validate one candidate structure start; None when the validator rejects it."""
    if start < 0 or start + entry.min_header > len(buf):
        return None
    try:
        fields = _PARSERS[entry.rule](buf, start, opts)
    except HeaderError:
        return None
    return make_hit(entry.format, start, fields)


def scan(image: FirmwareImage, catalog: SignatureCatalog = DEFAULT_CATALOG) -> list[SignatureHit]:
    """All validated signature hits in ascending offset order."""
    buf = image.payload
    opts = {"jffs2_header_crc": catalog.jffs2_header_crc}
    source = image.digest.hex
    found: dict[tuple[int, Format], SignatureHit] = {}
    for entry in catalog.entries:
        pos = buf.find(entry.magic)
        while pos != -1:
            start = pos - entry.anchor
            key = (start, entry.format)
            if key not in found:
                hit = try_entry(entry, buf, start, opts)
                if hit is not None:
                    found[key] = SignatureHit(hit.offset, hit.format, hit.format_class,
                                              hit.fields, hit.description, source)
            pos = buf.find(entry.magic, pos + 1)
    return sorted(found.values(), key=lambda h: (h.offset, FORMAT_ORDER[h.format]))


def signature_map(hits: Iterable[SignatureHit]) -> tuple[tuple[int, str], ...]:
    """Canonical ``(offset, format)`` list used for cross-dump comparison."""
    return tuple(sorted(((h.offset, h.format.value) for h in hits),
                        key=lambda p: (p[0], FORMAT_ORDER[Format(p[1])])))


def map_deltas(a: Sequence[tuple[int, str]], b: Sequence[tuple[int, str]]) -> list[tuple[int, str, str]]:
    """Symmetric difference of two signature maps, tagged with the side holding each entry."""
    sa, sb = set(a), set(b)
    deltas = [(o, f, "A") for o, f in sa - sb] + [(o, f, "B") for o, f in sb - sa]
    return sorted(deltas, key=lambda d: (d[0], FORMAT_ORDER[Format(d[1])], d[2]))


def hits_to_jsonl(hits: Iterable[SignatureHit]) -> str:
    return "".join(json.dumps(h.to_dict(), sort_keys=True) + "\n" for h in hits)


def hits_to_table(hits: Sequence[SignatureHit]) -> str:
    if not hits:
        return "No structural signatures detected\n"
    lines = [f"{'OFFSET':<12}{'FORMAT':<17}{'CLASS':<18}DESCRIPTION"]
    for h in hits:
        lines.append(f"{'0x%X' % h.offset:<12}{h.format.value:<17}{h.format_class.value:<18}{h.description}")
    return "\n".join(lines) + "\n"
