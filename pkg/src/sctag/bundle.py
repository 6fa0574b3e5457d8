"""Model bundle file format.

Layout, all integers little-endian:
  magic  b"SCTG"
  u32    format version (currently 1)
  u32    config length, followed by that many bytes of UTF-8 JSON
  u32    tensor count; per tensor:
         u16 name length + name bytes, u8 rank, u32 per dim,
         raw float32 data
  u32    CRC-32 of everything after the magic
"""

import json
import struct
import zlib

import numpy as np

MAGIC = b"SCTG"
FORMAT_VERSION = 1


class BundleError(ValueError):
    code = "bundle_error"


class BadMagicError(BundleError):
    code = "bad_magic"


class UnsupportedVersionError(BundleError):
    code = "unsupported_version"


class TruncatedBundleError(BundleError):
    code = "truncated"


class ChecksumError(BundleError):
    code = "bad_checksum"


def write_bundle(path, config: dict, tensors: dict):
    """tensors: name -> numpy array; stored as float32."""
    body = bytearray()
    body += struct.pack("<I", FORMAT_VERSION)
    cfg = json.dumps(config, ensure_ascii=False).encode("utf-8")
    body += struct.pack("<I", len(cfg)) + cfg
    body += struct.pack("<I", len(tensors))
    for name, arr in tensors.items():
        a = np.ascontiguousarray(arr, dtype="<f4")
        nb = name.encode("utf-8")
        body += struct.pack("<H", len(nb)) + nb
        body += struct.pack("<B", a.ndim)
        for d in a.shape:
            body += struct.pack("<I", d)
        body += a.tobytes()
    body += struct.pack("<I", zlib.crc32(bytes(body)))
    with open(path, "wb") as f:
        f.write(MAGIC + bytes(body))


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.buf):
            raise TruncatedBundleError(f"truncated while reading {what}")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self, what):
        return struct.unpack("<B", self.take(1, what))[0]

    def u16(self, what):
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what):
        return struct.unpack("<I", self.take(4, what))[0]


def read_bundle(path):
    """Returns (config dict, tensors dict of float32 arrays)."""
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != MAGIC:
        raise BadMagicError("bad magic: not a model bundle")
    body = raw[4:]
    if len(body) < 4:
        raise TruncatedBundleError("truncated before checksum")
    stored = struct.unpack("<I", body[-4:])[0]
    if zlib.crc32(body[:-4]) != stored:
        raise ChecksumError("checksum mismatch")
    r = _Reader(body[:-4])
    version = r.u32("version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}")
    cfg_len = r.u32("config length")
    config = json.loads(r.take(cfg_len, "config").decode("utf-8"))
    count = r.u32("tensor count")
    tensors = {}
    for _ in range(count):
        name = r.take(r.u16("tensor name length"), "tensor name").decode("utf-8")
        rank = r.u8("tensor rank")
        shape = tuple(r.u32("tensor dim") for _ in range(rank))
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        data = np.frombuffer(r.take(4 * n, f"tensor {name} data"), dtype="<f4")
        tensors[name] = data.reshape(shape).copy()
    return config, tensors
