"""Binary container for named parameter arrays.

Layout (all integers little-endian):

    magic      4 bytes  b"SDP1"
    version    1 byte   currently 1
    count      uint32   number of records
    records    count times:
        name_len  uint16
        name      name_len bytes, utf-8
        ndim      uint8
        dims      ndim * uint32
        values    prod(dims) * float64
    checksum   32 bytes sha256 of everything before it

Loading verifies the magic and version first (FormatVersionError), then the
checksum (IntegrityError), then decodes records.
"""

from __future__ import annotations

import hashlib
import io
import struct
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .errors import FormatVersionError, IntegrityError

MAGIC = b"SDP1"
VERSION = 1


def save_params(path: str | Path, params: dict[str, Tensor | np.ndarray]) -> None:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<B", VERSION))
    names = sorted(params)
    buf.write(struct.pack("<I", len(names)))
    for name in names:
        arr = params[name]
        data = (arr.data if isinstance(arr, Tensor) else np.asarray(arr))
        data = np.ascontiguousarray(data, dtype=np.float64)
        encoded = name.encode("utf-8")
        buf.write(struct.pack("<H", len(encoded)))
        buf.write(encoded)
        buf.write(struct.pack("<B", data.ndim))
        for d in data.shape:
            buf.write(struct.pack("<I", d))
        buf.write(data.tobytes(order="C"))
    body = buf.getvalue()
    digest = hashlib.sha256(body).digest()
    Path(path).write_bytes(body + digest)


def load_params(path: str | Path, requires_grad: bool = False) -> dict[str, Tensor]:
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 1:
        raise FormatVersionError(f"{path}: file too short for header")
    if raw[: len(MAGIC)] != MAGIC:
        raise FormatVersionError(f"{path}: bad magic {raw[:4]!r}")
    version = raw[len(MAGIC)]
    if version != VERSION:
        raise FormatVersionError(f"{path}: unsupported version {version}")
    if len(raw) < 32:
        raise IntegrityError(f"{path}: missing checksum")
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise IntegrityError(f"{path}: checksum mismatch")

    buf = io.BytesIO(body)
    buf.seek(len(MAGIC) + 1)
    try:
        (count,) = struct.unpack("<I", buf.read(4))
        out: dict[str, Tensor] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", buf.read(2))
            name = buf.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", buf.read(1))
            dims = struct.unpack(f"<{ndim}I", buf.read(4 * ndim)) if ndim else ()
            size = 1
            for d in dims:
                size *= d
            payload = buf.read(8 * size)
            if len(payload) != 8 * size:
                raise IntegrityError(f"{path}: truncated record {name!r}")
            arr = np.frombuffer(payload, dtype="<f8").reshape(dims).copy()
            out[name] = Tensor(arr, requires_grad=requires_grad)
    except (struct.error, UnicodeDecodeError) as exc:
        raise IntegrityError(f"{path}: malformed record stream") from exc
    if buf.read(1):
        raise IntegrityError(f"{path}: trailing bytes after records")
    return out
