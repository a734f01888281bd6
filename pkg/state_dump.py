"""
Binary dumps of σ(t) for cross-implementation diffing, plus signature detection.

Layout (little-endian):
    8 bytes   magic b"QESIG1\\0\\0"
    8 bytes   D (environment dimension) as uint64
    rest      the 2D×2D matrix, row-major, interleaved re/im float64

Usage:
    from state_dump import detect_format, read_state_dump, write_state_dump

    write_state_dump(state, path)
    fmt = detect_format(stream)               # "qesig" or "unknown"
    matrix, dimension = read_state_dump(path)
"""

import io
import logging
import struct
from pathlib import Path
from typing import BinaryIO, Optional, Tuple, Union

import numpy as np

from sim_errors import ConfigurationError
from state_assembly import JointState

logger = logging.getLogger(__name__)

# ═══════════════════════════════════════════════════════════════════════════════
# FORMAT SIGNATURES
# ═══════════════════════════════════════════════════════════════════════════════

DUMP_MAGIC = b"QESIG1\x00\x00"
_HEADER = struct.Struct("<8sQ")

_EXT_TO_FORMAT = {
    ".qesig": "qesig",
    ".bin": "qesig",
}


# ═══════════════════════════════════════════════════════════════════════════════
# PUBLIC API
# ═══════════════════════════════════════════════════════════════════════════════


def detect_format(source: BinaryIO, *, hint: Optional[str] = None) -> str:
    """Detect whether a binary stream holds a state dump.

    Detection priority:
        1. Extension hint (if provided and recognized)
        2. File signature (magic bytes)

    The stream position is preserved.
    """
    if hint:
        normalized = hint.lower() if hint.startswith(".") else f".{hint.lower()}"
        fmt = _EXT_TO_FORMAT.get(normalized)
        if fmt:
            return fmt

    source = ensure_seekable(source)
    pos = source.tell()
    header = source.read(len(DUMP_MAGIC))
    source.seek(pos)

    if header == DUMP_MAGIC:
        return "qesig"
    return "unknown"


def ensure_seekable(stream: BinaryIO) -> BinaryIO:
    """Wrap a non-seekable stream in BytesIO to make it seekable."""
    if hasattr(stream, "seekable") and stream.seekable():
        return stream
    return io.BytesIO(stream.read())


def encode_state(state: JointState) -> bytes:
    """Serialize σ(t) into the dump layout."""
    matrix = np.ascontiguousarray(state.matrix, dtype="<c16")
    return _HEADER.pack(DUMP_MAGIC, state.dimension) + matrix.tobytes(order="C")


def decode_state(payload: bytes) -> Tuple[np.ndarray, int]:
    """Parse a dump payload into (matrix, D)."""
    if len(payload) < _HEADER.size:
        raise ConfigurationError("state dump is shorter than its header")
    magic, dimension = _HEADER.unpack_from(payload)
    if magic != DUMP_MAGIC:
        raise ConfigurationError(f"not a state dump (magic {magic!r})")

    size = 2 * dimension
    body = payload[_HEADER.size :]
    if len(body) != size * size * 16:
        raise ConfigurationError(
            f"state dump body has {len(body)} bytes, expected {size * size * 16}"
        )
    matrix = np.frombuffer(body, dtype="<c16").reshape(size, size).astype(complex)
    return matrix, int(dimension)


def write_state_dump(state: JointState, path: Union[str, Path]) -> Path:
    """Write σ(t) to ``path`` and return it."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(encode_state(state))
    logger.debug("State dump (D=%d, t=%.6g ps) written to %s", state.dimension, state.time, out)
    return out


def read_state_dump(source: Union[str, Path, BinaryIO]) -> Tuple[np.ndarray, int]:
    """Read a dump from a path or a binary stream."""
    if hasattr(source, "read"):
        stream = ensure_seekable(source)  # type: ignore[arg-type]
        if detect_format(stream) != "qesig":
            raise ConfigurationError("stream does not carry a state-dump signature")
        return decode_state(stream.read())
    return decode_state(Path(source).read_bytes())  # type: ignore[arg-type]
