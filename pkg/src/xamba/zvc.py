"""Zero value compression: sparsity bitmap plus packed nonzeros.

Used to compress sparse graph constants (the lower-triangular prefix
mask is the main customer, at roughly half zeros).  The bitmap marks
nonzero positions in row-major order, one bit per element, MSB first
within each byte; packed values follow in the same scan order.  A
negative zero counts as zero, since hardware skip logic keys on the
bitmap and the masks contain no signed zeros.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import CorruptionError, FormatError, ParameterError
from .tensor import Tensor

_MAGIC = b"XZVC"
_VERSION = 1


@dataclass(frozen=True)
class ZvcTensor:
    """Compressed tensor: shape, bitmap bytes, packed nonzeros, value width."""

    shape: tuple
    bitmap: bytes
    packed: np.ndarray  # float32 or float16 depending on value_width
    value_width: int  # bits per stored element: 32 or 16

    @property
    def elements(self) -> int:
        return int(np.prod(self.shape))

    @property
    def popcount(self) -> int:
        return len(self.packed)

    @property
    def compressed_bytes(self) -> int:
        """ceil(elements/8) bitmap bytes plus popcount * value bytes."""
        return (self.elements + 7) // 8 + self.popcount * (self.value_width // 8)

    @property
    def dense_bytes(self) -> int:
        return self.elements * (self.value_width // 8)


def compress(x: Tensor, value_width: int = 32) -> ZvcTensor:
    """Split a tensor into a nonzero bitmap and packed values.

    16-bit mode rounds values to the nearest half-precision float
    (ties to even, numpy's cast behaviour).
    """
    if value_width not in (16, 32):
        raise ParameterError(f"value_width must be 16 or 32, got {value_width}")
    flat = x.flat()
    mask = flat != 0.0  # -0.0 compares equal to zero, so it lands in the bitmap as 0
    bitmap = np.packbits(mask).tobytes()
    values = flat[mask]
    if value_width == 16:
        values = values.astype(np.float16)
    return ZvcTensor(shape=tuple(x.shape), bitmap=bitmap, packed=values, value_width=value_width)


def decompress(z: ZvcTensor) -> Tensor:
    """Rebuild the dense tensor; exact inverse of compress in 32-bit mode."""
    n = z.elements
    bits = np.unpackbits(np.frombuffer(z.bitmap, dtype=np.uint8))
    if len(bits) < n:
        raise CorruptionError("bitmap shorter than element count")
    if np.any(bits[n:]):
        raise CorruptionError("bitmap padding bits must be zero")
    mask = bits[:n].astype(bool)
    if int(mask.sum()) != len(z.packed):
        raise CorruptionError(
            f"bitmap popcount {int(mask.sum())} != packed length {len(z.packed)}"
        )
    flat = np.zeros(n, dtype=np.float32)
    flat[mask] = z.packed.astype(np.float32)
    return Tensor(flat.reshape(z.shape))


def density(z: ZvcTensor) -> float:
    """Fraction of nonzero elements, in [0, 1]."""
    return z.popcount / z.elements


def to_bytes(z: ZvcTensor) -> bytes:
    """Serialize: 'XZVC', u8 version, u8 width, u8 rank, u32 dims, u64 popcount,
    bitmap, packed payload; little-endian."""
    rank = len(z.shape)
    head = _MAGIC + struct.pack("<BBB", _VERSION, z.value_width, rank)
    head += struct.pack(f"<{rank}I", *z.shape)
    head += struct.pack("<Q", z.popcount)
    payload = z.packed.astype("<f2" if z.value_width == 16 else "<f4").tobytes()
    return head + z.bitmap + payload


def from_bytes(raw: bytes) -> ZvcTensor:
    if raw[:4] != _MAGIC:
        raise FormatError(f"bad magic {raw[:4]!r}")
    if len(raw) < 7:
        raise FormatError("truncated header")
    version, width, rank = struct.unpack("<BBB", raw[4:7])
    if version != _VERSION:
        raise FormatError(f"unsupported version {version}")
    if width not in (16, 32):
        raise FormatError(f"bad value width {width}")
    off = 7 + 4 * rank
    if len(raw) < off + 8:
        raise FormatError("truncated dims")
    shape = struct.unpack(f"<{rank}I", raw[7 : 7 + 4 * rank])
    (popcount,) = struct.unpack("<Q", raw[off : off + 8])
    off += 8
    nbytes_bitmap = (int(np.prod(shape)) + 7) // 8
    bitmap = raw[off : off + nbytes_bitmap]
    if len(bitmap) != nbytes_bitmap:
        raise CorruptionError("truncated bitmap")
    off += nbytes_bitmap
    payload = raw[off:]
    vb = width // 8
    if len(payload) != popcount * vb:
        raise CorruptionError(
            f"payload holds {len(payload)} bytes, expected {popcount * vb}"
        )
    packed = np.frombuffer(payload, dtype="<f2" if width == 16 else "<f4")
    z = ZvcTensor(shape=tuple(int(d) for d in shape), bitmap=bitmap, packed=packed, value_width=width)
    actual = int(np.unpackbits(np.frombuffer(bitmap, dtype=np.uint8)).sum())
    if actual != popcount:
        raise CorruptionError(f"bitmap popcount {actual} != header {popcount}")
    return z
