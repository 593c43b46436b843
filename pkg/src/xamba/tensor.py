"""Dense float32 tensors and reference kernels.

The functions here define the ground-truth semantics every rewrite is
checked against: cumulative and full row-reductions with a pinned
sequential accumulation order, matrix products with a pinned
left-to-right inner loop, and exact activation evaluation.  Keeping the
accumulation order fixed makes the masked-matmul forms of CumSum and
ReduceSum reproduce the reference bit for bit, so equivalence tests do
not depend on tolerances absorbing reassociation noise.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ParameterError, ShapeError

ACTIVATION_KINDS = ("sigmoid", "silu", "softplus", "exp")

_XTEN_MAGIC = b"XTEN"


class Tensor:
    """Immutable rank-1 or rank-2 array of float32 values, row-major."""

    __slots__ = ("_data", "shape")

    def __init__(self, values, shape=None):
        arr = np.asarray(values, dtype=np.float32)
        if shape is not None:
            arr = arr.reshape(shape)
        if arr.ndim not in (1, 2):
            raise ShapeError(f"rank must be 1 or 2, got {arr.ndim}")
        if any(d <= 0 for d in arr.shape):
            raise ShapeError(f"dimensions must be positive, got {arr.shape}")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        self._data = arr
        self.shape = arr.shape

    @property
    def array(self) -> np.ndarray:
        """Read-only ndarray view with the tensor's shape."""
        return self._data

    @property
    def rank(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return self._data.size

    def flat(self) -> np.ndarray:
        return self._data.reshape(-1)

    def __repr__(self):
        return f"Tensor(shape={list(self.shape)})"

    def __eq__(self, other):
        if not isinstance(other, Tensor):
            return NotImplemented
        return self.shape == other.shape and self._data.tobytes() == other._data.tobytes()

    def __hash__(self):
        return hash((self.shape, self._data.tobytes()))


def zeros(*shape) -> Tensor:
    return Tensor(np.zeros(shape, dtype=np.float32))


def ones(*shape) -> Tensor:
    return Tensor(np.ones(shape, dtype=np.float32))


def _require_rank2(x: Tensor, op: str) -> np.ndarray:
    if x.rank != 2:
        raise ShapeError(f"{op} expects a rank-2 tensor, got rank {x.rank}")
    return x.array


def cumsum_ref(x: Tensor) -> Tensor:
    """Running column sums, accumulated strictly row by row.

    Row 0 is copied; every later row is the previous output row plus the
    input row, each addition performed in float32.  This order is the
    reference semantics the masked-matmul rewrite is compared against.
    """
    a = _require_rank2(x, "cumsum_ref")
    out = np.empty_like(a)
    out[0] = a[0]
    for i in range(1, a.shape[0]):
        out[i] = out[i - 1] + a[i]
    return Tensor(out)


def reducesum_ref(x: Tensor) -> Tensor:
    """Column sums over all rows; equals the last row of cumsum_ref."""
    a = _require_rank2(x, "reducesum_ref")
    acc = a[0].copy()
    for i in range(1, a.shape[0]):
        acc = acc + a[i]
    return Tensor(acc.reshape(1, -1))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product with a left-to-right float32 inner loop.

    out[i,j] accumulates a[i,p]*b[p,j] for p = 0..k-1 in order, so the
    result of multiplying by a 0/1 prefix mask replays exactly the same
    float32 additions as cumsum_ref.
    """
    am = _require_rank2(a, "matmul")
    bm = _require_rank2(b, "matmul")
    if am.shape[1] != bm.shape[0]:
        raise ShapeError(f"inner dimensions differ: {am.shape} x {bm.shape}")
    out = np.zeros((am.shape[0], bm.shape[1]), dtype=np.float32)
    for p in range(am.shape[1]):
        out += am[:, p : p + 1] * bm[p : p + 1, :]
    return Tensor(out)


def vecmat(v: Tensor, x: Tensor) -> Tensor:
    """Row vector times matrix: [1,m] x [m,n] -> [1,n], p-loop order."""
    vm = _require_rank2(v, "vecmat")
    xm = _require_rank2(x, "vecmat")
    if vm.shape[0] != 1:
        raise ShapeError(f"vecmat vector must have shape [1,m], got {vm.shape}")
    if vm.shape[1] != xm.shape[0]:
        raise ShapeError(f"inner dimensions differ: {vm.shape} x {xm.shape}")
    out = np.zeros((1, xm.shape[1]), dtype=np.float32)
    for p in range(vm.shape[1]):
        out += vm[0, p] * xm[p : p + 1, :]
    return Tensor(out)


def _sigmoid64(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def activation(x: Tensor, kind: str, beta: float = 1.0) -> Tensor:
    """Elementwise exact activation, evaluated in float64 and rounded to float32.

    softplus uses max(bx,0)/b + log1p(exp(-|bx|))/b, which stays finite
    where the naive log(1+exp(bx)) overflows (bx near 88 in float32).
    """
    if kind not in ACTIVATION_KINDS:
        raise ParameterError(f"unknown activation kind {kind!r}")
    if beta <= 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    a = x.array.astype(np.float64)
    if kind == "sigmoid":
        r = _sigmoid64(a)
    elif kind == "silu":
        r = a * _sigmoid64(a)
    elif kind == "softplus":
        ba = beta * a
        r = (np.maximum(ba, 0.0) + np.log1p(np.exp(-np.abs(ba)))) / beta
    else:  # exp
        r = np.exp(a)
    return Tensor(r.astype(np.float32))


@dataclass
class AllcloseResult:
    """Outcome of an elementwise tolerance comparison."""

    passed: bool
    max_abs_diff: float
    worst_index: tuple
    a_value: float
    b_value: float

    def __bool__(self) -> bool:
        return self.passed


def allclose(a: Tensor, b: Tensor, rtol: float = 1e-5, atol: float = 1e-8) -> AllcloseResult:
    """Check |a - b| <= atol + rtol*|b| elementwise; reports the worst entry."""
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    av = a.array.astype(np.float64)
    bv = b.array.astype(np.float64)
    diff = np.abs(av - bv)
    ok = bool(np.all(diff <= atol + rtol * np.abs(bv)))
    idx = np.unravel_index(int(np.argmax(diff)), av.shape) if av.size else (0,)
    return AllcloseResult(
        passed=ok,
        max_abs_diff=float(diff[idx]) if av.size else 0.0,
        worst_index=tuple(int(i) for i in idx),
        a_value=float(av[idx]) if av.size else 0.0,
        b_value=float(bv[idx]) if bv.size else 0.0,
    )


def save_tensor(path, t: Tensor) -> None:
    """Write the raw tensor format: 'XTEN', u8 rank, u32 dims, f32 payload (LE)."""
    with open(path, "wb") as f:
        f.write(_XTEN_MAGIC)
        f.write(struct.pack("<B", t.rank))
        f.write(struct.pack(f"<{t.rank}I", *t.shape))
        f.write(t.array.astype("<f4").tobytes())


def load_tensor(path) -> Tensor:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != _XTEN_MAGIC:
        raise FormatError(f"bad magic {raw[:4]!r}")
    if len(raw) < 5:
        raise FormatError("truncated header")
    rank = raw[4]
    if rank not in (1, 2):
        raise FormatError(f"unsupported rank {rank}")
    head = 5 + 4 * rank
    if len(raw) < head:
        raise FormatError("truncated dims")
    dims = struct.unpack(f"<{rank}I", raw[5:head])
    n = int(np.prod(dims))
    payload = raw[head:]
    if len(payload) != 4 * n:
        raise FormatError(f"payload holds {len(payload)} bytes, expected {4 * n}")
    data = np.frombuffer(payload, dtype="<f4").reshape(dims)
    return Tensor(data)
