"""Piecewise-linear activation tables for the lookup-table datapath.

A table covers [lo, hi] with uniform breakpoints; each segment stores a
slope/intercept pair so evaluation is a single multiply-add after a
binary search.  Segments interpolate the exact function at their
endpoints, which guarantees continuity and knot exactness by
construction.  Outside the fitted range the exact asymptotes take over:
both SiLU and Softplus flatten to 0 on the left and approach y = x on
the right, decaying exponentially fast, so linear extensions cost
almost nothing in accuracy.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, NumericError, ParameterError
from .tensor import Tensor, activation

PLU_FUNCS = ("silu", "softplus")

_MAGIC = b"CLUT"
_VERSION = 1
_FUNC_CODES = {"silu": 0, "softplus": 1}
_FUNC_NAMES = {v: k for k, v in _FUNC_CODES.items()}


@dataclass(frozen=True)
class PluTable:
    """Breakpoints x_0..x_S, per-segment slopes/intercepts, and asymptotic
    extensions (slope, intercept) for x < x_0 and x > x_S."""

    func: str
    beta: float
    breakpoints: np.ndarray  # float32, length S+1, strictly increasing
    slopes: np.ndarray  # float32, length S
    intercepts: np.ndarray  # float32, length S
    left_ext: tuple
    right_ext: tuple

    @property
    def segments(self) -> int:
        return len(self.slopes)


def _exact(func: str, beta: float, xs: np.ndarray) -> np.ndarray:
    return activation(Tensor(xs.astype(np.float32).reshape(1, -1)), func, beta).flat().astype(np.float64)


def fit_uniform(func: str, beta: float, lo: float, hi: float, segments: int) -> PluTable:
    """Fit a table whose segment k interpolates the function at x_{k-1}, x_k."""
    if func not in PLU_FUNCS:
        raise ParameterError(f"func must be one of {PLU_FUNCS}, got {func!r}")
    if beta <= 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    if not lo < hi:
        raise ParameterError(f"need lo < hi, got [{lo}, {hi}]")
    if segments < 1:
        raise ParameterError(f"segments must be >= 1, got {segments}")
    xs = np.linspace(lo, hi, segments + 1, dtype=np.float64)
    fs = _exact(func, beta, xs)
    slopes = (fs[1:] - fs[:-1]) / (xs[1:] - xs[:-1])
    intercepts = fs[:-1] - slopes * xs[:-1]
    # Both functions vanish leftward and approach y = x rightward.
    left_ext = (0.0, 0.0)
    right_ext = (1.0, 0.0)
    return PluTable(
        func=func,
        beta=float(np.float32(beta)),
        breakpoints=xs.astype(np.float32),
        slopes=slopes.astype(np.float32),
        intercepts=intercepts.astype(np.float32),
        left_ext=left_ext,
        right_ext=right_ext,
    )


def eval(table: PluTable, x):
    """Evaluate m_k*x + c_k for the segment containing x.

    Accepts a scalar or ndarray.  A value equal to an interior breakpoint
    belongs to the segment on its right; the extensions apply strictly
    outside [x_0, x_S].
    """
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NumericError("eval requires finite inputs")
    bp = table.breakpoints.astype(np.float64)
    idx = np.searchsorted(bp, arr, side="right")
    seg = np.clip(idx, 1, table.segments) - 1
    m = table.slopes.astype(np.float64)[seg]
    c = table.intercepts.astype(np.float64)[seg]
    below = arr < bp[0]
    above = arr > bp[-1]
    m = np.where(below, table.left_ext[0], np.where(above, table.right_ext[0], m))
    c = np.where(below, table.left_ext[1], np.where(above, table.right_ext[1], c))
    out = m * arr + c
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return float(out)
    return out


def max_error(table: PluTable, grid_points: int) -> tuple:
    """Worst |table - exact| over a dense uniform grid spanning the fitted
    range plus 2 on each side, so the extension regions are covered."""
    if grid_points < 2:
        raise ParameterError(f"grid_points must be >= 2, got {grid_points}")
    lo = float(table.breakpoints[0]) - 2.0
    hi = float(table.breakpoints[-1]) + 2.0
    xs = np.linspace(lo, hi, grid_points, dtype=np.float64)
    approx = eval(table, xs)
    exact = _exact(table.func, table.beta, xs)
    err = np.abs(approx - exact)
    k = int(np.argmax(err))
    return float(err[k]), float(xs[k])


def serialize(table: PluTable) -> bytes:
    """16-byte header ('CLUT', u16 version, u8 func, u8 pad, f32 beta, u32 S)
    then float32 arrays: breakpoints[S+1], slopes[S], intercepts[S],
    left_ext[2], right_ext[2]; little-endian."""
    head = _MAGIC + struct.pack(
        "<HBBfI", _VERSION, _FUNC_CODES[table.func], 0, table.beta, table.segments
    )
    body = (
        table.breakpoints.astype("<f4").tobytes()
        + table.slopes.astype("<f4").tobytes()
        + table.intercepts.astype("<f4").tobytes()
        + np.asarray(table.left_ext, dtype="<f4").tobytes()
        + np.asarray(table.right_ext, dtype="<f4").tobytes()
    )
    return head + body


def deserialize(raw: bytes) -> PluTable:
    if raw[:4] != _MAGIC:
        raise FormatError(f"bad magic {raw[:4]!r}")
    if len(raw) < 16:
        raise FormatError("truncated header")
    version, func_code, _pad, beta, segments = struct.unpack("<HBBfI", raw[4:16])
    if version != _VERSION:
        raise FormatError(f"unsupported version {version}")
    if func_code not in _FUNC_NAMES:
        raise FormatError(f"unknown function code {func_code}")
    if segments < 1:
        raise FormatError(f"bad segment count {segments}")
    expect = 16 + 4 * (3 * segments + 5)
    if len(raw) != expect:
        raise FormatError(f"payload is {len(raw)} bytes, expected {expect}")
    floats = np.frombuffer(raw[16:], dtype="<f4")
    bp = floats[: segments + 1]
    if not np.all(np.diff(bp) > 0):
        raise FormatError("breakpoints are not strictly increasing")
    off = segments + 1
    slopes = floats[off : off + segments]
    off += segments
    intercepts = floats[off : off + segments]
    off += segments
    left = (float(floats[off]), float(floats[off + 1]))
    right = (float(floats[off + 2]), float(floats[off + 3]))
    return PluTable(
        func=_FUNC_NAMES[func_code],
        beta=float(beta),
        breakpoints=bp.copy(),
        slopes=slopes.copy(),
        intercepts=intercepts.copy(),
        left_ext=left,
        right_ext=right,
    )


def save_table(path, table: PluTable) -> None:
    with open(path, "wb") as f:
        f.write(serialize(table))


def load_table(path) -> PluTable:
    with open(path, "rb") as f:
        return deserialize(f.read())


def default_tables(segments: int = 64, lo: float = -8.0, hi: float = 8.0, beta: float = 1.0) -> dict:
    """The shipped configuration: S=64 over [-8, 8] for both functions."""
    return {f: fit_uniform(f, beta, lo, hi, segments) for f in PLU_FUNCS}
