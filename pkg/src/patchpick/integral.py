"""Exact integral images (summed-area tables) and windowed rectangle sums.

Tables use the exclusive-prefix convention: cell (i, j) holds the sum of all
source values with row < i and col < j, so row 0 and column 0 are zero and a
k-by-k window anchored at (u, v) is

    table[u+k, v+k] + table[u, v] - table[u+k, v] - table[u, v+k]

Accumulation is exact 64-bit integer arithmetic. Real-valued sources are
brought onto a 2^-16 fixed-point grid first so every downstream prefix sum
stays an exact integer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FIXED_POINT_SCALE = 65536  # 2^16

_I64_MAX = np.iinfo(np.int64).max


def fixed_point_quantize(arr: np.ndarray) -> np.ndarray:
    """round(x * 65536) half away from zero, as int64."""
    scaled = np.asarray(arr, dtype=np.float64) * FIXED_POINT_SCALE
    return (np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)).astype(np.int64)


@dataclass(frozen=True)
class IntegralImage:
    """Exclusive-prefix sums of one integer plane.

    table has shape (height+1, width+1); source is a free-form descriptor of
    what was integrated. Immutable after construction; concurrent queries
    are safe.
    """

    table: np.ndarray
    height: int
    width: int
    source: str = ""

    @classmethod
    def from_table(cls, table: np.ndarray, source: str = "") -> "IntegralImage":
        """Wrap a prebuilt table that satisfies the exclusive-prefix invariant."""
        table = np.asarray(table)
        table.setflags(write=False)
        return cls(table=table, height=table.shape[0] - 1, width=table.shape[1] - 1, source=source)

    def window_sum(self, u: int, v: int, k: int) -> int:
        """Exact sum over the k-by-k window anchored at row u, col v."""
        if k < 1:
            raise ValueError(f"window size must be >= 1, got {k}")
        if not (0 <= u and u + k <= self.height and 0 <= v and v + k <= self.width):
            raise ValueError(
                f"window (u={u}, v={v}, k={k}) out of bounds for "
                f"{self.width}x{self.height} plane"
            )
        t = self.table
        return int(t[u + k, v + k]) + int(t[u, v]) - int(t[u + k, v]) - int(t[u, v + k])

    def window_sum_grid(self, k: int, stride: int) -> np.ndarray:
        """Window sums for the full anchor grid (step `stride`), int64 array.

        Grid shape is ((height-k)//stride + 1, (width-k)//stride + 1); entry
        (r, c) is the window sum anchored at (r*stride, c*stride).
        """
        if k < 1 or k > self.height or k > self.width:
            raise ValueError(f"window size {k} out of range for {self.width}x{self.height}")
        if stride < 1:
            raise ValueError(f"stride must be >= 1, got {stride}")
        rows = (self.height - k) // stride + 1
        cols = (self.width - k) // stride + 1
        eu = (rows - 1) * stride + 1
        ev = (cols - 1) * stride + 1
        t = self.table
        return (
            t[k : k + eu : stride, k : k + ev : stride]
            + t[0:eu:stride, 0:ev:stride]
            - t[0:eu:stride, k : k + ev : stride]
            - t[k : k + eu : stride, 0:ev:stride]
        )


def build_integral(plane: np.ndarray, source: str = "") -> IntegralImage:
    """Build the exclusive-prefix table of a 2-D integer plane in one pass.

    Raises if the worst-case total |max value| * pixel count could overflow
    the 64-bit accumulator.
    """
    plane = np.asarray(plane)
    if plane.ndim != 2:
        raise ValueError(f"expected a 2-D plane, got shape {plane.shape}")
    if plane.shape[0] < 1 or plane.shape[1] < 1:
        raise ValueError(f"plane dimensions must be >= 1, got {plane.shape}")
    if not np.issubdtype(plane.dtype, np.integer):
        raise ValueError(f"expected an integer plane, got dtype {plane.dtype}")
    max_abs = int(np.abs(plane).max())
    if max_abs and max_abs > _I64_MAX // plane.size:
        raise ValueError(
            f"accumulator bound exceeded: |max|={max_abs} over {plane.size} pixels "
            "does not fit a 64-bit integral"
        )
    h, w = plane.shape
    table = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(plane, axis=0, out=table[1:, 1:])
    np.cumsum(table[1:, 1:], axis=1, out=table[1:, 1:])
    table.setflags(write=False)
    return IntegralImage(table=table, height=h, width=w, source=source)


def product_planes(a, b) -> np.ndarray:
    """Element-wise product per channel as exact integer planes, (C, H, W).

    8-bit rasters contribute their sample values directly; real-valued
    rasters are fixed-point quantized (scale 2^16) first, so products of two
    real operands carry scale 2^32 and mixed products carry 2^16. The caller
    divides the scale out when evaluating sums.
    """
    pa = _as_exact_plane(a)
    pb = _as_exact_plane(b)
    if pa.shape != pb.shape:
        raise ValueError(f"shape mismatch: {pa.shape} vs {pb.shape}")
    return np.moveaxis(pa * pb, 2, 0)


def _as_exact_plane(x) -> np.ndarray:
    data = getattr(x, "data", x)
    arr = np.asarray(data)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if np.issubdtype(arr.dtype, np.integer):
        return arr.astype(np.int64)
    return fixed_point_quantize(arr)
