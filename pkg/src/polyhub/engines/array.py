"""Embedded dense n-dimensional array engine.

Arrays are named, fully materialized float64 grids in row-major order.
Unwritten cells read as 0.0.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Sequence

from ..errors import EngineError
from .base import EngineId, EngineKind, check_identifier


@dataclass(frozen=True)
class DenseArray:
    name: str
    dims: tuple[tuple[str, int], ...]
    cells: tuple[float, ...]

    def __post_init__(self):
        if len(self.dims) < 1:
            raise ValueError("array needs at least one dimension")
        expected = math.prod(length for _, length in self.dims)
        if len(self.cells) != expected:
            raise ValueError(f"cell count {len(self.cells)} != product of dims {expected}")

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(length for _, length in self.dims)

    def offset(self, coords: Sequence[int]) -> int:
        shape = self.shape
        if len(coords) != len(shape):
            raise EngineError(f"expected {len(shape)} coordinates, got {len(coords)}")
        off = 0
        for coord, length in zip(coords, shape):
            if not 0 <= coord < length:
                raise EngineError(f"coordinate {tuple(coords)} out of bounds for shape {shape}")
            off = off * length + coord
        return off

    def get(self, coords: Sequence[int]) -> float:
        return self.cells[self.offset(coords)]

    def to_nested(self):
        """Cells as nested lists, innermost dimension last. Handy in tests."""
        def build(level: int, base: int):
            length = self.shape[level]
            if level == len(self.shape) - 1:
                return list(self.cells[base : base + length])
            stride = math.prod(self.shape[level + 1 :])
            return [build(level + 1, base + i * stride) for i in range(length)]

        return build(0, 0)


class ArrayEngine:
    """Single-node store of named dense arrays."""

    kind = EngineKind.ARRAY

    def __init__(self, engine_id: str):
        self.engine_id = EngineId(engine_id, self.kind)
        self._arrays: dict[str, DenseArray] = {}
        self._write_lock = threading.Lock()

    def create(self, name: str, dims: Sequence[tuple[str, int]]) -> None:
        check_identifier(name, "array name")
        dims = tuple((dim_name, int(length)) for dim_name, length in dims)
        for dim_name, length in dims:
            check_identifier(dim_name, "dimension name")
            if length < 0:
                raise EngineError(f"negative length for dimension {dim_name!r}")
        with self._write_lock:
            if name in self._arrays:
                raise EngineError(f"array {name!r} already exists")
            size = math.prod(length for _, length in dims)
            arrays = dict(self._arrays)
            arrays[name] = DenseArray(name=name, dims=dims, cells=(0.0,) * size)
            self._arrays = arrays

    def write(self, name: str, coords: Sequence[Sequence[int]], values: Sequence[float]) -> int:
        """Overwrite cells at the given coordinates. The batch is atomic:
        any out-of-bounds coordinate leaves the array unchanged."""
        if len(coords) != len(values):
            raise EngineError("coordinate and value counts differ")
        with self._write_lock:
            array = self._get(name)
            offsets = [array.offset(c) for c in coords]  # bounds-check everything first
            cells = list(array.cells)
            for off, value in zip(offsets, values):
                cells[off] = float(value)
            arrays = dict(self._arrays)
            arrays[name] = DenseArray(name=array.name, dims=array.dims, cells=tuple(cells))
            self._arrays = arrays
        return len(values)

    def subarray(self, name: str, ranges: Sequence[tuple[int, int]]) -> DenseArray:
        """Rectangular sub-block; per-dimension half-open [lo, hi) ranges."""
        array = self._get(name)
        shape = array.shape
        if len(ranges) != len(shape):
            raise EngineError(f"expected {len(shape)} ranges, got {len(ranges)}")
        for (lo, hi), length in zip(ranges, shape):
            if lo > hi:
                raise EngineError(f"invalid range [{lo}:{hi}]")
            if lo < 0 or hi > length:
                raise EngineError(f"range [{lo}:{hi}] out of bounds for length {length}")
        out_dims = tuple(
            (dim_name, hi - lo) for (dim_name, _), (lo, hi) in zip(array.dims, ranges)
        )
        out_shape = [hi - lo for lo, hi in ranges]
        cells = []
        if math.prod(out_shape) > 0:
            for flat in range(math.prod(out_shape)):
                coords = []
                rem = flat
                for length in reversed(out_shape):
                    coords.append(rem % length)
                    rem //= length
                coords.reverse()
                src = [c + lo for c, (lo, _) in zip(coords, ranges)]
                cells.append(array.get(src))
        return DenseArray(name=name, dims=out_dims, cells=tuple(cells))

    def read(self, name: str) -> DenseArray:
        return self._get(name)

    def array_names(self) -> list[str]:
        return sorted(self._arrays)

    def _get(self, name: str) -> DenseArray:
        arrays = self._arrays
        if name not in arrays:
            raise EngineError(f"unknown array {name!r}")
        return arrays[name]

    def dump_state(self) -> dict:
        return {
            "engine_id": self.engine_id.id,
            "arrays": {
                name: {
                    "dims": [list(d) for d in a.dims],
                    "cells": list(a.cells),
                }
                for name, a in sorted(self._arrays.items())
            },
        }

    @classmethod
    def from_state(cls, state: dict) -> "ArrayEngine":
        engine = cls(state["engine_id"])
        arrays = {}
        for name, a in state["arrays"].items():
            arrays[name] = DenseArray(
                name=name,
                dims=tuple((d, int(n)) for d, n in a["dims"]),
                cells=tuple(float(c) for c in a["cells"]),
            )
        engine._arrays = arrays
        return engine
