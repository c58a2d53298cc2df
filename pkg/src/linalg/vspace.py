"""
The finite-dimensional inner-product space: points and Euclidean primitives.
"""
import math
from typing import Optional, Union

import numpy as np

from ..models import Shape, ShapeKind


ArrayLike = Union[np.ndarray, list, tuple]


class IncompatibleShapesError(ValueError):
    """Raised when two points of different shapes are combined."""

    def __init__(self, a: Shape, b: Shape):
        super().__init__(f"incompatible shapes: {a} vs {b}")


class ParamPoint:
    """
    Immutable element of the optimization space.

    Data is a flat float64 vector stored row-major; the shape records whether the
    point is a vector or an m x n matrix, so vector and matrix geometries share
    one point type.
    """

    __slots__ = ("_data", "_shape")

    def __init__(self, data: ArrayLike, shape: Optional[Shape] = None):
        array = np.asarray(data, dtype=np.float64)
        if shape is None:
            if array.ndim == 1:
                shape = Shape.vector(array.shape[0])
            elif array.ndim == 2:
                shape = Shape.matrix(*array.shape)
            else:
                raise ValueError(f"expected a 1-D or 2-D array, got ndim={array.ndim}")
        flat = np.array(array, dtype=np.float64, copy=True).reshape(-1)
        if flat.size != shape.size:
            raise ValueError(f"data of length {flat.size} does not fit shape {shape}")
        if not np.all(np.isfinite(flat)):
            raise ValueError("ParamPoint entries must be finite")
        flat.flags.writeable = False
        self._data = flat
        self._shape = shape

    @classmethod
    def zeros(cls, shape: Shape) -> "ParamPoint":
        return cls(np.zeros(shape.size), shape)

    @classmethod
    def _wrap(cls, flat: np.ndarray, shape: Shape) -> "ParamPoint":
        # Internal constructor for freshly computed arrays.
        point = cls.__new__(cls)
        if not np.all(np.isfinite(flat)):
            raise ValueError("ParamPoint entries must be finite")
        flat.flags.writeable = False
        point._data = flat
        point._shape = shape
        return point

    @property
    def data(self) -> np.ndarray:
        """Read-only flat view."""
        return self._data

    @property
    def shape(self) -> Shape:
        return self._shape

    def as_array(self) -> np.ndarray:
        """Read-only view in the natural layout (d,) or (m, n)."""
        return self._data.reshape(self._shape.dims)

    def with_array(self, array: np.ndarray) -> "ParamPoint":
        """New point of the same shape holding `array`."""
        return ParamPoint(array, self._shape)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParamPoint):
            return NotImplemented
        return self._shape == other._shape and np.array_equal(self._data, other._data)

    __hash__ = None

    def __repr__(self) -> str:
        kind = "Matrix" if self._shape.kind == ShapeKind.MATRIX else "Vector"
        return f"ParamPoint({kind}{self._shape.dims}, {self.as_array().tolist()})"


def check_shapes(a: ParamPoint, b: ParamPoint) -> None:
    if a.shape != b.shape:
        raise IncompatibleShapesError(a.shape, b.shape)


def inner(a: ParamPoint, b: ParamPoint) -> float:
    """<a, b> = sum_i a_i b_i (the trace inner product for matrices)."""
    check_shapes(a, b)
    return float(np.dot(a.data, b.data))


def euclid_norm(a: ParamPoint) -> float:
    """Euclidean (Frobenius) norm induced by the inner product."""
    return math.sqrt(max(inner(a, a), 0.0))


def axpby(alpha: float, a: ParamPoint, beta: float, b: ParamPoint) -> ParamPoint:
    """alpha * a + beta * b, elementwise."""
    check_shapes(a, b)
    return ParamPoint._wrap(alpha * a.data + beta * b.data, a.shape)


def scale(alpha: float, a: ParamPoint) -> ParamPoint:
    return ParamPoint._wrap(alpha * a.data, a.shape)
