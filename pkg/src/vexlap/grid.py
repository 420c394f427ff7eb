"""Piecewise-linear functions on a uniform grid, zero outside the domain."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["GridFunction"]


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Piecewise-linear function on uniform nodes a = x_0 < ... < x_N = b.

    The function is implicitly zero on R \\ [a, b].  With ``dirichlet`` set,
    the boundary values are pinned to zero exactly, so the zero extension is
    continuous.
    """

    a: float
    b: float
    values: np.ndarray
    dirichlet: bool = True

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size < 5:
            raise ValueError("need at least 5 nodes (N >= 4)")
        if not self.b > self.a:
            raise ValueError("domain must satisfy a < b")
        if self.dirichlet and (vals[0] != 0.0 or vals[-1] != 0.0):
            raise ValueError("Dirichlet grid function must vanish at the boundary")
        vals.flags.writeable = False

    @property
    def n_cells(self) -> int:
        return self.values.size - 1

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n_cells

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.values.size)

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[1:-1]

    def __call__(self, x):
        """Evaluate the interpolant; zero outside [a, b]."""
        return np.interp(x, self.nodes, self.values, left=0.0, right=0.0)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.a, self.b, values, self.dirichlet)

    def with_interior(self, interior: np.ndarray) -> "GridFunction":
        vals = np.zeros(self.values.size)
        vals[1:-1] = interior
        return GridFunction(self.a, self.b, vals, self.dirichlet)

    def scaled(self, c: float) -> "GridFunction":
        return self.with_values(c * self.values)

    def l2_norm(self) -> float:
        """Exact L2 norm of the piecewise-linear interpolant on [a, b]."""
        v0 = self.values[:-1]
        v1 = self.values[1:]
        return float(np.sqrt(self.h / 3.0 * np.sum(v0 * v0 + v0 * v1 + v1 * v1)))

    def l2_distance(self, other: "GridFunction") -> float:
        if other.values.size != self.values.size or other.a != self.a or other.b != self.b:
            raise ValueError("grid mismatch")
        return self.with_values(self.values - other.values).l2_norm()

    @staticmethod
    def zeros(a: float, b: float, n_cells: int, dirichlet: bool = True) -> "GridFunction":
        return GridFunction(a, b, np.zeros(n_cells + 1), dirichlet)

    @staticmethod
    def from_callable(a: float, b: float, n_cells: int, f, dirichlet: bool = True) -> "GridFunction":
        x = np.linspace(a, b, n_cells + 1)
        vals = np.asarray(f(x), dtype=float)
        if dirichlet:
            vals = vals.copy()
            vals[0] = 0.0
            vals[-1] = 0.0
        return GridFunction(a, b, vals, dirichlet)

    @staticmethod
    def hat(a: float, b: float, n_cells: int, center: float = None,
            width: float = None, height: float = 1.0) -> "GridFunction":
        """Triangular bump of the given height, clipped to zero outside."""
        if center is None:
            center = 0.5 * (a + b)
        if width is None:
            width = 0.5 * (b - a)

        def f(x):
            return height * np.maximum(0.0, 1.0 - np.abs(x - center) / (0.5 * width))

        return GridFunction.from_callable(a, b, n_cells, f)

    @staticmethod
    def bump(a: float, b: float, n_cells: int, center: float = None,
             width: float = None, height: float = 1.0) -> "GridFunction":
        """Smooth cosine bump supported on [center - width/2, center + width/2]."""
        if center is None:
            center = 0.5 * (a + b)
        if width is None:
            width = 0.5 * (b - a)

        def f(x):
            t = (x - center) / (0.5 * width)
            return np.where(np.abs(t) < 1.0, height * 0.5 * (1.0 + np.cos(np.pi * t)), 0.0)

        return GridFunction.from_callable(a, b, n_cells, f)
