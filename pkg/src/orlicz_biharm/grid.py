"""Uniform grids on the unit interval / unit square and nodal functions on them."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """``n`` interior nodes per axis on ``[0, 1]^dim`` with spacing ``1/(n+1)``.

    Interior nodes carry the rectangle weight ``h**dim``.  The closed node set
    (interior plus boundary) carries trapezoidal weights, which is what the
    Laplacian modular is integrated with.
    """

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"grid dimension must be 1 or 2, got {self.dim}")
        if self.n < 3:
            raise ValueError(f"grid needs at least 3 interior nodes per axis, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / (self.n + 1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def closed_shape(self) -> tuple[int, ...]:
        return (self.n + 2,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def closed_size(self) -> int:
        return (self.n + 2) ** self.dim

    @property
    def weight(self) -> float:
        return self.h**self.dim

    def weights(self, closed: bool = False) -> np.ndarray:
        if not closed:
            return np.full(self.size, self.weight)
        w1 = np.full(self.n + 2, self.h)
        w1[0] = w1[-1] = 0.5 * self.h
        if self.dim == 1:
            return w1
        return np.outer(w1, w1).ravel()

    def axis(self, closed: bool = False) -> np.ndarray:
        if closed:
            return np.linspace(0.0, 1.0, self.n + 2)
        return self.h * np.arange(1, self.n + 1)

    def coordinates(self, closed: bool = False) -> np.ndarray:
        """Node coordinates, shape ``(size, dim)``, in row-major order."""
        x = self.axis(closed)
        if self.dim == 1:
            return x[:, None]
        X, Y = np.meshgrid(x, x, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])

    def sample(self, fn, closed: bool = False) -> "GridFunction":
        pts = self.coordinates(closed)
        return GridFunction(self, np.asarray(fn(*pts.T), dtype=float), closed=closed)

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.size))


@dataclass(eq=False)
class GridFunction:
    """Nodal values on a grid, flattened row-major.

    Interior functions (``closed=False``) vanish on the boundary with zero
    normal derivative by convention.  Closed functions hold values on the
    boundary nodes too; the Laplacian of an interior function is one.
    """

    grid: Grid
    values: np.ndarray
    closed: bool = field(default=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        expected = self.grid.closed_size if self.closed else self.grid.size
        if self.values.size != expected:
            raise ValueError(f"expected {expected} nodal values, got {self.values.size}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function has non-finite entries")

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights(self.closed)

    def __mul__(self, alpha: float) -> "GridFunction":
        return GridFunction(self.grid, alpha * self.values, self.closed)

    __rmul__ = __mul__

    def __truediv__(self, alpha: float) -> "GridFunction":
        return GridFunction(self.grid, self.values / alpha, self.closed)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values + other.values, self.closed)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values - other.values, self.closed)

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.grid, -self.values, self.closed)

    def to_csv(self, path, comments=()) -> None:
        """One row per node: index (or i, j), coordinates, value; 17 significant digits.

        ``comments`` are written first as ``#``-prefixed lines.
        """
        coords = self.grid.coordinates(self.closed)
        offset = 0 if self.closed else 1
        with open(path, "w", newline="") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh, lineterminator="\n")
            if self.grid.dim == 1:
                writer.writerow(["i", "x", "value"])
                for k, (x, v) in enumerate(zip(coords[:, 0], self.values)):
                    writer.writerow([k + offset, f"{x:.17g}", f"{v:.17g}"])
            else:
                m = self.grid.closed_shape[0] if self.closed else self.grid.n
                writer.writerow(["i", "j", "x", "y", "value"])
                for k, ((x, y), v) in enumerate(zip(coords, self.values)):
                    writer.writerow([k // m + offset, k % m + offset,
                                     f"{x:.17g}", f"{y:.17g}", f"{v:.17g}"])

    @classmethod
    def from_csv(cls, path, grid: Grid | None = None) -> "GridFunction":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
        values = np.array([float(r["value"]) for r in rows])
        dim = 2 if rows and "y" in rows[0] else 1
        closed = bool(rows) and int(rows[0]["i"]) == 0
        if grid is None:
            per_axis = round(len(rows) ** (1.0 / dim))
            grid = Grid(dim, per_axis - 2 if closed else per_axis)
        return cls(grid, values, closed=closed)
