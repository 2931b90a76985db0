"""
Uniform Dirichlet grids and the fields that live on them.

Fields are stored as flat arrays of interior nodal values (C order in 2D). The discrete
Dirichlet energy D(u) uses first-order differences with zero ghost nodes, which makes it an
exact quadratic form D(u) = u^T K u with K the (scaled) 3- or 5-point stencil.
"""

import logging
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import factorized

from .errors import ValidationError

log = logging.getLogger(__name__)

_POWER_SWEEPS = 50


@dataclass(frozen=True)
class Grid:
    """Interior nodes of a uniform grid on [0, length]^dim with homogeneous Dirichlet data."""

    dim: int = 1
    n: int = 200
    length: float = 1.0
    # Guards the one-time factorization; solves on the factor run concurrently
    _lock: threading.Lock = field(
        default_factory=threading.Lock, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValidationError(f"grid dimension must be 1 or 2, got {self.dim}")
        if self.n < 2:
            raise ValidationError(f"grid needs at least 2 interior points per axis, got {self.n}")
        if not self.length > 0.0:
            raise ValidationError(f"domain length must be positive, got {self.length}")

    @property
    def h(self) -> float:
        return self.length / (self.n + 1)

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def weight(self) -> float:
        """Nodal quadrature weight h^dim."""
        return self.h**self.dim

    @property
    def describe(self) -> str:
        return f"dim={self.dim};n={self.n};h={self.h:.17g}"

    def coordinates(self) -> Tuple[np.ndarray, ...]:
        """Nodal coordinates, one flat array per axis."""
        axis = self.h * np.arange(1, self.n + 1)
        if self.dim == 1:
            return (axis,)
        yy, xx = np.meshgrid(axis, axis, indexing="ij")
        return (xx.ravel(), yy.ravel())

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        """K with D(u) = u^T K u."""
        t = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(self.n, self.n))
        if self.dim == 1:
            k = t
        else:
            eye = sp.identity(self.n)
            k = sp.kron(eye, t) + sp.kron(t, eye)
        return (self.h ** (self.dim - 2) * k).tocsr()

    @property
    def _solver(self) -> Callable[[np.ndarray], np.ndarray]:
        solver = self.__dict__.get("_factor")
        if solver is None:
            with self._lock:
                solver = self.__dict__.get("_factor")
                if solver is None:
                    log.debug("Factorizing stiffness matrix (%s)", self.describe)
                    solver = factorized(self.stiffness.tocsc())
                    self.__dict__["_factor"] = solver
        return solver

    def check(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.size,):
            raise ValidationError(
                f"field has shape {values.shape}, grid expects ({self.size},) unknowns"
            )
        return values

    def dirichlet_energy(self, values: np.ndarray) -> float:
        """D(u) = discrete integral of |grad u|^2."""
        if self.dim == 1:
            d = np.diff(np.pad(values, 1))
            return float(d @ d) / self.h
        padded = np.pad(values.reshape(self.shape), 1)
        dx = np.diff(padded[1:-1, :], axis=1)
        dy = np.diff(padded[:, 1:-1], axis=0)
        return float(np.sum(dx * dx) + np.sum(dy * dy))

    def dirichlet_gradient(self, values: np.ndarray) -> np.ndarray:
        """Gradient of D with respect to nodal values, 2 K u."""
        return 2.0 * (self.stiffness @ values)

    def riesz(self, g: np.ndarray) -> np.ndarray:
        """K^{-1} g, the H^1_0 representative of a nodal gradient."""
        return self._solver(np.asarray(g, dtype=float))

    def h1_inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(u @ (self.stiffness @ v))

    def dual_norm(self, g: np.ndarray) -> float:
        """H^{-1} norm sqrt(g^T K^{-1} g) of a nodal gradient."""
        return float(np.sqrt(max(float(g @ self.riesz(g)), 0.0)))

    def normalize(self, values: np.ndarray) -> np.ndarray:
        """Scale to unit discrete H^1_0 norm."""
        norm = np.sqrt(self.dirichlet_energy(values))
        if norm == 0.0:
            raise ValidationError("cannot normalize the zero field")
        return values / norm

    def principal_direction(self) -> np.ndarray:
        """Principal Dirichlet eigenvector by inverse power iteration, unit H^1 norm, positive."""
        v = np.ones(self.size)
        for _ in range(_POWER_SWEEPS):
            v = self.normalize(self.riesz(v))
        return v if v.sum() >= 0 else -v

    def random_field(self, rng: np.random.Generator) -> np.ndarray:
        """Nodal i.i.d. uniform(-1, 1) values smoothed by one Jacobi sweep, unit H^1 norm."""
        x = rng.uniform(-1.0, 1.0, size=self.size)
        # Jacobi sweep for the Laplacian with zero data: each node becomes its neighbour mean
        stencil = self.stiffness / self.h ** (self.dim - 2)
        x = x - (stencil @ x) / (2.0 * self.dim)
        return self.normalize(x)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A field u on a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = self.grid.check(self.values)
        if not np.all(np.isfinite(values)):
            raise ValidationError("field values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.size))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> "GridFunction":
        """Sample fn at the interior nodes."""
        return cls(grid, np.asarray(fn(*grid.coordinates()), dtype=float))

    def scaled(self, t: float) -> "GridFunction":
        return GridFunction(self.grid, t * self.values)

    def normalized(self) -> "GridFunction":
        return GridFunction(self.grid, self.grid.normalize(self.values))

    def sign_normalized(self) -> "GridFunction":
        """Flip sign so the nodal mean is nonnegative."""
        return self if self.values.sum() >= 0 else self.scaled(-1.0)

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy())
