"""Relativistic kinematics and the discrete momentum / space grids.

Units: c = m = k_B = 1.  A particle with 3-momentum p has on-shell energy
p0 = sqrt(1 + |p|^2) and velocity p_hat = p / p0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def energy_of(p):
    """On-shell energy sqrt(1 + |p|^2) for a 3-vector or an (..., 3) array."""
    p = np.asarray(p, dtype=float)
    return np.sqrt(1.0 + np.sum(p * p, axis=-1))


def lorentz_inner(p, q):
    """Minkowski product p^mu q_mu = -p0 q0 + p.q for on-shell momenta.

    For on-shell pairs the result is <= -1, with equality iff p == q.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return -energy_of(p) * energy_of(q) + np.sum(p * q, axis=-1)


def p_hat(p):
    """Relativistic velocity p / p0; always subluminal (|p_hat| < 1)."""
    p = np.asarray(p, dtype=float)
    return p / energy_of(p)[..., None]


@dataclass(frozen=True)
class SpatialGrid:
    """Periodic 1-D spatial grid (the desk-scale reduction: variation in x1 only)."""

    cells: int
    length: float = 1.0

    def __post_init__(self):
        if self.cells < 4:
            raise ValueError(f"need at least 4 spatial cells, got {self.cells}")
        if self.length <= 0:
            raise ValueError("spatial length must be positive")

    @property
    def h(self) -> float:
        return self.length / self.cells

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) * self.h

    def ddx(self, values: np.ndarray, axis: int = 0) -> np.ndarray:
        """Second-order periodic central difference along the spatial axis."""
        return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2.0 * self.h)

    def d2dx2(self, values: np.ndarray, axis: int = 0) -> np.ndarray:
        return (
            np.roll(values, -1, axis=axis) - 2.0 * values + np.roll(values, 1, axis=axis)
        ) / self.h**2


@dataclass(frozen=True)
class MomentumGrid:
    """Symmetric tensor-product lattice on [-R, R]^3 with trapezoid weights.

    Nodes are cell centers, so the lattice is exactly symmetric under
    p -> -p and never contains the point p = 0 twice.  All momentum
    integrals are the fixed-order weighted sums of :meth:`integrate`,
    which makes repeated runs bit-identical.
    """

    radius: float
    points_per_axis: int
    axis: np.ndarray = field(init=False, repr=False)
    nodes: np.ndarray = field(init=False, repr=False)
    p0: np.ndarray = field(init=False, repr=False)
    phat: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("momentum truncation radius must be positive")
        n = self.points_per_axis
        if n < 8 or n % 2 != 0:
            raise ValueError(
                f"points_per_axis must be even and >= 8 (got {n}); "
                "odd counts break the p -> -p symmetry of the lattice"
            )
        h = 2.0 * self.radius / n
        ax = -self.radius + (np.arange(n) + 0.5) * h
        X, Y, Z = np.meshgrid(ax, ax, ax, indexing="ij")
        nodes = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)
        object.__setattr__(self, "axis", ax)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "p0", energy_of(nodes))
        object.__setattr__(self, "phat", nodes / energy_of(nodes)[:, None])

    @property
    def h(self) -> float:
        return 2.0 * self.radius / self.points_per_axis

    @property
    def size(self) -> int:
        return self.points_per_axis**3

    @property
    def cell_volume(self) -> float:
        return self.h**3

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.size, self.cell_volume)

    @property
    def shape(self) -> tuple[int, int, int]:
        n = self.points_per_axis
        return (n, n, n)

    def integrate(self, values: np.ndarray) -> float | np.ndarray:
        """Quadrature of per-node values; linear, deterministic summation order."""
        values = np.asarray(values)
        if values.shape[-1] != self.size:
            raise ValueError(
                f"values length {values.shape[-1]} does not match node count {self.size}"
            )
        return values.sum(axis=-1) * self.cell_volume

    def reflect_index(self) -> np.ndarray:
        """Permutation mapping each node index to the index of -p."""
        n = self.points_per_axis
        idx = np.arange(self.size).reshape(self.shape)
        return idx[::-1, ::-1, ::-1].ravel()


def radial_quadrature(f, rmax: float = 80.0) -> float:
    """Adaptive 1-D reference 4*pi*int_0^inf r^2 f(r) dr for isotropic integrands."""
    from scipy.integrate import quad

    val, _ = quad(lambda r: r * r * f(r), 0.0, rmax, limit=400)
    return 4.0 * np.pi * val
