"""Juttner equilibria, their Bessel normalizations, and fluid closures.

The local relativistic Maxwellian parameterized by number density n0,
bulk velocity u, and temperature T0 (gamma = 1/T0, u0 = sqrt(1+|u|^2)):

    M(p) = n0 gamma / (4 pi K2(gamma)) * exp(gamma (u.p - u0 p0)).

The modified Bessel functions enter only through K2 (normalization) and
the ratio K3/K2 (energy closure).  K1 and K2 are evaluated by adaptive
quadrature of their integral representations; K3 comes from the
three-term recurrence K3 = K1 + 4 K2 / z, which is exactly the identity
that makes the two closed forms of the equilibrium energy density,
n0 (K3/K2 - 1/gamma) and n0 (K1/K2 + 3/gamma), agree.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import quad

from .phase_space import MomentumGrid, energy_of

TEMPERATURE_RANGE = (0.1, 1.2)


def bessel_k(order: int, z: float) -> float:
    """Modified Bessel function K_order(z) for order in {1, 2, 3}, z > 0.

    K1 and K2 use the integral representations

        K1(z) = z int_1^inf e^{-z s} (s^2 - 1)^{1/2} ds,
        K2(z) = (z^2/3) int_1^inf e^{-z s} (s^2 - 1)^{3/2} ds,

    and K3 the recurrence K3 = K1 + 4 K2 / z.
    """
    z = float(z)
    if z <= 0:
        raise ValueError(f"bessel_k requires z > 0, got {z}")
    if order == 1:
        val, _ = quad(
            lambda s: np.exp(-z * s) * np.sqrt(s * s - 1.0), 1.0, np.inf,
            epsabs=0.0, epsrel=1e-12, limit=200,
        )
        return z * val
    if order == 2:
        val, _ = quad(
            lambda s: np.exp(-z * s) * (s * s - 1.0) ** 1.5, 1.0, np.inf,
            epsabs=0.0, epsrel=1e-12, limit=200,
        )
        return z * z / 3.0 * val
    if order == 3:
        return bessel_k(1, z) + 4.0 * bessel_k(2, z) / z
    raise ValueError(f"bessel_k supports orders 1, 2, 3 (got {order})")


@dataclass(frozen=True)
class FluidState:
    """Fluid fields (n0, u, T0) per spatial cell, with derived gamma and u0.

    Fields may be scalars (a single cell) or arrays with a common leading
    shape; ``u`` carries a trailing length-3 axis.
    """

    n0: np.ndarray
    u: np.ndarray
    T0: np.ndarray
    u_max: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "n0", np.asarray(self.n0, dtype=float))
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        object.__setattr__(self, "T0", np.asarray(self.T0, dtype=float))
        if self.u.shape[-1:] != (3,):
            raise ValueError("u must have a trailing axis of length 3")
        if np.any(self.n0 <= 0):
            raise ValueError("n0 must be positive at every cell")
        if np.any(self.T0 <= 0):
            raise ValueError("T0 must be positive at every cell")
        speed = np.linalg.norm(np.atleast_2d(self.u), axis=-1).max()
        if speed > self.u_max + 1e-15:
            raise ValueError(
                f"bulk speed {speed:.4g} exceeds u_max = {self.u_max}; the "
                "expansion machinery assumes a small bulk velocity"
            )
        lo, hi = TEMPERATURE_RANGE
        if np.any(self.T0 < lo) or np.any(self.T0 > hi):
            warnings.warn(
                f"T0 outside supported range [{lo}, {hi}]; the default "
                "momentum-box radius may truncate the distribution tail",
                stacklevel=2,
            )

    @property
    def gamma(self) -> np.ndarray:
        return 1.0 / self.T0

    @property
    def u0(self) -> np.ndarray:
        return np.sqrt(1.0 + np.sum(self.u * self.u, axis=-1))

    @cached_property
    def k2(self) -> np.ndarray:
        """K2(gamma) per cell (immutable cache, shared read-only)."""
        return np.vectorize(lambda z: bessel_k(2, z))(self.gamma)

    @cached_property
    def k3_over_k2(self) -> np.ndarray:
        k3 = np.vectorize(lambda z: bessel_k(3, z))(self.gamma)
        return k3 / self.k2

    @property
    def pressure(self) -> np.ndarray:
        """Equilibrium pressure P0 = n0 T0 = n0 / gamma."""
        return self.n0 * self.T0

    @property
    def energy(self) -> np.ndarray:
        """Equilibrium energy density e0 = n0 (K3/K2 - 1/gamma)."""
        return self.n0 * (self.k3_over_k2 - self.T0)


def _log_prefactor(state: FluidState) -> np.ndarray:
    return np.log(state.n0 * state.gamma / (4.0 * np.pi * state.k2))


def _exponent(state: FluidState, p: np.ndarray) -> np.ndarray:
    """gamma * (u . p - u0 p0), shape = state shape + (n_momenta,)."""
    p = np.asarray(p, dtype=float)
    p0 = energy_of(p)
    up = np.einsum("...i,ni->...n", np.atleast_2d(state.u), p)
    up = up.reshape(state.n0.shape + p0.shape)
    return state.gamma[..., None] * (up - state.u0[..., None] * p0)


def juttner(state: FluidState, p) -> np.ndarray:
    """Local Maxwellian values at momenta p (shape (n, 3) or (3,)).

    Returns shape = state shape + (n,); strictly positive.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    return np.exp(_log_prefactor(state)[..., None] + _exponent(state, p))


def juttner_sqrt(state: FluidState, p) -> np.ndarray:
    """Exact pointwise square root of :func:`juttner` (computed in log form)."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    return np.exp(0.5 * (_log_prefactor(state)[..., None] + _exponent(state, p)))


@dataclass(frozen=True)
class MomentResiduals:
    """Relative discrepancies between grid moments of M and the fluid closures."""

    density: float
    pressure: float
    energy: float

    def max(self) -> float:
        return max(self.density, self.pressure, self.energy)


def fluid_moment_check(state: FluidState, grid: MomentumGrid) -> MomentResiduals:
    """Compare quadrature moments of the Maxwellian with the closed forms.

    The lab-frame identities used (from the equilibrium stress tensor
    T^{mu nu} = e0 u^mu u^nu + P0 (eta^{mu nu} + u^mu u^nu)):

        int M dp            = n0 u0,
        int |p|^2/p0 M dp   = e0 |u|^2 + P0 (3 + |u|^2),
        int p0 M dp         = e0 (u0)^2 + P0 ((u0)^2 - 1).
    """
    M = juttner(state, grid.nodes)
    usq = np.sum(state.u * state.u, axis=-1)
    P0, e0 = state.pressure, state.energy

    dens = grid.integrate(M)
    dens_ref = state.n0 * state.u0
    pres = grid.integrate((np.sum(grid.nodes**2, axis=-1) / grid.p0) * M)
    pres_ref = e0 * usq + P0 * (3.0 + usq)
    ener = grid.integrate(grid.p0 * M)
    ener_ref = e0 * state.u0**2 + P0 * (state.u0**2 - 1.0)

    def rel(a, b):
        return float(np.max(np.abs(a - b) / np.abs(b)))

    return MomentResiduals(rel(dens, dens_ref), rel(pres, pres_ref), rel(ener, ener_ref))
