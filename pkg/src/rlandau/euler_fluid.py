"""Small-amplitude relativistic Euler backbone on a periodic 1-D line.

Conserved fields per cell (c = 1, u the spatial part of the four-velocity,
u0 = sqrt(1 + |u|^2)):

    D   = n0 u0                       (number)
    m_i = (e0 + P0) u0 u_i            (momentum)
    E   = (e0 + P0) (u0)^2 - P0       (energy)

with closures P0 = n0 T0 and e0 = n0 (K3/K2 - T0).  These are exactly the
(1, p, p0) moments of the Juttner distribution, so the backbone and the
kinetic hierarchy share one thermodynamic bookkeeping.  Fluxes along x:

    D:   n0 u_1
    m_i: (e0 + P0) u_1 u_i + P0 delta_{1i}
    E:   (e0 + P0) u0 u_1

The scheme is RK4 with second-order central fluxes plus a small
conservative fourth-difference dissipation; totals of all five conserved
fields telescope to round-off on the torus.  The regime is smooth
small-amplitude data (no shocks), where the centered scheme is the right
tool.  Time derivatives needed by the diagnostics are obtained by
substituting the Euler equations, never by differencing stored history.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .equilibrium import bessel_k
from .linearized import rate_Y
from .phase_space import SpatialGrid

_T_BRACKET = (0.02, 2.5)
_RATIO_SPLINE = None


def _bessel_ratio(T):
    """K3(1/T)/K2(1/T), spline-cached: the closure is evaluated inside per-cell
    Newton iterations, where adaptive quadrature would dominate the runtime."""
    global _RATIO_SPLINE
    if _RATIO_SPLINE is None:
        knots = np.linspace(_T_BRACKET[0] * 0.9, _T_BRACKET[1] * 1.1, 4000)
        vals = [bessel_k(3, 1.0 / t) / bessel_k(2, 1.0 / t) for t in knots]
        _RATIO_SPLINE = CubicSpline(knots, vals)
    return _RATIO_SPLINE(T)


def thermo_closure(n0, T0):
    """Closures (P0, e0) = (n0 T0, n0 (K3(1/T0)/K2(1/T0) - T0))."""
    n0 = np.asarray(n0, dtype=float)
    T0 = np.asarray(T0, dtype=float)
    if np.any(n0 <= 0) or np.any(T0 <= 0):
        raise ValueError("thermo_closure needs positive density and temperature")
    return n0 * T0, n0 * (_bessel_ratio(T0) - T0)


def conserved_from_primitives(n0, u, T0):
    """Stack (D, m, E), shape (..., 5), from primitive fields."""
    n0 = np.asarray(n0, dtype=float)
    u = np.asarray(u, dtype=float)
    T0 = np.asarray(T0, dtype=float)
    u0 = np.sqrt(1.0 + np.sum(u * u, axis=-1))
    P0, e0 = thermo_closure(n0, T0)
    w = e0 + P0  # enthalpy density
    out = np.empty(n0.shape + (5,))
    out[..., 0] = n0 * u0
    out[..., 1:4] = w[..., None] * u0[..., None] * u
    out[..., 4] = w * u0**2 - P0
    return out


def _rest_temperature(n0: float, energy: float) -> float:
    return brentq(
        lambda T: n0 * (_bessel_ratio(T) - T) - energy, *_T_BRACKET, xtol=1e-14
    )


def recover_primitives(conserved, u_max: float = 0.1):
    """Invert (D, m, E) -> (n0, u, T0) by per-cell Newton iteration.

    The momentum direction fixes u up to its magnitude s; the remaining
    2x2 system in (s, T0) is solved with a hybrid Newton method and the
    residual is checked against 1e-11 of the conserved scale.
    """
    U = np.atleast_2d(np.asarray(conserved, dtype=float))
    n0 = np.empty(len(U))
    u = np.zeros((len(U), 3))
    T0 = np.empty(len(U))
    for k, (D, m1, m2, m3, E) in enumerate(U):
        if D <= 0 or E <= 0:
            raise ValueError("conserved state outside the physical regime")
        m = np.array([m1, m2, m3])
        mu = np.linalg.norm(m)
        scale = max(abs(E), abs(D))
        if mu < 1e-14 * scale:
            # zero momentum is a fixed point: u = 0, n0 = D, solve e0(D, T) = E
            n0[k] = D
            T0[k] = _rest_temperature(D, E)
            continue

        def residual(x):
            s, T = x
            u0 = np.sqrt(1.0 + s * s)
            dens = D / u0
            P, e = thermo_closure(dens, T)
            w = e + P
            return np.array([w * u0 * s - mu, w * u0**2 - P - E])

        # damped Newton with fixed finite-difference steps; the adaptive
        # Bessel quadrature makes hybr's tiny auto-steps unreliable
        x = np.array([mu / E, _rest_temperature(D, E)])
        fd = np.array([1e-7, 1e-7])
        converged = False
        for _ in range(60):
            r = residual(x)
            if np.abs(r).max() <= 1e-12 * scale:
                converged = True
                break
            jac = np.column_stack(
                [(residual(x + fd[j] * np.eye(2)[j]) - r) / fd[j] for j in range(2)]
            )
            step = np.linalg.solve(jac, -r)
            lam = 1.0
            while lam > 1e-4:
                trial = x + lam * step
                if trial[0] >= 0 and _T_BRACKET[0] < trial[1] < _T_BRACKET[1]:
                    if np.abs(residual(trial)).max() < np.abs(r).max():
                        break
                lam *= 0.5
            x = x + lam * step
        s, T = x
        if not converged and np.abs(residual(x)).max() > 1e-11 * scale:
            raise ValueError("primitive recovery did not converge")
        if s > u_max:
            raise ValueError(f"recovered bulk speed {s:.4g} exceeds u_max = {u_max}")
        u0 = np.sqrt(1.0 + s * s)
        n0[k] = D / u0
        u[k] = s * m / mu
        T0[k] = T
    return n0, u, T0


@dataclass
class EulerState:
    """Primitive fluid fields on a periodic spatial grid."""

    grid: SpatialGrid
    n0: np.ndarray
    u: np.ndarray
    T0: np.ndarray

    def __post_init__(self):
        self.n0 = np.asarray(self.n0, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        self.T0 = np.asarray(self.T0, dtype=float)
        nx = self.grid.cells
        if self.n0.shape != (nx,) or self.u.shape != (nx, 3) or self.T0.shape != (nx,):
            raise ValueError("field shapes do not match the spatial grid")
        if np.any(self.n0 <= 0) or np.any(self.T0 <= 0):
            raise ValueError("n0 and T0 must be positive")

    def conserved(self) -> np.ndarray:
        return conserved_from_primitives(self.n0, self.u, self.T0)

    @classmethod
    def from_conserved(cls, grid: SpatialGrid, U: np.ndarray, u_max: float = 0.1):
        n0, u, T0 = recover_primitives(U, u_max=u_max)
        return cls(grid, n0, u, T0)


def _flux(n0, u, T0) -> np.ndarray:
    u0 = np.sqrt(1.0 + np.sum(u * u, axis=-1))
    P0, e0 = thermo_closure(n0, T0)
    w = e0 + P0
    f = np.empty(n0.shape + (5,))
    f[..., 0] = n0 * u[..., 0]
    f[..., 1:4] = w[..., None] * u[..., 0:1] * u
    f[..., 1] += P0
    f[..., 4] = w * u0 * u[..., 0]
    return f


def euler_rhs(state: EulerState, eps4: float = 0.02) -> np.ndarray:
    """dU/dt: central flux divergence plus conservative 4th-difference dissipation."""
    f = _flux(state.n0, state.u, state.T0)
    h = state.grid.h
    dflux = (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2.0 * h)
    U = state.conserved()
    d4 = (
        np.roll(U, -2, axis=0)
        - 4.0 * np.roll(U, -1, axis=0)
        + 6.0 * U
        - 4.0 * np.roll(U, 1, axis=0)
        + np.roll(U, 2, axis=0)
    )
    return -dflux - eps4 / h * d4


def euler_step(
    state: EulerState, dt: float, cfl: float = 0.45, eps4: float = 0.02
) -> EulerState:
    """One RK4 step of the conservative system (signal speeds < 1 in c = 1 units)."""
    h = state.grid.h
    if dt > cfl * h:
        raise ValueError(f"dt = {dt} violates the CFL bound {cfl} * h = {cfl * h}")
    grid = state.grid
    U0 = state.conserved()

    def rhs_of(U):
        return euler_rhs(EulerState.from_conserved(grid, U), eps4=eps4)

    k1 = euler_rhs(state, eps4=eps4)
    k2 = rhs_of(U0 + 0.5 * dt * k1)
    k3 = rhs_of(U0 + 0.5 * dt * k2)
    k4 = rhs_of(U0 + dt * k3)
    return EulerState.from_conserved(grid, U0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))


def primitive_time_derivatives(state: EulerState, eps4: float = 0.02) -> np.ndarray:
    """(d/dt)(n0, u, T0) by substituting the Euler equations (not history).

    Returns shape (nx, 5) ordered (n0, u1, u2, u3, T0); evaluated through
    the conserved-variable chain rule with a centered perturbation of the
    exact primitive recovery.
    """
    U = state.conserved()
    dU = euler_rhs(state, eps4=eps4)
    tau = 1e-7 / max(np.abs(dU).max(), 1.0)
    n_p, u_p, T_p = recover_primitives(U + tau * dU)
    n_m, u_m, T_m = recover_primitives(U - tau * dU)
    out = np.empty((state.grid.cells, 5))
    out[:, 0] = (n_p - n_m) / (2 * tau)
    out[:, 1:4] = (u_p - u_m) / (2 * tau)
    out[:, 4] = (T_p - T_m) / (2 * tau)
    return out


@dataclass(frozen=True)
class FluidDiagnostics:
    """Solution-size functionals of the backbone and the time-window check."""

    Z: float
    Zcal: float
    Y_floor: float
    window_ok: bool


def diagnostics_Z(
    state: EulerState, t0: float, weight_T: float, eps4: float = 0.02
) -> FluidDiagnostics:
    """Z = sup |grad_{t,x}(n0,u,T0)| (1+T0) u0 / T0^2, Zcal over orders 1..3.

    window_ok checks Y(t0)/2 >= Z with the weight-decay rate Y.
    """
    g = state.grid
    fields = np.column_stack([state.n0, state.u, state.T0])  # (nx, 5)
    grads = [g.ddx(fields)]
    for _ in range(2):
        grads.append(g.ddx(grads[-1]))
    dt_fields = primitive_time_derivatives(state, eps4=eps4)
    first = np.maximum(np.abs(grads[0]).max(axis=1), np.abs(dt_fields).max(axis=1))
    u0 = np.sqrt(1.0 + np.sum(state.u**2, axis=-1))
    z = float((first * (1.0 + state.T0) * u0 / state.T0**2).max())
    zcal = float(max(np.abs(gr).max() for gr in grads))
    zcal = max(zcal, float(np.abs(dt_fields).max()))
    y = rate_Y(weight_T, t0)
    return FluidDiagnostics(Z=z, Zcal=zcal, Y_floor=y, window_ok=y / 2.0 >= z)
