"""Hilbert-expansion coefficients F_0 .. F_{2k-1} and the remainder source.

The hierarchy is

    eps^{-1}: C[F_0, F_0] = 0            =>  F_0 = M (local Maxwellian),
    eps^n:    dt F_n + p_hat . grad_x F_n = sum_{i+j=n+1} C[F_i, F_j],

solved order by order through the micro-macro decomposition of
f_n = F_n / sqrt(M) into P f_n = sqrt(M) (a_n + b_n . p + c_n p0) plus a
microscopic part micro_n orthogonal to the null space N:

* the microscopic part comes from inverting L on the orthogonal
  complement of its null space,

      micro_{n+1} = L^{-1}[ -(1/sqrt(M)) (dt F_n + p_hat . grad_x F_n
                                          - sum_{i+j=n+1, i,j>=1} C[F_i, F_j]) ],

* the macroscopic coefficients y_n = (a_n, b_n, c_n) satisfy the linear
  conservation-law system obtained by taking (1, p, p0) moments of the
  order-n equation.  The system is assembled numerically: with the
  moment matrices G_mn = int chi_m chi_n M dp and
  H_mn = int chi_m chi_n p_hat_1 M dp and the micro flux
  s_m = int chi_m p_hat_1 sqrt(M) micro_n dp, it reads

      dt (G y_n) + dx (H y_n + s) = 0.

  Because the discrete collision operator conserves the five invariants
  exactly and the i <-> j sum is symmetric, this system is the exact
  moment consequence of the discrete hierarchy, so the moments of the
  hierarchy residual vanish to discretization order by construction.

Time derivatives are never taken from stored history: dt M is evaluated
analytically through the chain rule with the Euler equations supplying
the primitive rates, and dt F_n for n >= 1 is evaluated by advancing the
coupled (backbone, macro) state by a tiny step of its own evolution
equations and centered differencing the rebuilt coefficient.  The
recursion terminates because advancing orders <= n only requires
coefficients up to order n, whose construction needs order n - 1 data at
the shifted states, bottoming out at the analytic dt M.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .collision import CollisionOperator, KernelTable
from .equilibrium import FluidState, bessel_k, juttner
from .euler_fluid import EulerState, euler_step, primitive_time_derivatives
from .linearized import LinearizedOperator, ProjectionCoefficients
from .phase_space import MomentumGrid


def cell_state(euler: EulerState, i: int) -> FluidState:
    return FluidState(euler.n0[i], euler.u[i], euler.T0[i])


@dataclass
class ExpansionCoefficient:
    """One order of the expansion: full field, macro row, micro part."""

    n: int
    values: np.ndarray  # (nx, Np)
    macro: np.ndarray  # (nx, 5) ordered (a, b1, b2, b3, c)
    micro: np.ndarray  # (nx, Np), orthogonal to N cell-wise
    ortho_defect: float = 0.0  # largest relative null overlap of the inverted rhs


def maxwellian_log_derivatives(
    euler: EulerState, grid: MomentumGrid, eps4: float = 0.02
):
    """(dt ln M, dx ln M) per (cell, node) via the chain rule.

    The primitive time rates come from substituting the Euler equations;
    the x-derivatives use the periodic central difference.
    """
    g = euler.grid
    prims = np.column_stack([euler.n0, euler.u, euler.T0])  # (nx, 5)
    rates = {
        "t": primitive_time_derivatives(euler, eps4=eps4),
        "x": g.ddx(prims),
    }
    gamma = 1.0 / euler.T0
    u0 = np.sqrt(1.0 + np.sum(euler.u**2, axis=-1))
    # d ln M / d gamma = 1/gamma - K2'(gamma)/K2(gamma) + (u.p - u0 p0),
    # with K2' = -(K1 + K3)/2
    k1 = np.array([bessel_k(1, z) for z in gamma])
    k2 = np.array([bessel_k(2, z) for z in gamma])
    k3 = k1 + 4.0 * k2 / gamma
    dlnk2 = -(k1 + k3) / (2.0 * k2)
    up = euler.u @ grid.nodes.T - u0[:, None] * grid.p0[None, :]  # (nx, Np)
    dln_dgamma = (1.0 / gamma - dlnk2)[:, None] + up
    # d ln M / d u_j = gamma (p_j - (u_j / u0) p0)
    dln_du = gamma[:, None, None] * (
        grid.nodes.T[None, :, :]
        - (euler.u / u0[:, None])[:, :, None] * grid.p0[None, None, :]
    )  # (nx, 3, Np)
    out = {}
    for key, rate in rates.items():
        dn, du, dT = rate[:, 0], rate[:, 1:4], rate[:, 4]
        dgamma = -dT / euler.T0**2
        out[key] = (
            (dn / euler.n0)[:, None]
            + dgamma[:, None] * dln_dgamma
            + np.einsum("cjn,cj->cn", dln_du, du)
        )
    return out["t"], out["x"]


def _state_key(euler: EulerState, y: np.ndarray) -> bytes:
    h = hashlib.sha1()
    for arr in (euler.n0, euler.u, euler.T0, y):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.digest()


class HilbertExpansion:
    """The coupled backbone + coefficient hierarchy at one instant of time.

    ``advance`` moves the Euler backbone and the macroscopic coefficient
    systems forward; coefficient fields are rebuilt on demand and cached
    per state.
    """

    def __init__(
        self,
        euler: EulerState,
        table: KernelTable,
        k: int = 2,
        cg_tol: float = 1e-8,
        tau: float = 1e-3,
        eps4: float = 0.02,
    ):
        if k < 2:
            raise ValueError("the expansion needs k >= 2")
        self.k = k
        self.orders = 2 * k - 1
        self.table = table
        self.grid = table.grid
        self.euler = euler
        self.t = 0.0
        self.cg_tol = cg_tol
        self.tau = tau
        self.eps4 = eps4
        # macro coefficients y_n = (a, b, c) per order, zero initial data
        self.y = np.zeros((self.orders + 1, euler.grid.cells, 5))
        self._cache: dict[bytes, dict] = {}

    # -- per-state machinery -------------------------------------------------

    def _entry(self, euler: EulerState, y: np.ndarray) -> dict:
        key = _state_key(euler, y)
        if key not in self._cache:
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[key] = {"euler": euler, "y": y.copy(), "fields": None}
        return self._cache[key]

    def _ops(self, entry: dict):
        if "ops" not in entry:
            euler = entry["euler"]
            entry["ops"] = [
                LinearizedOperator(self.table, cell_state(euler, i))
                for i in range(euler.grid.cells)
            ]
        return entry["ops"]

    def _collision_ops(self, entry: dict):
        if "cops" not in entry:
            euler = entry["euler"]
            entry["cops"] = [
                CollisionOperator(self.table, 1.0 / euler.T0[i], euler.u[i])
                for i in range(euler.grid.cells)
            ]
        return entry["cops"]

    def _moment_matrices(self, entry: dict):
        if "GH" not in entry:
            ops = self._ops(entry)
            phat1 = self.grid.phat[:, 0]
            G, H = [], []
            for op in ops:
                basis = op.null_basis()
                G.append(op.gram())
                H.append(
                    np.array(
                        [
                            [self.grid.integrate(bi * phat1 * bj) for bj in basis]
                            for bi in basis
                        ]
                    )
                )
            entry["GH"] = (np.stack(G), np.stack(H))
        return entry["GH"]

    # -- evolution -----------------------------------------------------------

    def _advance_state(self, entry: dict, dt: float, level: int):
        """One step of the coupled (backbone, macro) evolution up to ``level``."""
        euler, y = entry["euler"], entry["y"]
        new_euler = euler_step(euler, dt, eps4=self.eps4)
        new_y = y.copy()
        if level >= 1:
            fields = self._build(entry, level)
            G, H = self._moment_matrices(entry)
            G_inv = np.linalg.inv(G)
            g = euler.grid
            phat1 = self.grid.phat[:, 0]
            ops = self._ops(entry)
            for n in range(1, level + 1):
                # dt (G y) + dx (H y + s) = 0: RK4 on w = G y with the
                # coefficient matrices and micro source frozen in the step
                s = np.stack(
                    [
                        [
                            self.grid.integrate(b * phat1 * fields[n].micro[c])
                            for b in ops[c].null_basis()
                        ]
                        for c in range(g.cells)
                    ]
                )

                def rhs(w):
                    yv = np.einsum("cmn,cn->cm", G_inv, w)
                    return -g.ddx(np.einsum("cmn,cn->cm", H, yv) + s)

                w = np.einsum("cmn,cn->cm", G, y[n])
                k1 = rhs(w)
                k2 = rhs(w + 0.5 * dt * k1)
                k3 = rhs(w + 0.5 * dt * k2)
                k4 = rhs(w + dt * k3)
                w = w + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
                if not np.all(np.isfinite(w)):
                    raise FloatingPointError(
                        "macro coefficient system produced non-finite values"
                    )
                new_y[n] = np.einsum("cmn,cn->cm", G_inv, w)
        return self._entry(new_euler, new_y)

    def advance(self, dt: float):
        """Advance backbone and macro systems by dt (RK4 inside)."""
        entry = self._advance_state(self._entry(self.euler, self.y), dt, self.orders)
        self.euler, self.y = entry["euler"], entry["y"]
        self.t += dt

    # -- hierarchy construction ----------------------------------------------

    def _build(self, entry: dict, level: int):
        """Coefficients F_0 .. F_level at the state held by ``entry``."""
        fields = entry["fields"]
        if fields is not None and len(fields) > level:
            return fields[: level + 1]

        euler, y = entry["euler"], entry["y"]
        ops = self._ops(entry)
        cops = self._collision_ops(entry)
        g = euler.grid
        nx, Np = g.cells, self.grid.size
        sqrt_M = np.stack([op.sqrt_M for op in ops])
        M = np.stack([op.M for op in ops])
        dt_lnM, _ = maxwellian_log_derivatives(euler, self.grid, eps4=self.eps4)

        if fields is None:
            fields = [
                ExpansionCoefficient(0, M, np.zeros((nx, 5)), np.zeros((nx, Np)))
            ]
        for n in range(len(fields), level + 1):
            prev = fields[n - 1]
            if n == 1:
                dt_prev = dt_lnM * M
            else:
                plus = self._advance_state(entry, self.tau, n - 1)
                minus = self._advance_state(entry, -self.tau, n - 1)
                f_p = self._build(plus, n - 1)[n - 1].values
                f_m = self._build(minus, n - 1)[n - 1].values
                dt_prev = (f_p - f_m) / (2.0 * self.tau)
            transport = dt_prev + self.grid.phat[None, :, 0] * g.ddx(prev.values)

            quad = np.zeros((nx, Np))
            for i in range(1, n):
                for c in range(nx):
                    quad[c] += cops[c].bilinear(
                        fields[i].values[c], fields[n - i].values[c]
                    )

            micro = np.empty((nx, Np))
            values = np.empty((nx, Np))
            defect = 0.0
            for c in range(nx):
                rhs = -(transport[c] - quad[c]) / sqrt_M[c]
                rhs_norm = np.sqrt(self.grid.integrate(rhs * rhs))
                proj = ops[c].project_out_null(rhs)
                if rhs_norm > 0:
                    overlap = np.sqrt(
                        max(
                            rhs_norm**2 - self.grid.integrate(proj * proj),
                            0.0,
                        )
                    )
                    defect = max(defect, overlap / rhs_norm)
                micro[c], info = ops[c].invert_L_on_orthogonal(
                    proj, cg_tol=self.cg_tol, ortho_tol=np.inf
                )
                if info["relative_residual"] > 100 * self.cg_tol:
                    raise RuntimeError(f"L^-1 stagnated at order {n}, cell {c}: {info}")
                row = ProjectionCoefficients(
                    a=y[n][c, 0], b=y[n][c, 1:4].copy(), c=y[n][c, 4]
                )
                # F_n = sqrt(M) [P + micro] with P = sqrt(M)(a + b.p + c p0)
                values[c] = sqrt_M[c] * (ops[c].reconstruct_P(row) + micro[c])
            fields.append(ExpansionCoefficient(n, values, y[n].copy(), micro, defect))
        entry["fields"] = fields
        return fields[: level + 1]

    def coefficients(self, level: int | None = None):
        """ExpansionCoefficient list F_0 .. F_level at the current time."""
        level = self.orders if level is None else level
        return self._build(self._entry(self.euler, self.y), level)

    # -- diagnostics ---------------------------------------------------------

    def hierarchy_residual(self, n: int):
        """(max residual, scale) of dt F_n + p_hat dx F_n = sum C[F_i, F_j]."""
        if not 0 <= n <= self.orders - 1:
            raise ValueError(f"residual check needs 0 <= n <= {self.orders - 1}")
        entry = self._entry(self.euler, self.y)
        fields = self._build(entry, n + 1)
        if n == 0:
            dt_lnM, _ = maxwellian_log_derivatives(
                entry["euler"], self.grid, eps4=self.eps4
            )
            dt_f = dt_lnM * fields[0].values
        else:
            plus = self._advance_state(entry, self.tau, n)
            minus = self._advance_state(entry, -self.tau, n)
            dt_f = (
                self._build(plus, n)[n].values - self._build(minus, n)[n].values
            ) / (2.0 * self.tau)
        g = self.euler.grid
        transport = dt_f + self.grid.phat[None, :, 0] * g.ddx(fields[n].values)
        cops = self._collision_ops(entry)
        coll = np.zeros_like(transport)
        for i in range(0, n + 2):
            for c in range(g.cells):
                coll[c] += cops[c].bilinear(
                    fields[i].values[c], fields[n + 1 - i].values[c]
                )
        resid = np.abs(transport - coll).max()
        scale = max(np.abs(transport).max(), np.abs(coll).max(), 1e-300)
        return float(resid), float(scale)

    def remainder_source(self, epsilon: float):
        """S = sum_{i+j >= 2k+1, 2 <= i,j <= 2k-1} eps^{i+j-k} C[F_i, F_j], and S/sqrt(M)."""
        entry = self._entry(self.euler, self.y)
        fields = self._build(entry, self.orders)
        cops = self._collision_ops(entry)
        ops = self._ops(entry)
        nx = self.euler.grid.cells
        S = np.zeros((nx, self.grid.size))
        for i in range(2, self.orders + 1):
            for j in range(2, self.orders + 1):
                if i + j >= 2 * self.k + 1:
                    for c in range(nx):
                        S[c] += epsilon ** (i + j - self.k) * cops[c].bilinear(
                            fields[i].values[c], fields[j].values[c]
                        )
        sqrt_M = np.stack([op.sqrt_M for op in ops])
        return S, S / sqrt_M


def build_f0(euler: EulerState, table: KernelTable) -> ExpansionCoefficient:
    """F_0 = M with identically zero microscopic part."""
    nx = euler.grid.cells
    M = np.stack([juttner(cell_state(euler, i), table.grid.nodes) for i in range(nx)])
    return ExpansionCoefficient(0, M, np.zeros((nx, 5)), np.zeros_like(M))


@dataclass(frozen=True)
class DecayReport:
    """Fitted constant of |F_n| <= C (1+t)^{n-1} M^kappa and its witness."""

    constant: float
    argmax_cell: int
    argmax_node: int
    boundary_dominated: bool


def decay_check(
    coeff: ExpansionCoefficient,
    t: float,
    euler: EulerState,
    grid: MomentumGrid,
    exponent: float = 0.9,
) -> DecayReport:
    """Node-wise ratio |F_n| / ((1+t)^{n-1} M^exponent); reports the fitted C."""
    power = max(coeff.n - 1, 0)
    best_c, arg_cell, arg_node = 0.0, 0, 0
    for c in range(euler.grid.cells):
        M = juttner(cell_state(euler, c), grid.nodes)
        ratio = np.abs(coeff.values[c]) / ((1.0 + t) ** power * M**exponent)
        k = int(np.argmax(ratio))
        if ratio[k] > best_c:
            best_c, arg_cell, arg_node = float(ratio[k]), c, k
    p_norm = float(np.linalg.norm(grid.nodes[arg_node]))
    return DecayReport(
        constant=best_c,
        argmax_cell=arg_cell,
        argmax_node=arg_node,
        boundary_dominated=bool(p_norm >= 0.6 * grid.radius),
    )
