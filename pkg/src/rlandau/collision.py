"""The relativistic Landau collision kernel and nonlinear collision operator.

Kernel (with rho = p^mu q_mu = -p0 q0 + p.q <= -1, g = rho^2 - 1):

    Lambda = rho^2 g^{-3/2},
    S      = g I - (p - q)(p - q)^T - (rho + 1)(p q^T + q p^T),
    Phi    = Lambda S / (p0 q0).

Phi is symmetric positive semidefinite and satisfies the projection
identity Phi (q_hat - p_hat) = 0; the identity is carried entirely by S,
so it survives the near-diagonal regularization g -> g + eta^2 exactly.

The collision operator is evaluated in flux (divergence) form,

    C[g, h] = div_p int Phi(p, q) [grad_p g(p) h(q) - g(p) grad_q h(q)] dq,

with the inner gradients taken by a Maxwellian-fitted stencil and the
outer divergence by the adjoint of the invariant-exact kinetic stencil,
so that mass, momentum, and energy of C[f, f] are conserved to round-off
(momentum and energy via the p <-> q symmetry of Phi and the projection
identity).  The non-divergence (elliptic) rearrangement used for
positivity arguments is provided by :meth:`CollisionOperator.nondivergence_form`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phase_space import MomentumGrid, energy_of, p_hat
from .stencils import MomentumDerivative, kinetic_gradient, maxwell_gradient

# (i, j) index pairs of the packed symmetric 3x3 component order
_COMPONENTS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
_PACKED = np.array([[0, 1, 2], [1, 3, 4], [2, 4, 5]])


@dataclass(frozen=True)
class KernelValue:
    """Kernel factors at one or more (p, q) pairs: Lambda, S, and Phi."""

    lam: np.ndarray
    s: np.ndarray
    phi: np.ndarray


def kernel_phi(p, q, eta: float = 0.0) -> KernelValue:
    """Evaluate the collision kernel at momenta p, q (broadcastable (..., 3)).

    ``eta`` regularizes the diagonal singularity of Lambda by g -> g + eta^2;
    the projection identity is unaffected because it holds for S alone and S
    keeps the bare g.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    p0 = energy_of(p)
    q0 = energy_of(q)
    rho = -p0 * q0 + np.sum(p * q, axis=-1)
    g = rho * rho - 1.0
    g_reg = g + eta * eta
    if np.any(g_reg <= 1e-13):
        raise ValueError("kernel is singular at p = q; pass eta > 0 to regularize")
    lam = rho * rho * g_reg ** (-1.5)

    d = p - q
    eye = np.eye(3)
    # regularization lives in Lambda only; S keeps the bare g so that the
    # projection identity S (q_hat - p_hat) = 0 stays exact
    s = (
        g[..., None, None] * eye
        - d[..., :, None] * d[..., None, :]
        - (rho + 1.0)[..., None, None]
        * (p[..., :, None] * q[..., None, :] + q[..., :, None] * p[..., None, :])
    )
    phi = lam[..., None, None] * s / (p0 * q0)[..., None, None]
    return KernelValue(lam=lam, s=s, phi=phi)


class KernelTable:
    """Precomputed Phi(p_i, q_j) on a momentum grid, packed symmetric.

    ``phi[c]`` holds component c of Phi over all (p, q) pairs; pairs with
    g < eta^2 (the lattice diagonal) are excluded from quadrature by
    zeroing the row entries.  ``react`` holds the scalar kernel
    4 rho (g + eta^2)^{-1/2} / (p0 q0) of the non-divergence reaction term.
    The table is immutable after construction and independent of the
    solution, so it is built once per grid and shared.
    """

    def __init__(self, grid: MomentumGrid, eta: float | None = None, block: int = 128):
        self.grid = grid
        self.eta = 1e-3 * grid.h if eta is None else float(eta)
        n = grid.size
        self.phi = np.zeros((6, n, n))
        self.react = np.zeros((n, n))
        nodes, p0 = grid.nodes, grid.p0
        eta2 = self.eta**2
        eye = np.eye(3)
        for lo in range(0, n, block):
            hi = min(lo + block, n)
            rho = -p0[lo:hi, None] * p0[None, :] + nodes[lo:hi] @ nodes.T
            g = rho * rho - 1.0
            keep = g >= eta2
            g_reg = g + eta2
            lam_over_e = rho * rho * g_reg ** (-1.5) / (p0[lo:hi, None] * p0[None, :])
            lam_over_e[~keep] = 0.0
            d = nodes[lo:hi, None, :] - nodes[None, :, :]
            pq = nodes[lo:hi, None, :, None] * nodes[None, :, None, :]
            for c, (i, j) in enumerate(_COMPONENTS):
                s_ij = (
                    g * eye[i, j]
                    - d[..., i] * d[..., j]
                    - (rho + 1.0) * (pq[..., i, j] + pq[..., j, i])
                )
                self.phi[c, lo:hi] = lam_over_e * s_ij
            r = 4.0 * rho * g_reg ** (-0.5) / (p0[lo:hi, None] * p0[None, :])
            r[~keep] = 0.0
            self.react[lo:hi] = r
        self.phi.setflags(write=False)
        self.react.setflags(write=False)

    def sigma(self, weight: np.ndarray) -> np.ndarray:
        """sigma^{ij}(p) = int Phi^{ij}(p, q) weight(q) dq, shape (N, 3, 3)."""
        packed = (self.phi @ weight) * self.grid.cell_volume  # (6, N)
        return packed[_PACKED].transpose(2, 0, 1)

    def contract(self, vec: np.ndarray) -> np.ndarray:
        """(Theta a)_i(p) = int Phi^{ij}(p, q) a_j(q) dq for a (3, N) field."""
        out = np.zeros_like(vec)
        for i in range(3):
            for j in range(3):
                out[i] += self.phi[_PACKED[i, j]] @ vec[j]
        return out * self.grid.cell_volume

    def reaction_integral(self, weight: np.ndarray) -> np.ndarray:
        """4 int rho (g + eta^2)^{-1/2} / (p0 q0) weight(q) dq per node."""
        return (self.react @ weight) * self.grid.cell_volume


def kappa(p) -> np.ndarray:
    """Coefficient of the quadratic reaction term, kappa(p) = 2^{9/2} pi / p0.

    Closed form of 2^{7/2} pi p0 int_0^pi (1 + |p|^2 sin^2 t)^{-3/2} sin t dt;
    the theta-integral evaluates to 2 / (p0)^2.
    """
    return 2.0**4.5 * np.pi / energy_of(p)


class CollisionOperator:
    """Discrete C[g, h] on one momentum grid with fixed reference frame.

    ``gamma_ref`` / ``u_ref`` pick the Maxwellian weight used by the inner
    (flux) gradient; matching them to the local Maxwellian makes C[M, M]
    vanish node-wise through the projection identity.
    """

    def __init__(
        self,
        table: KernelTable,
        gamma_ref: float,
        u_ref=(0.0, 0.0, 0.0),
    ):
        self.table = table
        self.grid = table.grid
        self.kinetic = kinetic_gradient(self.grid)
        self.inner = maxwell_gradient(self.kinetic, gamma_ref, u_ref)
        self.gamma_ref = float(gamma_ref)
        self.u_ref = np.asarray(u_ref, dtype=float)

    def _flux(self, g: np.ndarray, h: np.ndarray) -> np.ndarray:
        dg = self.inner.apply(g)
        dh = self.inner.apply(h)
        sig_h = self.table.sigma(h)  # (N, 3, 3)
        flux = np.einsum("nij,jn->in", sig_h, dg)
        flux -= g * self.table.contract(dh)
        return flux

    def bilinear(self, g: np.ndarray, h: np.ndarray) -> np.ndarray:
        """Per-node values of C[g, h] in conservative flux form."""
        if g.shape != (self.grid.size,) or h.shape != (self.grid.size,):
            raise ValueError("g, h must be per-node momentum slices")
        return self.kinetic.div_adjoint(self._flux(g, h))

    def invariant_residuals(self, g: np.ndarray, h: np.ndarray):
        """Quadrature moments (mass, momentum 3-vector, energy) of C[g, h]."""
        c = self.bilinear(g, h)
        mass = self.grid.integrate(c)
        mom = np.array([self.grid.integrate(self.grid.nodes[:, a] * c) for a in range(3)])
        energy = self.grid.integrate(self.grid.p0 * c)
        return mass, mom, energy

    def nondivergence_form(self, F: np.ndarray):
        """Elliptic rearrangement coefficients of C[F, F].

        Returns (diffusion, drift, reaction) with diffusion (N, 3, 3),
        drift (N, 3), reaction (N,), such that

            C[F, F] ~ diffusion_ij d_i d_j F + drift_i d_i F + reaction * F,

        where reaction already includes the quadratic kappa(p) F term.
        The diffusion matrices int Phi F(q) dq are PSD whenever F >= 0.
        """
        sig = self.table.sigma(F)
        # drift_i = sum_j d/dp_j sigma^{ji} (= int d_{p_j} Phi^{ji} F dq)
        #           - int Phi^{ij} d_{q_j} F(q) dq
        drift = np.stack(
            [sum(self.kinetic.D[j] @ sig[:, j, i] for j in range(3)) for i in range(3)],
            axis=-1,
        )
        drift -= self.table.contract(self.kinetic.apply(F)).T
        reaction = self.table.reaction_integral(F) + kappa(self.grid.nodes) * F
        return sig, drift, reaction

    def nondivergence_apply(self, F: np.ndarray) -> np.ndarray:
        """Evaluate the non-divergence form of C[F, F] with discrete derivatives."""
        sig, drift, reaction = self.nondivergence_form(F)
        dF = self.kinetic.apply(F)
        out = reaction * F + np.einsum("ni,in->n", drift, dF)
        for i in range(3):
            d2 = self.kinetic.apply(dF[i])  # d_j d_i F
            out += np.einsum("nj,jn->n", sig[:, :, i], d2)
        return out


@dataclass
class DistField:
    """Distribution values over (x-cell, p-node), tied to its two grids."""

    values: np.ndarray
    x_cells: int
    grid: MomentumGrid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.x_cells, self.grid.size):
            raise ValueError(
                f"values shape {self.values.shape} does not match "
                f"({self.x_cells}, {self.grid.size})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("DistField entries must be finite")


def relative_speed_floor(grid: MomentumGrid) -> float:
    """Smallest regularized g over distinct lattice pairs (diagnostic)."""
    p = grid.nodes
    rho = -np.outer(grid.p0, grid.p0) + p @ p.T
    g = rho * rho - 1.0
    np.fill_diagonal(g, np.inf)
    return float(g.min())


def entropy_production(op: CollisionOperator, F: np.ndarray) -> float:
    """d/dt int F log F under pure collision; <= 0 up to discretization noise."""
    if np.any(F <= 0):
        raise ValueError("entropy production needs a positive distribution")
    c = op.bilinear(F, F)
    return float(op.grid.integrate((1.0 + np.log(F)) * c))


def velocity_difference_defect(value: KernelValue, p, q) -> np.ndarray:
    """|Phi (q_hat - p_hat)| / |Phi| -- the projection-identity residual."""
    w = p_hat(q) - p_hat(p)
    num = np.linalg.norm(np.einsum("...ij,...j->...i", value.phi, w), axis=-1)
    den = np.linalg.norm(value.phi, axis=(-2, -1))
    return num / den
