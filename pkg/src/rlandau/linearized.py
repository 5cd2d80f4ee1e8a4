"""Linearized machinery around the local Maxwellian.

L = -A - K acts on f with U = M^{-1/2} f through the discrete Dirichlet
form

    <L f, g> = (1/2) sum_{p,q} h^6 Phi^{ij}(p,q) M(p) M(q)
               [DU(p) - DU(q)]_i [DV(p) - DV(q)]_j,

realized operationally as

    A[f] = -M^{-1/2} D^T [ M sigma^{ij} (D U)_j ]        (local diffusion),
    K[f] =  M^{-1/2} D^T [ M Theta(M D U) ]              (integral part),

with D the invariant-exact kinetic gradient, sigma^{ij} = int Phi M(q) dq,
and (Theta a)_i = int Phi^{ij} a_j(q) dq.  This form makes L exactly
self-adjoint, exactly positive semidefinite (Phi is PSD), and exactly
annihilating on the five-dimensional null space
N = span{M^{1/2}, p_i M^{1/2}, p^0 M^{1/2}}: constants die because
D 1 = 0, the momentum basis dies because sigma and Theta cancel on
constant vector fields, and the energy basis dies through the kernel
projection identity (D p^0 = p_hat exactly).

The inverse of L on N-perp uses preconditioned conjugate gradients with
re-projection each iteration; the preconditioner is the diagonal of -A.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .collision import KernelTable, kernel_phi
from .equilibrium import FluidState, juttner, juttner_sqrt
from .phase_space import MomentumGrid, energy_of
from .stencils import kinetic_gradient, maxwell_gradient


@dataclass(frozen=True)
class ProjectionCoefficients:
    """Null-space coordinates (a, b, c) of P[f] = M^{1/2}(a + p.b + p0 c)."""

    a: float
    b: np.ndarray
    c: float

    def scaled(self, alpha: float) -> "ProjectionCoefficients":
        return ProjectionCoefficients(alpha * self.a, alpha * self.b, alpha * self.c)


@dataclass(frozen=True)
class WeightSpec:
    """Polynomial-exponential weight family w_ell and its decay bookkeeping."""

    N0: int = 3
    T: float = 1.0
    ell: int = 0

    def __post_init__(self):
        if self.N0 < 3:
            raise ValueError("N0 must be at least 3")
        if self.ell not in (0, 1, 2):
            raise ValueError("ell must be in {0, 1, 2}")
        if self.T <= 0:
            raise ValueError("weight temperature must be positive")


def weight_value(spec: WeightSpec, t: float, p) -> np.ndarray:
    """w_ell(t, p) = (p0)^{2(N0 - ell)} exp(p0 / (5 T ln(e + t)))."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    p0 = energy_of(p)
    return p0 ** (2 * (spec.N0 - spec.ell)) * np.exp(
        p0 / (5.0 * spec.T * np.log(np.e + t))
    )


def rate_Y(T: float, t: float) -> float:
    """Y(t) = 1 / (5 T (e + t) ln^2(e + t)), the weight-decay rate."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    return 1.0 / (5.0 * T * (np.e + t) * np.log(np.e + t) ** 2)


def collision_frequency_sigma(state: FluidState, p, grid: MomentumGrid) -> np.ndarray:
    """sigma^{ij}(p) = int Phi^{ij}(p, q) M(q) dq at arbitrary momenta p.

    Quadrature over the grid nodes; symmetric PSD with eigenvalues bounded
    on the truncated box.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    M = juttner(state, grid.nodes)
    out = np.empty((len(p), 3, 3))
    eta = 1e-3 * grid.h
    block = max(1, 10_000_000 // grid.size)
    for lo in range(0, len(p), block):
        hi = min(lo + block, len(p))
        kv = kernel_phi(p[lo:hi, None, :], grid.nodes[None, :, :], eta=eta)
        out[lo:hi] = np.einsum("knij,n->kij", kv.phi, M) * grid.cell_volume
    return out


class LinearizedOperator:
    """L = -A - K around the local Maxwellian of one fluid cell."""

    def __init__(self, table: KernelTable, state: FluidState):
        if state.n0.shape != ():
            raise ValueError("LinearizedOperator wants a single-cell FluidState")
        self.table = table
        self.grid = table.grid
        self.state = state
        self.M = juttner(state, self.grid.nodes)
        self.sqrt_M = juttner_sqrt(state, self.grid.nodes)
        self.kin = kinetic_gradient(self.grid)
        self.inner = maxwell_gradient(self.kin, float(state.gamma), state.u)
        self.sigma = table.sigma(self.M)  # (N, 3, 3)
        self._a_matrix = None

    # -- basis ---------------------------------------------------------------

    def null_basis(self) -> np.ndarray:
        """The five N basis vectors M^{1/2} {1, p_1, p_2, p_3, p0}, rows."""
        g = self.grid
        return np.stack(
            [self.sqrt_M]
            + [g.nodes[:, a] * self.sqrt_M for a in range(3)]
            + [g.p0 * self.sqrt_M]
        )

    # -- operators -----------------------------------------------------------

    def _du(self, f: np.ndarray) -> np.ndarray:
        return self.kin.apply(f / self.sqrt_M)

    def apply_A(self, f: np.ndarray) -> np.ndarray:
        flux = self.M * np.einsum("nij,jn->in", self.sigma, self._du(f))
        return self.kin.div_adjoint(flux) / self.sqrt_M

    def apply_K(self, f: np.ndarray) -> np.ndarray:
        flux = self.M * self.table.contract(self.M * self._du(f))
        return -self.kin.div_adjoint(flux) / self.sqrt_M

    def apply_L(self, f: np.ndarray) -> np.ndarray:
        return -self.apply_A(f) - self.apply_K(f)

    def apply_Gamma(self, f: np.ndarray, g: np.ndarray) -> np.ndarray:
        """Gamma[f, g] = M^{-1/2} C[M^{1/2} f, M^{1/2} g] in discrete flux form."""
        a = self.sqrt_M * f
        b = self.sqrt_M * g
        flux = np.einsum("nij,jn->in", self.table.sigma(b), self.inner.apply(a))
        flux -= a * self.table.contract(self.inner.apply(b))
        return self.kin.div_adjoint(flux) / self.sqrt_M

    # -- projection ----------------------------------------------------------

    def gram(self) -> np.ndarray:
        basis = self.null_basis()
        g = np.array([[self.grid.integrate(bi * bj) for bj in basis] for bi in basis])
        cond = np.linalg.cond(g)
        if cond > 1e12:
            raise ValueError(
                f"null-space Gram matrix is ill-conditioned (cond = {cond:.2e}); "
                "the grid is too coarse or T0 is out of range"
            )
        return g

    def project_P(self, f: np.ndarray) -> ProjectionCoefficients:
        basis = self.null_basis()
        rhs = np.array([self.grid.integrate(b * f) for b in basis])
        coef = np.linalg.solve(self.gram(), rhs)
        return ProjectionCoefficients(a=coef[0], b=coef[1:4].copy(), c=coef[4])

    def reconstruct_P(self, coef: ProjectionCoefficients) -> np.ndarray:
        g = self.grid
        return self.sqrt_M * (coef.a + g.nodes @ coef.b + g.p0 * coef.c)

    def project_out_null(self, f: np.ndarray) -> np.ndarray:
        return f - self.reconstruct_P(self.project_P(f))

    # -- norms ---------------------------------------------------------------

    def sigma_norm(self, f: np.ndarray) -> float:
        df = self.kin.apply(f)
        grad_part = np.einsum("nij,in,jn->n", self.sigma, df, df)
        phat = self.grid.phat
        mass_part = np.einsum("nij,ni,nj,n->n", self.sigma, phat, phat, f * f)
        total = self.grid.integrate(grad_part + mass_part / self.state.T0**2)
        return float(np.sqrt(max(total, 0.0)))

    # -- inverse on the orthogonal complement --------------------------------

    def a_matrix(self) -> sp.csr_matrix:
        """Sparse assembly of -A (symmetric PSD), used for preconditioning."""
        if self._a_matrix is None:
            s_inv = sp.diags(1.0 / self.sqrt_M)
            acc = sp.csr_matrix((self.grid.size, self.grid.size))
            for i in range(3):
                for j in range(3):
                    mid = sp.diags(self.M * self.sigma[:, i, j])
                    acc += self.kin.DT[i] @ mid @ self.kin.D[j]
            self._a_matrix = (s_inv @ acc @ s_inv).tocsr()
        return self._a_matrix

    def invert_L_on_orthogonal(
        self,
        r: np.ndarray,
        cg_tol: float = 1e-8,
        max_iter: int = 2000,
        ortho_tol: float = 1e-6,
    ):
        """Solve L u = r with u in N-perp by projected, preconditioned CG.

        Returns (u, info) where info carries the iteration count and final
        relative residual.  Raises if r has a component in the null space
        larger than ortho_tol relative to its size.
        """
        basis = self.null_basis()
        r_norm = np.sqrt(self.grid.integrate(r * r))
        if r_norm == 0.0:
            return np.zeros_like(r), {"iterations": 0, "relative_residual": 0.0}
        for b in basis:
            b_norm = np.sqrt(self.grid.integrate(b * b))
            overlap = abs(self.grid.integrate(b * r)) / (b_norm * r_norm)
            if overlap > ortho_tol:
                raise ValueError(
                    f"right-hand side has null-space overlap {overlap:.2e} "
                    f"(> ortho_tol = {ortho_tol}); L is not invertible there"
                )

        diag = self.a_matrix().diagonal()
        floor = 1e-12 * diag.max()
        precond = 1.0 / np.maximum(diag, floor)

        proj = self.project_out_null
        r_vec = proj(r)
        u = np.zeros_like(r)
        res = r_vec.copy()
        z = proj(precond * res)
        d = z.copy()
        rz = self.grid.integrate(res * z)
        target = cg_tol * np.sqrt(self.grid.integrate(r_vec * r_vec))
        its = 0
        for its in range(1, max_iter + 1):
            ld = proj(self.apply_L(d))
            dld = self.grid.integrate(d * ld)
            if dld <= 0:
                break
            alpha = rz / dld
            u += alpha * d
            res -= alpha * ld
            if np.sqrt(self.grid.integrate(res * res)) <= target:
                break
            z = proj(precond * res)
            rz_new = self.grid.integrate(res * z)
            d = z + (rz_new / rz) * d
            rz = rz_new
        u = proj(u)
        rel = float(
            np.sqrt(self.grid.integrate(res * res))
            / np.sqrt(self.grid.integrate(r_vec * r_vec))
        )
        return u, {"iterations": its, "relative_residual": rel}
