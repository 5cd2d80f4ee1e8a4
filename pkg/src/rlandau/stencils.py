"""Momentum-space difference operators.

The collision machinery needs two properties from the discrete momentum
gradient that plain central differences cannot deliver:

* exactness on ``{1, s, p0(s)}`` along each axis line, so that the
  adjoint (summation-by-parts) divergence conserves all five collision
  invariants to round-off -- energy conservation needs ``D p0 = p_hat``
  exactly, not just polynomial exactness;
* exactness on the Maxwellian-weighted family ``W * {1, s, p0}`` with
  ``W = exp(gamma (u.p - u0 p0))``, so that discrete equilibrium fluxes
  cancel node-wise through the kernel projection identity instead of at
  a sloppy O(h^2).

Both come from one base operator.  ``kinetic_gradient`` builds 3-point
stencils as the classical second-order weights plus a correction along
the second-difference direction ``v = (1, -2, 1)`` (the null vector of
the ``{1, s}`` exactness conditions) that makes ``D p0`` exact.  The
correction stays uniformly bounded because its denominator is the second
difference of ``p0`` and ``d^2 p0 / ds^2 = (1 + t^2) / (p0)^3`` is
strictly positive everywhere on the mass shell.  On generic smooth
fields the stencil is second-order, like the plain central difference.

``maxwell_gradient`` is the exact diagonal conjugation

    D_W = diag(W) (D_kin + diag(d ln W / dp_a)) diag(1/W),

assembled from bounded relative weights ``W(center)/W(sample)``, and is
exact on ``W * {1, s, p0}`` by construction.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .phase_space import MomentumGrid

# null vector of the {1, s} exactness conditions on a uniform 3-point window
_V2 = np.array([1.0, -2.0, 1.0])


def _window_starts(n: int) -> np.ndarray:
    return np.clip(np.arange(n) - 1, 0, n - 3)


def _poly_weights(h: float) -> np.ndarray:
    """Second-order derivative weights for center offsets 0..2 in a window."""
    return (
        np.array(
            [
                [-3.0, 4.0, -1.0],   # one-sided, differentiation point first
                [-1.0, 0.0, 1.0],    # central
                [1.0, -4.0, 3.0],    # one-sided, differentiation point last
            ]
        )
        / (2.0 * h)
    )


class MomentumDerivative:
    """Per-axis sparse derivative operators D[a] ~ d/dp_a on a momentum grid."""

    def __init__(self, grid: MomentumGrid, mats):
        self.grid = grid
        self.D = [m.tocsr() for m in mats]
        self.DT = [m.T.tocsr() for m in self.D]

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Gradient of per-node values; returns shape (3, n_nodes)."""
        return np.stack([D @ values for D in self.D])

    def div_adjoint(self, flux: np.ndarray) -> np.ndarray:
        """Summation-by-parts divergence -sum_a D_a^T flux_a of a (3, N) flux."""
        out = -(self.DT[0] @ flux[0])
        out -= self.DT[1] @ flux[1]
        out -= self.DT[2] @ flux[2]
        return out


def _kinetic_axis(grid: MomentumGrid, axis: int):
    """Stencil columns and coefficients (each (n_nodes, 3)) for one axis."""
    n = grid.points_per_axis
    ax = grid.axis
    starts = _window_starts(n)
    offs = starts[:, None] + np.arange(3)[None, :]       # (n, 3)
    offsets = np.arange(n) - starts                      # center position in window

    shape = grid.shape
    p0 = grid.p0.reshape(shape)
    s_c = np.moveaxis(
        np.broadcast_to(ax, shape[:axis] + shape[axis + 1:] + (n,)), -1, axis
    )
    t2 = p0**2 - 1.0 - s_c**2                            # transverse |p|^2, line-constant

    s_w = ax[offs]                                       # (n, 3)
    bshape = [1, 1, 1, 3]
    bshape[axis] = n
    p0_w = np.sqrt(1.0 + t2[..., None] + s_w.reshape(bshape) ** 2)  # (n,n,n,3)

    cshape = [1, 1, 1, 3]
    cshape[axis] = n
    c_poly = np.broadcast_to(
        _poly_weights(grid.h)[offsets].reshape(cshape), shape + (3,)
    )

    # correction along the second-difference direction makes D p0 exact;
    # the denominator h^2 d^2p0/ds^2 > 0 keeps it uniformly bounded
    phat_c = s_c / p0
    num = phat_c - np.einsum("...m,...m->...", c_poly, p0_w)
    den = p0_w @ _V2
    coeffs = c_poly + (num / den)[..., None] * _V2

    idx = np.arange(grid.size).reshape(shape)
    cols = np.empty(shape + (3,), dtype=np.int64)
    for j in range(3):
        cols[..., j] = np.take(idx, offs[:, j], axis=axis)
    return cols.reshape(-1, 3), coeffs.reshape(-1, 3)


def kinetic_gradient(grid: MomentumGrid) -> MomentumDerivative:
    """Base derivative: second-order, exact on {1, s} and the energy p0."""
    rows = np.repeat(np.arange(grid.size), 3)
    mats = []
    for axis in range(3):
        cols, coeffs = _kinetic_axis(grid, axis)
        mats.append(
            sp.csr_matrix(
                (coeffs.ravel(), (rows, cols.ravel())), shape=(grid.size, grid.size)
            )
        )
    return MomentumDerivative(grid, mats)


def maxwell_gradient(
    base: MomentumDerivative, gamma: float, u=(0.0, 0.0, 0.0)
) -> MomentumDerivative:
    """Conjugate the base operator by the Juttner weight of a reference state.

    The result is exact on W * {1, s, p0} along each axis line, which makes
    discrete Maxwellian fluxes cancel through the projection identity.
    """
    grid = base.grid
    u = np.asarray(u, dtype=float)
    u0 = np.sqrt(1.0 + u @ u)
    # log-weight per node; only bounded differences enter the matrix entries
    log_w = gamma * (grid.nodes @ u - u0 * grid.p0)
    dlog_w = gamma * (u[:, None] - u0 * grid.phat.T)     # (3, N): d/dp_a ln W

    mats = []
    for axis in range(3):
        D = base.D[axis].tocoo()
        rel = np.exp(log_w[D.row] - log_w[D.col])        # W(center)/W(sample)
        mat = sp.csr_matrix((D.data * rel, (D.row, D.col)), shape=D.shape)
        mat += sp.diags(dlog_w[axis])
        mats.append(mat)
    return MomentumDerivative(grid, mats)
