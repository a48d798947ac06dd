"""Passing between the scattering amplitude and the interior D-N map.

With ``C`` the boundary set of the domain and ``E[j, n] = (2 pi)^(-d/2)
exp(-i n.x_j)`` the free Fourier matrix restricted to ``C``, the near-to-far
maps are ``Gamma_pm = E B0_pm`` (columns are far-field patterns of the
densities ``B0 delta_n``) and do not depend on the potential.  In kernel form
with respect to the surface measure

    A_ext - A = Gamma_+ M_+ Gamma_-^H,

so the single layer ``M_+`` of the unknown potential, and through it the D-N
map, can be recovered from the amplitude by weighted least squares.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dnmap import boundary_op, dn_from_boundary_op, exterior_dn, single_layer
from .errors import ExceptionalEnergyError, NumericalError, ValidationError
from .geometry import SpectralParam
from .operators import OperatorMatrix
from .scattering import LippmannSchwinger, Potential, _table_for, amplitude

GRAM_COND = 1e12


def _boundary_table(domain, param, table):
    C = domain.boundary
    return _table_for(param, C, C, table)


def fourier_matrix(points, grid):
    """``(2 pi)^(-d/2) exp(-i n.x_j)``; rows are grid nodes, columns points."""
    d = grid.d
    return (2 * np.pi) ** (-d / 2) * np.exp(-1j * grid.x @ np.asarray(points).T)


def gamma_matrix(domain, param, grid, table=None):
    """Near-to-far map ``Gamma_pm`` from boundary densities to angular nodes."""
    table = _boundary_table(domain, param, table)
    B0 = boundary_op(Potential.zero(domain), param, table)
    G = fourier_matrix(domain.boundary, grid) @ B0.values
    return OperatorMatrix(G, "angular", "boundary", param.lam, param.sign, "gamma",
                          domain.boundary)


def gamma_matrix_with_potential(V, param, grid, table=None):
    """``Gamma`` computed as ``F0 (1 - V R) chi_C B`` using the potential ``V``.

    Agrees with :func:`gamma_matrix` for any ``V`` supported inside the
    domain; used as an independent check.
    """
    domain = V.domain
    C = domain.boundary
    S, _ = V.support()
    pts = np.concatenate([C, S])
    table = _table_for(param, pts, pts, table)
    B = boundary_op(V, param, table).values
    ls = LippmannSchwinger(V, param, table)
    E_C = fourier_matrix(C, grid)
    out = E_C @ B
    if len(ls.S):
        # (1 - V R) applied to a density on C adds -V w on the support
        w = np.linalg.solve(np.eye(len(ls.S)) + ls.table.kernel(ls.S, ls.S) * ls.v[None, :],
                            ls.table.kernel(ls.S, C) @ B)
        out = out - fourier_matrix(ls.S, grid) @ (ls.v[:, None] * w)
    return OperatorMatrix(out, "angular", "boundary", param.lam, param.sign, "gamma", C)


def exterior_amplitude(domain, grid, lam, table=None):
    """Amplitude of the obstacle problem, ``Gamma_+ E_C^H`` as a kernel for ``dM~``."""
    param = SpectralParam(lam, domain.d, 1)
    Gp = gamma_matrix(domain, param, grid, table)
    A = Gp.values @ fourier_matrix(domain.boundary, grid).conj().T
    return OperatorMatrix(A, "angular", "angular", lam, 1, "amplitude_ext")


@dataclass
class EquivalenceBundle:
    gamma_plus: OperatorMatrix
    gamma_minus: OperatorMatrix
    a_ext: OperatorMatrix
    grid: object
    lam: float

    def injectivity(self):
        """``sigma_min / sigma_max`` of ``W^(1/2) Gamma`` for both signs."""
        r = np.sqrt(self.grid.mu)[:, None]
        out = []
        for G in (self.gamma_plus, self.gamma_minus):
            s = np.linalg.svd(r * G.values, compute_uv=False)
            out.append(float(s[-1] / s[0]))
        return tuple(out)


def equivalence_bundle(domain, lam, grid, table=None):
    p = SpectralParam(lam, domain.d, 1)
    table = _boundary_table(domain, p, table)
    Gp = gamma_matrix(domain, p, grid, table)
    Gm = gamma_matrix(domain, p.flipped(), grid, table)
    Aext = OperatorMatrix(Gp.values @ fourier_matrix(domain.boundary, grid).conj().T,
                          "angular", "angular", lam, 1, "amplitude_ext")
    return EquivalenceBundle(Gp, Gm, Aext, grid, float(lam))


def factorization_defect(V, lam, grid, table=None, bundle=None, A=None):
    """``||A_ext - A - Gamma_+ M_+ Gamma_-^H||_F / ||A_ext - A||_F``."""
    domain = V.domain
    p = SpectralParam(lam, domain.d, 1)
    S, _ = V.support()
    pts = np.concatenate([domain.boundary, S])
    table = _table_for(p, pts, pts, table)
    bundle = bundle or equivalence_bundle(domain, lam, grid, table)
    A = amplitude(V, p, grid, table) if A is None else A
    M = single_layer(V, p, table).values
    lhs = bundle.a_ext.values - np.asarray(A)
    rhs = bundle.gamma_plus.values @ M @ bundle.gamma_minus.values.conj().T
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs))


def _weighted_left_inverse(G, mu):
    """``(G^H W G)^-1 G^H W`` with a conditioning check."""
    GW = G.conj().T * mu[None, :]
    gram = GW @ G
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond) or cond > GRAM_COND:
        raise NumericalError(f"near-to-far map is numerically rank deficient "
                             f"(Gram condition {cond:.2e}); refine the angular grid")
    return np.linalg.solve(gram, GW), cond


def smatrix_to_dn(A, lam, domain, grid, table=None, bundle=None):
    """Interior D-N map recovered from the scattering amplitude.

    ``M_+ = L_+ (A_ext - A) L_-^H`` with the weighted left inverses
    ``L_pm = (G_pm^H W G_pm)^-1 G_pm^H W``; then ``B_+ = M_+^-1`` and
    ``Lambda_V = B_+ + Lambda_ext + lam I - deg~ + S_C``.

    Returns
    -------
    OperatorMatrix
        The recovered D-N map; attributes ``gram_condition`` and
        ``single_layer_condition`` record the conditioning.
    """
    p = SpectralParam(lam, domain.d, 1)
    p.require_low_band()
    A = np.asarray(A)
    if A.shape != (len(grid), len(grid)):
        raise ValidationError("amplitude does not match the angular grid")
    table = _boundary_table(domain, p, table)
    bundle = bundle or equivalence_bundle(domain, lam, grid, table)
    Lp, cp = _weighted_left_inverse(bundle.gamma_plus.values, grid.mu)
    Lm, cm = _weighted_left_inverse(bundle.gamma_minus.values, grid.mu)
    Mp = Lp @ (bundle.a_ext.values - A) @ Lm.conj().T
    condM = float(np.linalg.cond(Mp))
    if not np.isfinite(condM) or condM > 1e12:
        raise ExceptionalEnergyError("recovered single-layer matrix is singular", condM)
    Bp = np.linalg.inv(Mp)
    Lext = exterior_dn(domain, p, table)
    out = dn_from_boundary_op(Bp, domain, p, Lext)
    out.gram_condition = max(cp, cm)
    out.single_layer_condition = condM
    return out
