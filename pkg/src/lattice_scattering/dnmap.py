"""Dirichlet-to-Neumann maps and the boundary single-layer operator.

The Hamiltonian on a rectangular domain is ``H0 + V - lam`` with
``H0 = (D - A)/4``, ``D`` the degree matrix and ``A`` the adjacency of the
graph whose edges join interior vertices to their neighbours (boundary to
boundary edges are absent).  In the interior/boundary block form the
interior D-N map is the Schur complement

    Lambda = H11 - H10 H00^-1 H01.

The boundary set ``C`` of the domain carries the single-layer matrix
``M[m, n] = (R(lam +- i0) delta_n)(m)`` and its inverse ``B``.  The exterior
D-N map is recovered from the free quantities through

    B = Lambda_V - Lambda_ext - lam I + deg~ - S_C,

where ``deg~`` counts (with weight 1/4) neighbours inside ``C`` and ``S_C``
is the 1/4-weighted adjacency within ``C``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ExceptionalEnergyError, ValidationError
from .operators import boundary_operator
from .scattering import LippmannSchwinger, Potential, _table_for

DIRICHLET_COND = 1e12
SINGLE_LAYER_COND = 1e12


@dataclass
class HamiltonianBlocks:
    H00: np.ndarray
    H01: np.ndarray
    H10: np.ndarray
    H11: np.ndarray

    def full(self):
        return np.block([[self.H00, self.H01], [self.H10, self.H11]])


def assemble_hamiltonian(domain, V, lam):
    """Interior/boundary blocks of ``H0 + V - lam``.

    Parameters
    ----------
    domain : RectDomain
    V : Potential or array_like
        Interior values (a :class:`Potential` or a vector of length ``M^d``).
    lam : float
    """
    v = V.values if isinstance(V, Potential) else np.asarray(V, dtype=float)
    n0, n1 = domain.n_interior, domain.n_boundary
    if v.shape != (n0,):
        raise ValidationError("potential does not match the domain")
    H00 = np.diag(0.5 * domain.d + v - lam)
    e = domain.interior_edges()
    H00[e[:, 0], e[:, 1]] = -0.25
    H00[e[:, 1], e[:, 0]] = -0.25
    H10 = np.zeros((n1, n0))
    H10[np.arange(n1), domain.boundary_neighbor] = -0.25
    H11 = 0.25 * np.eye(n1)
    return HamiltonianBlocks(H00, H10.T.copy(), H10, H11)


def _interior_lu(blocks, lam):
    cond = float(np.linalg.cond(blocks.H00))
    if not np.isfinite(cond) or cond > DIRICHLET_COND:
        raise ExceptionalEnergyError(
            f"lambda={lam} is (numerically) a Dirichlet eigenvalue of the interior problem",
            cond)
    return sla.lu_factor(blocks.H00), cond


def interior_dn(V, lam):
    """Interior D-N map of ``V`` at energy ``lam`` as a boundary operator.

    Raises
    ------
    ExceptionalEnergyError
        If the interior Dirichlet problem is singular.
    """
    domain = V.domain
    blocks = assemble_hamiltonian(domain, V, lam)
    lu, cond = _interior_lu(blocks, lam)
    Lam = blocks.H11 - blocks.H10 @ sla.lu_solve(lu, blocks.H01)
    op = boundary_operator(Lam, domain, float(lam), None, "dn_interior")
    op.condition = cond
    return op


def dirichlet_solve(V, lam, f):
    """Solve the interior equation with boundary values ``f``.

    Returns
    -------
    ndarray
        Values on interior and boundary, in domain order.
    """
    domain = V.domain
    f = np.asarray(f)
    if f.shape != (domain.n_boundary,):
        raise ValidationError("boundary data has the wrong length")
    blocks = assemble_hamiltonian(domain, V, lam)
    lu, _ = _interior_lu(blocks, lam)
    u0 = -sla.lu_solve(lu, blocks.H01 @ f)
    return np.concatenate([u0, f])


def boundary_adjacency(domain):
    """0/1 adjacency among boundary vertices at lattice distance one."""
    B = domain.boundary
    dist = np.abs(B[:, None, :] - B[None, :, :]).sum(axis=2)
    return (dist == 1).astype(float)


def deg_tilde(domain):
    """Diagonal operator ``(1/4) #{m in C : |m - n| = 1}``."""
    A = boundary_adjacency(domain)
    return boundary_operator(np.diag(0.25 * A.sum(axis=1)), domain, kind="deg_tilde")


def shift_op(domain):
    """``(1/4)`` times the adjacency within the boundary set."""
    return boundary_operator(0.25 * boundary_adjacency(domain), domain, kind="shift")


def single_layer(V, param, table=None):
    """``M[m, n] = (R(lam +- i0) delta_n)(m)`` for boundary vertices ``m, n``."""
    param.require_low_band()
    domain = V.domain
    C = domain.boundary
    S, _ = V.support()
    pts = np.concatenate([C, S])
    table = _table_for(param, pts, pts, table)
    ls = LippmannSchwinger(V, param, table)
    G = ls.table.kernel(C, C)
    if len(ls.S):
        GCS = ls.table.kernel(C, ls.S)
        w = sla.lu_solve(ls._lu, GCS.T)          # (I + G V)^-1 G_SC
        G = G - GCS @ (ls.v[:, None] * w)
    return boundary_operator(G, domain, param.lam, param.sign, "single_layer")


def boundary_op(V, param, table=None, M=None):
    """``B = M^-1`` for the single layer of ``V``."""
    M = single_layer(V, param, table) if M is None else M
    cond = float(np.linalg.cond(M.values))
    if not np.isfinite(cond) or cond > SINGLE_LAYER_COND:
        raise ExceptionalEnergyError(f"single-layer matrix is singular at lambda={param.lam}",
                                     cond)
    return boundary_operator(np.linalg.inv(M.values), V.domain, param.lam, param.sign, "B")


def exterior_dn(domain, param, table=None):
    """Exterior D-N map ``Lambda_0 - B_0 - lam I + deg~ - S_C`` (independent of V)."""
    V0 = Potential.zero(domain)
    lam = param.lam
    L0 = interior_dn(V0, lam).values
    B0 = boundary_op(V0, param, table).values
    vals = (L0 - B0 - lam * np.eye(domain.n_boundary) + deg_tilde(domain).values
            - shift_op(domain).values)
    return boundary_operator(vals, domain, lam, param.sign, "dn_exterior")


def dn_from_boundary_op(B, domain, param, Lext=None, table=None):
    """Invert the relation for ``B``: ``Lambda_V = B + Lambda_ext + lam I - deg~ + S_C``."""
    Lext = exterior_dn(domain, param, table) if Lext is None else Lext
    vals = (np.asarray(B) + Lext.values + param.lam * np.eye(domain.n_boundary)
            - deg_tilde(domain).values + shift_op(domain).values)
    return boundary_operator(vals, domain, param.lam, None, "dn_interior")
