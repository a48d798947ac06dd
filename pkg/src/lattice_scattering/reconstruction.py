"""Layer-stripping recovery of a potential from its interior D-N map.

Coordinates follow the domain convention ``1 <= n_j <= M``.  The faces
``n_1 = 0`` and ``n_1 = M + 1`` are called the minus and plus faces, and the
level of a point is ``n_1 + n_d``.

For a level ``p`` between ``M + 1`` and ``2M`` and a choice ``r'`` of the
middle coordinates, boundary data are synthesized that vanish off the plus
face except for a single unit value and whose solution has zero normal
derivative on the minus face.  Such a solution vanishes below level ``p``
and alternates in sign along the ``r'`` diagonal of level ``p``.  Once the
potential is known above level ``p``, the solution there follows from a
Dirichlet solve on that partial domain, and the interior equation at each
diagonal point yields the potential at that point.  Levels below ``M + 1``
are reached by the same sweeps applied to the D-N map of the point-reflected
problem ``n -> (M + 1) - n``.
"""
from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dnmap import assemble_hamiltonian
from .errors import ExceptionalEnergyError, GateFailure, SubdomainSingularError, ValidationError
from .lattice import build_domain
from .operators import boundary_operator
from .scattering import Potential

log = logging.getLogger(__name__)

SYNTH_COND = 1e12
SUBDOMAIN_COND = 1e12


def _as_matrix(Lam, domain):
    L = np.asarray(Lam)
    if L.shape != (domain.n_boundary, domain.n_boundary):
        raise ValidationError(f"D-N matrix must be {domain.n_boundary}x{domain.n_boundary}")
    labels = getattr(Lam, "labels", None)
    if labels is not None and not np.array_equal(labels, domain.boundary):
        raise ValidationError("D-N matrix vertex order does not match the domain")
    return L


def minus_face(domain):
    return domain.face(0, -1)


def plus_face(domain):
    return domain.face(0, 1)


def cauchy_march(V, lam, f, g):
    """Solve the interior equation from Dirichlet data off the plus face and
    Neumann data on the minus face, marching plane by plane in ``n_1``.

    Parameters
    ----------
    V : Potential
    lam : float
    f : ndarray
        Boundary vector; entries on the plus face are ignored.
    g : ndarray
        Normal derivative on the minus face, in its boundary order.

    Returns
    -------
    ndarray
        Values on all vertices in domain order, the plus face filled in.
    """
    domain = V.domain
    d, M = domain.d, domain.M
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != (domain.n_boundary,) or g.shape != (M ** (d - 1),):
        raise ValidationError("boundary data do not match the domain")
    dtype = np.result_type(f, g, float)
    box = np.zeros((M + 2,) * d, dtype=dtype)
    box[tuple(domain.boundary.T)] = f
    q = np.zeros((M + 2,) * d)
    q[tuple(domain.interior.T)] = 0.5 * d + V.values - lam
    lo = (slice(1, M + 1),) * (d - 1)
    box[(1,) + lo] = box[(0,) + lo] - 4.0 * g.reshape((M,) * (d - 1))
    for n1 in range(1, M + 1):
        plane = box[n1]
        transverse = np.zeros((M,) * (d - 1), dtype=dtype)
        for ax in range(d - 1):
            up = tuple(slice(2, M + 2) if a == ax else slice(1, M + 1) for a in range(d - 1))
            dn = tuple(slice(0, M) if a == ax else slice(1, M + 1) for a in range(d - 1))
            transverse += plane[up] + plane[dn]
        box[(n1 + 1,) + lo] = 4.0 * q[(n1,) + lo] * plane[lo] - box[(n1 - 1,) + lo] - transverse
    return box[tuple(domain.vertices.T)]


def synth_boundary_data(Lam, domain, f2, g):
    """Complete ``f2`` on the plus face so that ``(Lam f)`` equals ``g`` on the minus face.

    Raises
    ------
    ExceptionalEnergyError
        If the minus-by-plus block of the D-N map is singular.
    """
    L = _as_matrix(Lam, domain)
    mf, pf = minus_face(domain), plus_face(domain)
    rest = np.setdiff1d(np.arange(domain.n_boundary), pf)
    sub = L[np.ix_(mf, pf)]
    cond = float(np.linalg.cond(sub))
    if not np.isfinite(cond) or cond > SYNTH_COND:
        raise ExceptionalEnergyError(
            "the minus-face by plus-face block of the D-N map is singular; "
            "the energy may be a Dirichlet eigenvalue", cond)
    f = np.array(f2, dtype=np.result_type(L, f2, g, float))
    f[pf] = np.linalg.solve(sub, np.asarray(g) - L[np.ix_(mf, rest)] @ f[rest])
    return f


def reflect_problem(Lam, domain):
    """D-N map of the potential reflected through ``n -> (M + 1) - n``."""
    L = _as_matrix(Lam, domain)
    perm = np.array([domain.index(domain.M + 1 - b) - domain.n_interior
                     for b in domain.boundary])
    out = L[np.ix_(perm, perm)]
    lam = getattr(Lam, "lam", None)
    return boundary_operator(out, domain, lam, None, "dn_interior")


def reflect_potential(V):
    domain = V.domain
    idx = [domain.index(domain.M + 1 - n) for n in domain.interior]
    return Potential(domain, V.values[idx])


@dataclass
class SweepResult:
    level: int
    rprime: tuple
    points: np.ndarray
    values: np.ndarray
    synth_residual: float
    pattern_deviation: float
    subdomain_condition: float


@dataclass
class SweepState:
    """Potential recovered so far (as ``V - lam``) and sweep diagnostics."""

    domain: object
    lam: float
    known: np.ndarray = field(default=None)
    level: int = 0
    results: list = field(default_factory=list)

    def __post_init__(self):
        if self.known is None:
            self.known = np.full(self.domain.n_interior, np.nan)
        self.level = 2 * self.domain.M + 1


class LayerStripper:
    """Runs the level sweeps for one D-N map.

    Parameters
    ----------
    Lam : array_like
        Interior D-N map in the domain's boundary order.
    lam : float
    domain : RectDomain
    gate_tol : float
        Bound on ``|Lam f|`` over the minus face for every synthesized ``f``.
    pattern_tol : float
        Bound on the deviation of ``f`` on the plus face from the predicted
        sign pattern, and of ``(Lam f)`` at the unit datum from ``1/4``.
    threads : int
        Worker threads for the independent ``r'`` sweeps of one level.
    """

    def __init__(self, Lam, lam, domain, gate_tol=1e-10, pattern_tol=1e-6, threads=1):
        self.L = _as_matrix(Lam, domain)
        self.lam = float(lam)
        self.domain = domain
        self.gate_tol = gate_tol
        self.pattern_tol = pattern_tol
        self.threads = max(1, int(threads))
        d = domain.d
        self.level_int = domain.interior[:, 0] + domain.interior[:, d - 1]
        self.level_bd = domain.boundary[:, 0] + domain.boundary[:, d - 1]
        self.H0 = assemble_hamiltonian(domain, np.zeros(domain.n_interior), 0.0).full()

    def _datum(self, p, rp):
        M = self.domain.M
        if p > M + 1:
            return (p - M - 1,) + rp + (M + 1,)
        return (0,) + rp + (M,)

    def _pattern(self, p, rp, n1):
        """Sign of the probe solution at ``(n1, r', p - n1)``."""
        M = self.domain.M
        if p > M + 1:
            return (-1.0) ** (n1 - (p - M - 1))
        return (-1.0) ** (n1 - 1)

    def sweep(self, state, p, rp):
        dom, d, M = self.domain, self.domain.d, self.domain.M
        n0 = dom.n_interior
        b = self._datum(p, rp)
        f2 = np.zeros(dom.n_boundary)
        f2[dom.index(b) - n0] = 1.0
        mf, pf = minus_face(dom), plus_face(dom)
        f = synth_boundary_data(self.L, dom, f2, np.zeros(len(mf)))
        Lf = self.L @ f
        resid = float(np.max(np.abs(Lf[mf])))
        if resid > self.gate_tol:
            raise GateFailure("synthesized Neumann data", resid, self.gate_tol,
                              f"level {p}, r'={rp}")
        # predicted values on the plus face at levels <= p
        dev = 0.0
        for i in pf:
            q = dom.boundary[i]
            if self.level_bd[i] > p:
                continue
            expect = 0.0
            if self.level_bd[i] == p and tuple(q[1:d - 1]) == rp:
                expect = self._pattern(p, rp, M + 1)
            dev = max(dev, abs(f[i] - expect))
        if p > M + 1:
            dev = max(dev, abs(Lf[dom.index(b) - n0] - 0.25))
        if dev > self.pattern_tol:
            raise GateFailure("probe sign pattern", dev, self.pattern_tol,
                              f"level {p}, r'={rp}")
        u = np.zeros(n0 + dom.n_boundary, dtype=f.dtype)
        u[n0:] = f
        on_diag = (self.level_int == p) & np.all(dom.interior[:, 1:d - 1] == rp, axis=1)
        diag_idx = np.flatnonzero(on_diag)
        for i in diag_idx:
            u[i] = self._pattern(p, rp, dom.interior[i, 0])
        upper = np.flatnonzero(self.level_int > p)
        cond = 1.0
        if len(upper):
            H = self.H0.copy()
            H[upper, upper] += state.known[upper]
            known_idx = np.setdiff1d(np.arange(len(u)), upper)
            A = H[np.ix_(upper, upper)]
            cond = float(np.linalg.cond(A))
            if not np.isfinite(cond) or cond > SUBDOMAIN_COND:
                raise SubdomainSingularError(
                    f"partial-domain Dirichlet problem above level {p} (r'={rp}) is singular",
                    cond)
            u[upper] = np.linalg.solve(A, -H[np.ix_(upper, known_idx)] @ u[known_idx])
        # interior equation at each diagonal point; H0 already holds d/2 on the diagonal
        vals = []
        for i in diag_idx:
            nb = self.H0[i] @ u - self.H0[i, i] * u[i]      # -(1/4) sum of neighbours
            vals.append((-nb / u[i] - 0.5 * d).real)
        return SweepResult(p, rp, diag_idx, np.array(vals), resid, dev, cond)

    def run(self, state=None):
        dom = self.domain
        state = state or SweepState(dom, self.lam)
        rps = list(itertools.product(range(1, dom.M + 1), repeat=dom.d - 2))
        for p in range(2 * dom.M, dom.M, -1):
            if self.threads > 1 and len(rps) > 1:
                with ThreadPoolExecutor(self.threads) as ex:
                    res = list(ex.map(lambda rp: self.sweep(state, p, rp), rps))
            else:
                res = [self.sweep(state, p, rp) for rp in rps]
            for r in res:
                state.known[r.points] = r.values
                state.results.append(r)
            state.level = p
            log.debug("level %d recovered at %d points", p, sum(len(r.points) for r in res))
        return state


def sweep_level(state, Lam, rprime, **kwargs):
    """Recover ``V`` on the ``r'`` diagonal of the level below ``state.level``.

    Returns a mapping from interior points to recovered potential values.
    """
    stripper = LayerStripper(Lam, state.lam, state.domain, **kwargs)
    p = state.level - 1
    if p <= state.domain.M:
        raise ValidationError("all levels reachable by direct sweeps are done")
    r = stripper.sweep(state, p, tuple(rprime))
    return {tuple(state.domain.interior[i]): v + state.lam for i, v in zip(r.points, r.values)}


@dataclass
class ReconstructionReport:
    overlap_mismatch: float
    max_subdomain_condition: float
    max_synth_residual: float
    max_pattern_deviation: float


def reconstruct(Lam, lam, d, M, threads=1, gate_tol=1e-10, pattern_tol=1e-6,
                return_report=False):
    """Recover the potential whose interior D-N map at energy ``lam`` is ``Lam``.

    Levels ``M+1 .. 2M`` come from the direct sweeps, levels ``2 .. M`` from
    the sweeps on the reflected map.  Level ``M + 1`` is recovered twice and
    the mismatch is reported.
    """
    domain = build_domain(d, M)
    L = _as_matrix(Lam, domain)
    upper = LayerStripper(L, lam, domain, gate_tol, pattern_tol, threads).run()
    lower = LayerStripper(reflect_problem(L, domain), lam, domain, gate_tol, pattern_tol,
                          threads).run()
    level = domain.interior[:, 0] + domain.interior[:, d - 1]
    mirror = np.array([domain.index(M + 1 - n) for n in domain.interior])
    q = np.where(level >= M + 1, upper.known, lower.known[mirror])
    overlap = level == M + 1
    mismatch = float(np.max(np.abs(upper.known[overlap] - lower.known[mirror][overlap])))
    if np.any(np.isnan(q)):
        raise ValidationError("internal error: some points were not reached by a sweep")
    V = Potential(domain, q + lam)
    if not return_report:
        return V
    allres = upper.results + lower.results
    report = ReconstructionReport(
        mismatch,
        max(r.subdomain_condition for r in allres),
        max(r.synth_residual for r in allres),
        max(r.pattern_deviation for r in allres))
    return V, report
