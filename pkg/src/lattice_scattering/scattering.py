"""Forward scattering by a finitely supported potential.

The resolvent of ``H = H0 + V`` is obtained from the free kernel ``r0``
through the Lippmann-Schwinger equation restricted to the support ``S`` of
``V``:

    R f = R0 f - R0 V (I + G V)^-1 (R0 f)|_S,   G = r0 restricted to S x S.

The scattering amplitude is stored as its kernel with respect to the
surface measure ``dM~``; on an angular grid with measure weights ``mu`` the
operator is ``A @ diag(mu)`` and the S-matrix is ``I - 2 pi i A diag(mu)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ExceptionalEnergyError, ValidationError
from .geometry import (SpectralParam, amplitude_coeff, measure_weight, radiation_coeffs,
                       stationary_points, surface_point)
from .green import green_table
from .lattice import BoxFunction, RectDomain
from .operators import OperatorMatrix

EXCEPTIONAL_COND = 1e12


@dataclass
class Potential:
    """Real potential on the interior of a rectangular domain.

    ``values[i]`` belongs to ``domain.interior[i]``.
    """

    domain: RectDomain
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.domain.n_interior,):
            raise ValidationError(
                f"potential needs {self.domain.n_interior} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("potential values must be finite")
        self.values = v

    @classmethod
    def zero(cls, domain):
        return cls(domain, np.zeros(domain.n_interior))

    @classmethod
    def random(cls, domain, rng=None, low=-0.5, high=0.5):
        rng = np.random.default_rng(rng)
        return cls(domain, rng.uniform(low, high, domain.n_interior))

    @classmethod
    def from_entries(cls, domain, entries):
        """Build from ``{point: value}``; unspecified interior points are zero."""
        v = np.zeros(domain.n_interior)
        for p, val in dict(entries).items():
            i = domain.index(p)
            if i >= domain.n_interior:
                raise ValidationError(f"potential entry {tuple(p)} is not an interior point")
            v[i] = val
        return cls(domain, v)

    def support(self):
        """Points and values where the potential is nonzero."""
        nz = np.flatnonzero(self.values)
        return self.domain.interior[nz], self.values[nz]

    def __call__(self, n):
        """Value at a lattice point; zero off the interior."""
        if not self.domain.contains(n):
            return 0.0
        i = self.domain.index(n)
        return self.values[i] if i < self.domain.n_interior else 0.0


@dataclass
class AngularGrid:
    """Quadrature on the unit sphere mapped onto the energy surface.

    Attributes
    ----------
    theta : ndarray (n, d)
        Unit vectors.
    weights : ndarray (n,)
        Quadrature weights for ``dtheta`` on the sphere.
    mu : ndarray (n,)
        Weights for the surface measure: ``measure_weight * weights``.
    x : ndarray (n, d)
        Surface points ``2 arcsin(sqrt(lam) theta)``.
    """

    d: int
    lam: float
    theta: np.ndarray
    weights: np.ndarray
    mu: np.ndarray = field(init=False)
    x: np.ndarray = field(init=False)

    def __post_init__(self):
        self.mu = measure_weight(self.lam, self.theta) * self.weights
        self.x = surface_point(self.lam, self.theta).x

    def __len__(self):
        return len(self.weights)


def angular_grid(lam, d, n):
    """Default grid: ``n`` uniform angles in d=2; ``n`` Gauss-Legendre polar
    nodes times ``2n`` uniform azimuths in d=3.
    """
    if d == 2:
        phi = 2 * np.pi * np.arange(n) / n
        theta = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        w = np.full(n, 2 * np.pi / n)
    elif d == 3:
        c, wc = np.polynomial.legendre.leggauss(n)
        phi = 2 * np.pi * np.arange(2 * n) / (2 * n)
        C, P = np.meshgrid(c, phi, indexing="ij")
        s = np.sqrt(1 - C ** 2)
        theta = np.stack([s * np.cos(P), s * np.sin(P), C], axis=-1).reshape(-1, 3)
        w = (wc[:, None] * np.full(2 * n, np.pi / n)[None, :]).ravel()
    else:
        raise ValidationError("angular grids are provided for d = 2 and 3")
    return AngularGrid(d, float(lam), theta, w)


def incident_wave(n, lam, theta):
    """Free generalized eigenfunction at lattice point ``n`` and direction ``theta``."""
    theta = np.asarray(theta, dtype=float)
    d = theta.shape[-1]
    x = surface_point(lam, theta).x
    return (2 * np.pi) ** (-d / 2) * measure_weight(lam, theta) * np.exp(1j * (np.asarray(n) @ x))


def _table_for(param, points_a, points_b, table):
    need = 0
    if len(points_a) and len(points_b):
        need = int(np.abs(points_a[:, None, :] - points_b[None, :, :]).max())
    if table is not None:
        if table.d != param.d or table.lam != param.lam:
            raise ValidationError("Green table was built for a different energy or dimension")
        if table.K < need:
            raise ValidationError(f"Green table range {table.K} < required offset {need}")
        return table if table.sign == param.sign else table.conjugate()
    return green_table(param, max(need, 1))


class LippmannSchwinger:
    """Factorized Lippmann-Schwinger system for one potential and energy.

    Parameters
    ----------
    V : Potential
    param : SpectralParam
    table : GreenTable
        Must cover all offsets between support points and any point the
        caller later evaluates.
    """

    def __init__(self, V, param, table):
        self.V = V
        self.param = param
        self.table = table if table.sign == param.sign else table.conjugate()
        self.S, self.v = V.support()
        n = len(self.S)
        if n:
            G = self.table.kernel(self.S, self.S)
            system = np.eye(n) + G * self.v[None, :]
            self.condition = float(np.linalg.cond(system))
            if not np.isfinite(self.condition) or self.condition > EXCEPTIONAL_COND:
                raise ExceptionalEnergyError(
                    f"Lippmann-Schwinger system is singular at lambda={param.lam}",
                    self.condition)
            self._lu = sla.lu_factor(system)
        else:
            self.condition = 1.0
            self._lu = None

    def t_matrix(self):
        """``V (I + G V)^-1`` on the support."""
        n = len(self.S)
        if n == 0:
            return np.zeros((0, 0), dtype=complex)
        inv = sla.lu_solve(self._lu, np.eye(n, dtype=complex))
        return self.v[:, None] * inv

    def support_field(self, f_points, f_values):
        """Full resolvent ``R f`` at the support points."""
        if len(self.S) == 0:
            return np.zeros(0, dtype=complex)
        r0f = self.table.kernel(self.S, f_points) @ f_values
        return sla.lu_solve(self._lu, r0f)

    def apply(self, f_points, f_values, window):
        """``(R f)`` at the window points."""
        f_points = np.asarray(f_points, dtype=int).reshape(-1, self.param.d)
        f_values = np.asarray(f_values, dtype=complex)
        window = np.asarray(window, dtype=int).reshape(-1, self.param.d)
        u = self.table.kernel(window, f_points) @ f_values
        if len(self.S):
            w = self.support_field(f_points, f_values)
            u = u - self.table.kernel(window, self.S) @ (self.v * w)
        return u

    def scattered_source(self, f_points, f_values):
        """Points and values of ``(1 - V R) f``."""
        f_points = np.asarray(f_points, dtype=int).reshape(-1, self.param.d)
        f_values = np.asarray(f_values, dtype=complex)
        if len(self.S) == 0:
            return f_points, f_values
        w = self.support_field(f_points, f_values)
        return (np.concatenate([f_points, self.S]),
                np.concatenate([f_values, -self.v * w]))


def _split(f, d):
    """Points and values of a finitely supported function given as a mapping."""
    items = list(dict(f).items())
    if not items:
        return np.zeros((0, d), dtype=int), np.zeros(0, dtype=complex)
    pts = np.array([k for k, _ in items], dtype=int).reshape(-1, d)
    return pts, np.array([v for _, v in items], dtype=complex)


def resolvent_apply(V, param, f, window, table=None):
    """Values of ``R(lam +- i0) f`` at the window points.

    Parameters
    ----------
    V : Potential
    param : SpectralParam
    f : mapping from lattice points to values
        Finitely supported source.
    window : array_like of shape (n, d)
        Points where the result is wanted.
    table : GreenTable, optional
        Built on demand when omitted.

    Returns
    -------
    ndarray of shape (n,)
    """
    d = param.d
    fp, fv = _split(f, d)
    window = np.asarray(window, dtype=int).reshape(-1, d)
    S, _ = V.support()
    pts = np.concatenate([fp, S, window])
    table = _table_for(param, pts, pts, table)
    return LippmannSchwinger(V, param, table).apply(fp, fv, window)


def _outgoing(param):
    return SpectralParam(param.lam, param.d, 1).require_low_band()


def amplitude(V, param, grid, table=None):
    """Scattering amplitude as a kernel with respect to the surface measure.

    ``A[i, j] = (2 pi)^-d sum_{n, m in S} exp(-i n.x_i) T[n, m] exp(i m.x_j)``
    with ``T = V (I + G V)^-1`` at ``lam + i0``.  The grid operator is
    ``A @ diag(grid.mu)``.
    """
    param = _outgoing(param)
    S, _ = V.support()
    n = len(grid)
    if len(S) == 0:
        return OperatorMatrix(np.zeros((n, n), complex), "angular", "angular", param.lam, 1,
                              "amplitude")
    table = _table_for(param, S, S, table)
    T = LippmannSchwinger(V, param, table).t_matrix()
    E = np.exp(-1j * grid.x @ S.T)
    A = (2 * np.pi) ** (-param.d) * (E @ T @ E.conj().T)
    return OperatorMatrix(A, "angular", "angular", param.lam, 1, "amplitude")


def s_matrix(A, grid):
    """``I - 2 pi i A diag(mu)``."""
    vals = np.asarray(A)
    S = np.eye(len(grid)) - 2j * np.pi * vals * grid.mu[None, :]
    return OperatorMatrix(S, "angular", "angular", grid.lam, 1, "smatrix")


def unitarity_defect(S, grid):
    """``||S^H W S - W||_F / ||W||_F`` with ``W = diag(mu)``."""
    S = np.asarray(S)
    W = np.diag(grid.mu)
    return float(np.linalg.norm(S.conj().T @ W @ S - W) / np.linalg.norm(W))


def optical_defect(A, grid):
    """Relative residual of ``A - A^H = -2 pi i A^H W A``.

    This is the identity equivalent to unitarity of ``I - 2 pi i A W``.
    """
    A = np.asarray(A)
    W = np.diag(grid.mu)
    lhs = A - A.conj().T
    rhs = -2j * np.pi * A.conj().T @ W @ A
    scale = max(np.linalg.norm(lhs), np.finfo(float).tiny)
    return float(np.linalg.norm(lhs - rhs) / scale)


def fourier_at(points, values, x):
    """``(2 pi)^(-d/2) sum_n exp(-i n.x) g(n)`` for each row of ``x``."""
    d = x.shape[1]
    return (2 * np.pi) ** (-d / 2) * (np.exp(-1j * x @ np.asarray(points).T) @ values)


def generalized_fourier(V, param, f, grid, table=None):
    """Distorted Fourier transform ``F0 (1 - V R(lam +- i0)) f`` at the grid nodes."""
    return generalized_fourier_at(V, param, f, grid.x, table)


def generalized_fourier_at(V, param, f, x, table=None):
    """As :func:`generalized_fourier` but at arbitrary surface points ``x``."""
    d = param.d
    fp, fv = _split(f, d)
    S, _ = V.support()
    pts = np.concatenate([fp, S])
    table = _table_for(param, pts, pts, table)
    gp, gv = LippmannSchwinger(V, param, table).scattered_source(fp, fv)
    return fourier_at(gp, gv, np.atleast_2d(x))


def _directions(d, n):
    if d == 2:
        phi = 2 * np.pi * (np.arange(n) + 0.37) / n
        return np.stack([np.cos(phi), np.sin(phi)], axis=1)
    # Fibonacci sphere
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(1 - z ** 2)
    phi = np.pi * (1 + 5 ** 0.5) * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def far_field_defect(V, param, f, radii, n_directions=12, table=None):
    """Scaled deviation of ``R(lam +- i0) f`` from its leading far-field term.

    For each radius the lattice points nearest to ``R omega`` are used for
    ``n_directions`` fixed directions; the value reported is the maximum of
    ``|u(k) - lead(k)| |k|^((d-1)/2)``, which decays like ``1/|k|``.
    """
    param.require_low_band()
    d, lam, sgn = param.d, param.lam, param.sign
    fp, fv = _split(f, d)
    S, _ = V.support()
    dirs = _directions(d, n_directions)
    ks = [np.rint(R * dirs).astype(int) for R in radii]
    window = np.concatenate(ks)
    pts = np.concatenate([fp, S])
    table = _table_for(param, window, pts, table)
    ls = LippmannSchwinger(V, param, table)
    u = ls.apply(fp, fv, window)
    gp, gv = ls.scattered_source(fp, fv)
    nk = np.linalg.norm(window, axis=1)
    omega = window / nk[:, None]
    x = stationary_points(lam, omega)
    a = np.array([amplitude_coeff(lam, w) for w in omega])
    pattern = fourier_at(gp, gv, sgn * x)
    lead = (np.exp(sgn * (3 - d) * np.pi * 0.25j) * math.sqrt(2 * np.pi)
            * nk ** (-(d - 1) / 2) * np.exp(sgn * 1j * np.sum(window * x, axis=1)) * a * pattern)
    err = np.abs(u - lead) * nk ** ((d - 1) / 2)
    out, start = [], 0
    for k in ks:
        out.append(float(err[start:start + len(k)].max()))
        start += len(k)
    return np.array(out)


def radiation_defect(u, lam, sign, radii):
    """Cesaro radiation residuals of a box function.

    For each ``R`` returns ``(1/R) sum_{0 < R(n) <= R} |d_rad u(n) - A(n) u(n)|^2``
    where ``A`` is the radiation coefficient of the requested sign and
    ``R(n) = max_j |n_j|``.
    """
    if not isinstance(u, BoxFunction):
        u = BoxFunction(u)
    radii = [int(r) for r in radii]
    Rmax = max(radii)
    if u.L < Rmax + 1:
        raise ValidationError(f"box radius {u.L} too small for R={Rmax}")
    d, L = u.d, u.L
    vals = u.values
    r = np.arange(-Rmax, Rmax + 1)
    pts = np.stack([g.ravel() for g in np.meshgrid(*([r] * d), indexing="ij")], axis=1)
    Rn = np.max(np.abs(pts), axis=1)
    pts, Rn = pts[Rn > 0], Rn[Rn > 0]
    uk = vals[tuple((pts + L).T)]
    drad = np.zeros(len(pts), dtype=complex)
    for j in range(d):
        on = np.abs(pts[:, j]) == Rn
        m = pts[on].copy()
        m[:, j] += np.sign(m[:, j])
        drad[on] += vals[tuple((m + L).T)] - uk[on]
    drad *= 0.25
    coeff = radiation_coeffs(lam, pts)[:, 0 if sign > 0 else 1]
    dens = np.abs(drad - coeff * uk) ** 2
    shell = np.bincount(Rn, weights=dens, minlength=Rmax + 1)
    cum = np.cumsum(shell)
    return np.array([cum[R] / R for R in radii])


def free_outgoing_box(param, L, table=None):
    """``R0(lam +- i0) delta_0`` on ``[-L, L]^d`` as a :class:`BoxFunction`."""
    table = table or green_table(param, L)
    if table.sign != param.sign:
        table = table.conjugate()
    return BoxFunction(table.box(L))
