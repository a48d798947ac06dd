"""Free lattice resolvent kernel ``r0(k, lam +- i0)``.

``r0(k, z) = (2 pi)^-d  int_torus exp(i k.x) / (h(x) - z) dx`` is the kernel
of ``(H0 - z)^-1``.  Two evaluation methods are provided.

reduction (d = 2)
    The inner integral over ``x_2`` is done in closed form,

        (1/2pi) int exp(i k x) / (a - b cos x) dx = w^|k| / s,

    with ``b = 1/2``, ``a = 1 - z - cos(x_1)/2``, ``w`` the root of
    ``b w^2 - 2 a w + b = 0`` inside the unit disc and ``s = a - b w``.  At
    ``z = lam + i0`` the root is on the unit circle for ``|x_1| < x_t``
    (propagating part) and real inside the disc beyond it (evanescent part),
    where ``cos(x_t) = 1 - 2 lam``.  The substitution ``x_1 = x_t -+ t^2``
    removes the inverse square-root singularity at the turning point, and
    composite Gauss-Legendre quadrature then gives machine precision.

eps (any d)
    The same closed form is used in the last coordinate at ``z = lam + i eps``
    and the periodic trapezoid rule in the others; the results for
    ``eps0, eps0/2, ...`` are extrapolated to ``eps = 0`` by Richardson's
    scheme.

The incoming value ``lam - i0`` is always the complex conjugate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GateFailure, NumericalError, ValidationError
from .geometry import amplitude_coeff, stationary_points

REDUCTION_TOL = 1e-10
EPS_TOL = 1e-5


@dataclass
class GreenTable:
    """``r0`` on the offsets ``0 <= k_j <= K``; other offsets follow by evenness.

    Attributes
    ----------
    values : ndarray, shape ``(K+1,)*d``
    accuracy : float
        Error estimate of the method (difference of two refinements).
    """

    d: int
    lam: float
    sign: int
    values: np.ndarray
    method: str
    accuracy: float
    tol: float = field(default=float("nan"))

    @property
    def K(self):
        return self.values.shape[0] - 1

    def __call__(self, k):
        return self.lookup(np.asarray(k)[None, :])[0]

    def lookup(self, offsets):
        """Values at an array of offsets of shape ``(n, d)``."""
        a = np.abs(np.asarray(offsets, dtype=int))
        if a.ndim != 2 or a.shape[1] != self.d:
            raise ValidationError("offsets must have shape (n, d)")
        if a.size and a.max() > self.K:
            raise ValidationError(f"offset {a.max()} exceeds the table range {self.K}")
        return self.values[tuple(a.T)]

    def kernel(self, rows, cols):
        """Matrix ``r0(rows_i - cols_j)``."""
        rows = np.asarray(rows, dtype=int)
        cols = np.asarray(cols, dtype=int)
        diff = rows[:, None, :] - cols[None, :, :]
        return self.lookup(diff.reshape(-1, self.d)).reshape(len(rows), len(cols))

    def box(self, L=None):
        """Full values on ``[-L, L]^d`` as a dense array (default ``L = K``)."""
        L = self.K if L is None else int(L)
        if L > self.K:
            raise ValidationError("box radius exceeds the table range")
        idx = np.abs(np.arange(-L, L + 1))
        return self.values[np.ix_(*([idx] * self.d))]

    def conjugate(self):
        """Table for the opposite boundary value."""
        return GreenTable(self.d, self.lam, -self.sign, self.values.conj(),
                          self.method, self.accuracy, self.tol)


def _gauss_panels(a, b, npan, nq):
    t, w = np.polynomial.legendre.leggauss(nq)
    edges = np.linspace(a, b, npan + 1)
    h = np.diff(edges)[:, None]
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    return (mid + 0.5 * h * t).ravel(), (0.5 * h * w).ravel()


def _reduction_nodes(lam, npan, nq=32):
    """Nodes ``x``, weights, inner root ``w`` and ``1/s`` for the d=2 reduction.

    Near the turning point, ``b^2 - a^2`` is written as a product that stays
    accurate as it vanishes, using
    ``cos(x_t) - cos(x) = 2 sin((x + x_t)/2) sin((x - x_t)/2)``.
    """
    b = 0.5
    xt = math.acos(1.0 - 2.0 * lam)
    # propagating side, x = x_t - t^2
    t, wt = _gauss_panels(0.0, math.sqrt(xt), npan, nq)
    x1 = xt - t ** 2
    a1 = 1.0 - lam - 0.5 * np.cos(x1)
    # b - a = (cos x - cos x_t)/2 = t^2 * q with q smooth and positive
    q = 0.5 * np.sin(0.5 * (x1 + xt)) * np.sinc(t ** 2 / (2 * np.pi))
    root = np.sqrt(q * (b + a1))                 # sqrt(b^2 - a^2) / t
    w1 = (a1 + 1j * t * root) / b                # unimodular, outgoing branch
    f1 = 2j * wt / root                          # (i / sqrt(b^2 - a^2)) * dx/dt * weight
    # evanescent side, x = x_t + t^2
    t, wt = _gauss_panels(0.0, math.sqrt(math.pi - xt), npan, nq)
    x2 = xt + t ** 2
    a2 = 1.0 - lam - 0.5 * np.cos(x2)
    q = 0.5 * np.sin(0.5 * (x2 + xt)) * np.sinc(t ** 2 / (2 * np.pi))
    root = np.sqrt(q * (a2 + b))                 # sqrt(a^2 - b^2) / t
    w2 = (a2 - t * root) / b
    f2 = 2.0 * wt / root
    x = np.concatenate([x1, x2])
    return x, np.concatenate([w1, w2 + 0j]), np.concatenate([f1, f2 + 0j])


def _reduction_values(lam, K, npan):
    x, w, f = _reduction_nodes(lam, npan)
    k = np.arange(K + 1)
    C = np.cos(np.outer(k, x)) * f
    P = w[None, :] ** k[:, None]
    return (C @ P.T) / np.pi


def reduction_table(lam, K, tol=REDUCTION_TOL, npan=None):
    """``r0(., lam + i0)`` for d=2 on ``0 <= k_j <= K`` by the 1-D reduction.

    The accuracy estimate compares ``npan`` and ``2 npan`` Gauss panels.
    """
    if not 0.0 < lam < 1.0:
        raise ValidationError("the reduction method handles 0 < lambda < 1 in d=2")
    npan = npan or 20 + K // 2
    coarse = _reduction_values(lam, K, npan)
    fine = _reduction_values(lam, K, 2 * npan)
    acc = float(np.max(np.abs(fine - coarse)))
    fine = 0.5 * (fine + fine.T)
    return GreenTable(2, float(lam), 1, fine, "reduction", acc, tol)


def _half_grid(N):
    i = np.arange(N // 2 + 1)
    x = 2.0 * np.pi * i / N
    m = np.full(i.size, 2.0)
    m[0] = m[-1] = 1.0
    return x, m / N


def _damped_values(d, z, K, N):
    """``r0(k, z)`` for ``Im z > 0`` on ``[0, K]^d``: trapezoid in d-1 coordinates."""
    b = 0.5
    x, m = _half_grid(N)
    grids = np.meshgrid(*([x] * (d - 1)), indexing="ij", sparse=True)
    a = (0.5 * d - z) - 0.5 * sum(np.cos(g) for g in grids)
    disc = np.sqrt(a * a - b * b)
    w = (a - disc) / b
    outside = np.abs(w) > 1.0
    w[outside] = ((a + disc) / b)[outside]
    F = 1.0 / (a - b * w)
    del a, disc, outside
    C = np.cos(np.outer(np.arange(K + 1), x)) * m
    out = np.empty((K + 1,) * d, dtype=complex)
    for kd in range(K + 1):
        G = F
        for _ in range(d - 1):
            # contract the leading grid axis; the new offset axis lands last
            G = np.tensordot(G, C, axes=([0], [1]))
        out[..., kd] = G
        F = F * w
    return out


def eps_table(d, lam, K, tol=EPS_TOL, eps0=0.1, nodes_per_eps=14.0, max_levels=8,
              max_grid=3e7):
    """``r0(., lam + i0)`` on ``[0, K]^d`` by Richardson extrapolation in ``eps``.

    Levels ``eps0 / 2^l`` are added until two successive extrapolants differ
    by less than ``tol``; the trapezoid mesh uses ``nodes_per_eps / eps``
    points per coordinate.

    Raises
    ------
    NumericalError
        If the target is not reached within ``max_levels`` or the mesh would
        exceed ``max_grid`` points.
    """
    rows, diag, diffs = [], [], []
    eps = eps0
    for level in range(max_levels):
        N = int(math.ceil(nodes_per_eps / eps))
        N += N % 2
        if (N // 2 + 1) ** (d - 1) > max_grid:
            break
        rows.append(_damped_values(d, lam + 1j * eps, K, N))
        # Neville-style update of the newest extrapolation row
        new = [rows[-1]]
        for j in range(1, len(rows)):
            prev = diag[j - 1]
            new.append((2 ** j * new[j - 1] - prev) / (2 ** j - 1))
        diag = new
        if len(diag) >= 2:
            diffs.append(float(np.max(np.abs(diag[-1] - diag[-2]))))
            if len(diag) >= 3 and diffs[-1] < tol:
                vals = diag[-1]
                return GreenTable(d, float(lam), 1, vals, "eps", diffs[-1], tol)
        eps /= 2
    raise NumericalError(f"eps extrapolation did not reach {tol:.1e}; successive "
                         f"differences {['%.2e' % v for v in diffs]}")


def green_table(param, K, method=None, tol=None):
    """Table of ``r0(k, lam +- i0)`` for ``0 <= k_j <= K``.

    Parameters
    ----------
    param : SpectralParam
        Low-band energy and limit sign.
    K : int
        Largest offset per coordinate.
    method : {'reduction', 'eps'}, optional
        Defaults to ``'reduction'`` for d=2 and ``'eps'`` otherwise.
    tol : float, optional
        Accuracy target; the table is rejected if its estimate exceeds it.
    """
    param.require_low_band()
    d = param.d
    method = method or ("reduction" if d == 2 else "eps")
    if method == "reduction":
        if d != 2:
            raise ValidationError("the reduction method is implemented for d=2 only")
        tol = REDUCTION_TOL if tol is None else tol
        table = reduction_table(param.lam, int(K), tol)
        if table.accuracy > tol:
            raise NumericalError(f"reduction accuracy {table.accuracy:.2e} above target {tol:.1e}")
    elif method == "eps":
        tol = EPS_TOL if tol is None else tol
        table = eps_table(d, param.lam, int(K), tol)
    else:
        raise ValidationError(f"unknown Green method {method!r}")
    return table if param.sign == 1 else table.conjugate()


def r0_eval(k, param, method=None, tol=None):
    """Single value ``r0(k, lam +- i0)``."""
    k = np.asarray(k, dtype=int)
    return green_table(param, int(np.abs(k).max()), method, tol)(k)


def r0_defect(table, radius=None):
    """Largest residual of ``(H0 - lam) r0 = delta_0`` over ``|k|_inf <= radius``.

    ``radius`` defaults to ``K - 1``, the largest radius whose neighbours are
    all in the table.
    """
    radius = table.K - 1 if radius is None else int(radius)
    if radius > table.K - 1 or radius < 0:
        raise ValidationError(f"table of range {table.K} cannot test radius {radius}")
    d = table.d
    full = table.box(radius + 1)
    res = (0.5 * d - table.lam) * full
    for ax in range(d):
        res = res - 0.25 * (np.roll(full, 1, ax) + np.roll(full, -1, ax))
    res[(radius + 1,) * d] -= 1.0
    inner = res[(slice(1, -1),) * d]
    return float(np.max(np.abs(inner)))


def check_table(table, tol=None, radius=None):
    """Raise :class:`GateFailure` if the defect of ``table`` exceeds ``tol``."""
    tol = (10 * table.tol if np.isfinite(table.tol) else 1e-6) if tol is None else tol
    defect = r0_defect(table, radius)
    if defect > tol:
        raise GateFailure("r0_defect", defect, tol, f"method={table.method}")
    return defect


def r0_asymptotic(k, lam, d, sign=1):
    """Leading term of ``r0(k, lam +- i0)`` as ``|k| -> inf``.

    ``+- i (2 pi |k|)^(-(d-1)/2) exp(+- i (k.x - (d-1) pi/4)) K^(-1/2)/|grad h|``
    with ``x`` the stationary point of ``k/|k|``.
    """
    k = np.asarray(k, dtype=float)
    nk = float(np.linalg.norm(k))
    if nk == 0:
        raise ValidationError("the asymptotic form needs k != 0")
    omega = k / nk
    x = stationary_points(lam, omega)[0]
    a = amplitude_coeff(lam, omega)
    phase = sign * (k @ x - (d - 1) * math.pi / 4)
    return sign * 1j * (2 * math.pi * nk) ** (-(d - 1) / 2) * np.exp(1j * phase) * a


__all__ = ["GreenTable", "green_table", "reduction_table", "eps_table", "r0_eval",
           "r0_defect", "check_table", "r0_asymptotic"]
