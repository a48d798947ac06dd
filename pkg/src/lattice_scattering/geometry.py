"""Energy surfaces of the lattice symbol on the torus.

The free lattice operator acts in Fourier space as multiplication by

    h(x) = (d - sum_j cos x_j) / 2 = sum_j sin^2(x_j / 2),

whose gradient ``sin(x_j)/2`` vanishes exactly at the integer levels.  The
level set ``M_lam = {h = lam}`` is strictly convex for ``lam`` in the band
``I_d``; this module samples it, measures it, computes its curvatures and
locates the point whose normal is a prescribed direction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ThresholdEnergyError, ValidationError


def convex_band(d):
    """Open intervals making up ``I_d``."""
    if d < 2:
        raise ValidationError("dimension must be at least 2")
    if d == 2:
        return [(0.0, 1.0), (1.0, 2.0)]
    return [(0.0, 0.5), (d - 0.5, float(d))]


def band_of(lam, d):
    """Classify an energy as ``'low'``, ``'high'`` or ``'middle'`` (outside ``I_d``).

    Raises
    ------
    ThresholdEnergyError
        If ``lam`` is an integer.
    ValidationError
        If ``lam`` lies outside the spectrum ``[0, d]``.
    """
    lam = float(lam)
    if lam == round(lam):
        raise ThresholdEnergyError(lam)
    if not 0.0 < lam < d:
        raise ValidationError(f"lambda={lam} is outside the spectrum (0, {d})")
    (a0, b0), (a1, b1) = convex_band(d)
    if a0 < lam < b0:
        return "low"
    if a1 < lam < b1:
        return "high"
    return "middle"


@dataclass(frozen=True)
class SpectralParam:
    """Energy inside the convex band together with the side of the real axis.

    ``sign=+1`` selects the boundary value ``lam + i0`` (outgoing),
    ``sign=-1`` selects ``lam - i0`` (incoming).
    """

    lam: float
    d: int
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValidationError("sign must be +1 or -1")
        if band_of(self.lam, self.d) == "middle":
            raise ValidationError(
                f"lambda={self.lam} is outside the convex band {convex_band(self.d)}")

    @property
    def band(self):
        return band_of(self.lam, self.d)

    def require_low_band(self):
        if self.band != "low":
            raise ValidationError(
                f"lambda={self.lam} is in the high band; only the low band "
                f"{convex_band(self.d)[0]} is supported here")
        return self

    def flipped(self):
        return SpectralParam(self.lam, self.d, -self.sign)


def symbol_h(x):
    """``sum_j sin^2(x_j / 2)``, evaluated along the last axis."""
    x = np.asarray(x, dtype=float)
    return np.sum(np.sin(0.5 * x) ** 2, axis=-1)


def grad_h(x):
    return 0.5 * np.sin(np.asarray(x, dtype=float))


def hess_diag_h(x):
    """Diagonal of the Hessian, ``cos(x_j)/2``; off-diagonal entries vanish."""
    return 0.5 * np.cos(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SurfacePoint:
    x: np.ndarray
    theta: np.ndarray


def _unit(v, name="direction"):
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(nrm == 0):
        raise ValidationError(f"{name} must be nonzero")
    return v / nrm


def surface_point(lam, theta):
    """Point ``x_j = 2 arcsin(sqrt(lam) theta_j)`` of ``M_lam``.

    Parameters
    ----------
    lam : float
        Energy in the low band, or more generally any non-integer energy below
        ``d - 1/2`` for which ``sqrt(lam) |theta_j| <= 1``.
    theta : array_like
        Unit vector(s), last axis of length ``d``.
    """
    theta = np.asarray(theta, dtype=float)
    d = theta.shape[-1]
    if band_of(lam, d) == "high":
        raise ValidationError("the arcsin parametrization covers only the low band")
    y = math.sqrt(lam) * theta
    if np.any(np.abs(y) > 1 + 1e-15):
        raise ValidationError("sqrt(lam)*|theta_j| exceeds 1; no surface point")
    return SurfacePoint(2.0 * np.arcsin(np.clip(y, -1, 1)), theta)


def measure_weight(lam, theta):
    """Density of the surface measure ``dM~`` with respect to ``dtheta``.

    ``(sqrt(lam))^(d-2) / 2 * prod_j 2 / sqrt(1 - lam theta_j^2)``.
    """
    theta = np.asarray(theta, dtype=float)
    d = theta.shape[-1]
    if band_of(lam, d) != "low":
        raise ValidationError("measure weight is defined in the low band only")
    jac = np.prod(2.0 / np.sqrt(1.0 - lam * theta ** 2), axis=-1)
    return math.sqrt(lam) ** (d - 2) / 2.0 * jac


def principal_curvatures(x, chart=None):
    """Principal curvatures of the level set of ``h`` through ``x``.

    The surface is written as a graph over the coordinates other than
    ``chart`` (default: the coordinate with the largest ``|dh/dx_j|``).  The
    normal is ``grad h / |grad h|``; with this choice a sphere-like surface
    around the origin has positive curvatures.

    Returns
    -------
    ndarray of shape (d-1,)
        Eigenvalues of the Weingarten map, sorted ascending.
    """
    x = np.asarray(x, dtype=float)
    g = grad_h(x)
    c = hess_diag_h(x)
    gn = np.linalg.norm(g)
    if gn < 1e-14:
        raise ThresholdEnergyError(float(symbol_h(x)))
    j = int(np.argmax(np.abs(g))) if chart is None else int(chart)
    rest = [i for i in range(len(x)) if i != j]
    phi1 = -g[rest] / g[j]                      # first derivatives of the graph
    # second fundamental form with respect to the normal grad h/|grad h|,
    # sign flipped so that convex level sets of a function increasing
    # outwards have positive curvature
    second = (np.diag(c[rest]) + c[j] * np.outer(phi1, phi1)) / gn
    first = np.eye(len(rest)) + np.outer(phi1, phi1)
    w = np.linalg.solve(first, second)
    return np.sort(np.linalg.eigvals(w).real)


def gaussian_curvature(lam, x):
    """Absolute Gaussian curvature of ``M_lam`` at ``x``.

    Raises
    ------
    ThresholdEnergyError
        If the gradient of ``h`` vanishes at ``x``.
    ValidationError
        If ``x`` is not on ``M_lam`` to 1e-10.
    """
    x = np.asarray(x, dtype=float)
    if abs(symbol_h(x) - lam) > 1e-10:
        raise ValidationError(f"point is not on the level set: h(x)={symbol_h(x)}, lambda={lam}")
    return float(abs(np.prod(principal_curvatures(x))))


def sample_surface(lam, d, n, rng=None):
    """Draw ``n`` points of ``M_lam`` in the fundamental domain.

    Low-band and middle-band energies use the arcsin parametrization with
    rejection of directions where it is undefined; the high band is sampled
    through the symmetry ``h(x + pi) = d - h(x)``.
    """
    rng = np.random.default_rng(rng)
    band = band_of(lam, d)
    if band == "high":
        return np.pi - sample_surface(d - lam, d, n, rng)
    out = []
    s = math.sqrt(lam)
    while sum(len(o) for o in out) < n:
        th = rng.standard_normal((max(2 * n, 16), d))
        th /= np.linalg.norm(th, axis=1, keepdims=True)
        th = th[np.all(s * np.abs(th) <= 1.0, axis=1)]
        out.append(2.0 * np.arcsin(s * th))
    return np.concatenate(out)[:n]


@dataclass
class ConvexityReport:
    lam: float
    d: int
    n_samples: int
    convex: bool
    min_curvature: float
    max_curvature: float


def convexity_check(lam, d, n_samples=2000, rng=0):
    """Sample ``M_lam`` and test that all principal curvatures share one strict sign.

    ``min_curvature``/``max_curvature`` are reported after orienting the
    surface so that its mean curvature is positive.
    """
    pts = sample_surface(lam, d, n_samples, rng)
    kappas = np.array([principal_curvatures(p) for p in pts])
    orient = 1.0 if np.mean(kappas) >= 0 else -1.0
    k = orient * kappas
    convex = bool(np.all(k > 0))
    return ConvexityReport(float(lam), d, len(pts), convex, float(k.min()), float(k.max()))


def _low_band_stationary(lam, omega, tol=1e-12, max_iter=100):
    """Vectorized bisection for the low-band stationary points.

    With ``j*`` the coordinate of largest ``|omega_j|`` the unknown is
    ``s = |x_j*|`` in ``(0, pi)``; then ``sin x_i = c omega_i`` with
    ``c = sin(s)/|omega_j*|`` fixes the remaining coordinates on the branch
    ``|x_i| < pi/2``.  ``h(s) - lam`` changes sign on the interval since
    ``h = 0`` at ``s = 0`` and ``h = 1 > lam`` at ``s = pi``.
    """
    omega = np.atleast_2d(omega)
    jstar = np.argmax(np.abs(omega), axis=1)
    rows = np.arange(len(omega))
    wmax = np.abs(omega[rows, jstar])

    def point(s):
        c = np.sin(s) / wmax
        x = np.arcsin(np.clip(c[:, None] * omega, -1.0, 1.0))
        x[rows, jstar] = s * np.sign(omega[rows, jstar])
        return x

    lo = np.zeros(len(omega))
    hi = np.full(len(omega), np.pi)
    for it in range(max_iter):
        mid = 0.5 * (lo + hi)
        below = symbol_h(point(mid)) < lam
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo) < tol * 1e-3:
            break
    x = point(0.5 * (lo + hi))
    resid = np.max(np.abs(symbol_h(x) - lam))
    if resid > tol:
        raise NumericalError(f"stationary point bisection stopped at residual {resid:.2e} "
                             f"after {it + 1} iterations")
    return x


def stationary_points(lam, omegas):
    """Stationary points for an array of directions, shape ``(n, d)``."""
    omegas = _unit(np.atleast_2d(np.asarray(omegas, dtype=float)))
    d = omegas.shape[1]
    band = band_of(lam, d)
    if band == "middle":
        raise ValidationError(f"lambda={lam} is outside the convex band; the point "
                              "with a given normal need not be unique")
    if band == "high":
        # h(pi - y) = d - h(y) and grad h(pi - y) = grad h(y)
        y = _low_band_stationary(d - lam, omegas)
        x = np.pi - y
        return np.where(x > np.pi, x - 2 * np.pi, x)
    return _low_band_stationary(lam, omegas)


def stationary_point(lam, omega):
    """The point ``x_inf(lam, omega)`` of ``M_lam`` with outward normal ``omega``.

    Returns
    -------
    SurfacePoint
        ``x`` in ``(-pi, pi]^d``; ``theta`` is ``sin(x/2)/sqrt(lam)`` in the
        low band and ``None``-like NaNs in the high band.
    """
    x = stationary_points(lam, omega)[0]
    if band_of(lam, len(x)) == "low":
        theta = np.sin(0.5 * x) / math.sqrt(lam)
    else:
        theta = np.full(len(x), np.nan)
    return SurfacePoint(x, theta)


def amplitude_coeff(lam, omega):
    """``K^(-1/2) / |grad h|`` at the stationary point for ``omega``."""
    x = stationary_point(lam, omega).x
    return gaussian_curvature(lam, x) ** -0.5 / float(np.linalg.norm(grad_h(x)))


def radiation_coeff(lam, k):
    """Radiation coefficients ``(A_+, A_-)`` for the lattice direction of ``k``.

    ``A_pm = (1/4) sum_{j : |k_j| = R(k)} (exp(pm i sgn(k_j) x_j) - 1)`` with
    ``x`` the stationary point of ``k/|k|``.  The value depends only on the
    direction and on which coordinates attain the maximum modulus.
    """
    k = np.asarray(k)
    if not np.any(k):
        raise ValidationError("radiation coefficient needs a nonzero lattice point")
    return radiation_coeffs(lam, k[None, :])[0]


def radiation_coeffs(lam, ks):
    """Vectorized :func:`radiation_coeff`; returns an array of shape ``(n, 2)``."""
    ks = np.atleast_2d(np.asarray(ks))
    if np.any(~np.any(ks, axis=1)):
        raise ValidationError("radiation coefficient needs nonzero lattice points")
    x = stationary_points(lam, ks.astype(float))
    R = np.max(np.abs(ks), axis=1, keepdims=True)
    on_face = np.abs(ks) == R
    phase = np.sign(ks) * x
    ap = 0.25 * np.sum(np.where(on_face, np.exp(1j * phase) - 1.0, 0.0), axis=1)
    am = 0.25 * np.sum(np.where(on_face, np.exp(-1j * phase) - 1.0, 0.0), axis=1)
    return np.stack([ap, am], axis=1)
