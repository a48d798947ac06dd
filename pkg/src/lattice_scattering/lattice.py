"""Lattice points, rectangular domains and the discrete boundary calculus.

A rectangular domain of side ``M`` in ``Z^d`` has interior points
``1 <= n_j <= M`` and a boundary made of the ``2d`` faces where exactly one
coordinate equals ``0`` or ``M + 1``.  Corners (two or more coordinates
outside ``[1, M]``) belong to neither set, so every boundary vertex has a
single interior neighbour.

Vertices are ordered interior first, then boundary, each block in
lexicographic order.  Every matrix in the package uses this ordering.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ValidationError


def unit_vectors(d):
    """Rows are the ``2d`` lattice directions ``+e_1, -e_1, ..., +e_d, -e_d``."""
    e = np.zeros((2 * d, d), dtype=int)
    for j in range(d):
        e[2 * j, j] = 1
        e[2 * j + 1, j] = -1
    return e


@dataclass(frozen=True)
class RectDomain:
    """Cube ``[1, M]^d`` together with its face boundary.

    Attributes
    ----------
    d, M : int
        Dimension and side length.
    interior : ndarray, shape (M**d, d)
        Interior vertices in lexicographic order.
    boundary : ndarray, shape (2*d*M**(d-1), d)
        Boundary vertices in lexicographic order.
    boundary_neighbor : ndarray of int
        For each boundary vertex, the row in ``interior`` of its unique
        interior neighbour.
    """

    d: int
    M: int
    interior: np.ndarray = field(init=False, repr=False, compare=False)
    boundary: np.ndarray = field(init=False, repr=False, compare=False)
    boundary_neighbor: np.ndarray = field(init=False, repr=False, compare=False)
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d, M = self.d, self.M
        if not isinstance(d, (int, np.integer)) or d < 2:
            raise ValidationError(f"dimension must be an integer >= 2, got {d!r}")
        if not isinstance(M, (int, np.integer)) or M < 1:
            raise ValidationError(f"side length must be an integer >= 1, got {M!r}")
        interior = np.array(list(itertools.product(range(1, M + 1), repeat=d)), dtype=int)
        faces = set()
        for j in range(d):
            for side in (0, M + 1):
                for rest in itertools.product(range(1, M + 1), repeat=d - 1):
                    faces.add(rest[:j] + (side,) + rest[j:])
        boundary = np.array(sorted(faces), dtype=int)
        index = {tuple(p): i for i, p in enumerate(interior)}
        n0 = len(interior)
        index.update({tuple(p): n0 + i for i, p in enumerate(boundary)})
        # the interior neighbour of a face point: pull the outside coordinate back in
        inner = np.clip(boundary, 1, M)
        nb = np.array([index[tuple(p)] for p in inner], dtype=int)
        object.__setattr__(self, "interior", interior)
        object.__setattr__(self, "boundary", boundary)
        object.__setattr__(self, "boundary_neighbor", nb)
        object.__setattr__(self, "_index", index)
        for arr in (interior, boundary, nb):
            arr.flags.writeable = False

    @property
    def n_interior(self):
        return len(self.interior)

    @property
    def n_boundary(self):
        return len(self.boundary)

    @property
    def vertices(self):
        """All vertices, interior block first."""
        return np.vstack([self.interior, self.boundary])

    def contains(self, n):
        return tuple(int(c) for c in n) in self._index

    def index(self, n):
        """Position of ``n`` in the global vertex order."""
        try:
            return self._index[tuple(int(c) for c in n)]
        except KeyError:
            raise ValidationError(f"point {tuple(n)} is not a vertex of {self!r}") from None

    def is_interior(self, n):
        return all(1 <= c <= self.M for c in n)

    def face(self, j, side):
        """Boundary-block indices of the face ``n_j = 0`` (side -1) or ``n_j = M+1`` (side +1).

        ``j`` is zero based.
        """
        if side not in (-1, 1):
            raise ValidationError("side must be -1 or +1")
        value = 0 if side < 0 else self.M + 1
        return np.flatnonzero(self.boundary[:, j] == value)

    def interior_edges(self):
        """Pairs ``(a, b)`` of interior indices with ``|a - b| = 1``, each once."""
        M = self.M
        shape = (M,) * self.d
        idx = np.arange(self.n_interior).reshape(shape)
        pairs = []
        for j in range(self.d):
            lo = np.take(idx, range(0, M - 1), axis=j).ravel()
            hi = np.take(idx, range(1, M), axis=j).ravel()
            pairs.append(np.stack([lo, hi], axis=1))
        return np.concatenate(pairs, axis=0) if pairs else np.zeros((0, 2), int)


def build_domain(d, M):
    """Return the rectangular domain of side ``M`` in ``Z^d``."""
    return RectDomain(int(d), int(M))


def degree(domain, n):
    """Graph degree of ``n``.

    Edges join interior vertices to their neighbours, so an interior vertex
    has degree ``2d`` and a face vertex has degree one.
    """
    if not domain.contains(n):
        raise ValidationError(f"point {tuple(n)} is not in the domain")
    if not domain.is_interior(n):
        return 1
    n = np.asarray(n, dtype=int)
    return sum(domain.contains(n + e) for e in unit_vectors(domain.d))


class GridFunction(Mapping):
    """Finitely supported complex function on lattice points.

    Lookup is strict: reading a point that was never stored raises
    :class:`ValidationError`, unless ``default`` was given at construction,
    in which case missing points evaluate to ``default``.
    """

    def __init__(self, values=None, default=None):
        self._values = {}
        self.default = default
        if values:
            for k, v in dict(values).items():
                self._values[tuple(int(c) for c in k)] = complex(v)

    def __getitem__(self, n):
        key = tuple(int(c) for c in n)
        try:
            return self._values[key]
        except KeyError:
            if self.default is not None:
                return self.default
            raise ValidationError(f"grid function has no value at {key}") from None

    def __setitem__(self, n, value):
        self._values[tuple(int(c) for c in n)] = complex(value)

    def __iter__(self):
        return iter(self._values)

    def __len__(self):
        return len(self._values)

    def support(self, tol=0.0):
        return [k for k, v in self._values.items() if abs(v) > tol]

    @classmethod
    def from_vector(cls, domain, vec):
        """Wrap a vector in the domain's vertex order."""
        vec = np.asarray(vec)
        if vec.shape != (domain.n_interior + domain.n_boundary,):
            raise ValidationError("vector length does not match the domain")
        return cls({tuple(p): v for p, v in zip(domain.vertices, vec)})

    def to_vector(self, domain):
        return np.array([self[p] for p in domain.vertices])


class BoxFunction:
    """Values on the centred box ``[-L, L]^d`` stored as a dense array.

    Parameters
    ----------
    values : ndarray of shape ``(2L+1,)*d``
        ``values[L + n_1, ..., L + n_d]`` is the value at ``n``.
    """

    def __init__(self, values):
        values = np.asarray(values)
        if values.ndim < 2 or len(set(values.shape)) != 1 or values.shape[0] % 2 == 0:
            raise ValidationError("box values must be a cube with odd side")
        self.values = values
        self.d = values.ndim
        self.L = values.shape[0] // 2

    def __getitem__(self, n):
        n = tuple(int(c) for c in n)
        if len(n) != self.d or max(abs(c) for c in n) > self.L:
            raise ValidationError(f"point {n} is outside the box of radius {self.L}")
        return self.values[tuple(c + self.L for c in n)]

    def points(self):
        """All box points as an array of shape ``((2L+1)**d, d)`` in C order."""
        r = np.arange(-self.L, self.L + 1)
        grids = np.meshgrid(*([r] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


def discrete_laplacian(u, n):
    """``(1/4) * sum over the 2d neighbours m of (u(m) - u(n))``.

    ``u`` is any mapping from lattice points; a missing neighbour raises.
    """
    n = np.asarray(n, dtype=int)
    un = u[n]
    return 0.25 * sum(u[n + e] - un for e in unit_vectors(len(n)))


def laplacian_interior(domain, u):
    """Discrete Laplacian at every interior vertex of a domain-ordered vector."""
    u = np.asarray(u)
    out = np.empty(domain.n_interior, dtype=np.result_type(u, float))
    E = unit_vectors(domain.d)
    for i, n in enumerate(domain.interior):
        out[i] = 0.25 * sum(u[domain.index(n + e)] for e in E) - 0.5 * domain.d * u[i]
    return out


def normal_derivative(domain, u):
    """Outward normal derivative on the boundary.

    Parameters
    ----------
    domain : RectDomain
    u : array_like or GridFunction
        Values on interior and boundary, vector in domain order or mapping.

    Returns
    -------
    ndarray
        ``(1/4)(u(n) - u(m(n)))`` for each boundary vertex ``n`` with interior
        neighbour ``m(n)``, in boundary order.
    """
    if isinstance(u, Mapping):
        u = GridFunction(u).to_vector(domain)
    u = np.asarray(u)
    if u.shape != (domain.n_interior + domain.n_boundary,):
        raise ValidationError("vector length does not match the domain")
    ub = u[domain.n_interior:]
    return 0.25 * (ub - u[domain.boundary_neighbor])


def greens_identity_defect(domain, u, v):
    """Absolute residual of the discrete Green formula for ``u`` and ``v``.

    The residual is ``sum_int (Lu v - u Lv) - sum_bd (du v - u dv)`` where
    ``L`` is the discrete Laplacian and ``d`` the normal derivative.  No
    complex conjugation is applied.
    """
    u = np.asarray(u)
    v = np.asarray(v)
    n0 = domain.n_interior
    lu, lv = laplacian_interior(domain, u), laplacian_interior(domain, v)
    du, dv = normal_derivative(domain, u), normal_derivative(domain, v)
    inner = np.sum(lu * v[:n0] - u[:n0] * lv)
    outer = np.sum(du * v[n0:] - u[n0:] * dv)
    return float(abs(inner - outer))


def shell_radius(k):
    """``R(k) = max_j |k_j|``."""
    return int(np.max(np.abs(k)))


def radial_derivative(u, k):
    """Radial derivative at ``k``.

    Sums ``(1/4)(u(m) - u(k))`` over the neighbours ``m`` of ``k`` that lie on
    the outer shell ``max_j |m_j| = R(k) + 1``, i.e. ``m = k + sgn(k_j) e_j``
    for each coordinate with ``|k_j| = R(k)``.
    """
    k = np.asarray(k, dtype=int)
    R = shell_radius(k)
    if R == 0:
        raise ValidationError("the radial derivative is not defined at the origin")
    uk = u[k]
    total = 0.0
    for j in np.flatnonzero(np.abs(k) == R):
        m = k.copy()
        m[j] += np.sign(k[j])
        total = total + (u[m] - uk)
    return 0.25 * total


def in_cone(m, n):
    """True when ``m`` lies in the backward cone with vertex ``n`` along axis 1."""
    m = np.asarray(m)
    n = np.asarray(n)
    return bool(np.sum(np.abs(m[1:] - n[1:])) <= -(m[0] - n[0]))


def cone(n, domain):
    """Vertices of ``domain`` in the backward cone with vertex ``n``."""
    if not domain.contains(n):
        raise ValidationError(f"point {tuple(n)} is not in the domain")
    return frozenset(tuple(int(c) for c in m) for m in domain.vertices if in_cone(m, n))


def bstar_norm(u, R_max):
    """Largest Cesaro average ``(1/R) sum_{|n| < R} |u(n)|^2`` over ``1 < R <= R_max``.

    Parameters
    ----------
    u : BoxFunction
        Must cover every point with Euclidean norm below ``R_max``.
    R_max : int
    """
    if u.L < R_max - 1:
        raise ValidationError("box is too small for the requested radius")
    pts = u.points()
    r = np.linalg.norm(pts, axis=1)
    w = np.abs(u.values.ravel()) ** 2
    best = 0.0
    for R in range(2, int(R_max) + 1):
        best = max(best, float(w[r < R].sum()) / R)
    return best
