import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lattice_scattering.errors import ValidationError
from lattice_scattering.lattice import (BoxFunction, GridFunction, bstar_norm, build_domain, cone,
                                        degree, discrete_laplacian, greens_identity_defect,
                                        in_cone, normal_derivative, radial_derivative)


class TestDomain:
    def test_smallest_square(self):
        dom = build_domain(2, 1)
        assert [tuple(p) for p in dom.interior] == [(1, 1)]
        assert sorted(map(tuple, dom.boundary)) == [(0, 1), (1, 0), (1, 2), (2, 1)]
        assert not dom.contains((0, 0)) and not dom.contains((2, 2))

    @pytest.mark.parametrize("d,M,n0,n1", [(2, 3, 9, 12), (3, 2, 8, 24), (2, 5, 25, 20),
                                           (4, 1, 1, 8)])
    def test_counts(self, d, M, n0, n1):
        dom = build_domain(d, M)
        assert dom.n_interior == n0
        assert dom.n_boundary == n1

    def test_boundary_is_lexicographic(self):
        dom = build_domain(3, 3)
        keys = [tuple(p) for p in dom.boundary]
        assert keys == sorted(keys)

    def test_boundary_neighbour_is_adjacent(self):
        dom = build_domain(3, 3)
        inner = dom.interior[dom.boundary_neighbor]
        assert np.all(np.abs(inner - dom.boundary).sum(axis=1) == 1)

    def test_faces_partition_boundary(self):
        dom = build_domain(3, 2)
        idx = np.concatenate([dom.face(j, s) for j in range(3) for s in (-1, 1)])
        assert sorted(idx) == list(range(dom.n_boundary))

    @pytest.mark.parametrize("d,M", [(1, 3), (2, 0)])
    def test_invalid(self, d, M):
        with pytest.raises(ValidationError):
            build_domain(d, M)

    def test_index_roundtrip(self):
        dom = build_domain(2, 3)
        for i, p in enumerate(dom.vertices):
            assert dom.index(p) == i
        with pytest.raises(ValidationError):
            dom.index((0, 0))


@pytest.mark.parametrize("d,M,n,expected", [(2, 3, (2, 2), 4), (2, 3, (0, 2), 1),
                                            (3, 2, (1, 1, 1), 6), (2, 1, (1, 1), 4)])
def test_degree(d, M, n, expected):
    assert degree(build_domain(d, M), n) == expected


def test_degree_outside_domain():
    with pytest.raises(ValidationError):
        degree(build_domain(2, 2), (0, 0))


class TestLaplacian:
    def _window(self, d, r=3):
        return list(itertools.product(range(-r, r + 1), repeat=d))

    def test_constant(self):
        u = GridFunction({p: 2.5 for p in self._window(2)})
        assert discrete_laplacian(u, np.array([0, 1])) == 0

    def test_linear_is_harmonic(self):
        u = GridFunction({p: float(p[0]) for p in self._window(3)})
        for n in [(0, 0, 0), (1, -2, 2)]:
            assert discrete_laplacian(u, np.array(n)) == 0

    def test_delta(self):
        u = GridFunction({(0, 0): 1.0}, default=0.0)
        assert discrete_laplacian(u, np.array([0, 0])) == -1.0
        assert discrete_laplacian(u, np.array([1, 0])) == 0.25

    def test_missing_neighbour_raises(self):
        u = GridFunction({(0, 0): 1.0})
        with pytest.raises(ValidationError):
            discrete_laplacian(u, np.array([0, 0]))


class TestNormalDerivative:
    def test_constant(self):
        dom = build_domain(2, 3)
        assert np.all(normal_derivative(dom, np.ones(21)) == 0)

    def test_interior_delta(self):
        dom = build_domain(2, 1)
        u = GridFunction({(1, 1): 1.0}, default=0.0)
        u = GridFunction({tuple(p): u[p] for p in dom.vertices})
        np.testing.assert_array_equal(normal_derivative(dom, u), -0.25 * np.ones(4))

    def test_boundary_delta(self):
        dom = build_domain(2, 1)
        vec = np.zeros(5)
        vec[dom.index((0, 1))] = 1.0
        out = normal_derivative(dom, vec)
        expected = np.zeros(4)
        expected[dom.index((0, 1)) - 1] = 0.25
        np.testing.assert_array_equal(out, expected)

    def test_wrong_length(self):
        with pytest.raises(ValidationError):
            normal_derivative(build_domain(2, 2), np.zeros(3))


class TestGreenIdentity:
    def test_random_real_pairs(self, rng):
        dom = build_domain(2, 4)
        n = dom.n_interior + dom.n_boundary
        worst = max(greens_identity_defect(dom, rng.normal(size=n), rng.normal(size=n))
                    for _ in range(100))
        assert worst <= 1e-13

    def test_complex_pairs_3d(self, rng):
        dom = build_domain(3, 2)
        n = dom.n_interior + dom.n_boundary
        for _ in range(20):
            u = rng.normal(size=n) + 1j * rng.normal(size=n)
            v = rng.normal(size=n) + 1j * rng.normal(size=n)
            assert greens_identity_defect(dom, u, v) <= 1e-13

    def test_equal_arguments(self, rng):
        dom = build_domain(2, 3)
        u = rng.normal(size=21)
        assert greens_identity_defect(dom, u, u) == 0.0

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 3), st.integers(1, 3), st.integers(0, 2 ** 31))
    def test_property(self, d, M, seed):
        dom = build_domain(d, M)
        r = np.random.default_rng(seed)
        n = dom.n_interior + dom.n_boundary
        u, v = r.uniform(-1, 1, n), r.uniform(-1, 1, n)
        assert greens_identity_defect(dom, u, v) <= 1e-13


class TestRadialDerivative:
    def test_face_point(self):
        u = GridFunction({(4, 0): 1.0}, default=0.0)
        assert radial_derivative(u, (3, 0)) == 0.25

    def test_corner_uses_two_neighbours(self, rng):
        vals = {p: rng.normal() for p in itertools.product(range(-5, 6), repeat=2)}
        u = GridFunction(vals)
        expected = 0.25 * (vals[(4, 3)] + vals[(3, 4)] - 2 * vals[(3, 3)])
        assert radial_derivative(u, (3, 3)) == pytest.approx(expected, abs=1e-15)

    def test_constant(self):
        u = GridFunction({}, default=3.0)
        assert radial_derivative(u, (2, -1)) == 0

    def test_origin_rejected(self):
        with pytest.raises(ValidationError):
            radial_derivative(GridFunction({}, default=0.0), (0, 0))


class TestCone:
    def test_membership(self):
        o = (0, 0, 0)
        assert in_cone((-1, 0, 0), o)
        assert in_cone((-2, 1, 0), o)
        assert not in_cone((-1, 1, 1), o)
        assert in_cone(o, o)
        assert not in_cone((1, 0, 0), o)

    def test_cone_in_domain(self):
        dom = build_domain(2, 3)
        c = cone((3, 2), dom)
        assert (3, 2) in c
        assert all(m[0] <= 3 for m in c)
        assert c == {(3, 2), (2, 1), (2, 2), (2, 3), (1, 1), (1, 2), (1, 3), (1, 4),
                     (0, 2), (1, 0), (0, 1), (0, 3)}


class TestBstarNorm:
    def _box(self, L, fill=0.0):
        return BoxFunction(np.full((2 * L + 1,) * 2, fill, dtype=float))

    def test_delta(self):
        u = self._box(10)
        u.values[10, 10] = 1.0
        assert bstar_norm(u, 10) == 0.5

    def test_zero(self):
        assert bstar_norm(self._box(5), 5) == 0.0

    def test_constant_by_enumeration(self):
        L, R_max = 12, 12
        u = self._box(L, 1.0)
        counts = [sum(1 for p in itertools.product(range(-L, L + 1), repeat=2)
                      if p[0] ** 2 + p[1] ** 2 < R * R) / R for R in range(2, R_max + 1)]
        assert bstar_norm(u, R_max) == pytest.approx(max(counts), rel=1e-14)

    def test_box_too_small(self):
        with pytest.raises(ValidationError):
            bstar_norm(self._box(2), 10)


def test_box_function_bounds():
    b = BoxFunction(np.arange(9.0).reshape(3, 3))
    assert b[(0, 0)] == 4.0
    assert b[(-1, 1)] == 2.0
    with pytest.raises(ValidationError):
        b[(2, 0)]


def test_grid_function_vector_roundtrip(rng):
    dom = build_domain(2, 2)
    v = rng.normal(size=dom.n_interior + dom.n_boundary)
    np.testing.assert_array_equal(GridFunction.from_vector(dom, v).to_vector(dom), v)
