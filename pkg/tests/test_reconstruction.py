import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lattice_scattering.dnmap import dirichlet_solve, interior_dn
from lattice_scattering.errors import GateFailure, ValidationError
from lattice_scattering.lattice import build_domain, normal_derivative
from lattice_scattering.reconstruction import (SweepState, cauchy_march, minus_face, plus_face,
                                               reconstruct, reflect_potential, reflect_problem,
                                               sweep_level, synth_boundary_data)
from lattice_scattering.scattering import Potential


class TestCauchyMarch:
    @pytest.mark.parametrize("d,M", [(2, 3), (3, 2)])
    def test_reproduces_dirichlet_solution(self, d, M, rng):
        dom = build_domain(d, M)
        V = Potential.random(dom, rng)
        f = rng.normal(size=dom.n_boundary)
        u = dirichlet_solve(V, 0.3, f)
        g = normal_derivative(dom, u)[minus_face(dom)]
        np.testing.assert_allclose(cauchy_march(V, 0.3, f, g), u, atol=1e-11)

    def test_zero_data(self):
        dom = build_domain(2, 3)
        V = Potential.random(dom, 0)
        out = cauchy_march(V, 0.3, np.zeros(dom.n_boundary), np.zeros(3))
        assert np.all(out == 0)

    def test_plus_face_values_are_ignored(self, rng):
        dom = build_domain(2, 3)
        V = Potential.random(dom, 1)
        f = rng.normal(size=dom.n_boundary)
        g = rng.normal(size=3)
        h = f.copy()
        h[plus_face(dom)] = 99.0
        np.testing.assert_array_equal(cauchy_march(V, 0.3, f, g), cauchy_march(V, 0.3, h, g))

    def test_bad_shapes(self):
        dom = build_domain(2, 2)
        with pytest.raises(ValidationError):
            cauchy_march(Potential.zero(dom), 0.3, np.zeros(3), np.zeros(2))


class TestSynthesis:
    def test_zero(self):
        dom = build_domain(2, 3)
        L = interior_dn(Potential.random(dom, 2), 0.3)
        f = synth_boundary_data(L, dom, np.zeros(dom.n_boundary), np.zeros(3))
        np.testing.assert_allclose(f, 0, atol=1e-15)

    def test_hits_target(self, rng):
        dom = build_domain(3, 2)
        L = interior_dn(Potential.random(dom, 2), 0.4)
        f2, g = rng.normal(size=dom.n_boundary), rng.normal(size=4)
        f = synth_boundary_data(L, dom, f2, g)
        mf, pf = minus_face(dom), plus_face(dom)
        rest = np.setdiff1d(np.arange(dom.n_boundary), pf)
        np.testing.assert_allclose((np.asarray(L) @ f)[mf], g, atol=1e-11)
        np.testing.assert_array_equal(f[rest], f2[rest])

    def test_labels_must_match(self):
        L = interior_dn(Potential.random(build_domain(2, 2), 2), 0.3)
        with pytest.raises(ValidationError):
            synth_boundary_data(np.zeros((3, 3)), build_domain(2, 2), np.zeros(8), np.zeros(2))
        wrong = L.with_values(np.asarray(L))
        wrong.labels = wrong.labels[::-1]
        with pytest.raises(ValidationError):
            reconstruct(wrong, 0.3, 2, 2)


class TestReflection:
    def test_equivariance(self):
        dom = build_domain(2, 3)
        V = Potential.random(dom, 5)
        a = np.asarray(reflect_problem(interior_dn(V, 0.3), dom))
        b = np.asarray(interior_dn(reflect_potential(V), 0.3))
        np.testing.assert_allclose(a, b, atol=1e-14)

    def test_symmetric_potential(self):
        dom = build_domain(3, 2)
        V = Potential.random(dom, 5)
        Vs = Potential(dom, 0.5 * (V.values + reflect_potential(V).values))
        L = np.asarray(interior_dn(Vs, 0.4))
        np.testing.assert_allclose(np.asarray(reflect_problem(L, dom)), L, atol=1e-14)


class TestSweeps:
    def test_top_corner_single_site(self):
        dom = build_domain(2, 2)
        V = Potential.from_entries(dom, {(2, 2): 0.5})
        state = SweepState(dom, 0.3)
        out = sweep_level(state, interior_dn(V, 0.3), ())
        assert list(out) == [(2, 2)]
        assert out[(2, 2)] == pytest.approx(0.5, abs=1e-12)

    def test_all_levels_done(self):
        dom = build_domain(2, 2)
        state = SweepState(dom, 0.3)
        state.level = 3
        with pytest.raises(ValidationError):
            sweep_level(state, interior_dn(Potential.zero(dom), 0.3), ())


class TestReconstruct:
    def test_zero_potential(self):
        dom = build_domain(2, 3)
        V = reconstruct(interior_dn(Potential.zero(dom), 0.3), 0.3, 2, 3)
        assert np.max(np.abs(V.values)) <= 1e-9

    @pytest.mark.parametrize("d,M,lam,tol", [(2, 1, 0.3, 1e-12), (2, 2, 0.3, 1e-12),
                                             (2, 4, 0.3, 1e-10), (3, 2, 0.4, 1e-10),
                                             (2, 3, 1.7, 1e-10)])
    def test_exact_data(self, d, M, lam, tol):
        V = Potential.random(build_domain(d, M), 11)
        R, report = reconstruct(interior_dn(V, lam), lam, d, M, return_report=True)
        assert np.max(np.abs(R.values - V.values)) <= tol
        assert report.overlap_mismatch <= tol
        assert report.max_synth_residual <= 1e-10

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2 ** 31), st.floats(0.05, 0.95))
    def test_property_square(self, seed, lam):
        V = Potential.random(build_domain(2, 3), seed)
        R = reconstruct(interior_dn(V, lam), lam, 2, 3)
        assert np.max(np.abs(R.values - V.values)) <= 1e-8

    def test_threads_do_not_change_result(self):
        V = Potential.random(build_domain(3, 3), 4)
        L = interior_dn(V, 0.4)
        a = reconstruct(L, 0.4, 3, 3, threads=1).values
        b = reconstruct(L, 0.4, 3, 3, threads=4).values
        np.testing.assert_array_equal(a, b)

    def test_corrupted_data_trips_a_gate(self, rng):
        dom = build_domain(2, 3)
        L = np.asarray(interior_dn(Potential.random(dom, 3), 0.3))
        noise = rng.normal(scale=1e-3, size=L.shape)
        with pytest.raises(GateFailure) as info:
            reconstruct(L + noise + noise.T, 0.3, 2, 3)
        assert info.value.exit_code == 3
