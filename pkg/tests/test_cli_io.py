import json

import numpy as np
import pytest

from lattice_scattering.cli import main
from lattice_scattering.errors import ValidationError
from lattice_scattering.geometry import SpectralParam
from lattice_scattering.green import green_table
from lattice_scattering.io import (GreenCache, RunConfig, complex_from_json, complex_to_json,
                                   config_hash, potential_from_json, potential_to_json,
                                   table_from_json, table_to_json)
from lattice_scattering.lattice import build_domain
from lattice_scattering.scattering import Potential


def write_config(path, **kw):
    path.write_text(json.dumps(kw))
    return str(path)


def read(path):
    return json.loads(path.read_text())


class TestSerialization:
    def test_complex_roundtrip(self, rng):
        a = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
        np.testing.assert_array_equal(complex_from_json(json.loads(json.dumps(complex_to_json(a)))),
                                      a)

    def test_complex_bad_shape(self):
        with pytest.raises(ValidationError):
            complex_from_json([[1.0, 2.0, 3.0]])

    def test_table_roundtrip(self):
        t = green_table(SpectralParam(0.3, 2), 3)
        u = table_from_json(json.loads(json.dumps(table_to_json(t))))
        np.testing.assert_array_equal(u.values, t.values)
        assert (u.method, u.sign, u.lam) == (t.method, t.sign, t.lam)

    def test_potential_roundtrip(self):
        V = Potential.random(build_domain(3, 2), 9)
        W = potential_from_json(json.loads(json.dumps(potential_to_json(V))))
        np.testing.assert_array_equal(W.values, V.values)

    def test_hash_ignores_key_order(self):
        assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})


class TestRunConfig:
    def test_lambda_key(self):
        cfg = RunConfig.from_dict({"lambda": 0.4, "d": 3, "M": 1})
        assert cfg.lam == 0.4
        assert cfg.to_dict()["lambda"] == 0.4

    @pytest.mark.parametrize("data", [{"colour": 1}, {"limit_sign": 0}, {"M": 0},
                                      {"tolerances": {"nonsense": 1.0}},
                                      {"potential": {"kind": "bumpy"}}])
    def test_rejects(self, data):
        with pytest.raises(ValidationError):
            RunConfig.from_dict(data)

    def test_explicit_potential(self):
        cfg = RunConfig(potential={"kind": "explicit", "entries": [[[2, 2], 0.5]]})
        V = cfg.build_potential()
        assert V((2, 2)) == 0.5 and np.count_nonzero(V.values) == 1

    def test_angular_size(self):
        assert RunConfig().angular_size() == 256
        assert RunConfig(n_theta=64).angular_size() == 64


class TestGreenCache:
    def test_hit_after_miss(self, tmp_path):
        p = SpectralParam(0.3, 2)
        cache = GreenCache(tmp_path)
        a = cache.get(p, 5)
        b = cache.get(p, 4)
        assert (cache.misses, cache.hits) == (1, 1)
        np.testing.assert_array_equal(a.values, b.values)

    def test_larger_range_rebuilds(self, tmp_path):
        p = SpectralParam(0.3, 2)
        cache = GreenCache(tmp_path)
        cache.get(p, 3)
        assert cache.get(p, 6).K == 6
        assert cache.misses == 2

    def test_corrupt_entry_is_rebuilt(self, tmp_path):
        p = SpectralParam(0.3, 2)
        cache = GreenCache(tmp_path)
        cache.get(p, 3)
        path = next(tmp_path.iterdir())
        doc = json.loads(path.read_text())
        doc["values"][1][1] = [5.0, 5.0]
        path.write_text(json.dumps(doc))
        fresh = GreenCache(tmp_path)
        t = fresh.get(p, 3)
        assert fresh.misses == 1
        assert abs(t.values[1, 1] - 5 - 5j) > 1


class TestCommands:
    def test_forward_reference(self, tmp_path):
        assert main(["forward", "--out", str(tmp_path)]) == 0
        doc = read(tmp_path / "forward.json")
        assert doc["gates"]["unitarity"]["value"] <= 1e-4
        assert doc["n_theta"] == 256 and doc["seed"] == 42

    def test_forward_zero_potential(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", potential={"kind": "zero"})
        assert main(["forward", "--config", cfg, "--out", str(tmp_path)]) == 0
        doc = read(tmp_path / "forward.json")
        assert np.all(np.asarray(doc["amplitude"]) == 0)
        assert doc["gates"]["unitarity"]["value"] <= 1e-14

    def test_threshold_energy(self, tmp_path, capsys):
        assert main(["forward", "--lam", "1.0", "--out", str(tmp_path)]) == 2
        assert "threshold energy" in capsys.readouterr().err

    def test_deterministic_output(self, tmp_path):
        for sub in ("a", "b"):
            assert main(["forward", "--n-theta", "64", "--out", str(tmp_path / sub)]) == 0
        assert (tmp_path / "a" / "forward.json").read_bytes() == \
            (tmp_path / "b" / "forward.json").read_bytes()

    def test_dnmap_golden(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", d=2, M=1, potential={"kind": "zero"},
                           **{"lambda": 0.0})
        assert main(["dnmap", "--config", cfg, "--out", str(tmp_path)]) == 0
        doc = read(tmp_path / "dnmap.json")
        np.testing.assert_allclose(doc["matrix"], 0.25 * np.eye(4) - 1 / 16, atol=1e-14)
        assert doc["vertex_order"] == [[0, 1], [1, 0], [1, 2], [2, 1]]

    def test_dnmap_dirichlet_eigenvalue(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.json", d=2, M=2, potential={"kind": "zero"},
                           **{"lambda": 0.5})
        assert main(["dnmap", "--config", cfg, "--out", str(tmp_path)]) == 4
        assert "Dirichlet eigenvalue" in capsys.readouterr().err

    def test_invert_dn_roundtrip(self, tmp_path):
        out = str(tmp_path)
        assert main(["dnmap", "--M", "3", "--seed", "5", "--out", out]) == 0
        assert main(["invert-dn", str(tmp_path / "dnmap.json"), "--out", out]) == 0
        doc = read(tmp_path / "potential.json")
        truth = Potential.random(build_domain(2, 3), 5).values
        assert np.max(np.abs(np.asarray(doc["potential"]["values"]) - truth)) <= 1e-7

    def test_invert_smatrix_roundtrip(self, tmp_path):
        out = str(tmp_path)
        assert main(["forward", "--out", out, "--cache", str(tmp_path / "cache")]) == 0
        assert main(["invert-smatrix", str(tmp_path / "forward.json"), "--out", out,
                     "--cache", str(tmp_path / "cache")]) == 0
        doc = read(tmp_path / "potential.json")
        truth = Potential.random(build_domain(2, 2), 42).values
        assert np.max(np.abs(np.asarray(doc["potential"]["values"]) - truth)) <= 1e-3

    def test_green(self, tmp_path):
        assert main(["green", "--out", str(tmp_path)]) == 0
        doc = read(tmp_path / "green.json")
        assert doc["gates"]["r0_defect"]["value"] <= 1e-9

    def test_surface(self, tmp_path):
        assert main(["surface", "--d", "3", "--lam", "1.45", "--out", str(tmp_path)]) == 0
        doc = read(tmp_path / "surface.json")
        assert doc["band"] == "middle" and doc["convex"] is False

    def test_selftest(self, tmp_path):
        assert main(["selftest", "--out", str(tmp_path)]) == 0
        doc = read(tmp_path / "selftest.json")
        assert doc["status"] == "ok"
        assert all(g["pass"] for g in doc["gates"].values())

    def test_gate_failure_exit_code(self, tmp_path):
        assert main(["forward", "--n-theta", "4", "--tolerance", "unitarity=1e-12",
                     "--out", str(tmp_path)]) == 3
        assert read(tmp_path / "forward.json")["status"] == "gate_failure"

    @pytest.mark.parametrize("argv", [["invert-dn", "missing.json"],
                                      ["forward", "--tolerance", "bogus=1"],
                                      ["forward", "--lam", "2.5"]])
    def test_invalid_input(self, tmp_path, argv):
        assert main(argv + ["--out", str(tmp_path)]) == 2
