"""Run configuration, JSON serialization and the on-disk Green table cache.

Complex arrays are written as nested lists whose leaves are ``[re, im]``
pairs.  Output documents are dumped with sorted keys and no timestamps so
identical inputs give byte-identical files.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ValidationError
from .geometry import SpectralParam
from .green import GreenTable, check_table, green_table
from .lattice import build_domain
from .scattering import Potential

log = logging.getLogger(__name__)

DEFAULT_TOLERANCES = {
    "unitarity": 1e-4,
    "symmetry": 1e-12,
    "green": None,          # None: ten times the method target
    "pattern": 1e-6,
    "pattern_smatrix": 1e-3,
    "synth": 1e-10,
    "factorization": 1e-3,
    "roundtrip": 1e-7,
    "end_to_end": 1e-3,
}


def complex_to_json(a):
    a = np.asarray(a)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def complex_from_json(obj):
    a = np.asarray(obj, dtype=float)
    if a.shape[-1] != 2:
        raise ValidationError("complex data must be stored as [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(obj):
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def dump(payload, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
    return path


def load(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ValidationError(f"file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path} is not valid JSON: {e}") from None


@dataclass
class RunConfig:
    """Parameters shared by all subcommands.

    ``potential`` is one of ``{"kind": "zero"}``,
    ``{"kind": "random", "seed": s, "low": a, "high": b}`` or
    ``{"kind": "explicit", "entries": [[[n_1, ..., n_d], value], ...]}``.
    """

    d: int = 2
    M: int = 2
    lam: float = 0.3
    limit_sign: int = 1
    potential: dict = field(default_factory=lambda: {"kind": "random", "seed": 42,
                                                     "low": -0.5, "high": 0.5})
    n_theta: Optional[int] = None
    green_method: Optional[str] = None
    green_tol: Optional[float] = None
    green_radius: int = 6
    surface_samples: int = 2000
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        try:
            self.d, self.M = int(self.d), int(self.M)
            self.lam = float(self.lam)
            self.limit_sign = int(self.limit_sign)
        except (TypeError, ValueError) as e:
            raise ValidationError(f"bad configuration value: {e}") from None
        if self.limit_sign not in (1, -1):
            raise ValidationError("limit_sign must be +1 or -1")
        build_domain(self.d, self.M)
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ValidationError(f"unknown tolerance names: {sorted(unknown)}")
        kind = self.potential.get("kind")
        if kind not in ("zero", "random", "explicit"):
            raise ValidationError(f"unknown potential kind {kind!r}")

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ValidationError(f"unknown configuration keys: {sorted(extra)}")
        return cls(**data)

    def to_dict(self):
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        return out

    def tolerance(self, name):
        return self.tolerances.get(name, DEFAULT_TOLERANCES[name])

    @property
    def seed(self):
        return self.potential.get("seed")

    def domain(self):
        return build_domain(self.d, self.M)

    def spectral(self, sign=None):
        return SpectralParam(self.lam, self.d, self.limit_sign if sign is None else sign)

    def build_potential(self):
        dom = self.domain()
        kind = self.potential["kind"]
        if kind == "zero":
            return Potential.zero(dom)
        if kind == "random":
            p = self.potential
            return Potential.random(dom, p.get("seed", 0), p.get("low", -0.5), p.get("high", 0.5))
        entries = {tuple(k): float(v) for k, v in self.potential.get("entries", [])}
        return Potential.from_entries(dom, entries)

    def angular_size(self):
        """Default ``n_theta``: at least 256 and at least four per boundary vertex."""
        if self.n_theta:
            return int(self.n_theta)
        nC = 2 * self.d * self.M ** (self.d - 1)
        return max(256, 4 * nC) if self.d == 2 else max(16, int(np.ceil(np.sqrt(2 * nC))))


def potential_to_json(V):
    return {"d": V.domain.d, "M": V.domain.M,
            "points": V.domain.interior.tolist(), "values": V.values.tolist()}


def potential_from_json(obj):
    dom = build_domain(obj["d"], obj["M"])
    pts = np.asarray(obj["points"], dtype=int)
    if not np.array_equal(pts, dom.interior):
        raise ValidationError("potential points are not in the domain's interior order")
    return Potential(dom, np.asarray(obj["values"], dtype=float))


def table_to_json(table):
    return {"d": table.d, "lambda": table.lam, "sign": table.sign, "method": table.method,
            "accuracy": table.accuracy, "tol": table.tol, "K": table.K,
            "values": complex_to_json(table.values)}


def table_from_json(obj):
    return GreenTable(int(obj["d"]), float(obj["lambda"]), int(obj["sign"]),
                      complex_from_json(obj["values"]), obj["method"],
                      float(obj["accuracy"]), float(obj["tol"]))


class GreenCache:
    """Directory of Green tables keyed by dimension, energy, sign, method and tolerance.

    A cached table is reused only if it covers the requested range and its
    defect passes :func:`check_table`; otherwise it is rebuilt.
    """

    def __init__(self, root):
        self.root = Path(root) if root else None
        self.hits = 0
        self.misses = 0

    def _path(self, param, method, tol):
        key = {"d": param.d, "lambda": param.lam, "sign": param.sign,
               "method": method, "tol": tol}
        return self.root / f"green_{config_hash(key)[:20]}.json"

    def get(self, param, K, method=None, tol=None):
        method = method or ("reduction" if param.d == 2 else "eps")
        if self.root is not None:
            path = self._path(param, method, tol)
            if path.exists():
                try:
                    table = table_from_json(load(path))
                    if table.K >= K:
                        check_table(table)
                        self.hits += 1
                        return table
                except Exception as e:          # a bad cache entry is rebuilt, not fatal
                    log.warning("discarding cache entry %s: %s", path, e)
        self.misses += 1
        table = green_table(param, K, method, tol)
        check_table(table)
        if self.root is not None:
            dump(table_to_json(table), self._path(param, method, tol))
        return table
