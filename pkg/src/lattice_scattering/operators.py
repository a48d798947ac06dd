"""Dense matrices that remember what their rows and columns index.

Rows and columns are either ``"angular"`` (nodes of an angular grid on the
energy surface) or ``"boundary"`` (vertices of a domain boundary in the
package's lexicographic order).  Products check that the inner index kinds
agree, which catches mixing up the two spaces early.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ValidationError

KINDS = ("angular", "boundary")


@dataclass
class OperatorMatrix:
    values: np.ndarray
    rows: str
    cols: str
    lam: Optional[float] = None
    sign: Optional[int] = None
    kind: str = ""
    labels: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 2:
            raise ValidationError("operator matrix must be two dimensional")
        if self.rows not in KINDS or self.cols not in KINDS:
            raise ValidationError(f"index kinds must be among {KINDS}")

    @property
    def shape(self):
        return self.values.shape

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            if self.cols != other.rows:
                raise ValidationError(
                    f"cannot compose {self.rows}x{self.cols} with {other.rows}x{other.cols}")
            if self.lam is not None and other.lam is not None and self.lam != other.lam:
                raise ValidationError("operators were built at different energies")
            return OperatorMatrix(self.values @ other.values, self.rows, other.cols,
                                  self.lam if self.lam is not None else other.lam)
        return self.values @ other

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def with_values(self, values, kind=None):
        return OperatorMatrix(values, self.rows, self.cols, self.lam, self.sign,
                              self.kind if kind is None else kind, self.labels)


def boundary_operator(values, domain, lam=None, sign=None, kind=""):
    """Square operator on the boundary vertices of ``domain``."""
    values = np.asarray(values)
    n = domain.n_boundary
    if values.shape != (n, n):
        raise ValidationError(f"boundary operator must be {n}x{n}, got {values.shape}")
    return OperatorMatrix(values, "boundary", "boundary", lam, sign, kind, domain.boundary)
