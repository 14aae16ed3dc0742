"""Observable dictionaries that lift (s, y_L) states for EDMD.

Both bases embed the identity observables first, so mapping a lifted
state back to the physical state is projection onto the leading two
coordinates.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

__all__ = [
    "MonomialBasis",
    "ThinPlateRadialBasis",
    "thin_plate",
    "retrieve_state",
    "sample_radial_centers",
    "basis_from_spec",
]


def thin_plate(u, c):
    """Thin-plate spline kernel |u - c|^2 * ln|u - c|, 0 at the center."""
    d = np.abs(np.asarray(u, dtype=float) - c)
    out = np.zeros_like(d)
    nz = d > 0
    out[nz] = d[nz] ** 2 * np.log(d[nz])
    return out


class _LiftingBasis(BaseEstimator, TransformerMixin):
    """Stateless transformer from (n, 2) physical states to (n, d) observables."""

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != 2:
            raise ValueError(f"expected (n, 2) states, got shape {X.shape}")
        return self._lift_columns(X[:, 0], X[:, 1])

    def lift(self, point):
        """Lift a single (s, y_L) pair to a length-d observable vector."""
        s, y = point
        return self._lift_columns(np.array([s], float), np.array([y], float))[0]

    def spec(self):
        """JSON-serializable description sufficient to rebuild the basis."""
        raise NotImplementedError


class MonomialBasis(_LiftingBasis):
    """Interleaved monomials [s, y_L, s^2, y_L^2, ..., s^N, y_L^N]."""

    def __init__(self, order=2):
        self.order = order

    @property
    def dimension(self):
        return 2 * self.order

    def _lift_columns(self, s, y):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        cols = []
        for p in range(1, self.order + 1):
            cols.append(s**p)
            cols.append(y**p)
        return np.column_stack(cols)

    def spec(self):
        return {"kind": "monomial", "order": self.order}


class ThinPlateRadialBasis(_LiftingBasis):
    """[s, y_L, tps(s, c_s), tps(y_L, c_y)] with scalar radial centers."""

    def __init__(self, c_s=0.0, c_y=0.0):
        self.c_s = c_s
        self.c_y = c_y

    @property
    def dimension(self):
        return 4

    def _lift_columns(self, s, y):
        return np.column_stack(
            [s, y, thin_plate(s, self.c_s), thin_plate(y, self.c_y)]
        )

    def spec(self):
        return {"kind": "thin_plate_radial", "c_s": self.c_s, "c_y": self.c_y}


def basis_from_spec(spec):
    kind = spec.get("kind")
    if kind == "monomial":
        return MonomialBasis(order=int(spec["order"]))
    if kind == "thin_plate_radial":
        return ThinPlateRadialBasis(c_s=float(spec["c_s"]), c_y=float(spec["c_y"]))
    raise ValueError(f"unknown basis kind: {kind!r}")


def retrieve_state(lifted):
    """Project a lifted vector back to (s, y_L): its first two entries."""
    v = np.asarray(lifted, dtype=float).ravel()
    if v.size < 2:
        raise ValueError("lifted state must have at least two entries")
    return float(v[0]), float(v[1])


def sample_radial_centers(w_L, rng):
    """Draw (c_s, c_y) uniformly from [-w_L/2, +w_L/2], once per experiment."""
    c_s, c_y = rng.uniform(-0.5 * w_L, 0.5 * w_L, size=2)
    return float(c_s), float(c_y)
