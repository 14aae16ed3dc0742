"""Snapshot assembly, SVD-based least squares, and rank-truncated models.

The identified system is X' ~= A X in lifted space, solved through the
Moore-Penrose pseudo-inverse of the snapshot matrix X. Truncation keeps
the leading singular triplets and yields the approximated matrix
A_r = X' V_r diag(1/sigma_r) U_r^T.
"""

from dataclasses import dataclass
import time

import numpy as np
from sklearn.base import BaseEstimator

from .observables import retrieve_state

SIGMA_DROP_TOL = 1e-12  # relative cutoff for numerically-zero singular values
NORMAL_EQ_COND_LIMIT = 1e12
ROLLOUT_OVERFLOW = 1e12

__all__ = [
    "SnapshotPair",
    "SvdFactors",
    "EnergyRule",
    "HardThresholdRule",
    "FixedRule",
    "FullRule",
    "IdentifiedModel",
    "build_snapshots",
    "svd_thin",
    "pseudo_inverse_normal",
    "pseudo_inverse_svd",
    "full_system_matrix",
    "energy_profile",
    "omega_beta",
    "select_rank",
    "truncate",
    "truncated_system_matrix",
    "predict_next",
    "rollout",
    "TruncatedEDMD",
]


@dataclass(frozen=True)
class SnapshotPair:
    """Lifted data matrix X (d x m) and its right-shifted partner."""

    X: np.ndarray
    X_shift: np.ndarray

    @property
    def d(self):
        return self.X.shape[0]

    @property
    def m(self):
        return self.X.shape[1]


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD of X with numerically-zero singular values dropped."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def r_max(self):
        return self.sigma.size


@dataclass(frozen=True)
class EnergyRule:
    """Smallest rank whose accumulated energy reaches percent - slack."""

    percent: float
    slack: float = 0.0

    def label(self):
        return f"energy{self.percent:g}"


@dataclass(frozen=True)
class HardThresholdRule:
    """Optimal hard threshold tau = omega(beta) * median(sigma)."""

    def label(self):
        return "ht"


@dataclass(frozen=True)
class FixedRule:
    r: int

    def label(self):
        return f"fixed{self.r}"


@dataclass(frozen=True)
class FullRule:
    def label(self):
        return "full"


@dataclass
class IdentifiedModel:
    """Linear dynamics in lifted space, with selection provenance."""

    A: np.ndarray
    rank_used: int
    rule: object
    basis_spec: dict | None = None
    timing_ns: int = 0


def build_snapshots(lifted_trajectories):
    """Stack per-trajectory snapshot blocks into total (X, X') matrices.

    Each trajectory contributes its lifted states 0..k-1 to X and 1..k to
    X_shift; no column pair straddles a trajectory boundary.
    """
    xs, xps = [], []
    for i, L in enumerate(lifted_trajectories):
        L = np.asarray(L, dtype=float)
        if L.ndim != 2 or L.shape[0] < 2:
            raise ValueError(
                f"trajectory {i} has fewer than 2 lifted states "
                f"(shape {L.shape}); cannot form a snapshot pair"
            )
        B = L.T
        xs.append(B[:, :-1])
        xps.append(B[:, 1:])
    if not xs:
        raise ValueError("no trajectories given")
    return SnapshotPair(X=np.hstack(xs), X_shift=np.hstack(xps))


def svd_thin(X):
    """Thin SVD with a fixed sign convention for determinism.

    The largest-magnitude entry of each left singular vector is made
    positive; singular values below SIGMA_DROP_TOL * sigma_1 are dropped.
    """
    X = np.asarray(X, dtype=float)
    if not np.any(X):
        raise ValueError("snapshot matrix is entirely zero")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    keep = s > SIGMA_DROP_TOL * s[0]
    U, s, Vt = U[:, keep], s[keep], Vt[keep, :]
    for j in range(s.size):
        i = np.argmax(np.abs(U[:, j]))
        if U[i, j] < 0:
            U[:, j] = -U[:, j]
            Vt[j, :] = -Vt[j, :]
    return SvdFactors(U=U, sigma=s, V=Vt.T)


def pseudo_inverse_normal(X):
    """Normal-equation pseudo-inverse X^T (X X^T)^-1 (full row rank only)."""
    X = np.asarray(X, dtype=float)
    G = X @ X.T
    if np.linalg.cond(G) > NORMAL_EQ_COND_LIMIT:
        raise np.linalg.LinAlgError(
            "X X^T is singular to working precision; use the SVD route"
        )
    return X.T @ np.linalg.inv(G)


def pseudo_inverse_svd(f):
    """Moore-Penrose pseudo-inverse V diag(1/sigma) U^T from thin factors."""
    return (f.V / f.sigma) @ f.U.T


def _solve_system_matrix(X_shift, U, sigma, V):
    # Grouped as (X' V) * 1/sigma @ U^T so full and truncated routes share
    # the same flop structure.
    return (X_shift @ V) * (1.0 / sigma) @ U.T


def full_system_matrix(pair, factors=None):
    """Least-squares system matrix A = X' X^+ via the SVD route.

    timing_ns covers pseudo-inverse application and multiplication only;
    the SVD itself is shared with the truncated routes.
    """
    f = factors if factors is not None else svd_thin(pair.X)
    t0 = time.perf_counter_ns()
    A = _solve_system_matrix(pair.X_shift, f.U, f.sigma, f.V)
    dt = time.perf_counter_ns() - t0
    return IdentifiedModel(A=A, rank_used=f.r_max, rule=FullRule(), timing_ns=dt)


def energy_profile(sigma, squared=False):
    """Accumulated energy E_r in percent; plain sigma sums by default."""
    s = np.asarray(sigma, dtype=float)
    if squared:
        s = s**2
    return 100.0 * np.cumsum(s) / np.sum(s)


def omega_beta(beta):
    """Cubic fit to the optimal hard-threshold coefficient omega(beta)."""
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must be in (0, 1], got {beta}")
    return 0.56 * beta**3 - 0.95 * beta**2 + 1.82 * beta + 1.43


def select_rank(f, rule, dims=None, energy_squared=False):
    """Pick a truncation rank from the singular spectrum.

    Hard threshold: tau = omega(beta) * median(sigma) with
    beta = min(dims)/max(dims). When tau itself exceeds the maximal rank
    (the typical outcome for unnormalized lane-change data, where sigma
    is orders of magnitude above r_max), the full rank is used; otherwise
    the rank is the number of singular values above tau.
    """
    r_max = f.r_max
    if isinstance(rule, FullRule):
        return r_max
    if isinstance(rule, FixedRule):
        if rule.r < 1:
            raise ValueError("fixed rank must be >= 1")
        return min(rule.r, r_max)
    if isinstance(rule, EnergyRule):
        if not 0.0 < rule.percent <= 100.0:
            raise ValueError("energy threshold must be in (0, 100]")
        E = energy_profile(f.sigma, squared=energy_squared)
        target = rule.percent - rule.slack
        hit = np.nonzero(E >= target)[0]
        return int(hit[0]) + 1 if hit.size else r_max
    if isinstance(rule, HardThresholdRule):
        if dims is None:
            dims = (f.U.shape[0], f.V.shape[0])
        n, m = dims
        beta = min(n, m) / max(n, m)
        tau = omega_beta(beta) * float(np.median(f.sigma))
        if tau > r_max:
            return r_max
        return max(1, min(int(np.sum(f.sigma > tau)), r_max))
    raise TypeError(f"unknown rank rule: {rule!r}")


def truncate(f, r):
    """Keep the leading r singular triplets."""
    if not 1 <= r <= f.r_max:
        raise ValueError(f"rank {r} outside [1, {f.r_max}]")
    return SvdFactors(U=f.U[:, :r], sigma=f.sigma[:r], V=f.V[:, :r])


def truncated_system_matrix(pair, f, r, rule=None):
    """Approximated system matrix A_r = X' V_r diag(1/sigma_r) U_r^T."""
    ft = truncate(f, r)
    t0 = time.perf_counter_ns()
    A = _solve_system_matrix(pair.X_shift, ft.U, ft.sigma, ft.V)
    dt = time.perf_counter_ns() - t0
    return IdentifiedModel(
        A=A, rank_used=r, rule=rule if rule is not None else FixedRule(r), timing_ns=dt
    )


def predict_next(model, lifted):
    """One step of the identified lifted dynamics (no re-lifting)."""
    v = np.asarray(lifted, dtype=float).ravel()
    if v.size != model.A.shape[1]:
        raise ValueError(
            f"lifted state has length {v.size}, model expects {model.A.shape[1]}"
        )
    return model.A @ v


def rollout(model, start_lifted, steps):
    """Iterate the lifted dynamics, retrieving (s, y_L) at each step.

    The lifted state is propagated as-is between steps; it is not
    re-lifted from the retrieved coordinates.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    v = np.asarray(start_lifted, dtype=float).ravel()
    out = [retrieve_state(v)]
    for k in range(steps):
        v = predict_next(model, v)
        if np.max(np.abs(v)) > ROLLOUT_OVERFLOW:
            raise RuntimeError(f"rollout diverged at step {k + 1}")
        out.append(retrieve_state(v))
    return out


class TruncatedEDMD(BaseEstimator):
    """EDMD estimator: lift trajectories, fit A, optionally truncate.

    Parameters follow sklearn conventions; `fit` takes a list of (n_i, 2)
    state arrays (or objects with a `samples` attribute) and exposes the
    identified matrix as `A_`.
    """

    def __init__(self, basis=None, rank_rule=None, energy_squared=False):
        self.basis = basis
        self.rank_rule = rank_rule
        self.energy_squared = energy_squared

    def fit(self, X, y=None):
        if self.basis is None:
            raise ValueError("a lifting basis is required")
        rule = self.rank_rule if self.rank_rule is not None else FullRule()
        trajs = [getattr(t, "samples", t) for t in X]
        lifted = [self.basis.fit_transform(t) for t in trajs]
        self.snapshots_ = build_snapshots(lifted)
        self.svd_ = svd_thin(self.snapshots_.X)
        self.rank_ = select_rank(
            self.svd_,
            rule,
            dims=(self.snapshots_.d, self.snapshots_.m),
            energy_squared=self.energy_squared,
        )
        self.model_ = truncated_system_matrix(
            self.snapshots_, self.svd_, self.rank_, rule=rule
        )
        self.model_.basis_spec = self.basis.spec()
        self.A_ = self.model_.A
        self.singular_values_ = self.svd_.sigma
        return self

    def predict(self, X):
        """One-step prediction of (s, y_L) successors for raw states."""
        lifted = self.basis.transform(np.asarray(X, dtype=float))
        nxt = lifted @ self.A_.T
        return nxt[:, :2]

    def rollout(self, start, steps):
        """Multi-step prediction from a single raw (s, y_L) state."""
        return rollout(self.model_, self.basis.lift(start), steps)
