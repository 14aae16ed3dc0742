"""Fidelity and timing metrics for truncated system matrices.

Reconstruction error compares A and its truncated counterpart in
Frobenius norm; timing compares the solve stage (pseudo-inverse
application + multiplication) of both routes over a shared SVD.
"""

from dataclasses import dataclass, field
import time

import numpy as np

from .edmd import svd_thin, truncate, _solve_system_matrix

__all__ = [
    "EvalRow",
    "TimingSample",
    "frobenius_norm",
    "reconstruction_error",
    "solve_flops",
    "benchmark_solve",
    "relative_time",
    "build_table",
    "one_step_rmse",
    "RULE_ORDER",
]

RULE_ORDER = {"energy90": 0, "energy99": 1, "ht": 2, "full": 3}


@dataclass
class EvalRow:
    basis_label: str
    rule_label: str
    rank: int
    re_percent: float
    t_rel_min_percent: float
    t_rel_median_percent: float
    flops_full: int
    flops_trunc: int
    extras: dict = field(default_factory=dict)


@dataclass
class TimingSample:
    route: str  # "full" or "truncated"
    durations_ns: list
    repeats: int
    warmups: int
    sink: float = 0.0  # checksum of discarded results; defeats elision

    def min_ns(self):
        return min(self.durations_ns)

    def median_ns(self):
        return float(np.median(self.durations_ns))


def frobenius_norm(B):
    """sqrt of the sum of squared entries."""
    return float(np.sqrt(np.sum(np.asarray(B, dtype=float) ** 2)))


def reconstruction_error(A, A_tilde):
    """Relative reconstruction error 100 * ||A - A~||_F / ||A||_F."""
    A = np.asarray(A, dtype=float)
    A_tilde = np.asarray(A_tilde, dtype=float)
    if A.shape != A_tilde.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {A_tilde.shape}")
    denom = frobenius_norm(A)
    if denom == 0.0:
        raise ValueError("reference matrix has zero Frobenius norm")
    return 100.0 * frobenius_norm(A - A_tilde) / denom


def solve_flops(d, m, r):
    """Multiply-add count of the rank-r solve (X' V_r) / sigma_r @ U_r^T.

    Strictly increasing in r, so the truncated route always does less
    arithmetic than the full one regardless of what wall clocks say.
    """
    return 2 * d * m * r + d * r + 2 * d * d * r


def benchmark_solve(pair, f, rank=None, repeats=100, warmups=10, scope="solve"):
    """Time the solve stage over identical inputs.

    scope="svd+solve" additionally refactorizes X inside the timed
    region. Results are folded into a scalar sink so the work cannot be
    optimized away.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    if scope not in ("solve", "svd+solve"):
        raise ValueError(f"unknown time scope: {scope!r}")
    r = f.r_max if rank is None else rank
    ft = truncate(f, r)
    sink = 0.0
    for _ in range(warmups):
        sink += _solve_system_matrix(pair.X_shift, ft.U, ft.sigma, ft.V)[0, 0]
    durations = []
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        if scope == "svd+solve":
            fr = truncate(svd_thin(pair.X), r)
            A = _solve_system_matrix(pair.X_shift, fr.U, fr.sigma, fr.V)
        else:
            A = _solve_system_matrix(pair.X_shift, ft.U, ft.sigma, ft.V)
        durations.append(time.perf_counter_ns() - t0)
        sink += A[0, 0]
    route = "full" if r == f.r_max else "truncated"
    return TimingSample(
        route=route, durations_ns=durations, repeats=repeats, warmups=warmups, sink=sink
    )


def relative_time(truncated, full):
    """100 * min(truncated) / min(full); unclamped, may exceed 100."""
    return 100.0 * truncated.min_ns() / full.min_ns()


def _relative_median(truncated, full):
    return 100.0 * truncated.median_ns() / full.median_ns()


def build_table(entries, references, snapshot_dims, extras=None):
    """Assemble report rows, one per (basis, rule).

    entries: list of (basis_label, rule_label, model, timing) tuples.
    references: dict basis_label -> (full model, full timing).
    snapshot_dims: dict basis_label -> (d, m) of the snapshot matrix.
    Rows are ordered monomial before radial, rules 90%, 99%, HT, full.
    """
    rows = []
    for basis_label, rule_label, model, timing in entries:
        if basis_label not in references:
            raise ValueError(f"no full-rank reference for basis {basis_label!r}")
        ref_model, ref_timing = references[basis_label]
        d, m = snapshot_dims[basis_label]
        rows.append(
            EvalRow(
                basis_label=basis_label,
                rule_label=rule_label,
                rank=model.rank_used,
                re_percent=reconstruction_error(ref_model.A, model.A),
                t_rel_min_percent=relative_time(timing, ref_timing),
                t_rel_median_percent=_relative_median(timing, ref_timing),
                flops_full=solve_flops(d, m, ref_model.rank_used),
                flops_trunc=solve_flops(d, m, model.rank_used),
                extras=dict(extras.get((basis_label, rule_label), {})) if extras else {},
            )
        )
    basis_order = {"monomial": 0, "thin_plate_radial": 1}
    rows.sort(
        key=lambda r: (
            basis_order.get(r.basis_label, 99),
            RULE_ORDER.get(r.rule_label, 98),
            r.rule_label,
        )
    )
    return rows


def one_step_rmse(model, pair):
    """RMSE of retrieved one-step predictions over all snapshot columns."""
    pred = model.A @ pair.X
    err = pred[:2, :] - pair.X_shift[:2, :]
    return float(np.sqrt(np.mean(np.sum(err**2, axis=0))))
