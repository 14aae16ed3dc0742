"""Stochastic sinusoidal lane-change trajectory generator.

Longitudinal motion follows a constant-acceleration model driven by
scalar acceleration noise; lateral motion follows a half-period sinusoid
between the right-lane center (w_L/2) and the left-lane center (3*w_L/2).
"""

from dataclasses import dataclass
import math

import numpy as np

MAX_REJECTIONS = 10_000

__all__ = [
    "LaneConfig",
    "LongState",
    "LaneGeometry",
    "Trajectory",
    "sample_initial_lateral",
    "sample_initial_yaw",
    "lane_change_geometry",
    "step_longitudinal",
    "lateral_position",
    "generate_trajectory",
    "generate_dataset",
]


@dataclass(frozen=True)
class LaneConfig:
    """Scenario parameters; defaults follow the standard 3.5 m lane setup."""

    w_L: float = 3.5
    w_V: float = 1.5
    sigma_a: float = 0.2 / 3.0
    sigma_y: float = 1.0 / 3.0
    T: float = 0.1
    psi0_max: float = math.radians(15.0)
    s0: float = 0.0
    v0: float = 10.0
    a0: float = 0.0
    n_traj: int = 100

    def validate(self):
        problems = []
        if not self.w_L > 0:
            problems.append("w_L must be > 0")
        if not self.T > 0:
            problems.append("T must be > 0")
        if not 0 < self.psi0_max < math.pi / 2:
            problems.append("psi0_max must lie in (0, pi/2)")
        if self.sigma_a < 0:
            problems.append("sigma_a must be >= 0")
        if self.sigma_y < 0:
            problems.append("sigma_y must be >= 0")
        if self.n_traj < 1:
            problems.append("n_traj must be >= 1")
        if problems:
            raise ValueError("; ".join(problems))
        return self


@dataclass(frozen=True)
class LongState:
    """Longitudinal kinematic state (displacement, velocity, acceleration)."""

    s: float
    v_s: float
    a_s: float

    def as_array(self):
        return np.array([self.s, self.v_s, self.a_s], dtype=float)

    @classmethod
    def from_array(cls, x):
        return cls(float(x[0]), float(x[1]), float(x[2]))


@dataclass(frozen=True)
class LaneGeometry:
    y_L0: float
    psi0: float
    d_L: float
    x_L: float


@dataclass
class Trajectory:
    """Ordered (s, y_L) samples plus the geometry that produced them."""

    samples: np.ndarray  # shape (n, 2)
    geometry: LaneGeometry
    seed_id: int
    lateral_rejections: int = 0
    geometry_resamples: int = 0

    def __len__(self):
        return self.samples.shape[0]


def transition_matrix(T):
    """Constant-acceleration state transition over one sample time."""
    return np.array([[1.0, T, 0.5 * T * T], [0.0, 1.0, T], [0.0, 0.0, 1.0]])


def noise_gain(T):
    """Noise input vector g; the process covariance is sigma_a^2 * g g^T."""
    return np.array([0.5 * T * T, T, 1.0])


def _sample_initial_lateral_counted(cfg, rng):
    lo = 0.5 * cfg.w_L
    hi = 1.5 * cfg.w_L
    for rejections in range(MAX_REJECTIONS):
        y = rng.normal(lo, cfg.sigma_y)
        if lo < y <= hi:
            return float(y), rejections
    raise RuntimeError(
        f"initial lateral sampling rejected {MAX_REJECTIONS} consecutive "
        f"draws; check sigma_y={cfg.sigma_y}"
    )


def sample_initial_lateral(cfg, rng):
    """Draw y_L0 ~ N(0.5*w_L, sigma_y^2) rejected into (0.5*w_L, 1.5*w_L].

    Raises RuntimeError if the rejection cap is hit (e.g. sigma_y = 0,
    where the mean itself is excluded).
    """
    return _sample_initial_lateral_counted(cfg, rng)[0]


def sample_initial_yaw(cfg, rng):
    """Draw psi0 uniformly from the half-open interval (0, psi0_max]."""
    return cfg.psi0_max * (1.0 - rng.random())


def lane_change_geometry(y_L0, psi0, w_L):
    """Sinusoid length d_L and initial longitudinal offset x_L.

    d_L = (w_L*pi)/(2*tan(psi0)) * cos(asin(2*y_L0/w_L - 2))
    x_L = (1/2 + asin(2*y_L0/w_L - 2)/pi) * d_L
    """
    u = 2.0 * y_L0 / w_L - 2.0
    if not -1.0 <= u <= 1.0:
        raise ValueError(f"y_L0={y_L0} outside [w_L/2, 3*w_L/2] for w_L={w_L}")
    phase = math.asin(u)
    d_L = (w_L * math.pi) / (2.0 * math.tan(psi0)) * math.cos(phase)
    x_L = (0.5 + phase / math.pi) * d_L
    return d_L, x_L


def step_longitudinal(state, T, sigma_a, rng):
    """One constant-acceleration step with rank-one acceleration noise.

    The stated covariance sigma_a^2 * [[T^4/4, T^3/2, T^2/2], ...] factors
    exactly as sigma_a^2 * g g^T, so a single scalar draw suffices.
    """
    x = state.as_array() if isinstance(state, LongState) else np.asarray(state, float)
    w = rng.normal(0.0, sigma_a)
    nxt = transition_matrix(T) @ x + noise_gain(T) * w
    if isinstance(state, LongState):
        return LongState.from_array(nxt)
    return nxt


def lateral_position(arc, d_L, w_L):
    """Lateral position on the sinusoid at longitudinal arc position.

    y_L = (w_L/2)*sin(pi*arc/d_L - pi/2) + w_L, arc in [0, d_L].
    """
    if d_L <= 0:
        raise ValueError("d_L must be positive")
    return 0.5 * w_L * math.sin(math.pi * arc / d_L - 0.5 * math.pi) + w_L


def _simulate(cfg, geom, rng):
    """Roll the kinematics until the arc would leave [0, d_L]."""
    if geom.d_L <= 0:
        return None
    F = transition_matrix(cfg.T)
    g = noise_gain(cfg.T)
    x = np.array([cfg.s0, cfg.v0, cfg.a0])
    pts = []
    while 0.0 <= x[0] + geom.x_L <= geom.d_L:
        pts.append((x[0], lateral_position(x[0] + geom.x_L, geom.d_L, cfg.w_L)))
        x = F @ x + g * rng.normal(0.0, cfg.sigma_a)
    if len(pts) < 2:
        return None
    return np.array(pts)


def generate_trajectory(cfg, rng, seed_id=0):
    """Sample a geometry and roll out one trajectory.

    Geometries too short to yield two samples are discarded and resampled
    (counted, capped), since a single point cannot form a snapshot pair.
    """
    total_rejections = 0
    for resamples in range(MAX_REJECTIONS):
        y_L0, rej = _sample_initial_lateral_counted(cfg, rng)
        total_rejections += rej
        psi0 = sample_initial_yaw(cfg, rng)
        d_L, x_L = lane_change_geometry(y_L0, psi0, cfg.w_L)
        geom = LaneGeometry(y_L0, psi0, d_L, x_L)
        samples = _simulate(cfg, geom, rng)
        if samples is not None:
            return Trajectory(
                samples=samples,
                geometry=geom,
                seed_id=seed_id,
                lateral_rejections=total_rejections,
                geometry_resamples=resamples,
            )
    raise RuntimeError(
        f"could not generate a trajectory with >= 2 samples after "
        f"{MAX_REJECTIONS} geometry resamples"
    )


def child_rng(master_seed, index):
    """Independent per-trajectory stream derived from (master_seed, index)."""
    return np.random.default_rng(np.random.SeedSequence([master_seed, index]))


def generate_dataset(cfg, master_seed):
    """Generate cfg.n_traj trajectories from per-index child streams.

    Trajectory i depends only on (cfg, master_seed, i), so generation
    order is irrelevant.
    """
    cfg.validate()
    return [
        generate_trajectory(cfg, child_rng(master_seed, i), seed_id=i)
        for i in range(cfg.n_traj)
    ]
