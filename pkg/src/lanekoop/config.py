"""Experiment configuration: YAML file with the pipeline's parameter names.

An empty file (or missing keys) falls back to the standard setup:
w_L = 3.5 m, w_V = 1.5 m, sigma_y_L = 1/3 m, sigma_a_s = 0.2/3 m/s^2,
T = 0.1 s, s0 = 0 m, v0 = 10 m/s, a0 = 0 m/s^2, psi0_max = 15 deg,
N_m = 2. Unknown keys are a hard error.
"""

from dataclasses import dataclass, asdict
import math

import yaml

from .lane_change import LaneConfig
from .edmd import EnergyRule, HardThresholdRule, FixedRule, FullRule


class ConfigError(ValueError):
    """Invalid or unparsable experiment configuration."""


DEFAULTS = {
    "w_L": 3.5,
    "w_V": 1.5,
    "sigma_a_s": 0.2 / 3.0,
    "sigma_y_L": 1.0 / 3.0,
    "T": 0.1,
    "s0": 0.0,
    "v0": 10.0,
    "a0": 0.0,
    "psi0_max_deg": 15.0,
    "N_m": 2,
    "N_T": 100,
    "master_seed": 42,
    "bases": ["monomial", "thin_plate_radial"],
    "rules": ["energy90", "energy99", "ht"],
    "c_s": None,
    "c_y": None,
    "energy_slack": 1.5,
    "energy_squared": False,
    "repeats": 100,
    "warmups": 10,
    "time_scope": "solve",
    "output_dir": "out",
}

KNOWN_BASES = ("monomial", "thin_plate_radial")


def parse_rule(name, energy_slack=0.0):
    """Map a rule name from the config file to a rank rule object."""
    name = str(name).strip().lower()
    if name == "ht":
        return HardThresholdRule()
    if name == "full":
        return FullRule()
    if name.startswith("energy"):
        try:
            pct = float(name[len("energy") :])
        except ValueError:
            raise ConfigError(f"bad energy rule: {name!r}") from None
        return EnergyRule(percent=pct, slack=energy_slack)
    if name.startswith("fixed"):
        try:
            r = int(name[len("fixed") :])
        except ValueError:
            raise ConfigError(f"bad fixed-rank rule: {name!r}") from None
        return FixedRule(r=r)
    raise ConfigError(f"unknown rank rule: {name!r}")


@dataclass
class ExperimentConfig:
    lane: LaneConfig
    bases: list
    rules: list  # rule name strings; resolved per run via parse_rule
    master_seed: int
    n_m: int
    c_s: float | None
    c_y: float | None
    energy_slack: float
    energy_squared: bool
    repeats: int
    warmups: int
    time_scope: str
    output_dir: str

    def rule_objects(self):
        return [parse_rule(r, energy_slack=self.energy_slack) for r in self.rules]

    def to_dict(self):
        d = asdict(self)
        d["lane"] = asdict(self.lane)
        return d


def _validate(raw):
    problems = []
    if not raw["w_L"] > 0:
        problems.append("w_L must be > 0")
    if not raw["T"] > 0:
        problems.append("T must be > 0")
    if not 0 < raw["psi0_max_deg"] < 90:
        problems.append("psi0_max_deg must lie in (0, 90)")
    if raw["sigma_a_s"] < 0:
        problems.append("sigma_a_s must be >= 0")
    if raw["sigma_y_L"] < 0:
        problems.append("sigma_y_L must be >= 0")
    if int(raw["N_T"]) < 1:
        problems.append("N_T must be >= 1")
    if int(raw["N_m"]) < 1:
        problems.append("N_m must be >= 1")
    if not raw["bases"]:
        problems.append("at least one basis is required")
    for b in raw["bases"]:
        if b not in KNOWN_BASES:
            problems.append(f"unknown basis {b!r} (choose from {KNOWN_BASES})")
    if not raw["rules"]:
        problems.append("at least one rank rule is required")
    if raw["time_scope"] not in ("solve", "svd+solve"):
        problems.append("time_scope must be 'solve' or 'svd+solve'")
    if int(raw["repeats"]) < 1:
        problems.append("repeats must be >= 1")
    if int(raw["warmups"]) < 0:
        problems.append("warmups must be >= 0")
    if not 0 <= float(raw["energy_slack"]) < 100:
        problems.append("energy_slack must lie in [0, 100)")
    for r in raw["rules"]:
        try:
            parse_rule(r)
        except ConfigError as e:
            problems.append(str(e))
    if problems:
        raise ConfigError("; ".join(problems))


def config_from_mapping(data):
    data = dict(data or {})
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    raw = {**DEFAULTS, **data}
    _validate(raw)
    lane = LaneConfig(
        w_L=float(raw["w_L"]),
        w_V=float(raw["w_V"]),
        sigma_a=float(raw["sigma_a_s"]),
        sigma_y=float(raw["sigma_y_L"]),
        T=float(raw["T"]),
        psi0_max=math.radians(float(raw["psi0_max_deg"])),
        s0=float(raw["s0"]),
        v0=float(raw["v0"]),
        a0=float(raw["a0"]),
        n_traj=int(raw["N_T"]),
    ).validate()
    return ExperimentConfig(
        lane=lane,
        bases=list(raw["bases"]),
        rules=[str(r) for r in raw["rules"]],
        master_seed=int(raw["master_seed"]),
        n_m=int(raw["N_m"]),
        c_s=None if raw["c_s"] is None else float(raw["c_s"]),
        c_y=None if raw["c_y"] is None else float(raw["c_y"]),
        energy_slack=float(raw["energy_slack"]),
        energy_squared=bool(raw["energy_squared"]),
        repeats=int(raw["repeats"]),
        warmups=int(raw["warmups"]),
        time_scope=str(raw["time_scope"]),
        output_dir=str(raw["output_dir"]),
    )


def load_config(path):
    """Parse and validate a YAML config file; empty file means defaults."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse {path}: {e}") from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_mapping(data)


def default_config():
    return config_from_mapping({})
