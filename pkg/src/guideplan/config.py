"""Run configuration: named parameter overrides, validation and file round trip.

Every tuning symbol is addressable by its short name; unknown names are
rejected. Defaults match the reference parameter set.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import yaml

from . import mdp
from .planner import CostParams
from .prediction import BehaviorKind, PredictionParams, SocialParams, behavior_pair
from .sim import METHODS


class ConfigError(ValueError):
    pass


# name -> (section, attribute, caster)
PARAM_REGISTRY: dict[str, tuple[str, str, type]] = {
    # behavior planning tuple
    "c": ("cost", "c", float),
    "theta_s": ("cost", "theta_s", float),
    "delta_theta": ("cost", "delta_theta", float),
    "l_target": ("cost", "l_target", int),
    "l_real": ("meta", "l_real", int),
    "C_0": ("cost", "C_0_aff", float),
    "w_d": ("cost", "w_d", float),
    "k_d": ("cost", "k_d", float),
    "w_t": ("cost", "w_t", float),
    "w_aff": ("cost", "w_aff", float),
    # motion prediction tuple
    "d_social": ("social", "d_social", float),
    "theta_m": ("pred", "theta_m", float),
    "lambda": ("social", "lam", float),
    "l": ("pred", "history_l", int),
    "beta_g": ("pred", "beta_g", float),
    "beta_a": ("pred", "beta_a", float),
    "w": ("mdp", "w", float),
    "gamma": ("mdp", "gamma", float),
    # legibility gains per behavior
    "xi_lead": ("behavior", "xi_lead", float),
    "xi_point": ("behavior", "xi_point", float),
    # remaining exposed knobs
    "k_n": ("social", "k_n", float),
    "impact_range": ("pred", "impact_range", float),
    "K": ("pred", "samples_k", int),
    "alpha": ("mdp", "alpha", float),
    "occupation_cost": ("mdp", "occupation_cost", float),
    "epsilon": ("mdp", "epsilon", float),
    "min_effort": ("mdp", "min_effort", float),
    "v_max": ("actions", "v_max", float),
    "t_per_step": ("cost", "t_per_step", float),
    "budget": ("cost", "trial_budget", int),
    "max_depth": ("cost", "max_depth", int),
    "r_lead": ("cost", "r_lead", float),
    "r_point": ("cost", "r_point", float),
    "lead_speed": ("behavior", "lead_speed", float),
    "point_speed": ("behavior", "point_speed", float),
    "decisiveness": ("meta", "decisiveness", float),
}


@dataclass(frozen=True)
class Settings:
    """Resolved parameter bundle for planning, prediction and trials."""

    cost: CostParams
    social: SocialParams
    pred: PredictionParams
    mdp_params: mdp.MdpParams
    behaviors: tuple[BehaviorKind, BehaviorKind]
    actions: mdp.ActionSet
    # Recorded for parity with the reference parameter tuple; cost evaluation
    # uses the realized simulated path length at each step.
    l_real: int = 2
    # Action-sharpness multiplier for the simulated-visitor population (applied
    # to the visitor agent and the planner's model alike in batch trials).
    decisiveness: float = 4.0

    @classmethod
    def from_params(cls, params: dict | None = None) -> "Settings":
        params = dict(params or {})
        sections: dict[str, dict] = {"cost": {}, "social": {}, "pred": {}, "mdp": {},
                                     "behavior": {}, "actions": {}, "meta": {}}
        for name, value in params.items():
            if name not in PARAM_REGISTRY:
                raise ConfigError(f"unknown parameter name: {name!r}")
            section, attr, caster = PARAM_REGISTRY[name]
            try:
                sections[section][attr] = caster(value)
            except (TypeError, ValueError):
                raise ConfigError(f"parameter {name!r}: cannot cast {value!r} to {caster.__name__}") from None
        behaviors = behavior_pair(**sections["behavior"])
        return cls(
            cost=CostParams(**sections["cost"]),
            social=SocialParams(**sections["social"]),
            pred=PredictionParams(**sections["pred"]),
            mdp_params=mdp.MdpParams(**sections["mdp"]),
            behaviors=behaviors,
            actions=mdp.default_actions(**sections["actions"]),
            l_real=sections["meta"].get("l_real", 2),
            decisiveness=sections["meta"].get("decisiveness", 4.0),
        )


@dataclass
class RunConfig:
    """A batch experiment request: scenes, methods, trials, seeds and overrides."""

    scenes: list[str] = field(default_factory=lambda: ["A"])
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    trials: int = 1
    seed: int = 0
    out_dir: str = "results"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.scenes:
            raise ConfigError("scenes: at least one scene required")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"methods: unknown method {m!r}; expected one of {list(METHODS)}")
        if self.trials < 1:
            raise ConfigError("trials: must be >= 1")
        for name in self.params:
            if name not in PARAM_REGISTRY:
                raise ConfigError(f"params: unknown parameter name: {name!r}")

    def build_settings(self) -> Settings:
        return Settings.from_params(self.params)

    def to_dict(self) -> dict:
        return {
            "scenes": list(self.scenes),
            "methods": list(self.methods),
            "trials": self.trials,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "params": dict(self.params),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a key-value tree")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
        return cls(**doc)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def from_yaml(cls, text: str) -> "RunConfig":
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config parse error: {exc}") from exc
        return cls.from_dict(doc or {})
