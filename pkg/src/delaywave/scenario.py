"""Scenario files: a single YAML document with four named blocks.

    model:   length, modes, quad_points, damping_region, delay_region,
             damping_coefficient
    physics: nonlinearity, coefficient, delay, [semigroup]
    data:    u0, u1, g
    stepper: dt, t_end, stride, scheme
    seed:    integer for randomized presets

Unknown keys are rejected so experiment definitions stay diff-able and
unambiguous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import stepping
from .certify import SemigroupEstimate
from .delays import (CoefficientFunction, ConfigurationError, DelayFunction,
                     VelocityHistorySeed)
from .functionals import NonlinearityParams
from .spectral import SpectralModel

PRESETS = (
    "linear-damped",
    "constant-delay-small",
    "variable-delay-small",
    "degenerate-delay",
    "vanishing-delay",
    "destabilization",
)


class ScenarioError(ValueError):
    """Invalid scenario document; the message names the offending key."""


def _require_keys(block, allowed, required, where):
    if not isinstance(block, dict):
        raise ScenarioError(f"{where}: expected a mapping")
    for key in block:
        if key not in allowed:
            raise ScenarioError(f"{where}: unknown key {key!r}")
    for key in required:
        if key not in block:
            raise ScenarioError(f"{where}: missing key {key!r}")


@dataclass
class Scenario:
    raw: dict
    path: str = "<memory>"

    # --- builders ---------------------------------------------------

    def build_model(self):
        blk = self.raw["model"]
        try:
            return SpectralModel(
                length=blk["length"], modes=blk["modes"],
                quad_points=blk.get("quad_points", 4 * int(blk["modes"]) + 1),
                damping_region=blk["damping_region"],
                delay_region=blk["delay_region"],
                damping_coefficient=blk["damping_coefficient"],
            )
        except ValueError as exc:
            raise ScenarioError(f"model: {exc}") from exc

    def build_delay(self):
        blk = dict(self.raw["physics"]["delay"])
        kind = blk.pop("kind")
        try:
            return DelayFunction(kind, **blk)
        except (ConfigurationError, TypeError) as exc:
            raise ScenarioError(f"physics.delay: {exc}") from exc

    def build_coefficient(self):
        blk = dict(self.raw["physics"]["coefficient"])
        kind = blk.pop("kind")
        try:
            return CoefficientFunction(kind, **blk)
        except (ConfigurationError, TypeError) as exc:
            raise ScenarioError(f"physics.coefficient: {exc}") from exc

    @property
    def beta(self):
        nl = self.raw["physics"]["nonlinearity"]
        if nl["kind"] == "linear":
            return None
        return float(nl["beta"])

    def build_nonlinearity(self, model):
        beta = self.beta
        if beta is None:
            return None
        return NonlinearityParams(beta=beta, length=model.length)

    def build_semigroup(self):
        blk = self.raw["physics"].get("semigroup")
        if blk is None:
            return None
        return SemigroupEstimate(M=float(blk["M"]), omega=float(blk["omega"]),
                                 provenance="user-supplied")

    def _field(self, model, spec, name):
        kind = spec.get("kind", "modes")
        if kind == "modes":
            coeffs = np.zeros(model.n_modes)
            given = np.asarray(spec["coefficients"], dtype=float)
            if len(given) > model.n_modes:
                raise ScenarioError(f"data.{name}: more coefficients than modes")
            coeffs[:len(given)] = given
            return coeffs
        if kind == "random":
            rng = np.random.default_rng(self.seed + (0 if name == "u0" else 1))
            k = np.arange(1, model.n_modes + 1)
            coeffs = rng.standard_normal(model.n_modes) * k ** -2.0
            amp = float(spec.get("amplitude", 1.0))
            scale = model.a_half_norm(coeffs) if name == "u0" \
                else model.h_norm(coeffs)
            return coeffs * (amp / scale)
        raise ScenarioError(f"data.{name}: unknown kind {kind!r}")

    def build_initial_data(self, model):
        data = self.raw["data"]
        return (self._field(model, data["u0"], "u0"),
                self._field(model, data["u1"], "u1"))

    def build_history_seed(self, model):
        blk = dict(self.raw["data"]["g"])
        kind = blk.pop("kind")
        try:
            return VelocityHistorySeed(model, kind, **blk)
        except (ConfigurationError, TypeError) as exc:
            raise ScenarioError(f"data.g: {exc}") from exc

    def build_stepper_config(self, model):
        blk = self.raw["stepper"]
        cfg = stepping.StepperConfig(
            dt=float(blk.get("dt", stepping.default_dt(model))),
            t_end=float(blk["t_end"]),
            stride=int(blk.get("stride", 10)),
            scheme=blk.get("scheme", "strang-kick"),
        )
        try:
            cfg.validate(model)
        except ValueError as exc:
            raise ScenarioError(f"stepper: {exc}") from exc
        return cfg

    @property
    def seed(self):
        return int(self.raw.get("seed", 0))

    def with_overrides(self, overrides):
        """New scenario with dotted-path overrides applied (copy)."""
        import copy
        raw = copy.deepcopy(self.raw)
        for path, value in overrides.items():
            keys = path.split(".")
            node = raw
            for key in keys[:-1]:
                node = node[key]
            node[keys[-1]] = value
        return Scenario(raw=raw, path=self.path)


_ALIASES = {
    "k0": "physics.coefficient.value",
    "a": "model.damping_coefficient",
    "tau_bar": "physics.delay.bound",
    "beta": "physics.nonlinearity.beta",
    "t_end": "stepper.t_end",
    "dt": "stepper.dt",
}


def resolve_param(name):
    return _ALIASES.get(name, name)


def validate(raw, path="<memory>"):
    _require_keys(raw, {"model", "physics", "data", "stepper", "seed"},
                  {"model", "physics", "data", "stepper"}, "scenario")
    _require_keys(raw["model"],
                  {"length", "modes", "quad_points", "damping_region",
                   "delay_region", "damping_coefficient"},
                  {"length", "modes", "damping_region", "delay_region",
                   "damping_coefficient"}, "model")
    _require_keys(raw["physics"],
                  {"nonlinearity", "coefficient", "delay", "semigroup"},
                  {"nonlinearity", "coefficient", "delay"}, "physics")
    _require_keys(raw["physics"]["nonlinearity"], {"kind", "beta"}, {"kind"},
                  "physics.nonlinearity")
    _require_keys(raw["physics"]["coefficient"],
                  {"kind", "value", "times", "values", "amplitude", "rate"},
                  {"kind"}, "physics.coefficient")
    _require_keys(raw["physics"]["delay"],
                  {"kind", "bound", "value", "times", "values", "frequency",
                   "phase", "rate"},
                  {"kind", "bound"}, "physics.delay")
    if "semigroup" in raw["physics"]:
        _require_keys(raw["physics"]["semigroup"], {"M", "omega"},
                      {"M", "omega"}, "physics.semigroup")
    _require_keys(raw["data"], {"u0", "u1", "g"}, {"u0", "u1", "g"}, "data")
    for name in ("u0", "u1"):
        _require_keys(raw["data"][name],
                      {"kind", "coefficients", "amplitude"}, set(),
                      f"data.{name}")
    _require_keys(raw["data"]["g"], {"kind", "value", "times", "values"},
                  {"kind"}, "data.g")
    _require_keys(raw["stepper"], {"dt", "t_end", "stride", "scheme"},
                  {"t_end"}, "stepper")
    scn = Scenario(raw=raw, path=path)
    # touching every builder surfaces bad values at load time
    model = scn.build_model()
    scn.build_delay()
    scn.build_coefficient()
    scn.build_nonlinearity(model)
    scn.build_semigroup()
    scn.build_initial_data(model)
    scn.build_history_seed(model)
    scn.build_stepper_config(model)
    return scn


def load(source):
    """Load a scenario from a file path or a bundled preset name."""
    p = Path(source)
    if p.exists():
        text = p.read_text()
        where = str(p)
    elif str(source) in PRESETS:
        text = resources.files("delaywave.presets").joinpath(
            f"{source}.yaml").read_text()
        where = f"preset:{source}"
    else:
        raise ScenarioError(f"scenario {source!r}: no such file or preset")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{where}: malformed YAML ({exc})") from exc
    return validate(raw, path=where)
