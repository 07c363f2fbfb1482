"""Experiment configuration: schema, loading, and resolution of ``derive`` entries."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import device
from .state import NoiseParams

Derive = Literal["derive"]


class ConfigError(ValueError):
    """Schema violation in the experiment config."""


class DerivationError(ValueError):
    """A ``derive`` entry cannot be resolved from the device section."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class RingSection(_Strict):
    radius_um: float = 22.0
    group_index: float = 4.14
    quality_factor: float = 1e5
    resonance_wavelength_nm: float = 1543.656


class PumpSection(_Strict):
    wavelength_nm: float = 1543.656
    pulse_width_ns: float = 2.0
    bin_delay_ns: float = 13.0
    repetition_rate_mhz: float = 50.0
    peak_power_mw: float = 0.35
    rf_frequency_ghz: float = 18.25
    free_carrier_lifetime_ns: float = 10.0


class BudgetSection(_Strict):
    brightness_hz_per_mw2_ghz: float = 1.5e7
    coupling_loss_per_facet_db: float = 3.5
    analyzer_loss_db: float = 0.0
    detector_efficiency: float = 1.0
    coincidence_window_ns: float = 1.0
    car: float = 30.0


class DeviceSection(_Strict):
    ring1: RingSection = RingSection()
    ring2: RingSection = RingSection()
    pump: PumpSection = PumpSection()
    budget: BudgetSection = BudgetSection()
    # resonance mismatch between the two rings at the signal and idler bins
    detuning_s_ghz: Optional[float] = None
    detuning_i_ghz: Optional[float] = None
    measured_on_chip_rate_hz: float = 4.7e3


class NoiseSection(_Strict):
    mu_tb: Union[float, Derive] = 0.93
    mu_fb: Union[float, Derive] = 0.834
    p_white: Union[float, Derive] = 0.0


class SweepSection(_Strict):
    points: int = Field(16, ge=4)
    integration_time_s: float = Field(10.0, gt=0)


class MeasurementSection(_Strict):
    dofs: list[Literal["TB", "FB"]] = ["TB", "FB"]
    pair_rate_hz: Union[float, Derive] = 4.7e3
    integration_time_s: float = Field(10.0, gt=0)
    stabilizer_integration_time_s: float = Field(10.0, gt=0)
    accidentals: bool = True
    noiseless: bool = False
    realistic_efficiency: bool = False
    sweep: Optional[SweepSection] = SweepSection()


class RunSection(_Strict):
    seed: int = Field(1, ge=0, lt=2 ** 64)
    resamples: int = Field(200, ge=100)
    output_dir: str = "out"
    subtract_accidentals: bool = True
    tol: float = Field(1e-10, gt=0)
    workers: int = Field(1, ge=1)


class ExperimentConfig(_Strict):
    device: DeviceSection = DeviceSection()
    noise: NoiseSection = NoiseSection()
    measurement: MeasurementSection = MeasurementSection()
    run: RunSection = RunSection()

    @field_validator("measurement")
    @classmethod
    def _dofs_unique(cls, m: MeasurementSection) -> MeasurementSection:
        if len(set(m.dofs)) != len(m.dofs):
            raise ValueError("measurement.dofs lists a DoF twice")
        return m

    def echo(self) -> dict:
        return self.model_dump(mode="json")

    def with_seed(self, seed: int | None) -> "ExperimentConfig":
        if seed is None:
            return self
        return self.model_copy(update={"run": self.run.model_copy(update={"seed": seed})})

    # -- typed views -----------------------------------------------------

    def rings(self) -> tuple[device.RingParams, device.RingParams]:
        return (device.RingParams(**self.device.ring1.model_dump()),
                device.RingParams(**self.device.ring2.model_dump()))

    def pump(self) -> device.PumpParams:
        return device.PumpParams(**self.device.pump.model_dump())

    def budget(self) -> device.Budget:
        return device.Budget(**self.device.budget.model_dump())

    @property
    def car(self) -> float:
        return self.device.budget.car if self.measurement.accidentals else math.inf


def load_config(path: str | Path | None) -> ExperimentConfig:
    """Read a YAML (or JSON) config; a missing path gives the built-in defaults."""
    if path is None:
        return ExperimentConfig()
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(raw or {})


def parse_config(raw: dict) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.model_validate(raw)
        # device-level invariants live in the dataclasses
        cfg.rings(), cfg.pump(), cfg.budget()
    except (ValidationError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def resolve_noise(cfg: ExperimentConfig) -> NoiseParams:
    n = cfg.noise
    mu_tb = n.mu_tb
    if mu_tb == "derive":
        raise DerivationError("noise.mu_tb has no device model to derive from; give a number")
    mu_fb = n.mu_fb
    if mu_fb == "derive":
        d = cfg.device
        if d.detuning_s_ghz is None or d.detuning_i_ghz is None:
            raise DerivationError("noise.mu_fb = derive needs device.detuning_s_ghz and device.detuning_i_ghz")
        r1, r2 = cfg.rings()
        mu_fb = device.spectral_indistinguishability(d.detuning_s_ghz, d.detuning_i_ghz,
                                                     device.linewidth(r1), device.linewidth(r2))
    p = n.p_white
    if p == "derive":
        p = device.car_to_white_noise(cfg.device.budget.car)
    try:
        return NoiseParams(float(mu_tb), float(mu_fb), float(p))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def resolve_pair_rate(cfg: ExperimentConfig) -> float:
    rate = cfg.measurement.pair_rate_hz
    if rate == "derive":
        r1, _ = cfg.rings()
        _, detected = device.pair_rate_budget(cfg.pump(), r1, cfg.budget())
        return detected
    if rate < 0:
        raise ConfigError("measurement.pair_rate_hz must be non-negative")
    return float(rate)


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"
