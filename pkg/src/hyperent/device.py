"""Microring and pump parameters, and the numbers derived from them.

Units follow the lab conventions: lengths in µm or nm, frequencies in GHz,
times in ns, powers in mW.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.constants import c as SPEED_OF_LIGHT

DISTINCT_DOF_PRODUCT = 10.0


@dataclass(frozen=True)
class RingParams:
    radius_um: float = 22.0
    group_index: float = 4.14
    quality_factor: float = 1e5
    resonance_wavelength_nm: float = 1543.656

    def __post_init__(self):
        for name in ("radius_um", "group_index", "quality_factor", "resonance_wavelength_nm"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.quality_factor < 1e3:
            raise ValueError("quality_factor must be at least 1e3")


@dataclass(frozen=True)
class PumpParams:
    wavelength_nm: float = 1543.656
    pulse_width_ns: float = 2.0
    bin_delay_ns: float = 13.0
    repetition_rate_mhz: float = 50.0
    peak_power_mw: float = 0.35
    rf_frequency_ghz: float = 18.25
    free_carrier_lifetime_ns: float = 10.0

    def __post_init__(self):
        for name in ("wavelength_nm", "pulse_width_ns", "bin_delay_ns", "repetition_rate_mhz",
                     "rf_frequency_ghz", "free_carrier_lifetime_ns"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.peak_power_mw < 0:
            raise ValueError("peak_power_mw must be non-negative")

    def design_flags(self) -> dict[str, bool]:
        """Timing conditions the pulse pattern is meant to satisfy."""
        tbp, distinct = time_bandwidth_product(self)
        return {
            "delay_exceeds_fc_lifetime": self.bin_delay_ns > self.free_carrier_lifetime_ns,
            "pulse_much_shorter_than_fc_lifetime": self.pulse_width_ns <= 0.2 * self.free_carrier_lifetime_ns,
            "dofs_distinct": distinct,
        }


@dataclass(frozen=True)
class Budget:
    brightness_hz_per_mw2_ghz: float = 1.5e7
    coupling_loss_per_facet_db: float = 3.5
    analyzer_loss_db: float = 0.0
    detector_efficiency: float = 1.0
    coincidence_window_ns: float = 1.0
    car: float = 30.0

    def __post_init__(self):
        if self.coupling_loss_per_facet_db < 0 or self.analyzer_loss_db < 0:
            raise ValueError("losses must be non-negative")
        if not 0 < self.detector_efficiency <= 1:
            raise ValueError("detector_efficiency must lie in (0, 1]")
        if not self.car > 0:
            raise ValueError("car must be positive")
        if not self.brightness_hz_per_mw2_ghz >= 0:
            raise ValueError("brightness must be non-negative")


def fsr(ring: RingParams) -> float:
    """Free spectral range in GHz, c / (n_g * 2 pi R)."""
    return SPEED_OF_LIGHT / (ring.group_index * 2 * math.pi * ring.radius_um * 1e-6) / 1e9


def group_index_for_fsr(radius_um: float, fsr_ghz: float) -> float:
    return SPEED_OF_LIGHT / (2 * math.pi * radius_um * 1e-6 * fsr_ghz * 1e9)


def optical_frequency_ghz(wavelength_nm: float) -> float:
    return SPEED_OF_LIGHT / (wavelength_nm * 1e-9) / 1e9


def linewidth(ring: RingParams) -> float:
    """Loaded-Q full width at half maximum in GHz."""
    return optical_frequency_ghz(ring.resonance_wavelength_nm) / ring.quality_factor


def bin_crosstalk(linewidth_ghz: float, bin_spacing_ghz: float) -> float:
    """Lorentzian intensity at a detuning of one bin spacing, relative to the peak."""
    if linewidth_ghz <= 0:
        raise ValueError("linewidth must be positive")
    return 1.0 / (1.0 + (2.0 * bin_spacing_ghz / linewidth_ghz) ** 2)


def time_bandwidth_product(pump: PumpParams) -> tuple[float, bool]:
    product = pump.rf_frequency_ghz * pump.pulse_width_ns
    return product, product > DISTINCT_DOF_PRODUCT


def lorentzian_overlap(detuning_ghz: float, linewidth1_ghz: float, linewidth2_ghz: float) -> complex:
    """Normalized overlap of two Lorentzian amplitude profiles.

    Profiles are ``1 / (gamma/2 - i (nu - nu_j))`` with FWHM ``gamma``; the
    closed form follows from a single residue.
    """
    if linewidth1_ghz <= 0 or linewidth2_ghz <= 0:
        raise ValueError("linewidths must be positive")
    g1, g2 = 0.5 * linewidth1_ghz, 0.5 * linewidth2_ghz
    return 2 * math.sqrt(g1 * g2) / (g1 + g2 - 1j * detuning_ghz)


def spectral_indistinguishability(detuning_s: float, detuning_i: float,
                                  linewidth1: float, linewidth2: float) -> float:
    """Two-photon coherence between the pairs emitted by the two rings.

    Product of the signal and idler single-photon overlap magnitudes.
    """
    return (abs(lorentzian_overlap(detuning_s, linewidth1, linewidth2))
            * abs(lorentzian_overlap(detuning_i, linewidth1, linewidth2)))


def lorentzian_transmission(detuning_ghz, linewidth_ghz: float, extinction: float = 0.9):
    """All-pass dip shape used for spectra plots: 1 - extinction * L(detuning)."""
    x = 2.0 * (detuning_ghz / linewidth_ghz)
    return 1.0 - extinction / (1.0 + x * x)


def car_to_white_noise(car: float) -> float:
    if not car > 0:
        raise ValueError("car must be positive")
    if math.isinf(car):
        return 0.0
    return 1.0 / (1.0 + car)


def db_to_transmission(db: float) -> float:
    return 10.0 ** (-db / 10.0)


def pair_rate_budget(pump: PumpParams, ring: RingParams, budget: Budget,
                     n_rings: int = 2) -> tuple[float, float]:
    """Return ``(generated_rate_on_chip, detected_coincidence_rate)`` in Hz.

    Generated rate is brightness * P_peak^2 * linewidth * duty cycle * n_rings
    with duty cycle 2 * t_w * f_rep (two pulses per period). Detection applies
    the output facet loss, the analyzer loss and the detector efficiency to
    each photon of the pair; the input facet is already accounted for because
    the peak power is the in-bus value.
    """
    duty = 2.0 * pump.pulse_width_ns * 1e-9 * pump.repetition_rate_mhz * 1e6
    generated = (budget.brightness_hz_per_mw2_ghz * pump.peak_power_mw ** 2
                 * linewidth(ring) * duty * n_rings)
    per_photon = (db_to_transmission(budget.coupling_loss_per_facet_db)
                  * db_to_transmission(budget.analyzer_loss_db)
                  * budget.detector_efficiency)
    return generated, generated * per_photon ** 2


def device_summary(ring1: RingParams, ring2: RingParams, pump: PumpParams, budget: Budget,
                   measured_on_chip_rate_hz: float = 4.7e3) -> dict:
    """Derived device numbers, with the reference claims they are checked against."""
    lw = linewidth(ring1)
    tbp, distinct = time_bandwidth_product(pump)
    generated, detected = pair_rate_budget(pump, ring1, budget)
    ratio = pump.rf_frequency_ghz / lw
    return {
        "fsr_ghz": fsr(ring1),
        "fsr_ring2_ghz": fsr(ring2),
        "linewidth_ghz": lw,
        "linewidth_ring2_ghz": linewidth(ring2),
        "bin_spacing_ghz": pump.rf_frequency_ghz,
        "spacing_to_linewidth_ratio": ratio,
        "claimed_spacing_to_linewidth_ratio": 100.0,
        # the claimed "about 100x" does not follow from Q ~ 1e5 at 194 THz
        "ratio_claim_consistent": bool(abs(math.log10(ratio / 100.0)) < 0.5),
        "bin_crosstalk": bin_crosstalk(lw, pump.rf_frequency_ghz),
        "time_bandwidth_product": tbp,
        "dofs_distinct": distinct,
        "design_flags": pump.design_flags(),
        "white_noise_fraction": car_to_white_noise(budget.car),
        "generated_pair_rate_hz": generated,
        "detected_coincidence_rate_hz": detected,
        "measured_on_chip_rate_hz": measured_on_chip_rate_hz,
        "rate_convention": "brightness * peak_power^2 * linewidth * (2 * t_w * f_rep) * n_rings; "
                           "detection: (facet * analyzer * efficiency)^2",
    }
