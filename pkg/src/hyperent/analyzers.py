"""Analyzer settings to projectors, and the measurement plans built from them.

Time-bin analyzer: an unbalanced Mach-Zehnder with delay equal to the pulse
separation and a programmable phase in the long arm. One output port is
detected, so each photon lands in one of three arrival bins {0, tau, 2tau}.
Tracing the four (pulse, arm) paths through two 50:50 couplers gives the
per-photon detection operators

    bin 0     : 1/4 |e><e|
    bin tau   : 1/2 |phi><phi|,  |phi> = (|e> + exp(i theta)|l>) / sqrt(2)
    bin 2tau  : 1/4 |l><l|

Frequency-bin analyzer: with the RF off, a tunable filter picks one bin.
With the RF on, the phase modulator scatters bin 0 into bin 1 through the
first sideband (amplitude J1) while bin 1 keeps its carrier (amplitude J0),
so the filtered bin sees a superposition whose relative phase is the RF phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np
from scipy.optimize import brentq
from scipy.special import jv

from .hilbert import CANONICAL, SX, SZ, Observable, SubsystemLayout, embed
from .state import DOF_LAYOUTS

BASES = ("Z", "X", "Y")
TWO_PI = 2 * math.pi
# canonical phase of each superposition eigenstate
EIGEN_PHASES = {("X", "+"): 0.0, ("X", "-"): math.pi,
                ("Y", "+"): math.pi / 2, ("Y", "-"): 3 * math.pi / 2}
TB_BIN_NAMES = ("0", "tau", "2tau")
TB_SIDE_WEIGHT = 0.25
TB_MIDDLE_WEIGHT = 0.5


class AnalyzerError(ValueError):
    """Raised for an analyzer configuration that cannot realize the request."""


def _wrap(phase: float) -> float:
    wrapped = math.fmod(phase, TWO_PI)
    if wrapped < 0:
        wrapped += TWO_PI
    return 0.0 if math.isclose(wrapped, TWO_PI) else wrapped


def superposition_ket(phase: float) -> np.ndarray:
    return np.array([1.0, np.exp(1j * phase)]) / math.sqrt(2)


def _phase_label(basis: str, phase: float) -> str:
    for (b, sign), ref in EIGEN_PHASES.items():
        if b == basis and math.isclose(phase, ref, abs_tol=1e-12):
            return sign
    return f"{basis}({phase:.6f})"


@lru_cache(maxsize=None)
def equalization_index() -> float:
    """Modulation index where carrier and first sideband carry equal power."""
    return brentq(lambda d: jv(0, d) - jv(1, d), 1.0, 2.0, xtol=1e-14)


def sideband_efficiency(modulation_index: float) -> float:
    """Power left in the carrier, |J0(delta)|^2; equal to the sideband power at equalization."""
    return float(jv(0, modulation_index) ** 2)


@dataclass(frozen=True, eq=False)
class ProjectorSetting:
    """One measurement outcome: a rank-1 projector on a DoF and its post-selection weight.

    ``local`` lives on the two-photon space of ``dof``; ``projector`` extends it
    by identity on the other DoF, which is how the other DoF gets traced out.
    """

    setting_label: str
    outcome_label: str
    dof: str
    local: np.ndarray
    weight: float
    bins: tuple[int, int] | None = None

    def __post_init__(self):
        local = np.array(self.local, dtype=complex)
        local.setflags(write=False)
        object.__setattr__(self, "local", local)
        if not 0 < self.weight <= 1:
            raise AnalyzerError(f"weight {self.weight} outside (0, 1]")
        if np.max(np.abs(local @ local - local)) > 1e-9:
            raise AnalyzerError(f"{self.label} projector is not idempotent")

    @property
    def label(self) -> str:
        return f"{self.setting_label}:{self.outcome_label}"

    @property
    def layout(self) -> SubsystemLayout:
        return DOF_LAYOUTS[self.dof]

    @property
    def projector(self) -> Observable:
        return Observable(embed(self.local, self.layout, CANONICAL), CANONICAL)

    def operator_for(self, layout: SubsystemLayout) -> np.ndarray:
        """The projector matrix acting on ``layout`` (the DoF itself or the full space)."""
        if layout == self.layout:
            return self.local
        return embed(self.local, self.layout, layout)


# -- time bin -----------------------------------------------------------------

@dataclass(frozen=True)
class TBSetting:
    basis_s: str
    basis_i: str
    phase_s: float = 0.0
    phase_i: float = 0.0
    bins: tuple[int, int] | None = None

    def __post_init__(self):
        for b in (self.basis_s, self.basis_i):
            if b not in BASES:
                raise AnalyzerError(f"invalid basis {b!r}")
        for b, ph in ((self.basis_s, self.phase_s), (self.basis_i, self.phase_i)):
            if not 0.0 <= ph < TWO_PI:
                raise AnalyzerError(f"phase {ph} outside [0, 2pi)")
            if b == "Z" and ph != 0.0:
                raise AnalyzerError("Z-basis analysis carries no interferometer phase")
        if self.bins is not None and any(b not in (0, 1, 2) for b in self.bins):
            raise AnalyzerError(f"arrival bins must be in {{0, 1, 2}}, got {self.bins}")


def tb_photon_elements(basis: str, phase: float) -> list[tuple[int, str, np.ndarray, float]]:
    """(arrival bin, outcome label, ket, weight) for one photon through the interferometer."""
    if basis == "Z":
        return [(0, "0", np.array([1.0, 0.0]), TB_SIDE_WEIGHT),
                (2, "1", np.array([0.0, 1.0]), TB_SIDE_WEIGHT)]
    if basis in ("X", "Y"):
        return [(1, _phase_label(basis, phase), superposition_ket(phase), TB_MIDDLE_WEIGHT)]
    raise AnalyzerError(f"invalid basis {basis!r}")


def tb_all_bin_elements(phase: float) -> list[tuple[int, np.ndarray, float]]:
    """All three arrival bins of one photon at a given long-arm phase."""
    return [(0, np.array([1.0, 0.0]), TB_SIDE_WEIGHT),
            (1, superposition_ket(phase), TB_MIDDLE_WEIGHT),
            (2, np.array([0.0, 1.0]), TB_SIDE_WEIGHT)]


def tb_projectors(setting: TBSetting, setting_label: str | None = None) -> list[ProjectorSetting]:
    """Coincidence projectors realized by a time-bin analyzer setting.

    Z outcomes come from the side bins, (0,0) -> |ee>, (2tau,2tau) -> |ll>,
    (0,2tau) -> |el>, (2tau,0) -> |le>; superposition outcomes come from the
    middle bin where the two paths interfere.
    """
    label = setting_label or f"TB:{setting.basis_s}{setting.basis_i}"
    out = []
    for (bs, ls, ks, ws), (bi, li, ki, wi) in product(
            tb_photon_elements(setting.basis_s, setting.phase_s),
            tb_photon_elements(setting.basis_i, setting.phase_i)):
        if setting.bins is not None and (bs, bi) != tuple(setting.bins):
            continue
        ket = np.kron(ks, ki)
        out.append(ProjectorSetting(label, ls + li, "TB", np.outer(ket, ket.conj()), ws * wi, (bs, bi)))
    return out


# -- frequency bin ------------------------------------------------------------

@dataclass(frozen=True)
class FBSetting:
    basis_s: str
    basis_i: str
    rf_phase_s: float = 0.0
    rf_phase_i: float = 0.0
    rf_on_s: bool | None = None
    rf_on_i: bool | None = None
    modulation_index: float = field(default_factory=equalization_index)
    realistic: bool = False
    filter_transmission: float = 1.0
    bins: tuple[int, int] | None = None

    def __post_init__(self):
        if self.modulation_index < 0:
            raise AnalyzerError("modulation_index must be non-negative")
        if not 0 < self.filter_transmission <= 1:
            raise AnalyzerError("filter_transmission must lie in (0, 1]")
        for side in ("s", "i"):
            basis = getattr(self, f"basis_{side}")
            if basis not in BASES:
                raise AnalyzerError(f"invalid basis {basis!r}")
            rf_on = getattr(self, f"rf_on_{side}")
            if rf_on is None:
                object.__setattr__(self, f"rf_on_{side}", basis != "Z")
            elif basis == "Z" and rf_on:
                raise AnalyzerError("Z-basis analysis runs with the RF off")
            elif basis != "Z" and not rf_on:
                raise AnalyzerError(f"RF off but superposition basis {basis} requested")
            phase = getattr(self, f"rf_phase_{side}")
            if not 0.0 <= phase < TWO_PI:
                raise AnalyzerError(f"RF phase {phase} outside [0, 2pi)")


def fb_photon_elements(basis: str, rf_phase: float, modulation_index: float,
                       realistic: bool, filter_transmission: float = 1.0):
    """(selected bin, outcome label, ket, weight) for one photon through the FB analyzer."""
    if basis == "Z":
        return [(0, "0", np.array([1.0, 0.0]), filter_transmission),
                (1, "1", np.array([0.0, 1.0]), filter_transmission)]
    if basis not in ("X", "Y"):
        raise AnalyzerError(f"invalid basis {basis!r}")
    if not realistic:
        return [(1, _phase_label(basis, rf_phase), superposition_ket(rf_phase), filter_transmission)]
    a0, a1 = float(jv(1, modulation_index)), float(jv(0, modulation_index))
    vec = np.array([a0, a1 * np.exp(1j * rf_phase)])
    norm2 = float(np.vdot(vec, vec).real)
    return [(1, _phase_label(basis, rf_phase), vec / math.sqrt(norm2), norm2 * filter_transmission)]


def fb_projectors(setting: FBSetting, setting_label: str | None = None) -> list[ProjectorSetting]:
    label = setting_label or f"FB:{setting.basis_s}{setting.basis_i}"
    out = []
    for (bs, ls, ks, ws), (bi, li, ki, wi) in product(
            fb_photon_elements(setting.basis_s, setting.rf_phase_s, setting.modulation_index,
                               setting.realistic, setting.filter_transmission),
            fb_photon_elements(setting.basis_i, setting.rf_phase_i, setting.modulation_index,
                               setting.realistic, setting.filter_transmission)):
        if setting.bins is not None and (bs, bi) != tuple(setting.bins):
            continue
        ket = np.kron(ks, ki)
        out.append(ProjectorSetting(label, ls + li, "FB", np.outer(ket, ket.conj()), ws * wi, (bs, bi)))
    return out


# -- plans --------------------------------------------------------------------

def _eigen_phases(basis: str) -> list[float]:
    if basis == "Z":
        return [0.0]
    return [EIGEN_PHASES[(basis, "+")], EIGEN_PHASES[(basis, "-")]]


def basis_pair_settings(dof: str, basis_s: str, basis_i: str, realistic: bool = False,
                        prefix: str = "") -> list[ProjectorSetting]:
    """The four outcome projectors of one basis pair, in ++ +- -+ -- order."""
    setting_label = f"{prefix}{dof}:{basis_s}{basis_i}"
    out = []
    for ph_s in _eigen_phases(basis_s):
        for ph_i in _eigen_phases(basis_i):
            if dof == "TB":
                out += tb_projectors(TBSetting(basis_s, basis_i, ph_s, ph_i), setting_label)
            elif dof == "FB":
                out += fb_projectors(FBSetting(basis_s, basis_i, ph_s, ph_i, realistic=realistic),
                                     setting_label)
            else:
                raise AnalyzerError(f"unknown degree of freedom {dof!r}")
    return out


def tomography_plan(dof: str, realistic: bool = False) -> list[ProjectorSetting]:
    """All 36 products of single-photon Z, X, Y eigenstates on one DoF."""
    plan = []
    for bs in BASES:
        for bi in BASES:
            plan += basis_pair_settings(dof, bs, bi, realistic)
    return plan


STABILIZERS = (("S1", "TB", SX), ("S2", "TB", SZ), ("S3", "FB", SX), ("S4", "FB", SZ))


def stabilizer_plan() -> list[Observable]:
    """sigma_X sigma_X and sigma_Z sigma_Z on each DoF, identity-extended to 16 dims."""
    return [Observable(embed(np.kron(p, p), DOF_LAYOUTS[dof], CANONICAL), CANONICAL)
            for _, dof, p in STABILIZERS]


def stabilizer_settings(realistic: bool = False) -> dict[str, list[ProjectorSetting]]:
    """Outcome projectors used to estimate each stabilizer from coincidences."""
    out = {}
    for name, dof, pauli in STABILIZERS:
        basis = "X" if pauli is SX else "Z"
        out[name] = basis_pair_settings(dof, basis, basis, realistic, prefix=f"{name}:")
    return out


def outcome_sign(outcome_label: str) -> int:
    """Eigenvalue of the product Pauli for a two-character outcome label."""
    sign = 1
    for ch in outcome_label:
        if ch in ("1", "-"):
            sign = -sign
    return sign


def sweep_settings(dof: str, phases, realistic: bool = False) -> list[ProjectorSetting]:
    """Two-photon fringe: signal superposition phase swept, idler phase fixed at 0."""
    out = []
    for ph in phases:
        ph = _wrap(float(ph))
        if dof == "TB":
            (ps,) = tb_projectors(TBSetting("X", "X", ph, 0.0), "SWEEP:TB")
        else:
            (ps,) = fb_projectors(FBSetting("X", "X", ph, 0.0, realistic=realistic), "SWEEP:FB")
        out.append(ProjectorSetting(ps.setting_label, f"{ph:.6f}", ps.dof, ps.local, ps.weight, ps.bins))
    return out
