"""Entanglement figures of merit: CHSH, fringe visibility, stabilizers and the HE witness."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .analyzers import STABILIZERS, outcome_sign, stabilizer_plan, stabilizer_settings
from .counts import CountRecord, RunSeed
from .hilbert import PAULIS, DensityMatrix, eig_hermitian, expectation, fidelity_pure, purity
from .state import bell_phi_plus

TSIRELSON = 2 * math.sqrt(2)
CHSH_LOCAL_BOUND = 2.0
WITNESS_BOUND = 0.0


def correlation_matrix(rho: DensityMatrix) -> np.ndarray:
    """T_ij = Tr[rho sigma_i (x) sigma_j] for i, j in (x, y, z)."""
    if rho.dim != 4:
        raise ValueError("correlation matrix needs a two-qubit state")
    return np.array([[np.trace(rho.matrix @ np.kron(PAULIS[i], PAULIS[j])).real
                      for j in (1, 2, 3)] for i in (1, 2, 3)])


def chsh_horodecki(rho: DensityMatrix) -> float:
    """Maximal CHSH value over all measurement directions, 2 sqrt(l1 + l2)."""
    t = correlation_matrix(rho)
    lam, _ = eig_hermitian(t.T @ t)
    return 2.0 * math.sqrt(max(lam[0] + lam[1], 0.0))


def direction(spec) -> np.ndarray:
    """Bloch unit vector from an x-z plane angle, a (polar, azimuth) pair, or a 3-vector."""
    arr = np.atleast_1d(np.asarray(spec, dtype=float))
    if arr.size == 1:
        return np.array([math.sin(arr[0]), 0.0, math.cos(arr[0])])
    if arr.size == 2:
        th, ph = arr
        return np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])
    if arr.size == 3:
        return arr / np.linalg.norm(arr)
    raise ValueError(f"cannot read a measurement direction from {spec!r}")


def correlator(rho: DensityMatrix, a, b) -> float:
    va, vb = direction(a), direction(b)
    op_a = sum(c * p for c, p in zip(va, PAULIS[1:]))
    op_b = sum(c * p for c, p in zip(vb, PAULIS[1:]))
    return float(np.trace(rho.matrix @ np.kron(op_a, op_b)).real)


def chsh_fixed_angles(rho: DensityMatrix, angles: Sequence) -> float:
    """E(a,b) - E(a,b') + E(a',b) + E(a',b') for directions (a, a', b, b')."""
    if len(angles) != 4:
        raise ValueError("need four measurement directions (a, a', b, b')")
    a, a2, b, b2 = angles
    return (correlator(rho, a, b) - correlator(rho, a, b2)
            + correlator(rho, a2, b) + correlator(rho, a2, b2))


def fit_fringe(samples: Iterable[tuple[float, float]]) -> tuple[float, float, float]:
    """Least-squares fit of rate = A (1 + V cos(phase + phase0)); returns (A, V, phase0)."""
    data = np.asarray(list(samples), dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("fringe samples must be (phase, rate) pairs")
    phases = np.mod(data[:, 0], 2 * math.pi)
    if len(np.unique(np.round(phases, 12))) < 4:
        raise ValueError("need at least 4 distinct phases to fit a fringe")
    design = np.column_stack([np.ones_like(phases), np.cos(phases), np.sin(phases)])
    (c0, c1, c2), *_ = np.linalg.lstsq(design, data[:, 1], rcond=None)
    amp = math.hypot(c1, c2)
    if c0 <= 0:
        raise ValueError("fringe mean rate must be positive")
    return float(c0), float(amp / c0), float(math.atan2(-c2, c1))


def visibility_from_fringe(samples: Iterable[tuple[float, float]]) -> float:
    """(max - min) / (max + min) of the fitted cosine."""
    return fit_fringe(samples)[1]


def witness(stabilizer_values: Sequence[float], d: int = 2) -> float:
    """W = (N - 1) - sum_k S_k with N = 2 d; negative means hyperentangled."""
    if d < 2:
        raise ValueError("the witness needs at least two degrees of freedom")
    if len(stabilizer_values) != 2 * d:
        raise ValueError(f"expected {2 * d} stabilizer values, got {len(stabilizer_values)}")
    return (2 * d - 1) - float(sum(stabilizer_values))


def violation_stds(value: float, threshold: float, std: float, above: bool = True) -> float:
    """Distance past ``threshold`` in units of ``std``; negative when not violated.

    ``above=True`` counts values larger than the threshold as violations (CHSH),
    ``above=False`` counts smaller ones (witness).
    """
    if not std > 0:
        raise ValueError("std must be positive")
    return ((value - threshold) if above else (threshold - value)) / std


# -- stabilizers from counts --------------------------------------------------

def stabilizer_values_exact(rho_full: DensityMatrix) -> list[float]:
    return [expectation(rho_full, obs) for obs in stabilizer_plan()]


def _stabilizer_arrays(records: Iterable[CountRecord], realistic: bool, subtract: bool):
    by_label = {r.label: r for r in records}
    out = {}
    for name, settings in stabilizer_settings(realistic).items():
        missing = [s.label for s in settings if s.label not in by_label]
        if missing:
            raise KeyError(f"stabilizer counts missing: {missing}")
        recs = [by_label[s.label] for s in settings]
        n = np.array([r.coincidences for r in recs], dtype=float)
        a = np.array([r.accidentals for r in recs], dtype=float) if subtract else np.zeros(len(recs))
        exposure = np.array([r.integration_time * s.weight for s, r in zip(settings, recs)])
        signs = np.array([outcome_sign(s.outcome_label) for s in settings], dtype=float)
        out[name] = (n, a, exposure, signs)
    return out


def _stabilizer_estimate(n, a, exposure, signs) -> float:
    rates = np.clip(n - a, 0.0, None) / exposure
    total = rates.sum()
    return float(np.dot(signs, rates) / total) if total > 0 else 0.0


def estimate_stabilizers(records: Iterable[CountRecord], realistic: bool = False,
                         subtract_accidentals: bool = True) -> dict[str, float]:
    """Parity estimate of each stabilizer from its four coincidence outcomes."""
    arrays = _stabilizer_arrays(records, realistic, subtract_accidentals)
    return {name: _stabilizer_estimate(*arrays[name]) for name, _, _ in STABILIZERS}


def stabilizer_error(records: Iterable[CountRecord], n_resamples: int = 200, seed: RunSeed = RunSeed(0),
                     realistic: bool = False, subtract_accidentals: bool = True):
    """Poisson-resampled standard deviations of the stabilizers and the witness."""
    from .tomo import ErrorEstimate

    arrays = _stabilizer_arrays(records, realistic, subtract_accidentals)
    names = [name for name, _, _ in STABILIZERS]
    samples = []
    for j in range(n_resamples):
        rng = seed.rng(j)
        values = {}
        for name in names:
            n, a, exposure, signs = arrays[name]
            values[name] = _stabilizer_estimate(rng.poisson(n).astype(float), a, exposure, signs)
        values["witness"] = witness([values[k] for k in names])
        samples.append(values)
    keys = names + ["witness"]
    std = {k: float(np.std([s[k] for s in samples], ddof=1)) for k in keys}
    mean = {k: float(np.mean([s[k] for s in samples])) for k in keys}
    return ErrorEstimate(std, mean, n_resamples)


# -- report -------------------------------------------------------------------

@dataclass(frozen=True)
class DofMerits:
    fidelity: float
    purity: float
    s_parameter: float
    s_std: float | None = None
    fidelity_std: float | None = None
    purity_std: float | None = None
    violation_stds_chsh: float | None = None
    visibility: float | None = None


@dataclass(frozen=True)
class MeritReport:
    tb: DofMerits
    fb: DofMerits
    stabilizers: tuple[float, float, float, float]
    witness: float
    stabilizer_stds: tuple[float, float, float, float] | None = None
    witness_std: float | None = None
    violation_stds_witness: float | None = None
    hyperentangled: bool = False

    def __post_init__(self):
        for row in (self.tb, self.fb):
            if not (-1e-9 <= row.fidelity <= 1 + 1e-9 and -1e-9 <= row.purity <= 1 + 1e-9):
                raise ValueError("fidelity and purity must lie in [0, 1]")
            if not 0 <= row.s_parameter <= TSIRELSON + 1e-9:
                raise ValueError(f"S = {row.s_parameter} outside [0, 2 sqrt 2]")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["stabilizers"] = list(self.stabilizers)
        if self.stabilizer_stds is not None:
            out["stabilizer_stds"] = list(self.stabilizer_stds)
        return out


def _dof_row(rho: DensityMatrix, errors, visibility: float | None) -> DofMerits:
    fid = fidelity_pure(rho, bell_phi_plus(rho.layout))
    s = chsh_horodecki(rho)
    std = errors.std if errors is not None else {}
    s_std = std.get("s_parameter")
    return DofMerits(
        fidelity=fid,
        purity=purity(rho),
        s_parameter=s,
        s_std=s_std,
        fidelity_std=std.get("fidelity"),
        purity_std=std.get("purity"),
        violation_stds_chsh=violation_stds(s, CHSH_LOCAL_BOUND, s_std) if s_std else None,
        visibility=visibility,
    )


def merit_report(rho_tb: DensityMatrix, rho_fb: DensityMatrix, rho_full: DensityMatrix | None = None,
                 errors: Mapping[str, object] | None = None,
                 stabilizers: Sequence[float] | None = None,
                 visibilities: Mapping[str, float] | None = None) -> MeritReport:
    """Collect every figure of merit into one report.

    Stabilizers come from ``rho_full`` when given, else from ``stabilizers``.
    ``errors`` maps "TB", "FB" and "stabilizers" to error estimates.
    """
    errors = errors or {}
    visibilities = visibilities or {}
    if rho_full is not None:
        values = stabilizer_values_exact(rho_full)
    elif stabilizers is not None:
        values = list(stabilizers)
    else:
        raise ValueError("need rho_full or measured stabilizer values")
    w = witness(values)
    stab_err = errors.get("stabilizers")
    stds = tuple(stab_err.std[name] for name, _, _ in STABILIZERS) if stab_err is not None else None
    w_std = stab_err.std["witness"] if stab_err is not None else None
    return MeritReport(
        tb=_dof_row(rho_tb, errors.get("TB"), visibilities.get("TB")),
        fb=_dof_row(rho_fb, errors.get("FB"), visibilities.get("FB")),
        stabilizers=tuple(values),
        witness=w,
        stabilizer_stds=stds,
        witness_std=w_std,
        violation_stds_witness=violation_stds(w, WITNESS_BOUND, w_std, above=False) if w_std else None,
        hyperentangled=w < WITNESS_BOUND,
    )
