"""Expected and sampled coincidence counts, with a flat accidental floor."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from itertools import groupby
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analyzers import ProjectorSetting, TBSetting, tb_all_bin_elements
from .hilbert import DensityMatrix
from .state import marginal

CSV_COLUMNS = ("setting_label", "outcome_label", "t_s", "expected_rate_hz", "counts", "accidentals")


@dataclass(frozen=True)
class RunSeed:
    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.stream < 0:
            raise ValueError("stream index must be non-negative")

    def rng(self, *sub: int) -> np.random.Generator:
        """Independent generator for ``(seed, stream, *sub)``; scheduling cannot change it."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, *sub))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, stream: int) -> "RunSeed":
        return RunSeed(self.seed, stream)


@dataclass(frozen=True)
class CountRecord:
    setting_label: str
    outcome_label: str
    integration_time: float
    expected_rate: float
    coincidences: float
    accidentals: float = 0.0
    arrival_bins: tuple[int, int] | None = None

    def __post_init__(self):
        if self.coincidences < 0 or self.accidentals < 0:
            raise ValueError(f"{self.label}: counts must be non-negative")
        if self.expected_rate < 0:
            raise ValueError(f"{self.label}: expected rate must be non-negative")
        if not self.integration_time > 0:
            raise ValueError(f"{self.label}: integration time must be positive")

    @property
    def label(self) -> str:
        return f"{self.setting_label}:{self.outcome_label}"


def _rho_for(rho: DensityMatrix, setting: ProjectorSetting) -> np.ndarray:
    return setting.operator_for(rho.layout)


def expected_coincidence_rate(rho: DensityMatrix, setting: ProjectorSetting, pair_rate: float) -> float:
    """pair_rate * weight * Tr[rho P] for the DoF marginal or the full state."""
    if pair_rate < 0:
        raise ValueError("pair rate must be non-negative")
    prob = float(np.trace(rho.matrix @ _rho_for(rho, setting)).real)
    return pair_rate * setting.weight * max(prob, 0.0)


def accidental_rate(expected: float, car: float) -> float:
    """Accidental rate for a mean signal rate ``expected`` at a given CAR."""
    if not car > 0:
        raise ValueError("car must be positive")
    return 0.0 if math.isinf(car) else expected / car


def sample_counts(expected_rate: float, t: float, seed: RunSeed | np.random.Generator) -> int:
    """Poisson draw with mean expected_rate * t."""
    if expected_rate < 0 or t < 0:
        raise ValueError("rate and integration time must be non-negative")
    rng = seed.rng() if isinstance(seed, RunSeed) else seed
    return int(rng.poisson(expected_rate * t))


def simulate_group(rho: DensityMatrix, settings: Sequence[ProjectorSetting], pair_rate: float,
                   t: float, car: float, rng: np.random.Generator | None) -> list[CountRecord]:
    """Counts for the outcomes of one setting; ``rng=None`` writes the expected values.

    Accidentals form a flat floor across the outcomes whose total equals the
    total signal divided by the CAR.
    """
    rates = [expected_coincidence_rate(rho, s, pair_rate) for s in settings]
    floor = accidental_rate(sum(rates) / len(rates), car)
    out = []
    for s, rate in zip(settings, rates):
        if rng is None:
            acc = floor * t
            total = rate * t + acc
        else:
            acc = sample_counts(floor, t, rng)
            total = sample_counts(rate, t, rng) + acc
        out.append(CountRecord(s.setting_label, s.outcome_label, t, rate, total, acc, s.bins))
    return out


def simulate_records(rho: DensityMatrix, settings: Iterable[ProjectorSetting], pair_rate: float,
                     t: float, seed: RunSeed, car: float = math.inf,
                     noiseless: bool = False) -> list[CountRecord]:
    """Counts for a list of settings, grouped by setting label.

    Group ``k`` draws from the stream ``(seed, k)`` so every group is
    reproducible on its own.
    """
    out = []
    for k, (_, group) in enumerate(groupby(settings, key=lambda s: s.setting_label)):
        rng = None if noiseless else seed.rng(k)
        out += simulate_group(rho, list(group), pair_rate, t, car, rng)
    return out


def expected_arrival_grid(rho: DensityMatrix, setting: TBSetting, pair_rate: float) -> np.ndarray:
    """Expected 3x3 coincidence rates over arrival bins {0, tau, 2tau} per photon."""
    rho_tb = rho if rho.dim == 4 else marginal(rho, "TB")
    grid = np.zeros((3, 3))
    for bs, ks, ws in tb_all_bin_elements(setting.phase_s):
        for bi, ki, wi in tb_all_bin_elements(setting.phase_i):
            ket = np.kron(ks, ki)
            grid[bs, bi] = pair_rate * ws * wi * float(np.vdot(ket, rho_tb.matrix @ ket).real)
    return grid


def arrival_histogram(rho: DensityMatrix, setting: TBSetting, pair_rate: float, t: float,
                      seed: RunSeed, car: float = math.inf) -> np.ndarray:
    """Sampled 3x3 arrival-time coincidence histogram for one interferometer setting."""
    grid = expected_arrival_grid(rho, setting, pair_rate)
    floor = accidental_rate(grid.mean(), car)
    rng = seed.rng()
    return rng.poisson((grid + floor) * t)


# -- CSV ---------------------------------------------------------------------

def _fmt(x: float) -> str:
    if isinstance(x, (int, np.integer)) or float(x).is_integer():
        return str(int(x))
    return repr(float(x))


def write_counts_csv(path: str | Path | None, records: Iterable[CountRecord],
                     header: dict | None = None) -> str:
    """Write records as CSV; ``header`` is echoed on a leading ``#`` comment line."""
    buf = io.StringIO()
    if header is not None:
        buf.write("# config: " + json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([r.setting_label, r.outcome_label, _fmt(r.integration_time),
                    repr(float(r.expected_rate)), _fmt(r.coincidences), _fmt(r.accidentals)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_counts_csv(path: str | Path) -> tuple[list[CountRecord], dict | None]:
    header = None
    lines = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# config: "):
            header = json.loads(line[len("# config: "):])
        elif line.startswith("#") or not line.strip():
            continue
        else:
            lines.append(line)
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
        raise ValueError(f"counts CSV must have columns {CSV_COLUMNS}, got {reader.fieldnames}")
    records = [CountRecord(row["setting_label"], row["outcome_label"], float(row["t_s"]),
                           float(row["expected_rate_hz"]), float(row["counts"]), float(row["accidentals"]))
               for row in reader]
    return records, header
