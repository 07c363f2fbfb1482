"""Two-qubit state reconstruction from coincidence counts.

The maximum-likelihood estimator works on an unnormalized operator
``A = T^dagger T`` with ``T`` upper triangular (16 real parameters). The
trace of ``A`` is the global pair rate and ``rho = A / Tr A``, so the result
is positive semidefinite and unit trace by construction. Outcome ``k`` has
Poisson mean ``m_k = t_k w_k Tr[A P_k] + a_k`` where ``a_k`` is the known
accidental floor.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from .analyzers import ProjectorSetting, tomography_plan
from .counts import CountRecord, RunSeed
from .hilbert import PAULIS, DensityMatrix, Ket
from .state import DOF_LAYOUTS, bell_phi_plus

MAX_ITERATIONS = 100_000
DEFAULT_TOL = 1e-10
MIN_RESAMPLES = 100

_IU = np.triu_indices(4)
_OFF = _IU[0] != _IU[1]
_PAULI_BASIS = np.array([np.kron(a, b) for a in PAULIS for b in PAULIS])


class IncompleteDataError(ValueError):
    """The count data does not cover the measurement plan."""


@dataclass(frozen=True, eq=False)
class TomographyInput:
    dof: str
    pairs: tuple[tuple[ProjectorSetting, CountRecord], ...]
    subtract_accidentals: bool = True

    def __post_init__(self):
        # canonical order, so a permuted plan gives a bit-identical reconstruction
        object.__setattr__(self, "pairs", tuple(sorted(self.pairs, key=lambda pr: pr[0].label)))
        labels = [s.label for s, _ in self.pairs]
        if len(set(labels)) != len(labels):
            raise IncompleteDataError("duplicate settings in tomography input")
        for s, r in self.pairs:
            if s.label != r.label:
                raise IncompleteDataError(f"setting {s.label} paired with record {r.label}")
            if s.dof != self.dof:
                raise IncompleteDataError(f"setting {s.label} is not on {self.dof}")

    @property
    def projectors(self) -> np.ndarray:
        return np.array([s.local for s, _ in self.pairs])

    @property
    def exposure(self) -> np.ndarray:
        """Integration time times post-selection weight for each outcome."""
        return np.array([r.integration_time * s.weight for s, r in self.pairs])

    @property
    def counts(self) -> np.ndarray:
        return np.array([r.coincidences for _, r in self.pairs], dtype=float)

    @property
    def background(self) -> np.ndarray:
        if not self.subtract_accidentals:
            return np.zeros(len(self.pairs))
        return np.array([r.accidentals for _, r in self.pairs], dtype=float)

    def with_counts(self, counts: Sequence[float]) -> "TomographyInput":
        pairs = tuple((s, CountRecord(r.setting_label, r.outcome_label, r.integration_time,
                                      r.expected_rate, float(n), r.accidentals, r.arrival_bins))
                      for (s, r), n in zip(self.pairs, counts))
        return TomographyInput(self.dof, pairs, self.subtract_accidentals)


def build_input(dof: str, records: Iterable[CountRecord], realistic: bool = False,
                subtract_accidentals: bool = True,
                plan: Sequence[ProjectorSetting] | None = None) -> TomographyInput:
    """Pair every setting of the tomography plan with its count record."""
    plan = tomography_plan(dof, realistic) if plan is None else plan
    by_label: dict[str, CountRecord] = {}
    for r in records:
        if r.label in by_label:
            raise IncompleteDataError(f"setting {r.label} appears twice")
        by_label[r.label] = r
    missing = [s.label for s in plan if s.label not in by_label]
    if missing:
        raise IncompleteDataError(f"{len(missing)} plan settings missing, e.g. {missing[:3]}")
    return TomographyInput(dof, tuple((s, by_label[s.label]) for s in plan), subtract_accidentals)


def _probabilities(a: np.ndarray, projectors: np.ndarray) -> np.ndarray:
    return np.einsum("ij,kji->k", a, projectors).real


def linear_inversion(data: TomographyInput) -> np.ndarray:
    """Least-squares Hermitian estimate, trace-normalized; may have negative eigenvalues."""
    projectors = data.projectors
    design = np.einsum("jab,kba->kj", _PAULI_BASIS, projectors).real / 4.0
    if np.linalg.matrix_rank(design) < 16:
        raise IncompleteDataError("measurement plan is not informationally complete")
    y = (data.counts - data.background) / data.exposure
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    a = np.einsum("j,jab->ab", coef, _PAULI_BASIS) / 4.0
    a = 0.5 * (a + a.conj().T)
    tr = np.trace(a).real
    if tr <= 0:
        raise IncompleteDataError("linear inversion gives a non-positive total rate")
    return a / tr


def _unpack(x: np.ndarray) -> np.ndarray:
    t = np.zeros((4, 4), dtype=complex)
    t[_IU] = x[:10]
    t[_IU[0][_OFF], _IU[1][_OFF]] += 1j * x[10:]
    return t


def _pack(t: np.ndarray) -> np.ndarray:
    return np.concatenate([t[_IU].real, t[_IU[0][_OFF], _IU[1][_OFF]].imag])


def _psd_cholesky(a: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (a + a.conj().T))
    vals = np.clip(vals, 0.0, None) + 1e-6 * max(vals.max(), 1e-300)
    lower = np.linalg.cholesky((vecs * vals) @ vecs.conj().T)
    return lower.conj().T


class _PoissonModel:
    def __init__(self, data: TomographyInput):
        self.projectors = data.projectors
        self.exposure = data.exposure
        self.n = data.counts
        self.background = data.background
        self.pos = self.n > 0
        self.total = float(self.n.sum())
        n_pos = self.n[self.pos]
        # saturated log-likelihood; subtracting it keeps the objective O(1)
        self.saturated = float(np.sum(n_pos * np.log(n_pos)) - self.total)

    def means(self, a: np.ndarray) -> np.ndarray:
        return self.exposure * _probabilities(a, self.projectors) + self.background

    def log_likelihood(self, a: np.ndarray) -> float:
        m = np.maximum(self.means(a), 1e-300)
        return float(np.sum(self.n[self.pos] * np.log(m[self.pos])) - m.sum())

    def objective(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        t = _unpack(x)
        a = t.conj().T @ t
        m = np.maximum(self.means(a), 1e-300)
        ll = float(np.sum(self.n[self.pos] * np.log(m[self.pos])) - m.sum())
        g = np.einsum("k,kij->ij", (self.n / m - 1.0) * self.exposure, self.projectors)
        # dL = 2 Re Tr[G T^dagger dT]
        grad_t = 2.0 * (g @ t.conj().T).T
        grad = np.concatenate([grad_t[_IU].real, -grad_t[_IU[0][_OFF], _IU[1][_OFF]].imag])
        return -(ll - self.saturated) / self.total, -grad / self.total


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    rho_hat: DensityMatrix
    log_likelihood: float
    iterations: int
    converged: bool
    normalization_rate: float
    trace: tuple[float, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        m = self.rho_hat.matrix
        return {
            "labels": list(self.rho_hat.layout.labels),
            "rho_real": m.real.tolist(),
            "rho_imag": m.imag.tolist(),
            "log_likelihood": self.log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
            "normalization_rate_hz": self.normalization_rate,
        }


def mle_reconstruct(data: TomographyInput, tol: float = DEFAULT_TOL, warm_start: bool = False,
                    start: DensityMatrix | np.ndarray | None = None,
                    max_iterations: int = MAX_ITERATIONS) -> ReconstructionResult:
    """Poisson maximum-likelihood reconstruction.

    L-BFGS runs until no further progress is possible at machine precision or
    the iteration cap is reached; ``converged`` reports whether the final
    relative log-likelihood improvement is below ``tol`` within the cap. The
    default start is the maximally mixed state at the count-matched rate;
    ``warm_start`` uses the PSD projection of the linear-inversion estimate
    and ``start`` an explicit state instead.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    model = _PoissonModel(data)
    if model.total <= 0:
        raise ValueError("all counts are zero")
    if start is not None:
        rho0 = start.matrix if isinstance(start, DensityMatrix) else np.asarray(start, dtype=complex)
    elif warm_start:
        rho0 = linear_inversion(data)
    else:
        rho0 = None
    if rho0 is not None:
        t0 = _psd_cholesky(rho0)
        rho0 = t0.conj().T @ t0
        rho0 = rho0 / np.trace(rho0).real
    else:
        rho0 = np.eye(4, dtype=complex) / 4
    signal = max(model.total - model.background.sum(), 1e-12)
    rate0 = signal / max(float(np.sum(data.exposure * _probabilities(rho0, data.projectors))), 1e-300)
    x0 = _pack(_psd_cholesky(rate0 * rho0))

    trace = [-model.objective(x0)[0] * model.total + model.saturated]

    def record(xk):
        trace.append(-model.objective(xk)[0] * model.total + model.saturated)

    res = minimize(model.objective, x0, jac=True, method="L-BFGS-B", callback=record,
                   options={"ftol": 1e-16, "gtol": 1e-16, "maxiter": max_iterations,
                            "maxfun": 4 * max_iterations, "maxcor": 30})
    t = _unpack(res.x)
    a = t.conj().T @ t
    rate = float(np.trace(a).real)
    ll = model.log_likelihood(a)
    last_gain = abs(trace[-1] - trace[-2]) / max(abs(trace[-1]), 1.0) if len(trace) > 1 else 0.0
    converged = res.nit < max_iterations and last_gain < tol
    rho = DensityMatrix.from_unnormalized(a, DOF_LAYOUTS[data.dof])
    return ReconstructionResult(rho, ll, int(res.nit), bool(converged), rate, tuple(trace))


# -- Monte-Carlo error bars ---------------------------------------------------

@dataclass(frozen=True)
class ErrorEstimate:
    std: dict[str, float]
    mean: dict[str, float]
    n_resamples: int

    def __post_init__(self):
        if self.n_resamples < MIN_RESAMPLES:
            raise ValueError(f"need at least {MIN_RESAMPLES} resamples")
        if any(v < 0 for v in self.std.values()):
            raise ValueError("standard deviations must be non-negative")


def state_metrics(rho: DensityMatrix, target: Ket | None = None) -> dict[str, float]:
    from .hilbert import fidelity_pure, purity
    from .metrics import chsh_horodecki

    target = target or bell_phi_plus(rho.layout)
    return {"fidelity": fidelity_pure(rho, target), "purity": purity(rho), "s_parameter": chsh_horodecki(rho)}


def mc_error(data: TomographyInput, metrics: Sequence[str] = ("fidelity", "purity", "s_parameter"),
             n_resamples: int = 200, seed: RunSeed = RunSeed(0), workers: int = 1,
             tol: float = DEFAULT_TOL) -> ErrorEstimate:
    """Poisson-resample every count, reconstruct again, and take sample standard deviations.

    Each resample starts the optimizer from the point estimate.
    Resample ``j`` draws from stream ``(seed, j)``, so results do not depend
    on ``workers`` or on scheduling.
    """
    counts = data.counts
    center = mle_reconstruct(data, tol).rho_hat

    def one(j: int) -> dict[str, float]:
        resampled = seed.rng(j).poisson(counts).astype(float)
        if resampled.sum() == 0:
            resampled = counts
        rho = mle_reconstruct(data.with_counts(resampled), tol, start=center).rho_hat
        values = state_metrics(rho)
        return {k: values[k] for k in metrics}

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            samples = list(pool.map(one, range(n_resamples)))
    else:
        samples = [one(j) for j in range(n_resamples)]
    std = {k: float(np.std([s[k] for s in samples], ddof=1)) for k in metrics}
    mean = {k: float(np.mean([s[k] for s in samples])) for k in metrics}
    return ErrorEstimate(std, mean, n_resamples)
