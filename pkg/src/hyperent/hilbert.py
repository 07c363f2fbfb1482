"""Dense state algebra on small tensor-product spaces of qubits.

Every subsystem is two-dimensional and carries a string label. The full
two-photon space uses the canonical order ``(TB_s, TB_i, FB_s, FB_i)`` so
that the hyperentangled state is a plain product of a time-bin block and a
frequency-bin block.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

TB_S, TB_I, FB_S, FB_I = "TB_s", "TB_i", "FB_s", "FB_i"
CANONICAL_LABELS = (TB_S, TB_I, FB_S, FB_I)

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
NORM_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)


class LayoutError(ValueError):
    """Raised when subsystem labels collide, are unknown, or do not match."""


class StateError(ValueError):
    """Raised when a matrix or vector violates a state invariant."""


@dataclass(frozen=True)
class SubsystemLayout:
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise LayoutError("layout needs at least one subsystem")
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate subsystem labels: {labels}")

    @property
    def dims(self) -> tuple[int, ...]:
        return (2,) * len(self.labels)

    @property
    def dim(self) -> int:
        return 2 ** len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown subsystem label {label!r}; layout is {self.labels}") from None

    def concat(self, other: "SubsystemLayout") -> "SubsystemLayout":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise LayoutError(f"label collision in tensor product: {sorted(clash)}")
        return SubsystemLayout(self.labels + other.labels)


CANONICAL = SubsystemLayout(CANONICAL_LABELS)
TB_LAYOUT = SubsystemLayout((TB_S, TB_I))
FB_LAYOUT = SubsystemLayout((FB_S, FB_I))


def _frozen(array, dtype=complex) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _as_layout(layout) -> SubsystemLayout:
    if isinstance(layout, SubsystemLayout):
        return layout
    return SubsystemLayout(tuple(layout))


@dataclass(frozen=True, eq=False)
class Ket:
    vector: np.ndarray
    layout: SubsystemLayout

    def __post_init__(self):
        layout = _as_layout(self.layout)
        vec = _frozen(self.vector).reshape(-1)
        if vec.shape[0] != layout.dim:
            raise StateError(f"ket of length {vec.shape[0]} does not fit layout of dim {layout.dim}")
        norm2 = float(np.vdot(vec, vec).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise StateError(f"ket is not normalized: |psi|^2 = {norm2!r}")
        object.__setattr__(self, "vector", vec)
        object.__setattr__(self, "layout", layout)

    @classmethod
    def normalized(cls, vector, layout) -> "Ket":
        vec = np.asarray(vector, dtype=complex)
        return cls(vec / np.linalg.norm(vec), layout)

    def dm(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.vector, self.vector.conj()), self.layout)

    @property
    def dim(self) -> int:
        return self.layout.dim


def _check_square(matrix: np.ndarray, layout: SubsystemLayout) -> None:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise StateError(f"expected a square matrix, got shape {matrix.shape}")
    if matrix.shape[0] != layout.dim:
        raise StateError(f"matrix of dim {matrix.shape[0]} does not fit layout of dim {layout.dim}")


def _hermiticity_residual(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0


@dataclass(frozen=True, eq=False)
class Observable:
    matrix: np.ndarray
    layout: SubsystemLayout

    def __post_init__(self):
        layout = _as_layout(self.layout)
        mat = _frozen(self.matrix)
        _check_square(mat, layout)
        if _hermiticity_residual(mat) > HERMITIAN_TOL:
            raise StateError("observable is not Hermitian")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "layout", layout)

    @property
    def dim(self) -> int:
        return self.layout.dim


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray
    layout: SubsystemLayout

    def __post_init__(self):
        layout = _as_layout(self.layout)
        mat = _frozen(self.matrix)
        _check_square(mat, layout)
        if _hermiticity_residual(mat) > HERMITIAN_TOL:
            raise StateError("density matrix is not Hermitian")
        tr = np.trace(mat)
        if abs(tr - 1.0) > TRACE_TOL:
            raise StateError(f"density matrix trace is {tr!r}, expected 1")
        lam_min = float(np.linalg.eigvalsh(mat).min())
        if lam_min < -PSD_TOL:
            raise StateError(f"density matrix has negative eigenvalue {lam_min!r}")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "layout", layout)

    @classmethod
    def from_unnormalized(cls, matrix, layout) -> "DensityMatrix":
        """Symmetrize and trace-normalize ``matrix`` before validation."""
        mat = np.asarray(matrix, dtype=complex)
        mat = 0.5 * (mat + mat.conj().T)
        return cls(mat / np.trace(mat).real, layout)

    @classmethod
    def maximally_mixed(cls, layout) -> "DensityMatrix":
        layout = _as_layout(layout)
        return cls(np.eye(layout.dim) / layout.dim, layout)

    @property
    def dim(self) -> int:
        return self.layout.dim


Operator = Union[Ket, DensityMatrix, Observable]


def tensor(a: Operator, b: Operator) -> Operator:
    """Kronecker product of two objects of the same kind, concatenating layouts."""
    if type(a) is not type(b):
        raise TypeError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")
    layout = a.layout.concat(b.layout)
    if isinstance(a, Ket):
        return Ket(np.kron(a.vector, b.vector), layout)
    return type(a)(np.kron(a.matrix, b.matrix), layout)


def partial_trace(rho: DensityMatrix, keep: Iterable[str]) -> DensityMatrix:
    """Reduce ``rho`` onto the subsystems named in ``keep``.

    The kept subsystems appear in the order they have in ``rho.layout``.
    """
    keep = set(keep)
    if not keep:
        raise LayoutError("keep must name at least one subsystem")
    for label in keep:
        rho.layout.index(label)
    n = len(rho.layout)
    kept = [i for i, lab in enumerate(rho.layout.labels) if lab in keep]
    traced = [i for i in range(n) if i not in kept]
    t = rho.matrix.reshape((2,) * (2 * n))
    # ket axes 0..n-1, bra axes n..2n-1; contract traced pairs
    ket_idx = list(range(n))
    bra_idx = list(range(n, 2 * n))
    for i in traced:
        bra_idx[i] = ket_idx[i]
    out_idx = [ket_idx[i] for i in kept] + [bra_idx[i] for i in kept]
    reduced = np.einsum(t, ket_idx + bra_idx, out_idx)
    d = 2 ** len(kept)
    layout = SubsystemLayout(tuple(rho.layout.labels[i] for i in kept))
    return DensityMatrix(reduced.reshape(d, d), layout)


def _require_same_layout(a, b) -> None:
    if a.layout != b.layout:
        raise LayoutError(f"layout mismatch: {a.layout.labels} vs {b.layout.labels}")


def expectation(rho: DensityMatrix, obs: Observable) -> float:
    _require_same_layout(rho, obs)
    value = np.trace(rho.matrix @ obs.matrix)
    if abs(value.imag) > 1e-9:
        raise StateError(f"expectation has imaginary part {value.imag!r}")
    return float(value.real)


def fidelity_pure(rho: DensityMatrix, target: Ket) -> float:
    if rho.dim != target.dim:
        raise LayoutError(f"dimension mismatch: {rho.dim} vs {target.dim}")
    psi = target.vector
    return float(np.vdot(psi, rho.matrix @ psi).real)


def purity(rho: DensityMatrix) -> float:
    # Tr[rho^2] for Hermitian rho is the squared Frobenius norm
    return float(np.sum(np.abs(rho.matrix) ** 2))


def eig_hermitian(m: Observable | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Spectrum sorted in descending order, with eigenvectors as columns."""
    mat = m.matrix if isinstance(m, (Observable, DensityMatrix)) else np.asarray(m, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise StateError(f"expected a square matrix, got shape {mat.shape}")
    if _hermiticity_residual(mat) > HERMITIAN_TOL:
        raise StateError("eig_hermitian needs a Hermitian matrix")
    vals, vecs = np.linalg.eigh(mat)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def trace_distance(a: DensityMatrix | np.ndarray, b: DensityMatrix | np.ndarray) -> float:
    ma = a.matrix if isinstance(a, DensityMatrix) else np.asarray(a)
    mb = b.matrix if isinstance(b, DensityMatrix) else np.asarray(b)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(ma - mb))))


def pauli_pair(a: np.ndarray, b: np.ndarray, layout) -> Observable:
    return Observable(np.kron(a, b), layout)


def embed(local: np.ndarray, local_layout: SubsystemLayout, full: SubsystemLayout = CANONICAL) -> np.ndarray:
    """Extend an operator on a contiguous block of ``full`` by identity elsewhere."""
    start = full.index(local_layout.labels[0])
    if full.labels[start:start + len(local_layout)] != local_layout.labels:
        raise LayoutError(f"{local_layout.labels} is not a contiguous block of {full.labels}")
    left = np.eye(2 ** start)
    right = np.eye(2 ** (len(full) - start - len(local_layout)))
    return np.kron(np.kron(left, local), right)
