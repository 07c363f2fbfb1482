"""Ideal and noisy hyperentangled states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import (
    CANONICAL,
    FB_LAYOUT,
    TB_LAYOUT,
    DensityMatrix,
    Ket,
    LayoutError,
    SubsystemLayout,
    partial_trace,
    tensor,
)

DOFS = ("TB", "FB")
DOF_LAYOUTS = {"TB": TB_LAYOUT, "FB": FB_LAYOUT}


@dataclass(frozen=True)
class NoiseParams:
    """Source imperfections: per-DoF coherence and a white-noise admixture.

    ``mu_tb`` and ``mu_fb`` scale the off-diagonal coherence of each Bell
    block; ``p_white`` mixes in the maximally mixed 16-dim state.
    """

    mu_tb: float = 1.0
    mu_fb: float = 1.0
    p_white: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.mu_tb <= 1.0:
            raise ValueError(f"mu_tb={self.mu_tb} outside [0, 1]")
        if not 0.0 <= self.mu_fb <= 1.0:
            raise ValueError(f"mu_fb={self.mu_fb} outside [0, 1]")
        if not 0.0 <= self.p_white < 1.0:
            raise ValueError(f"p_white={self.p_white} outside [0, 1)")


def _dof_layout(dof_or_labels) -> SubsystemLayout:
    if isinstance(dof_or_labels, SubsystemLayout):
        return dof_or_labels
    if isinstance(dof_or_labels, str):
        try:
            return DOF_LAYOUTS[dof_or_labels]
        except KeyError:
            raise LayoutError(f"unknown degree of freedom {dof_or_labels!r}") from None
    return SubsystemLayout(tuple(dof_or_labels))


def bell_phi_plus(dof_labels=TB_LAYOUT) -> Ket:
    layout = _dof_layout(dof_labels)
    if len(layout) != 2:
        raise LayoutError("a Bell pair needs exactly two subsystems")
    amp = 1 / np.sqrt(2)
    return Ket(np.array([amp, 0, 0, amp]), layout)


def ideal_he_state() -> Ket:
    return tensor(bell_phi_plus(TB_LAYOUT), bell_phi_plus(FB_LAYOUT))


def dephased_bell(mu: float, dof_labels=TB_LAYOUT) -> DensityMatrix:
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu={mu} outside [0, 1]")
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = m[3, 3] = 0.5
    m[0, 3] = m[3, 0] = 0.5 * mu
    return DensityMatrix(m, _dof_layout(dof_labels))


def noisy_he_state(noise: NoiseParams) -> DensityMatrix:
    product = tensor(dephased_bell(noise.mu_tb, TB_LAYOUT), dephased_bell(noise.mu_fb, FB_LAYOUT))
    p = noise.p_white
    mat = (1 - p) * product.matrix + p * np.eye(16) / 16
    return DensityMatrix(mat, CANONICAL)


def marginal(rho: DensityMatrix, dof: str) -> DensityMatrix:
    """Reduced state of one degree of freedom, tracing out the other."""
    return partial_trace(rho, _dof_layout(dof).labels)


def marginal_purity_closed_form(mu: float, p: float) -> float:
    return (1 - p) ** 2 * (1 + mu ** 2) / 2 + p * (1 - p) / 2 + p ** 2 / 4
