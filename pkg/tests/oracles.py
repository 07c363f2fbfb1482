"""Independent reference computations used to freeze expected values.

Nothing here imports the code under test except plain data containers.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    g = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def ptrace_loops(rho: np.ndarray, n_qubits: int, keep: list[int]) -> np.ndarray:
    """Partial trace by explicit summation over every index tuple."""
    traced = [q for q in range(n_qubits) if q not in keep]
    d = 2 ** len(keep)
    out = np.zeros((d, d), dtype=complex)

    def full_index(kept_bits, traced_bits):
        bits = [0] * n_qubits
        for q, b in zip(keep, kept_bits):
            bits[q] = b
        for q, b in zip(traced, traced_bits):
            bits[q] = b
        return int("".join(map(str, bits)), 2)

    for a in itertools.product((0, 1), repeat=len(keep)):
        for b in itertools.product((0, 1), repeat=len(keep)):
            ia = int("".join(map(str, a)), 2) if a else 0
            ib = int("".join(map(str, b)), 2) if b else 0
            for t in itertools.product((0, 1), repeat=len(traced)):
                out[ia, ib] += rho[full_index(a, t), full_index(b, t)]
    return out


def dephased_bell_matrix(mu: float) -> np.ndarray:
    m = np.zeros((4, 4))
    m[0, 0] = m[3, 3] = 0.5
    m[0, 3] = m[3, 0] = mu / 2
    return m


def mzi_pair_probabilities(rho_tb: np.ndarray, theta_s: float, theta_i: float) -> np.ndarray:
    """3x3 coincidence probabilities by summing amplitudes over (pulse, arm) paths.

    Each photon: pulse e (t=0) or l (t=tau), short or long arm (+tau, phase
    theta), amplitude 1/sqrt(2) at each 50:50 coupler, one output port watched.
    A mixed input is handled through its eigen-decomposition.
    """
    vals, vecs = np.linalg.eigh(rho_tb)
    probs = np.zeros((3, 3))
    for lam, psi in zip(vals, vecs.T):
        if lam < 1e-15:
            continue
        amps = np.zeros((3, 3), dtype=complex)
        for ps, pi in itertools.product((0, 1), repeat=2):
            c = psi[2 * ps + pi]
            for arm_s, arm_i in itertools.product((0, 1), repeat=2):
                a = c * 0.5 * 0.5
                a *= np.exp(1j * theta_s * arm_s) * np.exp(1j * theta_i * arm_i)
                amps[ps + arm_s, pi + arm_i] += a
        probs += lam * np.abs(amps) ** 2
    return probs


def bessel_series(n: int, x: float, terms: int = 40) -> float:
    return sum((-1) ** k * (x / 2) ** (2 * k + n) / (math.factorial(k) * math.factorial(k + n))
               for k in range(terms))


def bisect(f, lo, hi, tol=1e-14):
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lorentzian_overlap_quad(detuning: float, fwhm1: float, fwhm2: float) -> float:
    """|<a1|a2>| for amplitudes 1/(fwhm/2 - i(nu - nu_j)), by numerical integration."""
    g1, g2 = fwhm1 / 2, fwhm2 / 2

    def a(nu, g, nu0):
        return 1.0 / (g - 1j * (nu - nu0))

    pts = sorted({0.0, float(detuning)})
    edges = [-np.inf] + pts + [np.inf]

    def integrate(f):
        return sum(quad(f, lo, hi, limit=500, epsabs=1e-13, epsrel=1e-12)[0]
                   for lo, hi in zip(edges[:-1], edges[1:]) if lo != hi)

    re = integrate(lambda x: (np.conj(a(x, g1, 0.0)) * a(x, g2, detuning)).real)
    im = integrate(lambda x: (np.conj(a(x, g1, 0.0)) * a(x, g2, detuning)).imag)
    n1 = quad(lambda x: abs(a(x, g1, 0.0)) ** 2, -np.inf, np.inf)[0]
    n2 = quad(lambda x: abs(a(x, g2, 0.0)) ** 2, -np.inf, np.inf)[0]
    return abs(re + 1j * im) / math.sqrt(n1 * n2)


def _dir(th, ph):
    return np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])


def chsh_value(rho: np.ndarray, angles: np.ndarray) -> float:
    ops = []
    for k in range(4):
        v = _dir(angles[2 * k], angles[2 * k + 1])
        ops.append(v[0] * SX + v[1] * SY + v[2] * SZ)
    a, a2, b, b2 = ops

    def e(x, y):
        return np.trace(rho @ np.kron(x, y)).real

    return e(a, b) - e(a, b2) + e(a2, b) + e(a2, b2)


def chsh_search(rho: np.ndarray, grid: int = 4, starts: int = 12, seed: int = 0) -> float:
    """Maximize CHSH over 8 spherical angles: coarse grid, then local refinement."""
    rng = np.random.default_rng(seed)
    ths = np.linspace(0.2, math.pi - 0.2, grid)
    phs = np.linspace(0, 2 * math.pi, grid, endpoint=False)
    cands = []
    for _ in range(300):
        x = np.concatenate([[rng.choice(ths), rng.choice(phs)] for _ in range(4)])
        cands.append((chsh_value(rho, x), x))
    cands.sort(key=lambda c: -c[0])
    best = -np.inf
    for _, x0 in cands[:starts]:
        res = minimize(lambda x: -chsh_value(rho, x), x0, method="BFGS", options={"gtol": 1e-10})
        best = max(best, -res.fun)
    return best
