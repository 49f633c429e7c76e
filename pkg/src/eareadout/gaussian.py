"""Gaussian-state dynamics for N bosonic modes.

State = quadrature means (length 2N, ordered q1, p1, ..., qN, pN) plus the
symmetrised covariance matrix; vacuum covariance is I/2 under the convention
q = (a + a^dag)/sqrt(2), p = -i(a - a^dag)/sqrt(2).

Dynamics are generated by a quadratic Hamiltonian written as
H = (1/2) x^T hmat x plus per-mode energy-decay rates gamma. Means follow
dmu/dt = (Omega hmat - Gamma/2) mu + d and the covariance the Lyapunov
equation dV/dt = A V + V A^T + Gamma/2 with A = Omega hmat - Gamma/2, so a
mode's amplitude decays at gamma/2 and its photon number at gamma, and V = I/2
is the decay fixed point.

Rate convention: all rates (squeeze/conversion amplitudes, detunings, decays)
are plain rate constants in 1/s. Device-level "MHz" values map to 1e6/s; see
device.MHZ.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from ._kernels import rk4_protocol

__all__ = [
    "SymplecticForm",
    "GaussianState",
    "GeneratorSpec",
    "PropagatorMatrix",
    "NumericOverflowError",
    "ConditioningError",
    "symplectic_form",
    "build_drift",
    "step",
    "evolve",
    "propagator",
    "propagate_squeeze_analytic",
    "photon_number",
    "uncertainty_min_eigenvalue",
    "detuning_hamiltonian",
    "squeeze_hamiltonian",
    "conversion_hamiltonian",
    "drive_vector",
    "embed_hamiltonian",
    "embed_drive",
]


class NumericOverflowError(RuntimeError):
    """Integration produced non-finite values."""


class ConditioningError(RuntimeError):
    """Requested linear-algebra operation is outside its reliable range."""


@dataclass(frozen=True)
class SymplecticForm:
    """Block-diagonal symplectic form: n 2x2 blocks of [[0, 1], [-1, 0]]."""

    n_modes: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")


def symplectic_form(n_modes: int) -> SymplecticForm:
    block = np.array([[0.0, 1.0], [-1.0, 0.0]])
    mat = np.kron(np.eye(n_modes), block)
    return SymplecticForm(n_modes=n_modes, matrix=mat)


def _omega(n_modes: int) -> np.ndarray:
    return symplectic_form(n_modes).matrix


@dataclass(frozen=True)
class GaussianState:
    """Means vector and symmetric covariance of an N-mode Gaussian state."""

    means: np.ndarray
    cov: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if means.ndim != 1 or means.size % 2 != 0:
            raise ValueError("means must have even length 2N")
        if cov.shape != (means.size, means.size):
            raise ValueError("cov must be 2N x 2N")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ValueError("cov must be symmetric to 1e-12")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "cov", 0.5 * (cov + cov.T))

    @property
    def n_modes(self) -> int:
        return self.means.size // 2

    @staticmethod
    def vacuum(n_modes: int) -> "GaussianState":
        return GaussianState(np.zeros(2 * n_modes), 0.5 * np.eye(2 * n_modes))


def uncertainty_min_eigenvalue(state: GaussianState) -> float:
    """Smallest eigenvalue of V + i Omega / 2; >= 0 for physical states."""
    omega = _omega(state.n_modes)
    herm = state.cov.astype(complex) + 0.5j * omega
    return float(np.linalg.eigvalsh(herm)[0].real)


@dataclass(frozen=True)
class GeneratorSpec:
    """Quadratic generator: hmat (H = x^T hmat x / 2), decay rates, drive."""

    hmat: np.ndarray
    decay: np.ndarray
    drive: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        hmat = np.asarray(self.hmat, dtype=float)
        decay = np.asarray(self.decay, dtype=float)
        if hmat.ndim != 2 or hmat.shape[0] != hmat.shape[1]:
            raise ValueError("hmat must be square")
        dim = hmat.shape[0]
        if dim % 2 != 0:
            raise ValueError("hmat must be 2N x 2N")
        if not np.allclose(hmat, hmat.T, atol=1e-10):
            raise ValueError("hmat must be symmetric")
        if decay.shape != hmat.shape:
            raise ValueError("decay shape must match hmat")
        if not np.allclose(decay, np.diag(np.diag(decay))):
            raise ValueError("decay must be diagonal")
        diag = np.diag(decay)
        if np.any(diag < 0):
            raise ValueError("decay rates must be non-negative")
        if not np.allclose(diag[0::2], diag[1::2]):
            raise ValueError("decay entries must be equal within each (q, p) pair")
        drive = self.drive
        if drive is None:
            drive = np.zeros(dim)
        drive = np.asarray(drive, dtype=float)
        if drive.shape != (dim,):
            raise ValueError("drive must have length 2N")
        object.__setattr__(self, "hmat", hmat)
        object.__setattr__(self, "decay", decay)
        object.__setattr__(self, "drive", drive)

    @property
    def dim(self) -> int:
        return self.hmat.shape[0]

    @property
    def lossless(self) -> bool:
        return bool(np.all(np.diag(self.decay) == 0.0))


def build_drift(spec: GeneratorSpec) -> np.ndarray:
    """Drift matrix A = Omega hmat - decay / 2."""
    omega = _omega(spec.dim // 2)
    return omega @ spec.hmat - 0.5 * spec.decay


def step(state: GaussianState, spec: GeneratorSpec, dt: float) -> GaussianState:
    """Advance one fixed RK4 step of the means and Lyapunov equations."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if spec.dim != state.means.size:
        raise ValueError("generator dimension does not match state")
    return evolve(state, spec, dt, dt)


def evolve(state: GaussianState, spec: GeneratorSpec, duration: float, dt: float) -> GaussianState:
    """Advance through ``duration`` with fixed RK4 steps of size ``dt``.

    The final partial step, if any, is taken with a reduced dt so the end
    time is exact.
    """
    if dt <= 0 or duration < 0:
        raise ValueError("dt must be positive and duration non-negative")
    drift = build_drift(spec)
    noise = 0.5 * spec.decay
    n_full = int(np.floor(duration / dt + 1e-12))
    remainder = duration - n_full * dt

    mu = state.means
    cov = state.cov
    blocks = np.zeros((1, spec.dim, spec.dim))
    drives = spec.drive[None, :]

    if n_full > 0:
        env = np.ones((2 * n_full + 1, 1))
        _, mus, covs = rk4_protocol(mu, cov, drift, noise, blocks, drives,
                                    env, dt, n_full, max(n_full, 1))
        mu, cov = mus[-1], covs[-1]
    if remainder > 1e-15 * max(duration, dt):
        env = np.ones((3, 1))
        _, mus, covs = rk4_protocol(mu, cov, drift, noise, blocks, drives,
                                    env, remainder, 1, 1)
        mu, cov = mus[-1], covs[-1]

    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(cov))):
        raise NumericOverflowError(
            f"non-finite state at t = {state.time + duration:.6e} s")
    return GaussianState(mu, 0.5 * (cov + cov.T), time=state.time + duration)


@dataclass(frozen=True)
class PropagatorMatrix:
    """Means propagator exp(A t) with its duration and a lossless flag."""

    matrix: np.ndarray
    duration: float
    lossless: bool


def propagator(spec: GeneratorSpec, t: float) -> PropagatorMatrix:
    """Matrix exponential of the drift over duration t (Pade, scipy.linalg.expm)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    drift = build_drift(spec)
    norm = np.linalg.norm(drift * t, 2)
    if norm > 50.0:
        raise ConditioningError(
            f"||drift * t|| = {norm:.2f} > 50; subdivide the interval")
    return PropagatorMatrix(matrix=expm(drift * t), duration=t, lossless=spec.lossless)


def _cosh_sinhc(w: float, t: float):
    """(cosh(sqrt(w) t), sinh(sqrt(w) t)/sqrt(w)) continued through w <= 0."""
    if w > 0:
        rt = np.sqrt(w)
        return np.cosh(rt * t), np.sinh(rt * t) / rt
    if w < 0:
        rt = np.sqrt(-w)
        return np.cos(rt * t), np.sin(rt * t) / rt
    return 1.0, t


def propagate_squeeze_analytic(r: float, phi: float, chi: float, gamma: float,
                               t: float) -> PropagatorMatrix:
    """Closed-form single-mode propagator for squeezing under detuning.

    Generator: [[r sin(phi), chi - r cos(phi)], [-chi - r cos(phi), -r sin(phi)]]
    minus gamma/2 on the diagonal. For r > |chi| the motion is hyperbolic at
    rate r_chi = sqrt(r^2 - chi^2); below threshold it is oscillatory, with
    the degenerate r = |chi| limit handled by series.
    """
    if r < 0:
        raise ValueError("r must be non-negative")
    if not np.all(np.isfinite([r, phi, chi, gamma, t])):
        raise ValueError("non-finite input")
    w = r * r - chi * chi
    if r > 0 and abs(w) < 1e-6 * r * r:
        # |r_chi| t << 1 is not guaranteed here, but w t^2 is tiny in the
        # regime this branch serves; quartic term keeps 1e-12 accuracy.
        c = 1.0 + w * t * t / 2.0 + w * w * t ** 4 / 24.0
        s = t + w * t ** 3 / 6.0 + w * w * t ** 5 / 120.0
    else:
        c, s = _cosh_sinhc(w, t)
    sn, cs = np.sin(phi), np.cos(phi)
    mat = np.array([
        [c + r * sn * s, (chi - r * cs) * s],
        [-(chi + r * cs) * s, c - r * sn * s],
    ]) * np.exp(-0.5 * gamma * t)
    return PropagatorMatrix(matrix=mat, duration=t, lossless=(gamma == 0.0))


def photon_number(state: GaussianState, mode: int) -> float:
    """n = (V_qq + V_pp - 1)/2 + (mu_q^2 + mu_p^2)/2 for one mode."""
    if not 0 <= mode < state.n_modes:
        raise ValueError("mode index out of range")
    q, p = 2 * mode, 2 * mode + 1
    fluct = 0.5 * (state.cov[q, q] + state.cov[p, p] - 1.0)
    coher = 0.5 * (state.means[q] ** 2 + state.means[p] ** 2)
    return float(fluct + coher)


# ---------------------------------------------------------------------------
# Hamiltonian building blocks (hmat convention H = x^T hmat x / 2)
# ---------------------------------------------------------------------------

def detuning_hamiltonian(delta: float) -> np.ndarray:
    """Single-mode detuning delta * a^dag a: rotates (q, p) at rate delta."""
    return delta * np.eye(2)


def squeeze_hamiltonian(r: float, phi: float) -> np.ndarray:
    """Single-mode squeezing at rate r along the axis set by phi.

    Drift Omega h = r [[sin(phi), -cos(phi)], [-cos(phi), -sin(phi)]]: means
    grow as exp(r t) along the amplified axis, variances as exp(2 r t).
    """
    cs, sn = r * np.cos(phi), r * np.sin(phi)
    return np.array([[cs, sn], [sn, -cs]])


def conversion_hamiltonian(g: float, theta: float) -> np.ndarray:
    """Two-mode exchange coupling with rate g and pump phase theta (4x4 hmat).

    A resonant pulse of duration pi / (2 g) fully swaps the two modes.
    """
    cs, sn = g * np.cos(theta), g * np.sin(theta)
    return np.array([
        [0.0, 0.0, cs, -sn],
        [0.0, 0.0, sn, cs],
        [cs, sn, 0.0, 0.0],
        [-sn, cs, 0.0, 0.0],
    ])


def drive_vector(eta: float, theta: float) -> np.ndarray:
    """Drive term of eta (e^{-i theta} a + h.c.): d = sqrt(2) eta (sin, -cos)."""
    return np.sqrt(2.0) * eta * np.array([np.sin(theta), -np.cos(theta)])


def embed_hamiltonian(block: np.ndarray, modes: tuple[int, ...], n_modes: int) -> np.ndarray:
    """Place a 2M x 2M block acting on ``modes`` into the 2N x 2N hmat."""
    if block.shape != (2 * len(modes), 2 * len(modes)):
        raise ValueError("block size does not match number of modes")
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in modes])
    out = np.zeros((2 * n_modes, 2 * n_modes))
    out[np.ix_(idx, idx)] = block
    return out


def embed_drive(block: np.ndarray, mode: int, n_modes: int) -> np.ndarray:
    out = np.zeros(2 * n_modes)
    out[2 * mode:2 * mode + 2] = block
    return out
