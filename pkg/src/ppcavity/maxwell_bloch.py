"""Deterministic Maxwell-Bloch solver in cavity-mode form.

This is the noise-free limit of the changed-variable SDE restricted to the
hermitian slice rho12 = conj(rho21) with real inversion and real field
quadratures.  The state is integrated in a real representation so roundoff
cannot push it off the physical manifold.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .jc import ModelParams
from .sde import TimeGrid

BLOCH_BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class MbState:
    """Hermitian-slice state: real quadratures, one coherence, real inversion."""

    epsilon: tuple
    eta: tuple
    rho21: complex
    nu: float

    def __post_init__(self):
        object.__setattr__(
            self, "epsilon", tuple(float(v) for v in np.atleast_1d(self.epsilon))
        )
        object.__setattr__(
            self, "eta", tuple(float(v) for v in np.atleast_1d(self.eta))
        )
        if len(self.epsilon) != len(self.eta):
            raise ValueError("epsilon and eta must have one entry per mode")

    def to_real_vector(self) -> np.ndarray:
        n = len(self.epsilon)
        out = np.empty(2 * n + 3)
        out[0:n] = self.epsilon
        out[n : 2 * n] = self.eta
        out[2 * n] = self.rho21.real
        out[2 * n + 1] = self.rho21.imag
        out[2 * n + 2] = self.nu
        return out

    @classmethod
    def from_real_vector(cls, vec) -> "MbState":
        vec = np.asarray(vec, dtype=float)
        n = (vec.shape[-1] - 3) // 2
        return cls(
            epsilon=tuple(vec[0:n]),
            eta=tuple(vec[n : 2 * n]),
            rho21=complex(vec[2 * n], vec[2 * n + 1]),
            nu=float(vec[2 * n + 2]),
        )

    def to_phys_vector(self) -> np.ndarray:
        """Embed into the complex physical-coordinate layout."""
        n = len(self.epsilon)
        out = np.empty(2 * n + 3, dtype=complex)
        out[0 : 2 * n : 2] = self.epsilon
        out[1 : 2 * n : 2] = self.eta
        out[2 * n] = self.rho21
        out[2 * n + 1] = np.conj(self.rho21)
        out[2 * n + 2] = self.nu
        return out

    def bloch_violation(self) -> float:
        """Positive when |rho21|^2 exceeds the Bloch-sphere bound."""
        return abs(self.rho21) ** 2 - (1.0 - self.nu**2) / 4.0


def _rhs_real(params: ModelParams, vec: np.ndarray) -> np.ndarray:
    n = params.mode_count
    om = params.omega_array
    gs = params.gs
    eps = vec[0:n]
    eta = vec[n : 2 * n]
    re21 = vec[2 * n]
    im21 = vec[2 * n + 1]
    nu = vec[2 * n + 2]
    drive = float((gs * eps).sum())
    out = np.empty_like(vec)
    out[0:n] = om * eta
    out[n : 2 * n] = -om * eps - 4.0 * gs * re21
    # d rho21/dt = -i Omega rho21 + i drive nu - gamma2 rho21, split in parts
    out[2 * n] = params.Omega * im21 - params.gamma2 * re21
    out[2 * n + 1] = -params.Omega * re21 + drive * nu - params.gamma2 * im21
    out[2 * n + 2] = -4.0 * drive * im21 - params.gamma1 * (nu - params.nu0)
    return out


def mb_rhs(params: ModelParams, state: MbState) -> MbState:
    """Time derivative of the Maxwell-Bloch state.

    Identical to the changed-variable drift restricted to the hermitian
    slice; the coupling enters through the mode sum, which equals
    -(i/hbar) m21 E(x0) when the couplings track the per-photon field.
    """
    return MbState.from_real_vector(_rhs_real(params, state.to_real_vector()))


@dataclass
class MbTrajectory:
    times: np.ndarray
    epsilon: np.ndarray
    eta: np.ndarray
    rho21: np.ndarray
    nu: np.ndarray
    max_bloch_violation: float

    def column(self, name: str) -> np.ndarray:
        plain = {
            "rho_21": self.rho21,
            "rho_12": np.conj(self.rho21),
            "nu": self.nu.astype(complex),
            "rho_11": ((1.0 - self.nu) / 2.0).astype(complex),
            "rho_22": ((1.0 + self.nu) / 2.0).astype(complex),
        }
        if name in plain:
            return plain[name]
        if name.startswith("e_"):
            return self.epsilon[:, int(name[2:]) - 1].astype(complex)
        if name.startswith("h_"):
            return self.eta[:, int(name[2:]) - 1].astype(complex)
        raise KeyError(name)


def evolve_mb(params: ModelParams, state0: MbState, grid: TimeGrid) -> MbTrajectory:
    """Fixed-step RK4 integration; warns once if the Bloch bound is violated."""
    n = params.mode_count
    vec = state0.to_real_vector()
    n_pts = grid.steps + 1
    eps = np.empty((n_pts, n))
    eta = np.empty((n_pts, n))
    rho21 = np.empty(n_pts, complex)
    nu = np.empty(n_pts)
    worst = -np.inf

    def record(idx, vec):
        nonlocal worst
        eps[idx] = vec[0:n]
        eta[idx] = vec[n : 2 * n]
        rho21[idx] = complex(vec[2 * n], vec[2 * n + 1])
        nu[idx] = vec[2 * n + 2]
        worst = max(worst, (vec[2 * n] ** 2 + vec[2 * n + 1] ** 2) - (1.0 - vec[2 * n + 2] ** 2) / 4.0)

    record(0, vec)
    dt = grid.dt
    for idx in range(grid.steps):
        k1 = _rhs_real(params, vec)
        k2 = _rhs_real(params, vec + 0.5 * dt * k1)
        k3 = _rhs_real(params, vec + 0.5 * dt * k2)
        k4 = _rhs_real(params, vec + dt * k3)
        vec = vec + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        record(idx + 1, vec)
    if worst > BLOCH_BOUND_SLACK:
        warnings.warn(
            f"Bloch-sphere bound violated by {worst:.3e} during the run",
            RuntimeWarning,
            stacklevel=2,
        )
    return MbTrajectory(grid.times, eps, eta, rho21, nu, float(worst))
