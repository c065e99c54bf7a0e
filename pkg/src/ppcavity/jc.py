"""Cavity QED model parameters and positive-P SDE coefficient assembly.

The phase-space state is the flat complex vector
(alpha_1, beta_1, ..., alpha_N, beta_N, z, w) for N cavity modes plus the
two-level atom.  Drift, diffusion, and noise are assembled for the full-wave
(counterrotating terms included) atom-field coupling, optionally extended by
scattering and pure-dephasing dissipation acting on the fermionic rows.

The noise matrix keeps only the structurally nonzero columns of the block
factorization: four per mode, plus two dissipative columns.  The factorization
identity B @ B.T = D holds exactly for both layouts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import ADDITIVE_NOISE, POLE_FLOOR, BasisFamily, PhaseFunctions
from .errors import PoleProximityError
from .sde import SdeSystem

_ROOT_I = np.sqrt(1j)  # fixed diffusion-gauge choice exp(i pi/4)


def principal_sqrt(x):
    """Complex sqrt with imaginary parts -0.0 lifted to +0.0.

    Radicands that are negative real can carry either signed zero depending on
    how they were computed; lifting to +0.0 pins one branch so algebraically
    equal radicands always produce the same root.
    """
    x = np.asarray(x, dtype=complex)
    x = np.where(x.imag == 0.0, x.real + 0.0j, x)
    return np.sqrt(x)


@dataclass(frozen=True)
class ModelParams:
    """Cavity geometry, mode spectrum, couplings, atom, and dissipation rates.

    Frequencies are angular.  Dimensionless desk-scale runs keep the defaults
    hbar = c = epsilon0 = area = 1.  Derived quantities (wave numbers, the
    per-photon field, relaxation rates) are exposed as properties.
    """

    Omega: float
    omega: tuple
    g: tuple
    x0: float
    length: float
    area: float = 1.0
    hbar: float = 1.0
    c: float = 1.0
    epsilon0: float = 1.0
    r12: float = 0.0
    r21: float = 0.0
    r_p: float = 0.0

    def __post_init__(self):
        omega = tuple(float(v) for v in np.atleast_1d(self.omega))
        g = np.atleast_1d(self.g)
        if g.size == 1 and len(omega) > 1:
            g = np.repeat(g, len(omega))
        g = tuple(float(v) for v in g)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "g", g)
        if len(g) != len(omega):
            raise ValueError("need one coupling per mode")
        if any(w <= 0 for w in omega) or any(np.diff(omega) <= 0):
            raise ValueError("mode frequencies must be positive and strictly increasing")
        for name in ("r12", "r21", "r_p"):
            if getattr(self, name) < 0:
                raise ValueError(f"rate {name} must be nonnegative")
        if not 0.0 < self.x0 < self.length:
            raise ValueError("atom position must satisfy 0 < x0 < length")
        for name in ("hbar", "c", "epsilon0", "area", "length"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_cavity(cls, length, mode_count, Omega, coupling, x0=None, **kwargs):
        """Modes at the cavity resonances omega_n = pi*c*n/length."""
        c = kwargs.get("c", 1.0)
        omega = tuple(math.pi * c * n / length for n in range(1, mode_count + 1))
        if x0 is None:
            x0 = length / 2.0
        return cls(Omega=Omega, omega=omega, g=coupling, x0=x0, length=length, **kwargs)

    @classmethod
    def from_frequencies(cls, omega, g, Omega, x0=None, length=None, **kwargs):
        """Explicit mode frequencies; the cavity length defaults to pi*c/omega_1."""
        omega = tuple(float(v) for v in np.atleast_1d(omega))
        c = kwargs.get("c", 1.0)
        if length is None:
            length = math.pi * c / omega[0]
        if x0 is None:
            x0 = length / 2.0
        return cls(Omega=Omega, omega=omega, g=g, x0=x0, length=length, **kwargs)

    # -- derived quantities --------------------------------------------------

    @property
    def mode_count(self) -> int:
        return len(self.omega)

    @property
    def dim(self) -> int:
        return 2 * (self.mode_count + 1)

    @property
    def omega_array(self) -> np.ndarray:
        return np.asarray(self.omega)

    @property
    def g_array(self) -> np.ndarray:
        return np.asarray(self.g)

    @property
    def wave_numbers(self) -> np.ndarray:
        return self.omega_array / self.c

    @property
    def mode_amplitudes(self) -> np.ndarray:
        """sin(k_n x0) position factors at the atom."""
        return np.sin(self.wave_numbers * self.x0)

    @property
    def gs(self) -> np.ndarray:
        """Per-mode effective couplings g_n sin(k_n x0)."""
        return self.g_array * self.mode_amplitudes

    @property
    def mu0(self) -> float:
        return 1.0 / (self.epsilon0 * self.c**2)

    @property
    def impedance(self) -> float:
        return math.sqrt(self.mu0 / self.epsilon0)

    @property
    def volume(self) -> float:
        return self.length * self.area

    @property
    def e_photon(self) -> np.ndarray:
        """Electric field per photon, sqrt(hbar*omega_n / (epsilon0 V))."""
        return np.sqrt(self.hbar * self.omega_array / (self.epsilon0 * self.volume))

    @property
    def gamma1(self) -> float:
        return self.r12 + self.r21

    @property
    def gamma2(self) -> float:
        return 0.5 * (self.r12 + self.r21) + self.r_p

    @property
    def nu0(self) -> float:
        if self.gamma1 == 0:
            return 0.0
        return (self.r12 - self.r21) / (self.r12 + self.r21)

    @property
    def dissipative(self) -> bool:
        return self.gamma1 > 0 or self.r_p > 0

    def dipole_moment(self, tol=1e-9) -> float:
        """Dipole matrix element -hbar*g_n/e_p(omega_n); requires g prop e_p."""
        values = -self.hbar * self.g_array / self.e_photon
        spread = np.abs(values - values[0]).max()
        if spread > tol * (1.0 + abs(values[0])):
            raise ValueError(
                "couplings are not proportional to the per-photon field; "
                "no single dipole moment reproduces all modes"
            )
        return float(values[0])


@dataclass(frozen=True)
class PhaseState:
    """Structured view of one positive-P phase-space point."""

    alpha: tuple
    beta: tuple
    z: complex
    w: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(complex(a) for a in np.atleast_1d(self.alpha)))
        object.__setattr__(self, "beta", tuple(complex(b) for b in np.atleast_1d(self.beta)))
        if len(self.alpha) != len(self.beta):
            raise ValueError("alpha and beta must have one entry per mode")

    def to_vector(self) -> np.ndarray:
        n = len(self.alpha)
        out = np.empty(2 * (n + 1), dtype=complex)
        out[0 : 2 * n : 2] = self.alpha
        out[1 : 2 * n : 2] = self.beta
        out[2 * n] = self.z
        out[2 * n + 1] = self.w
        return out

    @classmethod
    def from_vector(cls, vec) -> "PhaseState":
        vec = np.asarray(vec, dtype=complex)
        n = (vec.shape[-1] - 2) // 2
        return cls(
            alpha=tuple(vec[0 : 2 * n : 2]),
            beta=tuple(vec[1 : 2 * n : 2]),
            z=complex(vec[2 * n]),
            w=complex(vec[2 * n + 1]),
        )


def as_state_vector(state) -> np.ndarray:
    if isinstance(state, PhaseState):
        return state.to_vector()
    return np.asarray(state, dtype=complex)


def split_state(state, n_modes):
    """Views (alpha, beta, z, w) of a flat (batched) phase vector."""
    state = as_state_vector(state)
    alpha = state[..., 0 : 2 * n_modes : 2]
    beta = state[..., 1 : 2 * n_modes : 2]
    z = state[..., 2 * n_modes]
    w = state[..., 2 * n_modes + 1]
    return alpha, beta, z, w


def _checked_jet(family: BasisFamily, z, w) -> PhaseFunctions:
    pf = family.jet(z, w)
    denom = np.abs(1.0 + pf.h * pf.ht)
    bad = (
        ~np.isfinite(denom)
        | (denom < POLE_FLOOR)
        | (np.abs(pf.hp) < POLE_FLOOR)
        | (np.abs(pf.htp) < POLE_FLOOR)
    )
    if np.any(bad):
        raise PoleProximityError(
            "state too close to a singularity (h', htilde', or 1 + h*htilde vanishing)"
        )
    return pf


def _drift_core(params: ModelParams, pf: PhaseFunctions, alpha, beta, dissipative):
    n = params.mode_count
    om = params.omega_array
    gs = params.gs
    coupling = (pf.h + pf.ht) / (1.0 + pf.h * pf.ht)
    drive = (gs * (alpha + beta)).sum(axis=-1)

    out = np.empty(np.broadcast_shapes(alpha.shape[:-1], pf.h.shape) + (2 * (n + 1),), dtype=complex)
    out[..., 0 : 2 * n : 2] = 1j * (-om * alpha - gs * coupling[..., None])
    out[..., 1 : 2 * n : 2] = 1j * (om * beta + gs * coupling[..., None])
    a_z = 1j * (-params.Omega * pf.lin + drive * pf.quad)
    a_w = 1j * (params.Omega * pf.lin_t - drive * pf.quad_t)
    if dissipative:
        hht = pf.h * pf.ht
        factor = (
            -params.r_p * (1.0 - hht)
            - params.r21 * (1.0 + 3.0 * hht) / 2.0
            + params.r12 * (3.0 + hht) / 2.0
        ) / (1.0 + hht)
        a_z = a_z + pf.h * pf.inv_hp * factor
        a_w = a_w + pf.ht * pf.inv_htp * factor
    out[..., 2 * n] = a_z
    out[..., 2 * n + 1] = a_w
    return out


def _mode_diffusion(params: ModelParams, pf: PhaseFunctions):
    """Per-mode diffusion entries d_n = g_n s_n (h^2 - 1)/h' and the mirror."""
    gs = params.gs
    return gs * pf.quad[..., None], gs * pf.quad_t[..., None]


def _dissipative_entry(params: ModelParams, pf: PhaseFunctions):
    hht = pf.h * pf.ht
    return (
        2.0 * params.r_p * hht + params.r21 * hht**2 + params.r12
    ) * pf.inv_hp * pf.inv_htp


def _diffusion_core(params: ModelParams, pf: PhaseFunctions, batch_shape, dissipative):
    n = params.mode_count
    d, dt_ = _mode_diffusion(params, pf)
    out = np.zeros(batch_shape + (2 * (n + 1), 2 * (n + 1)), dtype=complex)
    for k in range(n):
        out[..., 2 * k, 2 * n] = out[..., 2 * n, 2 * k] = 1j * d[..., k]
        out[..., 2 * k + 1, 2 * n + 1] = out[..., 2 * n + 1, 2 * k + 1] = -1j * dt_[..., k]
    if dissipative:
        dd = _dissipative_entry(params, pf)
        out[..., 2 * n, 2 * n + 1] = out[..., 2 * n + 1, 2 * n] = dd
    return out


def _noise_core(params: ModelParams, pf: PhaseFunctions, batch_shape, dissipative):
    n = params.mode_count
    d, dt_ = _mode_diffusion(params, pf)
    cols = 4 * n + (2 if dissipative else 0)
    out = np.zeros(batch_shape + (2 * (n + 1), cols), dtype=complex)
    sp = _ROOT_I * principal_sqrt(d / 2.0)
    sq = _ROOT_I * principal_sqrt(dt_ / 2.0)
    for k in range(n):
        c = 4 * k
        # columns from the block pairing mode k with the fermionic rows
        out[..., 2 * k, c] = 1j * sp[..., k]
        out[..., 2 * k, c + 1] = -sp[..., k]
        out[..., 2 * n, c] = -1j * sp[..., k]
        out[..., 2 * n, c + 1] = -sp[..., k]
        out[..., 2 * k + 1, c + 2] = -1j * sq[..., k]
        out[..., 2 * k + 1, c + 3] = -sq[..., k]
        out[..., 2 * n + 1, c + 2] = -1j * sq[..., k]
        out[..., 2 * n + 1, c + 3] = sq[..., k]
    if dissipative:
        td = principal_sqrt(_dissipative_entry(params, pf) / 2.0)
        out[..., 2 * n, 4 * n] = -1j * td
        out[..., 2 * n, 4 * n + 1] = td
        out[..., 2 * n + 1, 4 * n] = 1j * td
        out[..., 2 * n + 1, 4 * n + 1] = td
    return out


def _prepare(params, family, state, check):
    state = as_state_vector(state)
    alpha, beta, z, w = split_state(state, params.mode_count)
    pf = _checked_jet(family, z, w) if check else family.jet(z, w)
    return alpha, beta, pf, state.shape[:-1]


def drift_jc(params: ModelParams, family: BasisFamily, state, check=True):
    """Drift vector of the dissipation-free positive-P SDE."""
    alpha, beta, pf, _ = _prepare(params, family, state, check)
    return _drift_core(params, pf, alpha, beta, dissipative=False)


def drift_jc_plus(params: ModelParams, family: BasisFamily, state, check=True):
    """Drift vector including scattering and pure-dephasing terms."""
    alpha, beta, pf, _ = _prepare(params, family, state, check)
    return _drift_core(params, pf, alpha, beta, dissipative=True)


def diffusion_jc(params: ModelParams, family: BasisFamily, state, check=True):
    """Symmetric diffusion matrix of the dissipation-free SDE."""
    _, _, pf, batch = _prepare(params, family, state, check)
    return _diffusion_core(params, pf, batch, dissipative=False)


def diffusion_jc_plus(params: ModelParams, family: BasisFamily, state, check=True):
    """Diffusion matrix including the dissipative fermionic block."""
    _, _, pf, batch = _prepare(params, family, state, check)
    return _diffusion_core(params, pf, batch, dissipative=True)


def noise_jc(params: ModelParams, family: BasisFamily, state, check=True):
    """Noise matrix with 4N columns satisfying B @ B.T = D."""
    _, _, pf, batch = _prepare(params, family, state, check)
    return _noise_core(params, pf, batch, dissipative=False)


def noise_jc_plus(params: ModelParams, family: BasisFamily, state, check=True):
    """Noise matrix with 4N+2 columns satisfying B @ B.T = D (dissipative)."""
    _, _, pf, batch = _prepare(params, family, state, check)
    return _noise_core(params, pf, batch, dissipative=True)


def jc_sde_system(
    params: ModelParams, family: BasisFamily, dissipative=None
) -> SdeSystem:
    """SDE system for the integrator; coefficients never raise on poles.

    With ``dissipative=None`` the dissipative layout is used exactly when any
    rate is positive.  The additive-noise family without dissipation yields a
    state-independent noise matrix, which the system advertises so ensembles
    evaluate it only once.
    """
    if dissipative is None:
        dissipative = params.dissipative
    n = params.mode_count

    def drift(state):
        alpha, beta, z, w = split_state(state, n)
        return _drift_core(params, family.jet(z, w), alpha, beta, dissipative)

    def noise(state):
        state = as_state_vector(state)
        _, _, z, w = split_state(state, n)
        return _noise_core(params, family.jet(z, w), state.shape[:-1], dissipative)

    constant = family.kind == ADDITIVE_NOISE and not dissipative
    return SdeSystem(
        dim=2 * (n + 1),
        noise_dim=4 * n + (2 if dissipative else 0),
        drift=drift,
        noise=noise,
        constant_noise=constant,
    )


def phase_init_sampler(params: ModelParams, family: BasisFamily, coherent, dist):
    """Initial-state sampler: fixed coherent bosonic point, sampled atom.

    ``coherent`` holds the per-mode coherent amplitudes (alpha_n = amplitude,
    beta_n = conj(amplitude)); ``dist`` is the three-point fermionic
    distribution from :func:`ppcavity.initialization.init_points`.
    """
    n = params.mode_count
    coherent = np.atleast_1d(np.asarray(coherent, dtype=complex))
    if coherent.size == 1 and n > 1:
        coherent = np.repeat(coherent, n)
    if coherent.shape != (n,):
        raise ValueError("need one coherent amplitude per mode")
    base = np.empty(2 * (n + 1), dtype=complex)
    base[0 : 2 * n : 2] = coherent
    base[1 : 2 * n : 2] = np.conj(coherent)

    def sampler(rng: np.random.Generator) -> np.ndarray:
        out = base.copy()
        z, w = dist.sample(rng)
        out[2 * n] = z
        out[2 * n + 1] = w
        return out

    return sampler
