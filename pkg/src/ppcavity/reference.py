"""Truncated-Fock master-equation integrator used as the ground-truth oracle.

The Hilbert space is the tensor product of per-mode number bases (cutoff
n_max) with the two-level atom as the last, fastest-varying factor.  The
evolution is the Lindblad master equation for the full-wave coupling,
integrated with classical fixed-step RK4.  The commutator is evaluated as
M - M^dagger with M = H rho, which preserves hermiticity exactly, and the
atomic dissipator terms reduce to elementwise operations because the
pseudospin operators act on a single 2x2 factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionCapError, TraceDriftError
from .initialization import AtomicDensity
from .jc import ModelParams
from .sde import TimeGrid

DEFAULT_DIMENSION_CAP = 4096
TRACE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class TruncatedSpace:
    """Photon cutoffs per mode; total dimension 2 * prod(n_max + 1)."""

    n_max: tuple
    cap: int = DEFAULT_DIMENSION_CAP

    def __post_init__(self):
        n_max = tuple(int(v) for v in np.atleast_1d(self.n_max))
        object.__setattr__(self, "n_max", n_max)
        if any(v < 1 for v in n_max):
            raise ValueError("each photon cutoff must be at least 1")
        if self.dim > self.cap:
            raise DimensionCapError(
                f"truncated dimension {self.dim} exceeds the cap {self.cap}"
            )

    @property
    def mode_count(self) -> int:
        return len(self.n_max)

    @property
    def field_dim(self) -> int:
        out = 1
        for v in self.n_max:
            out *= v + 1
        return out

    @property
    def dim(self) -> int:
        return 2 * self.field_dim


def destroy(levels: int) -> np.ndarray:
    """Annihilation operator on a ladder of ``levels`` number states."""
    return np.diag(np.sqrt(np.arange(1, levels)), 1).astype(complex)


_SZ = np.diag([-0.5, 0.5]).astype(complex)
_SP = np.array([[0, 0], [1, 0]], dtype=complex)  # raises lower to upper
_SM = _SP.T.conj()


def _embed_mode(op: np.ndarray, space: TruncatedSpace, mode: int) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m, cutoff in enumerate(space.n_max):
        out = np.kron(out, op if m == mode else np.eye(cutoff + 1, dtype=complex))
    return np.kron(out, np.eye(2, dtype=complex))


def _embed_atom(op: np.ndarray, space: TruncatedSpace) -> np.ndarray:
    return np.kron(np.eye(space.field_dim, dtype=complex), op)


def build_hamiltonian(params: ModelParams, space: TruncatedSpace) -> np.ndarray:
    """Full-wave Hamiltonian including the counterrotating coupling terms."""
    if space.mode_count != params.mode_count:
        raise ValueError("space and params disagree on the number of modes")
    ham = params.hbar * params.Omega * _embed_atom(_SZ, space)
    spin_x = _embed_atom(_SP + _SM, space)
    for m in range(space.mode_count):
        a = _embed_mode(destroy(space.n_max[m] + 1), space, m)
        ham = ham + params.hbar * params.omega[m] * (a.conj().T @ a)
        quad = a.conj().T + a
        ham = ham + params.hbar * params.gs[m] * (quad @ spin_x)
    return ham


def _dissipator(params: ModelParams, rho: np.ndarray) -> np.ndarray:
    """Atomic Lindblad terms, evaluated on the (field, 2, field, 2) reshape."""
    f = rho.shape[0] // 2
    r = rho.reshape(f, 2, f, 2)
    out = np.zeros_like(r)
    # 2 Sz rho Sz - rho/2
    if params.r_p:
        sz = np.array([-0.5, 0.5])
        out += params.r_p * (
            2.0 * sz[None, :, None, None] * sz[None, None, None, :] * r - 0.5 * r
        )
    szr_prs = None
    if params.r21 or params.r12:
        sz = np.array([-0.5, 0.5])
        szr_prs = sz[None, :, None, None] * r + r * sz[None, None, None, :]
    # S- rho S+ - (Sz rho + rho Sz + rho)/2
    if params.r21:
        hop = np.zeros_like(r)
        hop[:, 0, :, 0] = r[:, 1, :, 1]
        out += params.r21 * (hop - 0.5 * (szr_prs + r))
    # S+ rho S- + (Sz rho + rho Sz - rho)/2
    if params.r12:
        hop = np.zeros_like(r)
        hop[:, 1, :, 1] = r[:, 0, :, 0]
        out += params.r12 * (hop + 0.5 * (szr_prs - r))
    return out.reshape(rho.shape)


def master_rhs(params: ModelParams, rho, space: TruncatedSpace, hamiltonian=None):
    """Right-hand side of the Lindblad master equation."""
    rho = np.asarray(rho, dtype=complex)
    ham = build_hamiltonian(params, space) if hamiltonian is None else hamiltonian
    m = ham @ rho
    out = (-1j / params.hbar) * (m - m.conj().T)
    if params.dissipative:
        out = out + _dissipator(params, rho)
    return out


def coherent_state(alpha, levels: int) -> np.ndarray:
    """Truncated coherent-state vector, renormalized to unit norm."""
    alpha = complex(alpha)
    if alpha == 0:
        vec = np.zeros(levels, dtype=complex)
        vec[0] = 1.0
        return vec
    n = np.arange(levels)
    log_fact = np.cumsum(np.log(np.maximum(n, 1)))
    vec = np.exp(n * np.log(alpha) - 0.5 * log_fact - 0.5 * abs(alpha) ** 2)
    return vec / np.linalg.norm(vec)


def initial_density(
    params: ModelParams, space: TruncatedSpace, coherent, atomic: AtomicDensity
) -> np.ndarray:
    """Product state: per-mode coherent states times the atomic density."""
    coherent = np.atleast_1d(np.asarray(coherent, dtype=complex))
    if coherent.size == 1 and space.mode_count > 1:
        coherent = np.repeat(coherent, space.mode_count)
    field = np.eye(1, dtype=complex)
    for m, amp in enumerate(coherent):
        vec = coherent_state(amp, space.n_max[m] + 1)
        field = np.kron(field, np.outer(vec, vec.conj()))
    return np.kron(field, atomic.matrix())


@dataclass
class ReferenceTrajectory:
    """Observable series plus conservation diagnostics of one evolution."""

    times: np.ndarray
    rho11: np.ndarray
    rho22: np.ndarray
    rho21: np.ndarray
    rho12: np.ndarray
    nu: np.ndarray
    e: np.ndarray
    h: np.ndarray
    energy: np.ndarray
    max_trace_error: float
    max_herm_error: float
    max_purity: float
    min_eigenvalue: float

    def column(self, name: str) -> np.ndarray:
        plain = {
            "rho_11": self.rho11,
            "rho_22": self.rho22,
            "rho_21": self.rho21,
            "rho_12": self.rho12,
            "nu": self.nu,
        }
        if name in plain:
            return plain[name]
        if name.startswith("e_"):
            return self.e[:, int(name[2:]) - 1]
        if name.startswith("h_"):
            return self.h[:, int(name[2:]) - 1]
        raise KeyError(name)


def _atomic_reduced(rho: np.ndarray) -> np.ndarray:
    f = rho.shape[0] // 2
    return np.einsum("fsft->st", rho.reshape(f, 2, f, 2))


def evolve(
    params: ModelParams,
    rho0,
    grid: TimeGrid,
    space: TruncatedSpace,
    substeps: int = 1,
    eig_checks: int = 17,
) -> ReferenceTrajectory:
    """Fixed-step RK4 integration of the master equation over the grid.

    ``substeps`` RK4 steps are taken per grid interval.  Raises
    TraceDriftError when |tr rho - 1| exceeds 1e-6 (step too large or cutoff
    too small).  The minimum eigenvalue is monitored at ``eig_checks``
    roughly equidistant grid points, not enforced.
    """
    rho = np.array(rho0, dtype=complex)
    if rho.shape != (space.dim, space.dim):
        raise ValueError(f"rho0 must be {space.dim} x {space.dim}")
    ham = build_hamiltonian(params, space)
    n_pts = grid.steps + 1
    n_modes = space.mode_count
    quads = [
        _embed_mode(destroy(space.n_max[m] + 1), space, m) for m in range(n_modes)
    ]
    x_ops = [a.conj().T + a for a in quads]
    y_ops = [1j * (a.conj().T - a) for a in quads]

    out = ReferenceTrajectory(
        times=grid.times,
        rho11=np.empty(n_pts, complex),
        rho22=np.empty(n_pts, complex),
        rho21=np.empty(n_pts, complex),
        rho12=np.empty(n_pts, complex),
        nu=np.empty(n_pts, complex),
        e=np.empty((n_pts, n_modes), complex),
        h=np.empty((n_pts, n_modes), complex),
        energy=np.empty(n_pts, float),
        max_trace_error=0.0,
        max_herm_error=0.0,
        max_purity=0.0,
        min_eigenvalue=np.inf,
    )
    eig_every = max(1, grid.steps // max(1, eig_checks - 1))

    def record(idx, rho):
        atom = _atomic_reduced(rho)
        out.rho11[idx] = atom[0, 0]
        out.rho22[idx] = atom[1, 1]
        out.rho21[idx] = atom[1, 0]
        out.rho12[idx] = atom[0, 1]
        out.nu[idx] = atom[1, 1] - atom[0, 0]
        for m in range(n_modes):
            out.e[idx, m] = np.einsum("ij,ji->", x_ops[m], rho)
            out.h[idx, m] = np.einsum("ij,ji->", y_ops[m], rho)
        out.energy[idx] = np.einsum("ij,ji->", ham, rho).real
        trace_err = abs(np.trace(rho).real - 1.0) + abs(np.trace(rho).imag)
        herm_err = np.abs(rho - rho.conj().T).max()
        purity = np.einsum("ij,ij->", rho, rho.conj()).real
        out.max_trace_error = max(out.max_trace_error, trace_err)
        out.max_herm_error = max(out.max_herm_error, herm_err)
        out.max_purity = max(out.max_purity, purity)
        if trace_err > TRACE_TOLERANCE:
            raise TraceDriftError(
                f"trace drift {trace_err:.3e} at t = {grid.times[idx]:.6g}; "
                "reduce the step or raise the cutoff"
            )

    def rhs(rho):
        return master_rhs(params, rho, space, hamiltonian=ham)

    record(0, rho)
    dt = grid.dt / substeps
    for idx in range(grid.steps):
        for _ in range(substeps):
            k1 = rhs(rho)
            k2 = rhs(rho + 0.5 * dt * k1)
            k3 = rhs(rho + 0.5 * dt * k2)
            k4 = rhs(rho + dt * k3)
            rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        record(idx + 1, rho)
        if (idx + 1) % eig_every == 0 or idx + 1 == grid.steps:
            low = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
            out.min_eigenvalue = min(out.min_eigenvalue, float(low))
    return out
