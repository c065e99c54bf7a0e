import numpy as np
import pytest

from ppcavity.errors import DimensionCapError, TraceDriftError
from ppcavity.initialization import AtomicDensity
from ppcavity.jc import ModelParams
from ppcavity.reference import (
    TruncatedSpace,
    build_hamiltonian,
    coherent_state,
    destroy,
    evolve,
    initial_density,
    master_rhs,
)
from ppcavity.sde import TimeGrid


def free_params(**kw):
    return ModelParams.from_frequencies(omega=2.0, g=0.0, Omega=1.5, **kw)


def coupled_params(g=0.7, **kw):
    return ModelParams.from_frequencies(omega=2.0, g=g, Omega=1.5, **kw)


def random_density(rng, dim):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def test_space_dimensions_and_cap():
    space = TruncatedSpace((3, 2))
    assert space.dim == 2 * 4 * 3
    with pytest.raises(DimensionCapError):
        TruncatedSpace((100, 100))
    with pytest.raises(ValueError):
        TruncatedSpace((0,))


def test_destroy_ladder():
    a = destroy(4)
    n_op = a.conj().T @ a
    assert np.allclose(np.diag(n_op), [0, 1, 2, 3])


def test_free_hamiltonian_is_diagonal():
    params = free_params()
    space = TruncatedSpace((3,))
    ham = build_hamiltonian(params, space)
    assert np.abs(ham - np.diag(np.diag(ham))).max() == 0.0
    # eigenvalues are hbar*(omega*n ± Omega/2) in the |n, s> ordering
    diag = np.diag(ham).real
    want = [params.omega[0] * n + s * params.Omega for n in range(4) for s in (-0.5, 0.5)]
    assert np.allclose(diag, want)


def test_hamiltonian_hermitian_and_ladder_element():
    params = coupled_params()
    space = TruncatedSpace((5,))
    ham = build_hamiltonian(params, space)
    assert np.abs(ham - ham.conj().T).max() <= 1e-14
    n = 3
    # <n+1, down | H | n, up> = hbar g sin(k x0) sqrt(n+1)
    got = ham[(n + 1) * 2 + 0, n * 2 + 1]
    assert abs(got - params.hbar * params.gs[0] * np.sqrt(n + 1)) <= 1e-13


def test_master_rhs_preserves_trace(rng):
    params = coupled_params(r12=0.4, r21=0.2, r_p=0.1)
    space = TruncatedSpace((3,))
    for _ in range(5):
        rho = random_density(rng, space.dim)
        assert abs(np.trace(master_rhs(params, rho, space))) <= 1e-12


def test_bloch_relaxation_of_inversion(rng):
    params = free_params(r12=0.4, r21=0.25, r_p=0.15)
    space = TruncatedSpace((2,))
    sz = np.kron(np.eye(space.field_dim), np.diag([-0.5, 0.5]))
    for _ in range(5):
        rho = random_density(rng, space.dim)
        dotrho = master_rhs(params, rho, space)
        got = 2.0 * np.trace(sz @ dotrho)
        want = -params.gamma1 * (2.0 * np.trace(sz @ rho) - params.nu0)
        assert abs(got - want) <= 1e-12 * (1.0 + abs(want))


def test_free_precession():
    params = free_params()
    space = TruncatedSpace((2,))
    rho0 = initial_density(params, space, 0.4, AtomicDensity.from_upper(0.6, 0.2 + 0.1j))
    grid = TimeGrid(0.0, 2.0, 400)
    traj = evolve(params, rho0, grid, space)
    exact = np.conj(0.2 + 0.1j) * np.exp(-1j * params.Omega * grid.times)
    assert np.abs(traj.rho21 - exact).max() <= 1e-9
    assert np.abs(traj.rho11 - 0.6).max() <= 1e-12


def test_coherence_decays_at_gamma2():
    params = free_params(r12=0.4, r21=0.25, r_p=0.15)
    space = TruncatedSpace((2,))
    rho0 = initial_density(params, space, 0.0, AtomicDensity.from_upper(0.8, 0.25))
    grid = TimeGrid(0.0, 1.5, 600)
    traj = evolve(params, rho0, grid, space)
    exact = 0.25 * np.exp(-(1j * params.Omega + params.gamma2) * grid.times)
    assert np.abs(traj.rho21 - exact).max() <= 1e-8


def test_conservation_monitors():
    params = coupled_params()
    space = TruncatedSpace((8,))
    rho0 = initial_density(params, space, 1.2, AtomicDensity.from_upper(0.7, 0.1))
    grid = TimeGrid(0.0, 3.0, 1500)
    traj = evolve(params, rho0, grid, space)
    assert traj.max_trace_error <= 1e-10
    assert traj.max_herm_error <= 1e-12
    assert traj.max_purity <= 1.0 + 1e-10
    assert traj.min_eigenvalue >= -1e-8
    spread = np.abs(traj.energy - traj.energy[0]).max()
    assert spread <= 1e-8 * abs(traj.energy[0])


def test_cutoff_insensitivity_small_system():
    params = coupled_params(g=0.4)
    grid = TimeGrid(0.0, 1.0, 500)
    results = {}
    for n_max in (14, 20):
        space = TruncatedSpace((n_max,))
        rho0 = initial_density(params, space, 1.2, AtomicDensity.from_upper(0.7, 0.0))
        results[n_max] = evolve(params, rho0, grid, space)
    for name in ("rho_11", "rho_21", "e_1", "h_1"):
        diff = np.abs(results[14].column(name) - results[20].column(name)).max()
        assert diff <= 1e-6


def test_trace_drift_error_on_unstable_step():
    params = coupled_params()
    space = TruncatedSpace((6,))
    rho0 = initial_density(params, space, 1.0, AtomicDensity.from_upper(0.7, 0.0))
    grid = TimeGrid(0.0, 40.0, 40)  # RK4 far beyond its stability limit
    with pytest.raises(TraceDriftError):
        evolve(params, rho0, grid, space)


def test_coherent_state_statistics():
    vec = coherent_state(2.0, 40)
    assert abs(np.linalg.norm(vec) - 1.0) <= 1e-12
    n_mean = (np.arange(40) * np.abs(vec) ** 2).sum()
    assert abs(n_mean - 4.0) <= 1e-10


def test_initial_density_trace_and_block():
    params = coupled_params()
    space = TruncatedSpace((10,))
    atom = AtomicDensity.from_upper(0.7, 0.1j)
    rho0 = initial_density(params, space, 1.0, atom)
    assert abs(np.trace(rho0) - 1.0) <= 1e-12
    reduced = np.einsum("fsft->st", rho0.reshape(space.field_dim, 2, space.field_dim, 2))
    assert np.abs(reduced - atom.matrix()).max() <= 1e-12
