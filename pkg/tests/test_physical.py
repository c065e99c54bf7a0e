import numpy as np
import pytest

from ppcavity.basis import BasisFamily
from ppcavity.errors import InconsistentStateError, PoleProximityError
from ppcavity.initialization import AtomicDensity, init_points
from ppcavity.invariants import (
    check_ito_transform,
    check_jacobian_diffusion,
    holomorphic_derivatives,
    random_phase_state,
    random_rates,
    sample_model,
)
from ppcavity.jc import (
    ModelParams,
    diffusion_jc_plus,
    drift_jc_plus,
    jc_sde_system,
    phase_init_sampler,
)
from ppcavity.observables import observable_bundle
from ppcavity.physical import (
    PhysState,
    coupling_rate,
    drift_bar,
    from_physical,
    jacobian_change,
    noise_bar,
    physical_init_sampler,
    physical_observable_bundle,
    physical_sde_system,
    reconstruct_fields,
    to_physical,
)
from ppcavity.sde import TimeGrid, run_ensemble

from helpers import rk4

CS = BasisFamily.coherent_spin()
ADD = BasisFamily.additive_noise(4.0, 0.0)


def test_to_physical_definitions():
    a = 0.8
    state = np.array([a, a, 0, 0], dtype=complex)
    phys = to_physical(CS, state)
    assert phys[0] == 2.0 * a  # epsilon
    assert phys[1] == 0.0  # eta
    assert np.allclose(phys[2:], [0.0, 0.0, -1.0])


def test_phys_state_round_trip():
    ps = PhysState(epsilon=(1.0, 2.0), eta=(0.5j, 0), rho21=0.1, rho12=0.2, nu=-0.3)
    assert PhysState.from_vector(ps.to_vector()) == ps


def test_from_physical_example():
    phys = np.array([2.0, 0.0, 0.0, 0.0, -1.0], dtype=complex)
    for fam in (CS, ADD):
        state = from_physical(fam, phys)
        assert np.allclose(state[:2], [1.0, 1.0])
        h, _, ht, _ = fam.eval(state[2], state[3])
        assert abs(complex(h)) <= 1e-14
        assert abs(complex(ht)) <= 1e-14


def test_from_physical_inconsistency():
    bad = np.array([0, 0, 1.0, 1.0, 0.0], dtype=complex)  # 4*1*1 != 1
    with pytest.raises(InconsistentStateError):
        from_physical(CS, bad)
    pole = np.array([0, 0, 0.1, 0.1, 1.0], dtype=complex)
    with pytest.raises(PoleProximityError):
        from_physical(CS, pole)


def test_round_trips(rng):
    for fam in (CS, ADD):
        for _ in range(100):
            state = random_phase_state(rng, fam, 2, scale=0.4)
            phys = to_physical(fam, state)
            back = from_physical(fam, phys)
            scale = 1.0 + np.abs(state).max()
            # h is recovered exactly; z only up to the log branch, so compare
            # through the function values
            assert np.abs(back[:4] - state[:4]).max() <= 1e-12 * scale
            hb = fam.eval(back[4], back[5])
            ho = fam.eval(state[4], state[5])
            assert abs(hb[0] - ho[0]) <= 1e-12 * (1.0 + abs(ho[0]))
            assert abs(hb[2] - ho[2]) <= 1e-12 * (1.0 + abs(ho[2]))
            assert np.abs(to_physical(fam, back) - phys).max() <= 1e-12 * (
                1.0 + np.abs(phys).max()
            )


def test_drift_bar_decoupled_rotations(rng):
    params = ModelParams.from_frequencies(omega=(0.9, 1.7), g=(0.0, 0.0), Omega=1.3)
    phys = np.array([1.0, 0.5, -0.2, 0.3, 0.1 + 0.2j, 0.05, -0.4], dtype=complex)
    out = drift_bar(params, phys)
    assert out[0] == params.omega[0] * phys[1]
    assert out[1] == -params.omega[0] * phys[0]
    assert out[2] == params.omega[1] * phys[3]
    assert out[3] == -params.omega[1] * phys[2]
    assert out[4] == -1j * params.Omega * phys[4]
    assert out[5] == 1j * params.Omega * phys[5]
    assert out[6] == 0.0


def test_drift_bar_relaxation_rows():
    params = ModelParams.from_frequencies(
        omega=(2.0,), g=(0.0,), Omega=0.0, r12=0.4, r21=0.25, r_p=0.15
    )
    phys = np.array([0, 0, 0.2, 0.1, -0.5], dtype=complex)
    out = drift_bar(params, phys)
    assert abs(out[2] + params.gamma2 * 0.2) <= 1e-15
    assert abs(out[3] + params.gamma2 * 0.1) <= 1e-15
    assert abs(out[4] + params.gamma1 * (-0.5 - params.nu0)) <= 1e-15


def test_ito_transform_consistency(rng):
    err, tol = check_ito_transform(rng, 100)
    assert err <= tol


def test_jacobian_diffusion_identity(rng):
    err, tol = check_jacobian_diffusion(rng, 100)
    assert err <= tol


def test_jacobian_matches_spectral_derivatives(rng):
    for fam in (CS, ADD):

        def change(x):
            return to_physical(fam, x, check=False)

        for _ in range(5):
            state = random_phase_state(rng, fam, 2, scale=0.4)
            grad, _ = holomorphic_derivatives(change, state)
            assert np.abs(grad - jacobian_change(fam, state)).max() <= 1e-9


def test_noise_bar_structure(rng):
    params = sample_model(**random_rates(rng))
    n = params.mode_count
    # rho21 = (1-nu)/2 makes the first radicand vanish
    nu = -0.4 + 0.1j
    phys = np.zeros(2 * n + 3, dtype=complex)
    phys[2 * n] = (1.0 - nu) / 2.0
    phys[2 * n + 1] = 0.3
    phys[2 * n + 2] = nu
    bbar = noise_bar(params, phys)
    for k in range(n):
        block = bbar[2 * k : 2 * k + 2, 4 * k : 4 * k + 2]
        assert np.abs(block).max() <= 1e-15
    # zero rates null the dissipative columns
    free = sample_model()
    state = random_phase_state(rng, CS, n, scale=0.4)
    bbar0 = noise_bar(free, to_physical(CS, state))
    assert np.abs(bbar0[:, 4 * n :]).max() == 0.0


def test_reconstruct_fields():
    params = ModelParams.from_frequencies(omega=(2.0,), g=(0.4,), Omega=1.0)
    phys = np.zeros(5, dtype=complex)
    e_val, h_val = reconstruct_fields(params, phys, 0.3)
    assert e_val == 0.0 and h_val == 0.0
    phys[0] = 1.5  # epsilon_1
    e_val, _ = reconstruct_fields(params, phys, params.length / 2.0)
    assert abs(e_val - params.e_photon[0] * 1.5) <= 1e-15


def test_dipole_coupling_identity(rng):
    base = ModelParams.from_frequencies(omega=(1.0, 2.0), g=(0.1, 0.1), Omega=3.0)
    params = ModelParams.from_frequencies(
        omega=(1.0, 2.0), g=tuple(0.3 * base.e_photon), Omega=3.0
    )
    for _ in range(20):
        phys = np.zeros(7, dtype=complex)
        phys[0:4:2] = 0.5 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
        direct = 1j * (params.gs * phys[0:4:2]).sum()
        assert abs(direct - coupling_rate(params, phys)) <= 1e-12 * (1 + abs(direct))


def fig3_free_params():
    return ModelParams.from_frequencies(omega=1100.0, g=200.0, Omega=1000.0)


def test_deterministic_equivalence_over_horizon():
    # noise off: the physical-coordinate flow is the image of the phase flow
    params = fig3_free_params()
    atom = AtomicDensity.from_upper(1.0 / (1.0 + np.exp(-1.0)), 0.0)
    dist = init_points(atom, ADD)
    phi0 = np.array([5.0, 5.0, dist.points[1].z, dist.points[1].w], dtype=complex)
    grid = TimeGrid(0.0, np.pi / 1100.0, 8192)
    phase = rk4(lambda x: drift_jc_plus(params, ADD, x, check=False), phi0, grid)
    bar = rk4(lambda x: drift_bar(params, x), to_physical(ADD, phi0), grid)
    assert np.abs(to_physical(ADD, phase) - bar).max() <= 1e-8


def test_stochastic_equivalence_short_horizon():
    # ensemble means of the changed-variable SDE match the mapped means of the
    # phase-space SDE within combined statistical error
    params = fig3_free_params()
    atom = AtomicDensity.from_upper(1.0 / (1.0 + np.exp(-1.0)), 0.0)
    dist = init_points(atom, CS)
    phase_sampler = phase_init_sampler(params, CS, 5.0, dist)
    grid = TimeGrid(0.0, 0.1 * np.pi / 1100.0, 820)
    runs = 1200
    names = ("rho_21", "rho_12", "nu", "e_1", "h_1")
    res_phase = run_ensemble(
        jc_sde_system(params, CS),
        phase_sampler,
        grid,
        runs,
        31,
        observable_bundle(params, CS, names),
    )
    res_bar = run_ensemble(
        physical_sde_system(params),
        physical_init_sampler(CS, phase_sampler),
        grid,
        runs,
        31,
        physical_observable_bundle(params, names),
    )
    for name in names:
        m_p, e_p = res_phase.column(name)
        m_b, e_b = res_bar.column(name)
        assert (np.abs(m_p - m_b) <= 4.0 * (e_p + e_b) + 1e-9).all()


def test_physical_sampler_requires_coherent_spin():
    params = fig3_free_params()
    atom = AtomicDensity.from_upper(0.7, 0.0)
    dist = init_points(atom, ADD)
    sampler = phase_init_sampler(params, ADD, 1.0, dist)
    with pytest.raises(ValueError):
        physical_init_sampler(ADD, sampler)


def test_jacobian_diffusion_on_dense_grid(rng):
    # direct statement of the transported-diffusion identity at one point
    params = sample_model(**random_rates(rng))
    state = random_phase_state(rng, CS, params.mode_count, scale=0.4)
    phys = to_physical(CS, state)
    jac = jacobian_change(CS, state)
    lhs = noise_bar(params, phys) @ noise_bar(params, phys).T
    rhs = jac @ diffusion_jc_plus(params, CS, state) @ jac.T
    assert np.abs(lhs - rhs).max() <= 1e-8 * (1.0 + np.abs(rhs).max())
