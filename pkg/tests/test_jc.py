import numpy as np
import pytest

from ppcavity.basis import BasisFamily
from ppcavity.errors import PoleProximityError
from ppcavity.invariants import random_phase_state, random_rates, sample_model
from ppcavity.jc import (
    ModelParams,
    PhaseState,
    diffusion_jc,
    diffusion_jc_plus,
    drift_jc,
    drift_jc_plus,
    jc_sde_system,
    noise_jc,
    noise_jc_plus,
    phase_init_sampler,
)
from ppcavity.initialization import AtomicDensity, init_points
from ppcavity.observables import observable_bundle
from ppcavity.sde import TimeGrid, run_ensemble

from helpers import single_mode_drift, single_mode_noise

CS = BasisFamily.coherent_spin()
ADD = BasisFamily.additive_noise(4.0, 0.0)


def fig_params(**rates):
    return ModelParams.from_frequencies(omega=1100.0, g=200.0, Omega=1000.0, **rates)


class TestModelParams:
    def test_from_cavity_mode_frequencies(self):
        params = ModelParams.from_cavity(length=2.0, mode_count=3, Omega=5.0, coupling=0.1)
        assert np.allclose(params.omega_array, np.pi / 2.0 * np.array([1, 2, 3]))
        assert np.allclose(params.wave_numbers, params.omega_array)
        assert params.x0 == 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            ModelParams(Omega=1.0, omega=(2.0, 1.0), g=(0.1, 0.1), x0=0.5, length=1.0)
        with pytest.raises(ValueError):
            ModelParams(Omega=1.0, omega=(1.0,), g=(0.1,), x0=2.0, length=1.0)
        with pytest.raises(ValueError):
            ModelParams(Omega=1.0, omega=(1.0,), g=(0.1,), x0=0.5, length=1.0, r12=-1.0)
        with pytest.raises(ValueError):
            ModelParams(Omega=1.0, omega=(1.0,), g=(0.1, 0.2), x0=0.5, length=1.0)

    def test_rates_and_photon_field(self):
        params = ModelParams.from_frequencies(
            omega=(1.0, 2.0), g=(0.1, 0.1), Omega=3.0, r12=0.4, r21=0.2, r_p=0.1
        )
        assert params.gamma1 == pytest.approx(0.6)
        assert params.gamma2 == pytest.approx(0.4)
        assert params.nu0 == pytest.approx(0.2 / 0.6)
        assert np.allclose(
            params.e_photon, np.sqrt(params.omega_array / params.volume)
        )
        # no rates: steady-state inversion convention
        assert fig_params().nu0 == 0.0

    def test_dipole_moment_requires_proportional_couplings(self):
        bad = ModelParams.from_frequencies(omega=(1.0, 2.0), g=(0.1, 0.1), Omega=3.0)
        with pytest.raises(ValueError):
            bad.dipole_moment()
        e_p = bad.e_photon
        good = ModelParams.from_frequencies(
            omega=(1.0, 2.0), g=tuple(0.3 * e_p), Omega=3.0
        )
        m21 = good.dipole_moment()
        assert m21 == pytest.approx(-0.3)

    def test_phase_state_round_trip(self):
        state = PhaseState(alpha=(1 + 2j, 0.5), beta=(3j, -1.0), z=0.1j, w=-0.2)
        vec = state.to_vector()
        assert np.array_equal(vec, [1 + 2j, 3j, 0.5, -1.0, 0.1j, -0.2])
        assert PhaseState.from_vector(vec) == state


class TestDrift:
    def test_zero_state_zero_drift(self):
        out = drift_jc(fig_params(), ADD, np.zeros(4, complex))
        assert np.abs(out).max() == 0.0

    def test_decoupled_limit_is_free_rotation(self, rng):
        params = ModelParams.from_frequencies(omega=(0.9, 1.7), g=(0.0, 0.0), Omega=1.3)
        for fam in (CS, ADD):
            state = random_phase_state(rng, fam, 2)
            out = drift_jc(params, fam, state)
            alpha = state[0:4:2]
            beta = state[1:4:2]
            pf = fam.jet(state[4], state[5])
            expected_bosonic_a = -1j * params.omega_array * alpha
            expected_bosonic_b = 1j * params.omega_array * beta
            assert np.abs(out[0:4:2] - expected_bosonic_a).max() <= 1e-14
            assert np.abs(out[1:4:2] - expected_bosonic_b).max() <= 1e-14
            assert abs(out[4] - (-1j) * params.Omega * pf.lin) <= 1e-13
            assert abs(out[5] - 1j * params.Omega * pf.lin_t) <= 1e-13

    def test_single_mode_closed_form(self, rng):
        params = fig_params()
        for delta in (4.0 + 0.0j, 3.0 + 1.0j):
            fam = BasisFamily.additive_noise(delta, 0.0)
            for _ in range(100):
                state = random_phase_state(rng, fam, 1)
                got = drift_jc(params, fam, state)
                want = single_mode_drift(params, delta, state)
                assert np.abs(got - want).max() <= 1e-12 * (1.0 + np.abs(want).max())

    def test_dissipation_free_limit(self, rng):
        params = fig_params()
        state = random_phase_state(rng, CS, 1)
        assert np.array_equal(
            drift_jc_plus(params, CS, state), drift_jc(params, CS, state)
        )

    def test_dissipation_touches_only_fermionic_rows(self, rng):
        params = sample_model(**random_rates(rng))
        free = sample_model()
        for fam in (CS, ADD):
            state = random_phase_state(rng, fam, params.mode_count)
            with_rates = drift_jc_plus(params, fam, state)
            without = drift_jc(free, fam, state)
            n2 = 2 * params.mode_count
            assert np.array_equal(with_rates[:n2], without[:n2])
            assert np.abs(with_rates[n2:] - without[n2:]).max() > 0.0

    def test_singularity_error(self):
        params = fig_params()
        bad = np.array([0.1, 0.1, 1.0, -1.0], dtype=complex)  # 1 + z w = 0
        with pytest.raises(PoleProximityError):
            drift_jc(params, CS, bad)
        with pytest.raises(PoleProximityError):
            noise_jc(params, CS, bad)


class TestDiffusionAndNoise:
    def test_diffusion_symmetric(self, rng):
        params = sample_model(**random_rates(rng))
        for fam in (CS, ADD):
            state = random_phase_state(rng, fam, params.mode_count)
            for fn in (diffusion_jc, diffusion_jc_plus):
                d = fn(params, fam, state)
                assert np.abs(d - d.T).max() == 0.0

    def test_additive_family_entries_are_constant(self, rng):
        params = sample_model()
        state = random_phase_state(rng, ADD, params.mode_count)
        d = diffusion_jc(params, ADD, state)
        n = params.mode_count
        for k in range(n):
            assert d[2 * k, 2 * n] == 1j * params.gs[k] * 4.0
            assert d[2 * k + 1, 2 * n + 1] == -1j * params.gs[k] * 4.0

    def test_coherent_spin_diffusion_vanishes_at_unit_points(self):
        params = fig_params()
        state = np.array([0.3, 0.1, 1.0, 0.5j], dtype=complex)  # z = 1
        d = diffusion_jc(params, CS, state)
        assert d[0, 2] == 0.0  # d_1 = g s (z^2 - 1) = 0

    def test_factorization(self, rng):
        for _ in range(25):
            params = sample_model(**random_rates(rng))
            for fam in (CS, ADD, BasisFamily.additive_noise(3.0 + 1.0j, 0.1j)):
                state = random_phase_state(rng, fam, params.mode_count)
                b = noise_jc(params, fam, state)
                d = diffusion_jc(params, fam, state)
                assert np.abs(b @ b.T - d).max() <= 1e-12 * (1.0 + np.abs(d).max())
                bp = noise_jc_plus(params, fam, state)
                dp = diffusion_jc_plus(params, fam, state)
                assert np.abs(bp @ bp.T - dp).max() <= 1e-12 * (1.0 + np.abs(dp).max())

    def test_noise_single_mode_closed_form(self, rng):
        params = fig_params()
        for delta in (4.0 + 0.0j, 3.0 + 1.0j):
            fam = BasisFamily.additive_noise(delta, 0.0)
            state = random_phase_state(rng, fam, 1)
            got = noise_jc(params, fam, state)
            assert np.abs(got - single_mode_noise(params, delta)).max() <= 1e-14

    def test_additive_noise_matrix_state_independent(self, rng):
        params = sample_model()
        base = noise_jc(params, ADD, np.zeros(params.dim, complex))
        for _ in range(20):
            state = random_phase_state(rng, ADD, params.mode_count)
            assert np.array_equal(noise_jc(params, ADD, state), base)

    def test_dissipative_block(self, rng):
        params = sample_model(**random_rates(rng))
        state = random_phase_state(rng, CS, params.mode_count)
        n = params.mode_count
        extra = noise_jc_plus(params, CS, state)[:, 4 * n :]
        d_entry = diffusion_jc_plus(params, CS, state)[2 * n, 2 * n + 1]
        tt = extra @ extra.T
        want = np.zeros_like(tt)
        want[2 * n, 2 * n + 1] = want[2 * n + 1, 2 * n] = d_entry
        assert np.abs(tt - want).max() <= 1e-15 * (1.0 + abs(d_entry))
        # zero rates: the extra columns vanish identically
        free = sample_model()
        extra0 = noise_jc_plus(free, CS, state)[:, 4 * n :]
        assert np.abs(extra0).max() == 0.0


class TestEnsembleIntegration:
    def test_decoupled_mode_rotates(self):
        params = ModelParams.from_frequencies(omega=50.0, g=0.0, Omega=40.0)
        atom = AtomicDensity.from_upper(0.7, 0.1)
        dist = init_points(atom, CS)
        sampler = phase_init_sampler(params, CS, 2.0, dist)
        system = jc_sde_system(params, CS)
        assert system.noise_dim == 4
        grid = TimeGrid(0.0, 0.2, 4000)
        res = run_ensemble(
            system,
            sampler,
            grid,
            40,
            3,
            observable_bundle(params, CS, ("e_1",)),
        )
        mean, err = res.column("e_1")
        # alpha rotates at -omega, beta at +omega: e = 2*Re(alpha_0 e^{-i w t})
        exact = 2.0 * 2.0 * np.cos(params.omega[0] * grid.times)
        # explicit-Euler error bounds: amplitude growth plus phase lag
        wdt = params.omega[0] * grid.dt
        k = np.arange(grid.steps + 1)
        amp = np.abs(1.0 + 1j * wdt) ** k - 1.0
        phase = k * wdt**3 / 3.0
        assert (np.abs(mean - exact) <= 4.0 * err + 4.0 * (amp + phase) + 1e-12).all()
        assert res.runs_diverged == 0

    def test_sampler_respects_weights(self, rng):
        params = fig_params()
        atom = AtomicDensity.from_upper(0.62, 0.21 * np.exp(0.4j))
        dist = init_points(atom, CS)
        sampler = phase_init_sampler(params, CS, 1.5, dist)
        draws = np.array([sampler(rng)[2] for _ in range(4000)])
        fractions = [
            np.mean(np.abs(draws - pt.z) < 1e-12) for pt in dist.points
        ]
        for frac, pt in zip(fractions, dist.points):
            assert abs(frac - pt.weight) <= 4.0 * np.sqrt(0.25 / 4000)
