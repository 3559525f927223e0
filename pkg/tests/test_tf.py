import numpy as np
import pytest

from ionlab.errors import DomainError, ParameterError
from ionlab.radial import RadialField, field_from_function, integrate_3d, make_log_grid
from ionlab.tf import (
    TFParams,
    TFSolverOptions,
    default_tail_window,
    neutral_tail_solution,
    solve_tf,
    sommerfeld_amplitude,
    tf_energy,
    tf_scaling_check,
    tf_tail_exponent,
)


@pytest.fixture(scope="module")
def small_grid():
    return make_log_grid(1e-4, 400.0, 1100)


class TestMaximumIonization:
    def test_overfilled_mass_saturates_at_z(self, small_grid):
        sol = solve_tf(TFParams(z=1.0, n_electrons=2.0), small_grid)
        assert sol.mass == pytest.approx(1.0, rel=1e-3)
        assert sol.mu == 0.0

    def test_undersized_mass_pins_constraint(self, small_grid):
        sol = solve_tf(TFParams(z=1.0, n_electrons=0.5), small_grid)
        assert sol.mass == pytest.approx(0.5, rel=1e-6)
        assert sol.mu > 0

    def test_complementarity(self, small_grid):
        neutralish = solve_tf(TFParams(z=1.0, n_electrons=3.0), small_grid)
        assert neutralish.mu * (3.0 - neutralish.mass) == pytest.approx(0.0, abs=1e-9)
        ionized = solve_tf(TFParams(z=1.0, n_electrons=0.7), small_grid)
        assert ionized.mu > 0
        assert ionized.mu * (0.7 - ionized.mass) == pytest.approx(0.0, abs=1e-9)
        assert ionized.mass <= 0.7 * (1 + 1e-9)

    def test_invalid_params_rejected(self):
        with pytest.raises(ParameterError):
            TFParams(z=0.0, n_electrons=1.0)
        with pytest.raises(ParameterError):
            TFParams(z=1.0, n_electrons=-2.0)


class TestEnergyFunctional:
    def test_zero_density(self, small_grid):
        rho = RadialField(small_grid, np.zeros(small_grid.n))
        assert tf_energy(rho, TFParams(z=1.0, n_electrons=1.0)) == 0.0

    def test_reported_energy_self_consistent(self, small_grid):
        params = TFParams(z=1.0, n_electrons=1.0)
        sol = solve_tf(params, small_grid)
        assert tf_energy(sol.rho, params) == pytest.approx(sol.energy, abs=1e-10)

    def test_minimizer_beats_trial_densities(self, small_grid):
        params = TFParams(z=1.0, n_electrons=1.0)
        sol = solve_tf(params, small_grid)
        for scale in (0.5, 1.0, 2.0):
            trial = field_from_function(small_grid, lambda r: np.exp(-scale * r))
            mass = integrate_3d(trial)
            trial = RadialField(small_grid, trial.values / mass)  # mass 1
            assert tf_energy(trial, params) >= sol.energy - 1e-12

    def test_negative_density_rejected(self, small_grid):
        rho = RadialField(small_grid, -np.ones(small_grid.n))
        with pytest.raises(DomainError):
            tf_energy(rho, TFParams(z=1.0, n_electrons=1.0))

    def test_energy_nonincreasing_in_n_and_flat_above_z(self, small_grid):
        params = [TFParams(z=1.0, n_electrons=n) for n in (0.4, 0.7, 1.0, 1.5, 2.5)]
        energies = [solve_tf(p, small_grid).energy for p in params]
        for a, b in zip(energies, energies[1:]):
            assert b <= a + 1e-10
        assert energies[-1] == pytest.approx(energies[-2], abs=1e-8)


class TestScaling:
    # High-Z runs need the default resolution: on coarse grids the
    # box-edge region of the residual norm is noise-sensitive.
    def test_identity_case_roundoff(self, small_grid):
        mismatch = tf_scaling_check(TFParams(z=1.0, n_electrons=1.0), small_grid)
        assert mismatch < 1e-12

    def test_neutral_z10(self):
        assert tf_scaling_check(TFParams(z=10.0, n_electrons=10.0)) < 1e-3

    def test_ionized_z100(self):
        assert tf_scaling_check(TFParams(z=100.0, n_electrons=90.0)) < 1e-3


class TestTail:
    def test_neutral_exponent_near_minus_four(self, tf_tail_z1):
        fit = tf_tail_exponent(tf_tail_z1)
        assert not fit.compact_support
        assert fit.exponent == pytest.approx(-4.0, abs=0.1)

    def test_amplitude_matches_algebraic_oracle(self):
        # deep-window fit against A solving 12 A = 4 pi (3A/(5c))^(3/2)
        sol = neutral_tail_solution(100.0)
        window = tuple(np.array([3000.0, 6000.0]) * 100.0 ** (-1.0 / 3.0))
        fit = tf_tail_exponent(sol, window)
        assert fit.amplitude == pytest.approx(sommerfeld_amplitude(), rel=0.05)

    def test_ionized_solution_flagged_compact(self, small_grid):
        sol = solve_tf(TFParams(z=1.0, n_electrons=0.5), small_grid)
        fit = tf_tail_exponent(sol, (5.0, 50.0))
        assert fit.compact_support
        assert fit.exponent is None

    def test_window_outside_grid_rejected(self, tf_neutral_z1):
        with pytest.raises(ParameterError):
            tf_tail_exponent(tf_neutral_z1, (5.0, 5000.0))

    def test_default_window_scales_with_charge(self):
        lo1, hi1 = default_tail_window(1.0)
        lo8, hi8 = default_tail_window(8.0)
        assert lo8 == pytest.approx(lo1 / 2.0)
        assert hi8 == pytest.approx(hi1 / 2.0)


class TestUniquenessAndPositivity:
    def test_two_starts_converge_to_same_density(self, small_grid):
        params = TFParams(z=2.0, n_electrons=2.0)
        opts = TFSolverOptions(residual_tol=1e-9)
        sol_a = solve_tf(params, small_grid, opts)

        # second run from a very different initial profile
        from ionlab.tf import _fixed_point

        rho0 = np.full(small_grid.n, 1e-3)
        rho_b, res_b, _ = _fixed_point(small_grid, params, 0.0, rho0, opts)
        assert res_b < 2e-9
        diff = integrate_3d(
            RadialField(small_grid, np.abs(sol_a.rho.values - rho_b))
        )
        assert diff < 1e-6

    def test_unshifted_potential_nonnegative_when_mass_below_z(self, small_grid):
        sol = solve_tf(TFParams(z=1.0, n_electrons=0.6), small_grid)
        # Z/r - rho*1/|x| = phi + mu must be pointwise nonnegative
        assert np.min(sol.phi.values + sol.mu) > -1e-12

    def test_grid_refinement_stability(self):
        params = TFParams(z=1.0, n_electrons=1.0)
        e1 = solve_tf(params, make_log_grid(1e-4, 400.0, 1100)).energy
        e2 = solve_tf(params, make_log_grid(1e-4, 400.0, 2200)).energy
        assert abs(e2 - e1) / abs(e2) < 1e-4
