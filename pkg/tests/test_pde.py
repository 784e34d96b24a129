import math

import numpy as np
import pytest

from entroflow.functionals import (
    boltzmann_entropy,
    fd_free_energy,
    fp_free_energy,
    lp_norm,
)
from entroflow.grids import (
    gaussian_density,
    integrate,
    make_uniform_grid,
    normalize,
    staggered_radial_grid,
)
from entroflow.pde import (
    FlowSpec,
    de_bruijn_pde_check,
    dirac_like_density,
    dissipation_report,
    solve,
    stationary_fd,
    write_report_csv,
)


def exact_heat_gaussian(grid, t, sigma0=1.0):
    var = sigma0**2 + 2.0 * t
    return np.exp(-0.5 * grid.nodes**2 / var) / math.sqrt(2.0 * math.pi * var)


@pytest.fixture(scope="module")
def heat_run():
    grid = make_uniform_grid(-8.0, 8.0, 1025)
    spec = FlowSpec("heat", grid, dt=2e-4, horizon=0.5, snapshot_every=50)
    return solve(spec, gaussian_density(grid))


@pytest.fixture(scope="module")
def fp_run():
    grid = make_uniform_grid(-8.0, 8.0, 1025)
    spec = FlowSpec("fokker_planck", grid, dt=1e-3, horizon=1.5, snapshot_every=50)
    return solve(spec, gaussian_density(grid, mean=1.0))


@pytest.fixture(scope="module")
def fd_setup():
    grid = staggered_radial_grid(10.0, 384, 3)
    with pytest.warns(UserWarning):
        stat = stationary_fd(3, grid)
    return grid, stat


# ---------------------------------------------------------------- validation

def test_flow_spec_rejections():
    line = make_uniform_grid(-8.0, 8.0, 65)
    radial = staggered_radial_grid(10.0, 64, 3)
    with pytest.raises(ValueError):
        FlowSpec("heat", line, dt=-1.0, horizon=1.0)
    with pytest.raises(ValueError):
        FlowSpec("heat", radial, dt=0.1, horizon=1.0)
    with pytest.raises(ValueError):
        FlowSpec("fast_diffusion", line, dt=0.1, horizon=1.0)
    with pytest.raises(ValueError):
        FlowSpec("fast_diffusion", staggered_radial_grid(10.0, 64, 2), dt=0.1,
                 horizon=1.0)
    with pytest.raises(ValueError):
        FlowSpec("porous", line, dt=0.1, horizon=1.0)


# ---------------------------------------------------------------- heat flow

def test_heat_flow_matches_gaussian_closed_form(heat_run):
    grid = heat_run.states[0].grid
    final = heat_run.states[-1]
    exact = exact_heat_gaussian(grid, heat_run.times[-1])
    assert integrate(np.abs(final.values - exact), grid) <= 1e-3


def test_heat_flow_mass_and_positivity(heat_run):
    for state in heat_run.states:
        assert abs(state.mass - 1.0) <= 1e-8
        assert state.values.min() > 0.0


def test_heat_flow_entropy_and_lp_monotone(heat_run):
    for functional in (boltzmann_entropy(), lp_norm(2.0), lp_norm(3.0)):
        vals = [functional.value(s) for s in heat_run.states]
        assert np.all(np.diff(vals) <= 1e-10 * max(1.0, np.max(np.abs(vals))))


def test_heat_self_convergence_second_order_in_space():
    errs = []
    for n in (129, 257):
        grid = make_uniform_grid(-8.0, 8.0, n)
        spec = FlowSpec("heat", grid, dt=1e-5, horizon=0.1, snapshot_every=10**9)
        traj = solve(spec, gaussian_density(grid))
        exact = exact_heat_gaussian(grid, 0.1)
        errs.append(integrate(np.abs(traj.states[-1].values - exact), grid))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.4)


def test_de_bruijn_along_heat_flow(heat_run):
    assert de_bruijn_pde_check(heat_run) <= 1e-3


def test_de_bruijn_on_stationary_uniform_density():
    grid = make_uniform_grid(0.0, 1.0, 129)
    spec = FlowSpec("heat", grid, dt=1e-3, horizon=0.05, snapshot_every=10)
    traj = solve(spec, normalize(np.ones(129), grid))
    assert de_bruijn_pde_check(traj) <= 1e-10


def test_de_bruijn_on_bimodal_data():
    grid = make_uniform_grid(-8.0, 8.0, 1025)
    vals = np.exp(-2.0 * (grid.nodes - 1.5) ** 2) + np.exp(-(grid.nodes + 1.5) ** 2)
    spec = FlowSpec("heat", grid, dt=2e-4, horizon=0.2, snapshot_every=50)
    traj = solve(spec, normalize(vals, grid))
    assert de_bruijn_pde_check(traj) <= 5e-3


def test_dirac_like_density_is_narrow():
    grid = make_uniform_grid(-8.0, 8.0, 1025)
    d = dirac_like_density(grid)
    assert abs(d.mass - 1.0) <= 1e-12
    # bulk of the mass within a few cells of the origin
    window = np.abs(grid.nodes) <= 10 * grid.spacing
    assert integrate(np.where(window, d.values, 0.0), grid) >= 0.99


def test_de_bruijn_from_dirac_like_data_after_burn_in():
    """Diagnostics from near-Dirac data start at t > 0: drop the early
    snapshots, where the dissipation identity is not yet resolved."""
    from entroflow.grids import DensityTrajectory

    grid = make_uniform_grid(-8.0, 8.0, 1025)
    spec = FlowSpec("heat", grid, dt=1e-4, horizon=0.3, snapshot_every=20)
    traj = solve(spec, dirac_like_density(grid))
    skip = int(np.searchsorted(traj.times, 0.05))
    trimmed = DensityTrajectory(traj.times[skip:] - traj.times[skip],
                                traj.states[skip:])
    assert de_bruijn_pde_check(trimmed) <= 1e-2
    # without the burn-in the identity is not resolved yet
    assert de_bruijn_pde_check(traj) > 1.0


# ---------------------------------------------------------------- Fokker-Planck

def test_fp_gaussian_is_stationary():
    grid = make_uniform_grid(-8.0, 8.0, 513)
    gamma = gaussian_density(grid)
    spec = FlowSpec("fokker_planck", grid, dt=1e-3, horizon=0.1, snapshot_every=10)
    traj = solve(spec, gamma)
    for state in traj.states:
        assert integrate(np.abs(state.values - gamma.values), grid) <= 1e-8


def test_fp_dissipation_report(fp_run):
    grid = fp_run.states[0].grid
    report = dissipation_report(fp_run, fp_free_energy(grid))
    assert report.production_bounded
    assert report.value_monotone
    assert report.fitted_production_rate == pytest.approx(2.0, rel=0.05)
    assert report.fitted_value_rate == pytest.approx(2.0, rel=0.05)


def test_fp_report_from_minimizer_trivially_passes():
    grid = make_uniform_grid(-8.0, 8.0, 513)
    gamma = gaussian_density(grid)
    spec = FlowSpec("fokker_planck", grid, dt=1e-3, horizon=0.05, snapshot_every=10)
    report = dissipation_report(solve(spec, gamma), fp_free_energy(grid))
    assert np.all(report.productions <= 1e-10)
    assert report.passed


def test_report_csv(tmp_path, fp_run):
    grid = fp_run.states[0].grid
    report = dissipation_report(fp_run, fp_free_energy(grid))
    path = tmp_path / "report.csv"
    write_report_csv(report, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,value,production,bound"
    assert len(lines) == len(report.times) + 1


# ---------------------------------------------------------------- fast diffusion

def test_stationary_fd_profile(fd_setup):
    grid, stat = fd_setup
    assert abs(stat.mass - 1.0) <= 1e-10
    assert np.all(np.diff(stat.values) < 0.0)  # radially decreasing


def test_stationary_fd_constant_matches_high_resolution_oracle():
    # same node-centered quadrature family, 10x resolution
    def constant_on(num):
        grid = make_uniform_grid(0.0, 10.0, num, ambient_dim=3, geometry="radial")
        with pytest.warns(UserWarning):
            stat = stationary_fd(3, grid)
        return stat.values[0] ** (-1.0 / 3.0)  # C = mu(0)^(-1/n)

    assert abs(constant_on(4097) - constant_on(40961)) <= 1e-8


def test_stationary_state_is_fixed_point(fd_setup):
    grid, stat = fd_setup
    spec = FlowSpec("fast_diffusion", grid, dt=1e-3, horizon=5e-3)
    traj = solve(spec, stat)
    for state in traj.states:
        assert integrate(np.abs(state.values - stat.values), grid) <= 1e-6


def test_fd_relaxation_rate_and_conservation(fd_setup):
    grid, stat = fd_setup
    bump = 1.0 + 0.05 * np.exp(-0.5 * (grid.nodes - 2.0) ** 2)
    mu0 = normalize(stat.values * bump, grid)
    spec = FlowSpec("fast_diffusion", grid, dt=2e-3, horizon=2.5, snapshot_every=50)
    traj = solve(spec, mu0)
    for state in traj.states:
        assert abs(state.mass - 1.0) <= 1e-8
        assert state.values.min() > 0.0
    functional = fd_free_energy(3, minimizer=stat)
    report = dissipation_report(traj, functional)
    assert report.value_monotone
    assert report.fitted_value_rate is not None
    assert report.fitted_value_rate >= 2.0 * (2.0 / 3.0) * 0.95
