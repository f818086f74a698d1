import math

import numpy as np
import pytest

from sktmc import (
    CFLViolation,
    FDConfig,
    GridSpec,
    SKTParameters,
    cfl_limit,
    exact_linear,
    fd_solve,
    fd_step,
    field_from_initial,
    gaussian_profile,
    make_initial,
)
from sktmc.fd import fd_gradient_step

LINEAR = SKTParameters(d1=0.5, d2=1.0)
CROSS = SKTParameters(d1=0.25, d2=0.25, d11=0.05, d12=0.1, d21=0.1, d22=0.05,
                      a1=0.5, a2=0.5, a11=0.25, a12=0.25, a21=0.25, a22=0.25)


class TestFdStep:
    def test_constant_field_unchanged(self):
        g = GridSpec(-2.0, 2.0, 21)
        f = field_from_initial(g, lambda x: np.full_like(x, 1.5),
                               lambda x: np.full_like(x, 0.5))
        f2 = fd_step(f, SKTParameters(d1=0.5, d2=0.5, d11=0.1), 1e-3)
        assert np.array_equal(f2.u1, f.u1)
        assert np.array_equal(f2.u2, f.u2)

    def test_cfl_violation_reports_admissible_step(self):
        g = GridSpec(-2.0, 2.0, 41)
        f = field_from_initial(g, gaussian_profile(0, 0.5, 1), gaussian_profile(0, 0.5, 1))
        limit = cfl_limit(f, LINEAR)
        with pytest.raises(CFLViolation) as exc:
            fd_step(f, LINEAR, 2.0 * limit)
        assert exc.value.admissible == pytest.approx(limit)

    def test_mass_conserved_without_reaction(self):
        g = GridSpec(-8.0, 8.0, 161)
        prof = gaussian_profile(0.0, 1.0, 1.0)
        f = field_from_initial(g, prof, prof)
        mass0 = np.trapezoid(f.u1, dx=g.dx)
        limit = cfl_limit(f, LINEAR)
        for _ in range(50):
            f = fd_step(f, LINEAR, 0.8 * limit)
        assert np.trapezoid(f.u1, dx=g.dx) == pytest.approx(mass0, abs=1e-8)


class TestFdSolve:
    def test_zero_time_returns_initial_only(self):
        g = GridSpec(-2.0, 2.0, 21)
        prof = gaussian_profile(0, 0.5, 1)
        traj = fd_solve(prof, prof, LINEAR, g, 0.0, FDConfig(dt_fd=1e-3, snapshot_dt=0.05))
        assert len(traj) == 1
        assert traj[0].t == 0.0

    def test_zero_initial_data(self):
        g = GridSpec(-2.0, 2.0, 21)
        zero = make_initial("constant(0)")
        traj = fd_solve(zero, zero, CROSS, g, 0.1, FDConfig(dt_fd=1e-3, snapshot_dt=0.05))
        assert all(np.all(f.u1 == 0.0) and np.all(f.u2 == 0.0) for f in traj.fields)

    def test_snapshots_at_layer_times(self):
        g = GridSpec(-8.0, 8.0, 81)
        prof = gaussian_profile(0.0, 1.0, 1.0)
        traj = fd_solve(prof, prof, LINEAR, g, 0.2, FDConfig(dt_fd=7e-3, snapshot_dt=0.05))
        assert np.allclose(traj.times, [0.0, 0.05, 0.1, 0.15, 0.2])

    def test_linear_case_matches_exact_solution(self):
        g = GridSpec(-8.0, 8.0, 161)
        prof = gaussian_profile(0.0, 1.0, 1.0)
        f0 = field_from_initial(g, prof, prof)
        limit = cfl_limit(f0, LINEAR)
        traj = fd_solve(prof, prof, LINEAR, g, 0.25,
                        FDConfig(dt_fd=0.8 * limit, snapshot_dt=0.025))
        x = g.nodes()
        err = np.max(np.abs(traj[-1].u1 - exact_linear(0, 1, 1, 0.5, 0.0, 0.25, x)))
        assert err < 5e-4

    def test_nonnegativity_on_acceptance_scenarios(self):
        g = GridSpec(-8.0, 8.0, 161)
        for params, spec, T in ((LINEAR, "gaussian(0,1,1)", 0.25),
                                (CROSS, "two-bumps(-1.5,1.5,0.8,3)", 0.2)):
            prof = make_initial(spec)
            f0 = field_from_initial(g, prof, prof)
            limit = cfl_limit(f0, params)
            traj = fd_solve(prof, prof, params, g, T,
                            FDConfig(dt_fd=0.8 * limit, snapshot_dt=0.05))
            assert min(float(np.min(f.u1)) for f in traj.fields) >= 0.0
            assert min(float(np.min(f.u2)) for f in traj.fields) >= 0.0

    def test_richardson_convergence_order(self):
        # oracle: under dt_fd proportional to dx^2 the sup error is O(dx^2);
        # equal rates keep the dt and dx^2 truncation terms from cancelling
        params = SKTParameters(d1=0.5, d2=0.5)
        prof = gaussian_profile(0.0, 1.0, 1.0)
        errors = []
        # steps divide the snapshot interval exactly, so the effective step
        # really scales with dx^2 instead of snapping to the cadence
        for n, dt_fd in ((81, 0.0125), (161, 0.003125), (321, 0.00078125)):
            g = GridSpec(-8.0, 8.0, n)
            traj = fd_solve(prof, prof, params, g, 0.25,
                            FDConfig(dt_fd=dt_fd, snapshot_dt=0.05))
            x = g.nodes()
            errors.append(np.max(np.abs(traj[-1].u1
                                        - exact_linear(0, 1, 1, 0.5, 0.0, 0.25, x))))
        orders = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
        assert min(orders) >= 1.9


class TestExactLinear:
    def test_initial_time_recovers_data(self):
        x = np.linspace(-4, 4, 101)
        prof = gaussian_profile(0.3, 1.1, 2.0)
        assert np.allclose(exact_linear(0.3, 1.1, 2.0, 0.7, 0.9, 0.0, x), prof(x))

    def test_mass_preserved_without_growth(self):
        x = np.linspace(-30, 30, 6001)
        for t in (0.0, 0.5, 2.0):
            vals = exact_linear(0.0, 1.0, 1.0, 0.5, 0.0, t, x)
            assert np.trapezoid(vals, x) == pytest.approx(1.0, rel=1e-8)

    def test_frozen_closed_form_value(self):
        # oracle: e^0.25 / sqrt(2 pi (1 + 2*0.5*0.25)) computed by hand
        value = exact_linear(0.0, 1.0, 1.0, 0.5, 1.0, 0.25, 0.0)
        assert value == pytest.approx(0.458172142333142, rel=1e-14)
        assert value == pytest.approx(math.exp(0.25) / math.sqrt(2 * math.pi * 1.25),
                                      rel=1e-14)

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            exact_linear(0.0, 1.0, 1.0, 0.5, 0.0, -0.1, 0.0)

    def test_matches_fd_solver(self):
        g = GridSpec(-8.0, 8.0, 161)
        prof = gaussian_profile(0.0, 1.0, 1.0)
        p = SKTParameters(d1=0.5, d2=1.0, a1=1.0)
        f0 = field_from_initial(g, prof, prof)
        limit = cfl_limit(f0, p)
        traj = fd_solve(prof, prof, p, g, 0.25, FDConfig(dt_fd=0.8 * limit, snapshot_dt=0.25))
        assert traj[-1].u1[80] == pytest.approx(0.458172142333142, abs=2e-3)


class TestGradientDiagnostic:
    def test_joint_evolution_consistent_with_differenced_values(self):
        # the separately evolved gradient fields stay within O(dx^2) of the
        # central differences of the evolved value fields on smooth data
        diffs = []
        for n in (81, 161):
            g = GridSpec(-8.0, 8.0, n)
            prof1 = gaussian_profile(-0.5, 1.0, 1.5)
            prof2 = gaussian_profile(0.5, 1.2, 1.0)
            f = field_from_initial(g, prof1, prof2)
            limit = cfl_limit(f, CROSS)
            nsteps = int(0.05 / (0.8 * limit)) + 1
            dt = 0.05 / nsteps
            for _ in range(nsteps):
                f = fd_gradient_step(f, CROSS, dt)
            diffs.append(np.max(np.abs(f.v1[2:-2] - np.gradient(f.u1, g.dx)[2:-2])))
        assert diffs[0] < 1e-3
        assert diffs[0] / diffs[1] > 3.0  # second-order shrink under refinement
