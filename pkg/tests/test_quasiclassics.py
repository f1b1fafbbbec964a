"""Electron-gun ray tracing: exact piecewise-linear flights, actions,
gradients, and the plane-wave parameters of the outgoing beam."""

import numpy as np
import pytest

from attractorlab import PhysConstants
from attractorlab.quasiclassics import (
    GunConfig,
    GunError,
    RampPotential,
    TablePotential,
    action_gradient_check,
    de_broglie_check,
    default_gun,
    gauge_phase,
    ray_family,
    trace_ray,
)

REST = (np.zeros(3), np.zeros(3), 0.0)


class TestPotentials:
    def test_ramp_profile(self):
        pot = RampPotential(phi_star=0.5, depth=1.0)
        assert pot.phi(-1.0) == 0.0
        assert pot.phi(0.0) == 0.0
        assert pot.phi(0.5) == pytest.approx(0.25)
        assert pot.phi(1.0) == pytest.approx(0.5)
        assert pot.phi(7.0) == pytest.approx(0.5)  # constant beyond the anode

    def test_table_interpolates(self):
        pot = TablePotential([0.0, 1.0, 2.0, 4.0], [0.0, 0.3, 0.35, 1.0])
        assert pot.phi(0.5) == pytest.approx(0.15)
        assert pot.phi(3.0) == pytest.approx(0.675)
        assert pot.phi(10.0) == pytest.approx(1.0)

    def test_table_validation(self):
        with pytest.raises(GunError):
            TablePotential([0.0, 1.0], [0.1, 0.5])  # nonzero at the cathode
        with pytest.raises(GunError):
            TablePotential([0.0, 1.0, 1.0], [0.0, 0.5, 0.6])  # nodes not increasing

    def test_cathode_value_enforced_on_config(self):
        class Offset:
            breakpoints = np.array([0.0, 1.0])
            _slopes = np.array([0.5])

            def phi(self, x3):
                return 0.3 + 0.5 * np.clip(x3, 0.0, 1.0)

        with pytest.raises(GunError, match="cathode"):
            GunConfig(potential=Offset())
        with pytest.raises(GunError):
            GunConfig(emission_spread=-1.0)


class TestTraceRay:
    def test_default_gun_momentum(self):
        # ramp 0.5 over depth 1: exit energy 0.5, so |p*| = 1 exactly
        config = default_gun()
        traj = trace_ray(config, REST, t_final=4.0)
        assert abs(np.linalg.norm(traj.p_star) - 1.0) <= 1e-8
        assert traj.field_free_end
        assert traj.phi_end == pytest.approx(0.5)

    def test_hamiltonian_conserved_exactly(self):
        traj = trace_ray(default_gun(), REST, t_final=4.0, dt=1e-3)
        assert traj.h_drift <= 1e-10

    def test_action_closed_form(self):
        # constant force a = phi*/depth from rest: over the ramp,
        # S = (2 sqrt2 / 3) sqrt(a) X^{3/2}; with the default gun the full
        # flight to t = 4 gives S = 2/3 + 2 = 8/3
        traj = trace_ray(default_gun(), REST, t_final=4.0, dt=1e-3)
        assert traj.action[-1] == pytest.approx(8.0 / 3.0, abs=1e-4)

        cfg = GunConfig(potential=RampPotential(phi_star=5.0, depth=10.0))
        traj2 = trace_ray(cfg, REST, t_final=2.0, dt=1e-3)
        a = 5.0 / 10.0
        x_end = traj2.x_end[2]
        s_exact = (2.0 * np.sqrt(2.0) / 3.0) * np.sqrt(a) * x_end**1.5
        assert x_end == pytest.approx(1.0, abs=1e-12)
        assert traj2.action[-1] == pytest.approx(s_exact, abs=1e-6)

    def test_action_additivity(self):
        config = default_gun()
        whole = trace_ray(config, REST, t_final=4.0, dt=1e-3)
        first = trace_ray(config, REST, t_final=1.7, dt=1e-3)
        second = trace_ray(
            config, (first.x_end, first.p_star, 1.7), t_final=4.0, dt=1e-3
        )
        s_split = first.action[-1] + second.action[-1]
        assert s_split == pytest.approx(whole.action[-1], abs=1e-10)

    def test_zigzag_table_exact(self):
        # several cells with different slopes; event splitting keeps the
        # flight exact through every breakpoint
        pot = TablePotential([0.0, 1.0, 2.0, 4.0], [0.0, 0.3, 0.35, 1.0])
        cfg = GunConfig(potential=pot, aperture_point=(0.0, 0.0, 4.0))
        traj = trace_ray(cfg, REST, t_final=10.0, dt=0.01)
        assert traj.h_drift <= 1e-10
        assert traj.field_free_end
        # exit energy 1.0 -> |p*| = sqrt(2)
        assert np.linalg.norm(traj.p_star) == pytest.approx(np.sqrt(2.0), abs=1e-8)

    def test_reversed_ramp_turns_back(self):
        cfg = GunConfig(potential=RampPotential(phi_star=-0.5, depth=1.0))
        with pytest.raises(GunError, match="turning"):
            trace_ray(cfg, REST, t_final=4.0)

    def test_emission_precondition(self):
        config = default_gun()
        hot = (np.zeros(3), np.array([0.0, 0.0, 0.3]), 0.0)
        with pytest.raises(GunError, match="emission"):
            trace_ray(config, hot, t_final=4.0)

    def test_start_validation(self):
        config = default_gun()
        with pytest.raises(GunError):
            trace_ray(config, (np.zeros(2), np.zeros(3), 0.0), t_final=4.0)
        with pytest.raises(GunError):
            trace_ray(config, REST, t_final=-1.0)

    def test_plain_stepping_shows_dt_error(self):
        # without event splitting the force discontinuity at the anode
        # costs O(dt); refining dt shrinks the action gap toward zero
        config = default_gun()
        exact = 8.0 / 3.0
        gaps = []
        for dt in (0.5, 0.05, 0.005):
            traj = trace_ray(config, REST, t_final=4.0, dt=dt, split_at_breaks=False)
            gaps.append(abs(traj.action[-1] - exact))
        assert gaps[0] > 1e-8
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 1e-2

    def test_sample_layout(self):
        traj = trace_ray(default_gun(), REST, t_final=4.0, dt=1e-3)
        assert traj.times[0] == 0.0 and traj.times[-1] == pytest.approx(4.0)
        assert traj.positions.shape == (traj.times.size, 3)
        assert traj.momenta.shape == (traj.times.size, 3)
        assert traj.action[0] == 0.0


class TestRayFamily:
    def test_family_straddles_endpoint(self):
        config = default_gun()
        rays = ray_family(config, t_star=4.0, spread=1e-3)
        assert len(rays) == 7
        base = rays[0].x_end
        ends = np.array([r.x_end for r in rays[1:]])
        for axis in range(3):
            assert ends[:, axis].min() < base[axis] < ends[:, axis].max()

    def test_all_rays_share_the_clock(self):
        rays = ray_family(default_gun(), t_star=4.0)
        for r in rays:
            assert r.times[-1] == pytest.approx(4.0, abs=1e-9)


class TestActionGradient:
    def test_gradient_matches_momentum(self):
        config = default_gun()
        family = ray_family(config, t_star=4.0, spread=1e-3)
        chk = action_gradient_check(config, family, t_star=4.0)
        assert chk.max_rel_error <= 1e-4
        assert np.allclose(chk.grad_s, chk.p_star, atol=1e-4)
        # dS/dt* = -H = 0 on the zero-energy beam
        assert abs(chk.dt_s_residual) <= 1e-8

    def test_degenerate_family_rejected(self):
        config = default_gun()
        base = trace_ray(config, REST, t_final=4.0)
        with pytest.raises(GunError, match="condition|degenerate|singular"):
            action_gradient_check(config, [base] * 7, t_star=4.0)


class TestDeBroglie:
    def test_default_beam_parameters(self):
        config = default_gun()
        traj = trace_ray(config, REST, t_final=4.0, dt=1e-3)
        res = de_broglie_check(traj, config.constants)
        assert np.linalg.norm(res.k) == pytest.approx(1.0, abs=1e-8)
        assert res.omega == pytest.approx(0.5, abs=1e-12)
        assert res.dispersion_gap <= 1e-8

    def test_dispersion_on_random_smooth_ramps(self):
        # property over sampled monotone tables: the flight is exact, so
        # hbar omega = (hbar k)^2 / 2m holds at roundoff for every profile
        rng = np.random.default_rng(42)
        c = PhysConstants()
        for _ in range(10):
            n = int(rng.integers(3, 8))
            nodes = np.concatenate(([0.0], np.cumsum(rng.uniform(0.2, 1.0, n))))
            values = np.concatenate(([0.0], np.cumsum(rng.uniform(0.05, 0.4, n))))
            cfg = GunConfig(
                potential=TablePotential(nodes, values),
                aperture_point=(0.0, 0.0, float(nodes[-1])),
            )
            # long enough to clear the last breakpoint for any sample
            traj = trace_ray(cfg, REST, t_final=float(nodes[-1] / 0.3 + 5.0), dt=0.01)
            res = de_broglie_check(traj, c)
            assert res.dispersion_gap <= 1e-8
            assert res.omega == pytest.approx(values[-1], abs=1e-12)

    def test_needs_field_free_terminal(self):
        config = default_gun()
        inside = trace_ray(config, REST, t_final=1.0, dt=1e-3)  # still on the ramp
        with pytest.raises(GunError, match="field-free"):
            de_broglie_check(inside, config.constants)


class TestGaugePhase:
    def test_zero_time_is_spatial_phase(self):
        c = PhysConstants()
        p = np.array([0.0, 0.0, 1.0])
        x = np.array([0.3, -0.2, 2.0])
        assert gauge_phase(p, x, 0.0, c, phi_star=0.5) == pytest.approx(np.dot(p, x))

    def test_zero_potential_is_static(self):
        c = PhysConstants()
        p = np.array([0.0, 0.0, 1.0])
        x = np.array([0.0, 0.0, 3.0])
        assert gauge_phase(p, x, 7.0, c, phi_star=0.0) == pytest.approx(np.dot(p, x))

    def test_on_shell_null_ray(self):
        # k = 1, omega = 0.5: the phase vanishes along x3 = t/2 wavefronts
        c = PhysConstants()
        p = np.array([0.0, 0.0, 1.0])
        assert gauge_phase(p, np.array([0.0, 0.0, 2.0]), 4.0, c, phi_star=0.5) == pytest.approx(0.0, abs=1e-14)
