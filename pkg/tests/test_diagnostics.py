"""Diagnostics: spectra, manifold distances, fits, and energy accounting."""

import numpy as np
import pytest

from attractorlab import (
    DiagnosticsError,
    EvolutionResult,
    SimState,
    StepPlan,
    TraceSeries,
    discrete_energy,
    evolve,
    kg_u1,
    lamb_string,
    linear_schrodinger,
    make_grid,
    phi4,
    random_initial_state,
)
from attractorlab.diagnostics import (
    attraction_report,
    beat_spectrum,
    bound_states,
    dominant_frequency,
    fatou_check,
    local_seminorm,
    manifold_distance,
    reduced_trace_flow,
    soliton_fit,
    trailing_median_decay,
)
from attractorlab.models import double_well_potential
from attractorlab.stationary import (
    kink_state,
    orbit_state,
    solve_stationary_orbit,
    trivial_orbit,
)


def _tone_trace(t_final=200.0, dt=0.025):
    t = np.arange(int(round(t_final / dt)) + 1) * dt
    return t


class TestDominantFrequency:
    def test_pure_tone_recovered(self):
        t = _tone_trace()
        om0 = 0.97
        df = dominant_frequency(TraceSeries(t, np.exp(-1j * om0 * t)), window=100.0)
        # refinement beats the bin width 2 pi/window by a wide margin
        assert abs(df.omega - om0) <= 0.05 * 2.0 * np.pi / 100.0
        assert df.concentration >= 0.99
        assert not df.degenerate

    def test_two_tones_dilute_concentration(self):
        t = _tone_trace()
        vals = np.exp(-1j * 0.9 * t) + 0.5 * np.exp(-1j * 0.3 * t)
        df = dominant_frequency(TraceSeries(t, vals), window=100.0)
        assert abs(df.omega - 0.9) <= 0.01
        assert df.concentration <= 0.85

    def test_sign_convention(self):
        # e^{-i omega t} with omega > 0 must report +omega
        t = _tone_trace(50.0)
        df = dominant_frequency(TraceSeries(t, np.exp(+1j * 0.5 * t)), window=25.0)
        assert df.omega == pytest.approx(-0.5, abs=1e-2)

    def test_zero_trace_degenerate(self):
        t = _tone_trace(50.0)
        df = dominant_frequency(TraceSeries(t, np.zeros_like(t, dtype=complex)), window=25.0)
        assert df.degenerate

    def test_window_validation(self):
        t = _tone_trace(50.0)
        ts = TraceSeries(t, np.exp(-1j * t))
        with pytest.raises(DiagnosticsError):
            dominant_frequency(ts, window=80.0)  # longer than the trace
        with pytest.raises(DiagnosticsError):
            dominant_frequency(ts, window=0.5)  # fewer than 256 samples


class TestLocalSeminorm:
    def test_l2_matches_closed_form(self):
        g = make_grid(-20.0, 20.0, 1601)
        x = g.nodes()
        s = SimState(field=np.exp(-(x**2)).astype(complex), velocity=None, t=0.0, grid=g)
        # int e^{-2 x^2} = sqrt(pi/2); the window covers all of the mass
        assert local_seminorm(s, 10.0) == pytest.approx((np.pi / 2.0) ** 0.25, abs=1e-6)

    def test_h1_adds_gradient(self):
        g = make_grid(-20.0, 20.0, 1601)
        x = g.nodes()
        s = SimState(field=np.exp(-(x**2)).astype(complex), velocity=None, t=0.0, grid=g)
        assert local_seminorm(s, 10.0, order="h1") > local_seminorm(s, 10.0)

    def test_unknown_order(self):
        g = make_grid(-20.0, 20.0, 1601)
        s = SimState(field=np.zeros(1601, complex), velocity=None, t=0.0, grid=g)
        with pytest.raises(DiagnosticsError):
            local_seminorm(s, 10.0, order="h2")


class TestManifoldDistance:
    def test_exact_orbit_has_zero_distance(self):
        g = make_grid(-20.0, 20.0, 801)
        orb = solve_stationary_orbit(kg_u1(), 0.6, g)
        theta = 1.1
        state = orbit_state(orb, phase=theta)
        match = manifold_distance(state, [orb], radius=5.0)
        assert match.distance <= 1e-12
        assert match.theta == pytest.approx(theta, abs=1e-9)

    def test_distance_to_zero_orbit_is_the_norm(self):
        g = make_grid(-20.0, 20.0, 801)
        zero = trivial_orbit(kg_u1(), 0.6, g)
        x = g.nodes()
        state = SimState(
            field=np.exp(-(x**2)).astype(complex), velocity=None, t=0.0, grid=g
        )
        match = manifold_distance(state, [zero], radius=5.0)
        assert match.distance == pytest.approx(local_seminorm(state, 5.0), rel=1e-12)

    def test_picks_nearest_orbit(self):
        g = make_grid(-20.0, 20.0, 801)
        orb = solve_stationary_orbit(kg_u1(), 0.6, g)
        zero = trivial_orbit(kg_u1(), 0.6, g)
        state = orbit_state(orb)
        match = manifold_distance(state, [zero, orb], radius=5.0)
        assert match.orbit is orb

    def test_validation(self):
        g = make_grid(-20.0, 20.0, 801)
        state = SimState(field=np.zeros(801, complex), velocity=None, t=0.0, grid=g)
        with pytest.raises(DiagnosticsError):
            manifold_distance(state, [], radius=5.0)
        other = trivial_orbit(kg_u1(), 0.6, make_grid(-10.0, 10.0, 401))
        with pytest.raises(DiagnosticsError):
            manifold_distance(state, [other], radius=5.0)


class TestSolitonFit:
    def test_exact_kink_self_fit(self):
        g = make_grid(-40.0, 40.0, 3201)
        fit = soliton_fit(kink_state(g, velocity=0.3), phi4())
        assert abs(fit.velocity - 0.3) <= 1e-8
        assert abs(fit.center) <= 1e-8
        assert fit.residual <= 1e-8

    def test_fit_through_small_ripple(self):
        g = make_grid(-40.0, 40.0, 3201)
        k = kink_state(g, velocity=0.3)
        x = g.nodes()
        pert = SimState(
            field=k.field + 0.01 * np.exp(-(((x - 5.0) / 2.0) ** 2)),
            velocity=k.velocity,
            t=0.0,
            grid=g,
        )
        fit = soliton_fit(pert, phi4())
        assert abs(fit.velocity - 0.3) <= 0.01
        assert fit.residual <= 0.05

    def test_vacuum_has_no_kink(self):
        g = make_grid(-40.0, 40.0, 3201)
        vac = SimState(
            field=np.ones(3201, dtype=complex), velocity=np.zeros(3201), t=0.0, grid=g
        )
        with pytest.raises(DiagnosticsError, match="kink"):
            soliton_fit(vac, phi4())

    def test_wrong_model(self):
        g = make_grid(-40.0, 40.0, 3201)
        with pytest.raises(DiagnosticsError):
            soliton_fit(kink_state(g, velocity=0.0), kg_u1())


class TestBoundStates:
    def test_default_double_well_pair(self):
        g = make_grid(-20.0, 20.0, 801)
        model = linear_schrodinger(g)
        E, vecs = bound_states(model, g)
        assert E.size == 2
        assert E[0] == pytest.approx(-0.87418187, abs=1e-7)
        assert E[1] == pytest.approx(-0.85219398, abs=1e-7)
        assert E[1] - E[0] == pytest.approx(0.021988, abs=1e-5)
        # unit L2 norm, Dirichlet ends
        for j in range(2):
            norm = np.trapezoid(np.abs(vecs[:, j]) ** 2, dx=g.dx)
            assert norm == pytest.approx(1.0, rel=1e-6)
            assert vecs[0, j] == 0.0 and vecs[-1, j] == 0.0

    def test_wrong_model(self):
        g = make_grid(-20.0, 20.0, 801)
        with pytest.raises(DiagnosticsError):
            bound_states(kg_u1(), g)


class TestBeatSpectrum:
    def test_superposition_beats_at_the_splitting(self):
        # closer wells -> larger splitting -> the peak sits many bins up
        # and the refined position lands well within one bin width
        g = make_grid(-20.0, 20.0, 801)
        model = linear_schrodinger(g, potential=double_well_potential(g, separation=1.0))
        E, vecs = bound_states(model, g)
        psi0 = (vecs[:, 0] + vecs[:, 1]) / np.sqrt(2.0)
        state = SimState(field=psi0, velocity=None, t=0.0, grid=g)
        bs = beat_spectrum(model, state, horizon=200.0)
        peak_omega = bs.peaks[0][0]
        assert abs(peak_omega - (E[1] - E[0])) <= 2.0 * np.pi / 200.0
        assert abs(peak_omega - (E[1] - E[0])) <= 1e-3  # refined, not just binned

    def test_single_eigenstate_is_silent(self):
        g = make_grid(-20.0, 20.0, 801)
        model = linear_schrodinger(g)
        _, vecs = bound_states(model, g)
        state = SimState(field=vecs[:, 0], velocity=None, t=0.0, grid=g)
        bs = beat_spectrum(model, state, horizon=100.0)
        top = bs.peaks[0][1] if bs.peaks else 0.0
        assert top <= 1e-20

    def test_phase_rotation_invariance(self):
        g = make_grid(-20.0, 20.0, 801)
        model = linear_schrodinger(g, potential=double_well_potential(g, separation=1.0))
        _, vecs = bound_states(model, g)
        psi0 = (vecs[:, 0] + vecs[:, 1]) / np.sqrt(2.0)
        a = beat_spectrum(model, SimState(field=psi0, velocity=None, t=0.0, grid=g), horizon=100.0)
        b = beat_spectrum(
            model,
            SimState(field=np.exp(0.9j) * psi0, velocity=None, t=0.0, grid=g),
            horizon=100.0,
        )
        assert a.peaks[0][0] == pytest.approx(b.peaks[0][0], abs=1e-12)
        assert a.peaks[0][1] == pytest.approx(b.peaks[0][1], rel=1e-9)

    def test_needs_two_bound_states(self):
        g = make_grid(-20.0, 20.0, 801)
        model = linear_schrodinger(g, potential=np.zeros(801))
        state = SimState(field=np.zeros(801, complex), velocity=None, t=0.0, grid=g)
        with pytest.raises(DiagnosticsError, match="bound state"):
            beat_spectrum(model, state, horizon=100.0)


class TestFatou:
    def test_settled_state_has_zero_gap(self):
        g = make_grid(-40.0, 40.0, 1601)
        m = lamb_string()
        rest = SimState(
            field=np.ones(1601, complex), velocity=np.zeros(1601), t=0.0, grid=g
        )
        assert fatou_check(rest, 1.0, m) == pytest.approx(0.0, abs=1e-12)

    def test_pulse_energy_shows_as_negative_gap(self):
        # constant state plus a velocity pulse of exactly 0.2 energy units
        # away from the coupling point: the constant limit sits 0.2 below
        g = make_grid(-40.0, 40.0, 3201)
        m = lamb_string()
        x = g.nodes()
        amp = np.sqrt(0.4 / (1.5 * np.sqrt(np.pi / 2.0)))
        vel = amp * np.exp(-(((x - 6.0) / 1.5) ** 2))
        init = SimState(field=np.ones(3201, complex), velocity=vel.astype(complex), t=0.0, grid=g)
        gap = fatou_check(init, 1.0, m)
        assert gap == pytest.approx(-0.2, abs=1e-3)

    def test_orbit_limit_roundtrip(self):
        g = make_grid(-20.0, 20.0, 801)
        m = kg_u1()
        orb = solve_stationary_orbit(m, 0.6, g)
        state = orbit_state(orb)
        assert fatou_check(state, orb, m) == pytest.approx(0.0, abs=1e-10)

    def test_unsupported_limit_object(self):
        g = make_grid(-20.0, 20.0, 801)
        m = lamb_string()
        s = SimState(field=np.zeros(801, complex), velocity=np.zeros(801), t=0.0, grid=g)
        with pytest.raises(DiagnosticsError, match="limit"):
            fatou_check(s, "the vacuum", m)


class TestReducedTraceFlow:
    def test_matches_pde_trace_after_exit_time(self):
        m = lamb_string()
        g = make_grid(-50.0, 50.0, 2001)
        s = random_initial_state(m, g, seed=4, energy=0.5)
        res = evolve(s, m, StepPlan(dt=0.025, t_final=40.0, observe_radius=5.0))
        # support radius 3 plus a safety margin: the origin is free of
        # incoming initial data after t0
        t0 = 6.0
        mask = res.trace.times >= t0
        times = res.trace.times[mask]
        oracle = reduced_trace_flow(m, float(res.trace.values[mask][0].real), times)
        sup = np.max(np.abs(res.trace.values[mask].real - oracle))
        assert sup <= 1e-3

    def test_wrong_model(self):
        with pytest.raises(DiagnosticsError):
            reduced_trace_flow(kg_u1(), 0.5, np.linspace(0.0, 1.0, 11))


class TestTrailingMedianDecay:
    def test_decaying_series(self):
        t = np.linspace(0.0, 50.0, 2001)
        vals = np.exp(-0.1 * t) * (1.0 + 0.05 * np.sin(7.0 * t))
        ok, medians = trailing_median_decay(TraceSeries(t, vals.astype(complex)), t_start=10.0)
        assert ok
        assert medians[0] > medians[-1]

    def test_growing_series(self):
        t = np.linspace(0.0, 50.0, 2001)
        vals = np.exp(0.05 * t)
        ok, _ = trailing_median_decay(TraceSeries(t, vals.astype(complex)), t_start=10.0)
        assert not ok

    def test_too_few_samples(self):
        t = np.linspace(0.0, 50.0, 2001)
        ts = TraceSeries(t, np.ones(2001, complex))
        with pytest.raises(DiagnosticsError):
            trailing_median_decay(ts, t_start=49.99)


class TestAttractionReport:
    def test_u1_report_fields(self):
        m = kg_u1()
        g = make_grid(-30.0, 30.0, 1201)
        s = random_initial_state(m, g, seed=11, energy=1.0)
        res = evolve(s, m, StepPlan(dt=0.025, t_final=20.0, observe_radius=5.0, flush_stride=40))
        orbits = [trivial_orbit(m, 0.6, g), solve_stationary_orbit(m, 0.6, g)]
        rep = attraction_report(s, res, m, radius=5.0, orbits=orbits)
        assert 0.0 <= rep.spectral_concentration <= 1.0
        assert len(rep.manifold_distance_series) == len(res.snapshots)
        assert len(rep.local_seminorm_series) == len(res.snapshots)
        assert np.isfinite(rep.fatou_gap)
        assert rep.radiated_energy >= 0.0

    def test_u1_needs_orbits(self):
        m = kg_u1()
        g = make_grid(-30.0, 30.0, 1201)
        s = random_initial_state(m, g, seed=11, energy=1.0)
        res = evolve(s, m, StepPlan(dt=0.025, t_final=10.0, observe_radius=5.0))
        with pytest.raises(DiagnosticsError, match="orbit"):
            attraction_report(s, res, m, radius=5.0)

    @staticmethod
    def _synthetic_result(states, t_final=40.0):
        # hand-built run: snapshots as given, trace a clean rotation so the
        # spectral stage has something dense to chew on
        t = np.linspace(0.0, t_final, 2001)
        trace = TraceSeries(t, np.exp(-1j * 0.9 * t))
        return EvolutionResult(final=states[-1], trace=trace, snapshots=list(states))

    def test_u1_settled_match_is_kept(self):
        m = kg_u1()
        g = make_grid(-30.0, 30.0, 1201)
        orbits = [trivial_orbit(m, 0.9, g), solve_stationary_orbit(m, 0.9, g)]
        keep = orbits[-1]
        snaps = []
        for i in range(9):
            st = orbit_state(keep)
            st.t = 5.0 * i
            snaps.append(st)
        res = self._synthetic_result(snaps)
        rep = attraction_report(snaps[0], res, m, radius=5.0, orbits=orbits)
        assert rep.final_fit.amplitude == pytest.approx(keep.amplitude)
        assert abs(rep.fatou_gap) <= 1e-9

    def test_u1_draining_match_resolves_to_zero_orbit(self):
        # amplitude of the best match halves between the middle and the end
        # of the run: the solution is sliding along the manifold, and the
        # report must name the zero orbit as the limit
        m = kg_u1()
        g = make_grid(-30.0, 30.0, 1201)
        family = [solve_stationary_orbit(m, om, g) for om in (0.6, 0.8, 0.9, 0.95, 0.99)]
        orbits = [trivial_orbit(m, 0.6, g)] + family
        walk = [family[j] for j in (0, 0, 1, 1, 2, 2, 3, 3, 4)]
        snaps = []
        for i, orb in enumerate(walk):
            st = orbit_state(orb)
            st.t = 5.0 * i
            snaps.append(st)
        res = self._synthetic_result(snaps)
        rep = attraction_report(snaps[0], res, m, radius=5.0, orbits=orbits)
        assert rep.final_fit.amplitude == 0.0
        # the zero orbit carries no energy, so the gap is minus the initial energy
        assert rep.fatou_gap == pytest.approx(-discrete_energy(snaps[0], m))
