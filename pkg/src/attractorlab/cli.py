"""Command-line front end: configured experiment runs, reports, and sweeps.

Subcommands
-----------
simulate    evolve a field model from configured initial data and report the
            attraction diagnostics (seminorm decay, spectrum, energy ledger)
stationary  solve stationary orbits / states and dump the profile
spectrum    evolve and report the dominant observation frequency
gun         trace the electron-gun ray family and the dispersion bookkeeping
diffract    aperture diffraction onto a screen: fringes and the Born check
pipeline    gun followed by diffraction, the gun's wave number feeding the
            aperture step
sweep       run a cartesian parameter grid of any of the above concurrently

Every run writes ``report.json`` (config echo, metrics, verdicts, series
index) plus one CSV per recorded series with columns ``t,value_re,value_im``
(floats serialized via repr, so they round-trip bit-exactly), and optional
SVG line plots.  Exit code 0 iff every verdict in the report is true;
verdict failures exit 1 and name the failed verdicts; configuration errors
exit 2 and name the offending key.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import diagnostics, diffraction, integrate, models, quasiclassics, stationary
from .core import (
    AttractorLabError,
    ConfigError,
    KG_U1,
    LAMB_STRING,
    PHI4,
    PhysConstants,
    ReportEnvelope,
    SCHRODINGER,
    TraceSeries,
    WAVE_KINDS,
    discrete_energy,
    make_grid,
)

COMMANDS = ("simulate", "stationary", "spectrum", "gun", "diffract", "pipeline", "sweep")


# ---------------------------------------------------------------------------
# config plumbing

def _check_keys(section: dict, allowed: Sequence[str], where: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown config key '{where}.{key}'")


def _get(section: dict, key: str, default=None, required: bool = False):
    if key not in section:
        if required:
            raise ConfigError(f"missing required config key {key!r}")
        return default
    return section[key]


def _apply_overrides(config: dict, pairs: Sequence[str]) -> dict:
    """--set a.b.c=value with JSON-literal values (bare words stay strings)."""
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set needs key=value, got {pair!r}")
        path, raw = pair.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = config
        parts = path.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set path {path!r} collides with a non-section key")
        node[parts[-1]] = value
    return config


def _build_model_and_grid(config: dict):
    mcfg = dict(_get(config, "model", {"kind": KG_U1}))
    _check_keys(mcfg, ("kind", "mass", "coefficients", "potential"), "model")
    kind = _get(mcfg, "kind", required=True)
    gcfg = dict(_get(config, "grid", {}))
    _check_keys(gcfg, ("x_min", "x_max", "n"), "grid")
    grid = make_grid(
        float(_get(gcfg, "x_min", -110.0)),
        float(_get(gcfg, "x_max", 110.0)),
        int(_get(gcfg, "n", 4401)),
    )
    if kind == KG_U1:
        model = models.kg_u1(
            float(_get(mcfg, "mass", 1.0)),
            tuple(_get(mcfg, "coefficients", (0.0, 1.0))),
        )
    elif kind == LAMB_STRING:
        model = models.lamb_string(tuple(_get(mcfg, "coefficients", (0.0, 1.0, 0.0, -1.0))))
    elif kind == PHI4:
        model = models.phi4()
    elif kind == SCHRODINGER:
        pcfg = dict(_get(mcfg, "potential", {"type": "double_well"}))
        _check_keys(pcfg, ("type", "depth", "separation", "width"), "model.potential")
        if _get(pcfg, "type", "double_well") != "double_well":
            raise ConfigError("unknown config key model.potential.type: only 'double_well'")
        model = models.linear_schrodinger(
            grid,
            models.double_well_potential(
                grid,
                depth=float(_get(pcfg, "depth", 2.0)),
                separation=float(_get(pcfg, "separation", 2.0)),
                width=float(_get(pcfg, "width", 1.0)),
            ),
        )
    else:
        raise ConfigError(f"unknown config key model.kind value {kind!r}")
    return model, grid


def _build_plan(config: dict) -> integrate.StepPlan:
    pcfg = dict(_get(config, "plan", {}))
    _check_keys(
        pcfg, ("dt", "t_final", "scheme", "observe_radius", "flush_stride"), "plan"
    )
    return integrate.StepPlan(
        dt=float(_get(pcfg, "dt", 0.025)),
        t_final=float(_get(pcfg, "t_final", 100.0)),
        scheme=_get(pcfg, "scheme", None),
        observe_radius=float(_get(pcfg, "observe_radius", 5.0)),
        flush_stride=int(_get(pcfg, "flush_stride", 40)),
    )


def _build_initial(config: dict, model, grid, seed: int):
    icfg = dict(_get(config, "initial", {"type": "random"}))
    _check_keys(
        icfg,
        ("type", "energy", "support_radius", "rotation", "omega", "phase",
         "velocity", "center"),
        "initial",
    )
    itype = _get(icfg, "type", "random")
    if itype == "random":
        return models.random_initial_state(
            model,
            grid,
            seed=seed,
            energy=float(_get(icfg, "energy", 1.0)),
            support_radius=float(_get(icfg, "support_radius", 3.0)),
            rotation=float(_get(icfg, "rotation", 0.9)),
        )
    if itype == "orbit":
        omega = float(_get(icfg, "omega", required=True))
        orbits = stationary.solve_stationary_orbits(model, omega, grid)
        return stationary.orbit_state(orbits[-1], phase=float(_get(icfg, "phase", 0.0)))
    if itype == "kink":
        return stationary.kink_state(
            grid,
            velocity=float(_get(icfg, "velocity", 0.0)),
            center=float(_get(icfg, "center", 0.0)),
        )
    raise ConfigError(f"unknown config key initial.type value {itype!r}")


# ---------------------------------------------------------------------------
# persistence

def _series_to_csv(series: TraceSeries, path: Path) -> None:
    with open(path, "w") as fh:
        fh.write("t,value_re,value_im\n")
        for t, v in zip(series.times, series.values):
            fh.write(f"{float(t)!r},{float(v.real)!r},{float(v.imag)!r}\n")


def _plot_series(series: TraceSeries, path: Path, title: str) -> bool:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except Exception:
        return False
    fig, ax = plt.subplots(figsize=(6, 3.2))
    mag = np.abs(series.values)
    ax.plot(series.times, series.values.real, lw=0.9, label="re")
    if np.any(series.values.imag != 0.0):
        ax.plot(series.times, series.values.imag, lw=0.9, label="im")
    ax.plot(series.times, mag, lw=0.7, ls="--", label="abs")
    ax.set_xlabel("t")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return True


def _persist(envelope: ReportEnvelope, out_dir: Path, plots: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    series_index = {}
    for name, series in envelope.series.items():
        csv_path = out_dir / f"{name}.csv"
        _series_to_csv(series, csv_path)
        series_index[name] = {
            "file": csv_path.name,
            "samples": len(series),
            "t_first": float(series.times[0]) if len(series) else None,
            "t_last": float(series.times[-1]) if len(series) else None,
        }
        if plots:
            if _plot_series(series, out_dir / f"{name}.svg", name):
                series_index[name]["plot"] = f"{name}.svg"
    payload = {
        "config": envelope.config_echo,
        "metrics": {k: _jsonable(v) for k, v in envelope.metrics.items()},
        "verdicts": {k: bool(v) for k, v in envelope.verdicts.items()},
        "series": series_index,
    }
    with open(out_dir / "report.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [float(v) for v in value.ravel()]
    return value


def _real_series(times: np.ndarray, values: np.ndarray) -> TraceSeries:
    return TraceSeries(times=np.asarray(times, float), values=np.asarray(values, complex))


# ---------------------------------------------------------------------------
# subcommands

def _run_simulate(config: dict, seed: int) -> ReportEnvelope:
    _check_keys(
        config,
        ("model", "grid", "plan", "initial", "diagnostics", "out", "seed", "plots"),
        "config",
    )
    model, grid = _build_model_and_grid(config)
    plan = _build_plan(config)
    state = _build_initial(config, model, grid, seed)

    dcfg = dict(_get(config, "diagnostics", {}))
    _check_keys(
        dcfg,
        ("radius", "spectral_window", "orbit_count", "decay_start",
         "fit_window_radius", "ledger_tol"),
        "diagnostics",
    )
    radius = float(_get(dcfg, "radius", plan.observe_radius))
    orbit_count = int(_get(dcfg, "orbit_count", 48))
    decay_start = float(_get(dcfg, "decay_start", plan.t_final * 0.1))
    # endpoint energy budget; the default tolerance reflects the snapshot
    # cadence (flux is trapezoided over snapshots) and the resolution of the
    # radiated spectrum, both coarser in CLI runs than in the unit suite
    ledger_tol = float(_get(dcfg, "ledger_tol", 5e-3))

    e_initial = discrete_energy(state, model)
    result = integrate.evolve(state, model, plan)
    e_final = discrete_energy(result.final, model)

    orbits = None
    if model.kind == KG_U1:
        omegas = np.geomspace(1e-4, 0.999 * model.mass, orbit_count)
        orbits = [stationary.trivial_orbit(model, 0.0, grid)]
        for om in omegas:
            try:
                orbits.extend(stationary.solve_stationary_orbits(model, om, grid))
            except AttractorLabError:
                continue
    report = diagnostics.attraction_report(
        state,
        result,
        model,
        radius=radius,
        orbits=orbits,
        spectral_window=_get(dcfg, "spectral_window", None),
        fit_window_radius=float(_get(dcfg, "fit_window_radius", 20.0)),
    )

    radiated = report.radiated_energy
    # endpoint energy budget: window energy now + everything that left
    # through the window boundary must equal the initial window energy
    if model.kind in WAVE_KINDS:
        flux = integrate.boundary_flux(result.snapshots, radius)
        window_e = np.array(
            [integrate.local_energy(s, model, radius) for s in result.snapshots]
        )
        total = window_e + flux.values.real
        ledger = float(abs(total[-1] - total[0]) / max(abs(total[0]), 1e-30))
    else:
        ledger = abs(e_final - e_initial) / max(abs(e_initial), 1e-30)
    decay_ok, medians = diagnostics.trailing_median_decay(
        report.local_seminorm_series, decay_start
    )

    metrics = {
        "energy_initial": e_initial,
        "energy_final": e_final,
        "radiated_energy": radiated,
        "energy_ledger": ledger,
        "omega_estimate": report.omega_estimate,
        "spectral_concentration": report.spectral_concentration,
        "fatou_gap": report.fatou_gap,
        "seminorm_decay": float(medians[-1] / max(medians[0], 1e-300)),
        "distance_final": float(np.abs(report.manifold_distance_series.values[-1])),
    }
    verdicts = {
        "energy_ledger": ledger <= ledger_tol,
        "spectral_concentration": report.spectral_concentration >= 0.95,
        "seminorm_decay": bool(decay_ok),
        "fatou_gap": report.fatou_gap <= 1e-6,
    }
    series = {
        "observation": result.trace,
        "local_seminorm": report.local_seminorm_series,
        "attractor_distance": report.manifold_distance_series,
    }
    return ReportEnvelope(
        config_echo={"command": "simulate", "seed": seed, **config},
        metrics=metrics,
        series=series,
        verdicts=verdicts,
    )


def _run_stationary(config: dict, seed: int) -> ReportEnvelope:
    _check_keys(config, ("model", "grid", "omega", "out", "seed", "plots"), "config")
    model, grid = _build_model_and_grid(config)
    metrics, verdicts, series = {}, {}, {}
    if model.kind == KG_U1:
        omega = float(_get(config, "omega", 0.6))
        orbits = stationary.solve_stationary_orbits(model, omega, grid)
        orbit = orbits[-1]  # largest amplitude
        metrics.update(
            {
                "omega": orbit.omega,
                "amplitude": orbit.amplitude,
                "kappa": orbit.kappa,
                "residual": orbit.residual,
                "profile_at_zero": float(np.real(orbit.profile[grid.zero_index()])),
                "n_orbits": float(len(orbits)),
            }
        )
        verdicts["residual"] = orbit.residual <= 1e-8
        series["profile"] = _real_series(grid.nodes(), orbit.profile)
    elif model.kind == LAMB_STRING:
        states = stationary.stationary_states(model)
        consts = np.array([c for c, _ in states.points])
        stable = np.array([1.0 if s else 0.0 for _, s in states.points])
        metrics.update(
            {
                "n_states": float(len(states.points)),
                "n_stable": float(stable.sum()),
                "degenerate": 1.0 if states.degenerate else 0.0,
            }
        )
        verdicts["isolated"] = not states.degenerate
        metrics["isolated"] = 0.0 if states.degenerate else 1.0
        series["states"] = _real_series(np.arange(consts.size, dtype=float), consts + 1j * stable)
    else:
        raise ConfigError("unknown config key model.kind: stationary needs kg_u1 or lamb_string")
    return ReportEnvelope(
        config_echo={"command": "stationary", "seed": seed, **config},
        metrics=metrics,
        series=series,
        verdicts=verdicts,
    )


def _run_spectrum(config: dict, seed: int) -> ReportEnvelope:
    _check_keys(
        config,
        ("model", "grid", "plan", "initial", "window", "concentration_floor",
         "out", "seed", "plots"),
        "config",
    )
    model, grid = _build_model_and_grid(config)
    plan = _build_plan(config)
    state = _build_initial(config, model, grid, seed)
    result = integrate.evolve(state, model, plan)
    window = float(_get(config, "window", plan.t_final / 2.0))
    peak = diagnostics.dominant_frequency(result.trace, window)
    floor = float(_get(config, "concentration_floor", 0.95))
    metrics = {
        "omega_estimate": peak.omega,
        "spectral_concentration": peak.concentration,
        "degenerate": 1.0 if peak.degenerate else 0.0,
    }
    verdicts = {"spectral_concentration": peak.concentration >= floor}
    return ReportEnvelope(
        config_echo={"command": "spectrum", "seed": seed, **config},
        metrics=metrics,
        series={"observation": result.trace},
        verdicts=verdicts,
    )


def _run_gun(config: dict, seed: int) -> ReportEnvelope:
    _check_keys(
        config,
        ("phi_star", "depth", "table", "t_final", "dt", "spread", "out", "seed", "plots"),
        "config",
    )
    table = _get(config, "table", None)
    if table is not None:
        tcfg = dict(table)
        _check_keys(tcfg, ("nodes", "values"), "table")
        potential = quasiclassics.TablePotential(
            _get(tcfg, "nodes", required=True), _get(tcfg, "values", required=True)
        )
        gun = quasiclassics.GunConfig(potential=potential)
    else:
        gun = quasiclassics.default_gun(
            float(_get(config, "phi_star", 0.5)), float(_get(config, "depth", 1.0))
        )
    t_final = float(_get(config, "t_final", 4.0))
    dt = float(_get(config, "dt", 1e-3))
    spread = float(_get(config, "spread", 1e-3))

    family = quasiclassics.ray_family(gun, t_final, spread=spread, dt=dt)
    base = family[0]
    grad = quasiclassics.action_gradient_check(gun, family, t_final)
    disp = quasiclassics.de_broglie_check(base, gun.constants)

    metrics = {
        "k": float(np.linalg.norm(disp.k)),
        "omega": disp.omega,
        "dispersion_gap": disp.dispersion_gap,
        "action_gradient_error": grad.max_rel_error,
        "dt_s_residual": abs(grad.dt_s_residual),
        "h_drift": base.h_drift,
        "action_final": float(base.action[-1]),
    }
    verdicts = {
        "dispersion_gap": disp.dispersion_gap <= 1e-8,
        "action_gradient_error": grad.max_rel_error <= 1e-4,
        "h_drift": base.h_drift <= 1e-10,
    }
    series = {
        "ray_x3": _real_series(base.times, base.positions[:, 2]),
        "ray_p3": _real_series(base.times, base.momenta[:, 2]),
        "ray_action": _real_series(base.times, base.action),
    }
    return ReportEnvelope(
        config_echo={"command": "gun", "seed": seed, **config},
        metrics=metrics,
        series=series,
        verdicts=verdicts,
    )


def _build_aperture(config: dict) -> diffraction.ApertureSpec:
    acfg = dict(_get(config, "aperture", {"type": "two_slits"}))
    _check_keys(
        acfg, ("type", "width", "separation", "height", "rects"), "aperture"
    )
    atype = _get(acfg, "type", "two_slits")
    if atype == "two_slits":
        return diffraction.two_slits(
            float(_get(acfg, "width", 0.5)),
            float(_get(acfg, "separation", 2.0)),
            float(_get(acfg, "height", 4.0)),
        )
    if atype == "single_rect":
        return diffraction.single_rect(
            float(_get(acfg, "width", 0.5)), float(_get(acfg, "height", 4.0))
        )
    if atype == "custom":
        rects = tuple(
            diffraction.Rect(*map(float, r)) for r in _get(acfg, "rects", required=True)
        )
        return diffraction.ApertureSpec(rects=rects, kind="custom")
    raise ConfigError(f"unknown config key aperture.type value {atype!r}")


def _run_diffract(config: dict, seed: int, k_override: Optional[float] = None) -> ReportEnvelope:
    _check_keys(
        config, ("aperture", "k", "a_in", "screen", "out", "seed", "plots"), "config"
    )
    aperture = _build_aperture(config)
    k = float(k_override if k_override is not None else _get(config, "k", 20.0))
    a_in = complex(_get(config, "a_in", 1.0))

    scfg = dict(_get(config, "screen", {}))
    _check_keys(scfg, ("distance", "half_width", "rows", "spacing"), "screen")
    L = float(_get(scfg, "distance", 100.0))
    half_width = float(_get(scfg, "half_width", 20.0))
    rows = int(_get(scfg, "rows", 3))
    lam = 2.0 * np.pi / k
    spacing = float(_get(scfg, "spacing", lam / 8.0))
    n_half = int(np.floor(half_width / spacing + 1e-12))
    x1 = (np.arange(2 * n_half + 1) - n_half) * spacing
    x2 = (np.arange(rows) - (rows - 1) / 2.0) * spacing

    amp = diffraction.kirchhoff_amplitude(aperture, k, a_in, diffraction.ScreenLattice(L, x1, x2))
    current = diffraction.current_density(amp, PhysConstants())
    born = diffraction.born_ratio_check(current, amp)

    metrics = {
        "quadrature_agreement": amp.quadrature_agreement,
        "born_spread": born.ratio_spread,
        "born_median_ratio": born.median_ratio,
        "born_points": float(born.points_used),
    }
    verdicts = {"born_spread": born.verdict}
    row = int(np.argmin(np.abs(x2)))
    series = {
        "amplitude_slice": _real_series(x1, amp.samples[:, row]),
        "intensity_slice": _real_series(x1, np.abs(amp.samples[:, row]) ** 2),
    }
    if aperture.kind == "two_slits":
        fringe = diffraction.fringe_geometry(amp)
        rel = abs(fringe.spacing - fringe.predicted_spacing) / fringe.predicted_spacing
        metrics.update(
            {
                "fringe_spacing": fringe.spacing,
                "fringe_predicted": fringe.predicted_spacing,
                "fringe_rel_error": rel,
            }
        )
        verdicts["fringe_rel_error"] = rel <= 0.02
    return ReportEnvelope(
        config_echo={"command": "diffract", "seed": seed, **config},
        metrics=metrics,
        series=series,
        verdicts=verdicts,
    )


def _run_pipeline(config: dict, seed: int) -> ReportEnvelope:
    _check_keys(config, ("gun", "diffract", "out", "seed", "plots"), "config")
    gun_env = _run_gun(dict(_get(config, "gun", {})), seed)
    k = gun_env.metrics["k"]
    dif_cfg = json.loads(json.dumps(_get(config, "diffract", {})))
    # the gun's wave number sets the fringe scale lambda*L/d; unless the
    # config says otherwise, pick a far-field geometry that puts three
    # fringes inside the window while keeping the direction cosines paraxial
    lam = 2.0 * np.pi / k
    acfg = dif_cfg.setdefault("aperture", {})
    acfg.setdefault("separation", max(2.0, 6.0 * lam))
    scfg = dif_cfg.setdefault("screen", {})
    scfg.setdefault("distance", 4.0 * acfg["separation"])
    scfg.setdefault(
        "half_width", 1.15 * lam * scfg["distance"] / acfg["separation"]
    )
    dif_env = _run_diffract(dif_cfg, seed, k_override=k)

    metrics = {f"gun_{k_}": v for k_, v in gun_env.metrics.items()}
    metrics.update({f"diffract_{k_}": v for k_, v in dif_env.metrics.items()})
    verdicts = {f"gun_{k_}": v for k_, v in gun_env.verdicts.items()}
    verdicts.update({f"diffract_{k_}": v for k_, v in dif_env.verdicts.items()})
    series = dict(gun_env.series)
    series.update(dif_env.series)
    return ReportEnvelope(
        config_echo={"command": "pipeline", "seed": seed, **config},
        metrics=metrics,
        series=series,
        verdicts=verdicts,
    )


_RUNNERS = {
    "simulate": _run_simulate,
    "stationary": _run_stationary,
    "spectrum": _run_spectrum,
    "gun": _run_gun,
    "diffract": _run_diffract,
    "pipeline": _run_pipeline,
}


# ---------------------------------------------------------------------------
# sweep

def _expand_grid(grid: dict) -> List[dict]:
    if not isinstance(grid, dict) or not grid:
        raise ConfigError("sweep grid is empty")
    keys = sorted(grid)
    for key in keys:
        if not isinstance(grid[key], list) or len(grid[key]) == 0:
            raise ConfigError(f"sweep grid value for {key!r} must be a nonempty list")
    points: List[dict] = [{}]
    for key in keys:
        points = [dict(pt, **{key: val}) for pt in points for val in grid[key]]
    return points


def _sweep_point(payload: Tuple[int, str, dict, int, str]) -> Tuple[int, dict, dict]:
    index, command, config, seed, out_root = payload
    envelope = _RUNNERS[command](config, seed)
    _persist(envelope, Path(out_root) / f"point_{index:04d}", plots=False)
    return index, dict(envelope.metrics), dict(envelope.verdicts)


def _run_sweep(config: dict, seed: int, out_dir: Path) -> int:
    _check_keys(config, ("command", "base", "grid", "out", "seed", "plots"), "config")
    command = _get(config, "command", required=True)
    if command not in _RUNNERS:
        raise ConfigError(f"unknown config key command value {command!r}")
    base = dict(_get(config, "base", {}))
    points = _expand_grid(_get(config, "grid", required=True))

    # materialize and sanity-check every point's config before any worker
    # starts, so a bad grid aborts the whole sweep up front
    payloads = []
    for i, overrides in enumerate(points):
        cfg = json.loads(json.dumps(base))
        pt_seed = seed
        for path, value in overrides.items():
            if path == "seed":
                pt_seed = int(value)
            else:
                _apply_overrides(cfg, [f"{path}={json.dumps(value)}"])
        payloads.append((i, command, cfg, pt_seed, str(out_dir)))

    threads = os.environ.get("ATTRACTORLAB_THREADS")
    max_workers = int(threads) if threads else min(len(payloads), os.cpu_count() or 1)
    if max_workers <= 1:
        results = [_sweep_point(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_sweep_point, payloads))
    results.sort(key=lambda r: r[0])

    keys = sorted(points[0])
    metric_names = sorted({name for _, m, _ in results for name in m})
    verdict_names = sorted({name for _, _, v in results for name in v})
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "sweep.csv", "w") as fh:
        header = ["point"] + keys + metric_names + [f"verdict_{v}" for v in verdict_names]
        fh.write(",".join(header) + "\n")
        for (idx, mets, verds), overrides in zip(results, points):
            row = [str(idx)]
            row += [json.dumps(overrides[k]) for k in keys]
            row += [repr(float(mets[m])) if m in mets else "" for m in metric_names]
            row += [str(bool(verds[v])).lower() if v in verds else "" for v in verdict_names]
            fh.write(",".join(row) + "\n")

    failed = sorted(
        {name for _, _, verds in results for name, ok in verds.items() if not ok}
    )
    if failed:
        print(f"FAILED verdicts: {', '.join(failed)}")
        return 1
    print(f"sweep ok: {len(results)} points, all verdicts true")
    return 0


# ---------------------------------------------------------------------------
# entry point

def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="attractorlab",
        description="field-attractor experiments: simulation, stationary states, "
        "electron-gun rays, and aperture diffraction",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=str, default=None, help="JSON config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config entry (dotted path, JSON value)",
    )
    parser.add_argument("--out", type=str, default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="random seed")
    args = parser.parse_args(argv)

    try:
        config: dict = {}
        if args.config is not None:
            with open(args.config) as fh:
                config = json.load(fh)
            if not isinstance(config, dict):
                raise ConfigError("config file must hold a JSON object")
        _apply_overrides(config, args.overrides)

        seed = args.seed if args.seed is not None else int(config.get("seed", 0))
        out_dir = Path(args.out or config.get("out") or f"attractorlab_out/{args.command}")
        plots = bool(config.get("plots", False))

        if args.command == "sweep":
            return _run_sweep(config, seed, out_dir)

        envelope = _RUNNERS[args.command](config, seed)
        _persist(envelope, out_dir, plots)
        failed = sorted(name for name, ok in envelope.verdicts.items() if not ok)
        if failed:
            print(f"FAILED verdicts: {', '.join(failed)}")
            return 1
        print(f"{args.command} ok: report in {out_dir}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except AttractorLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
