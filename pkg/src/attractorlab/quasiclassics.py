"""Classical electron rays through a gun potential, with action bookkeeping.

The potential is a scalar field Phi(x) depending on x3 only (extended
constantly in the transverse directions): either an analytic linear ramp,
Phi = phi_star * x3 / depth on [0, depth] and phi_star beyond, or a sampled
table interpolated piecewise-linearly.  Either way Phi is piecewise linear
in x3, so the force on the electron (pdot = -e grad Phi) is piecewise
constant, and a Stormer-Verlet step that is split at the cell crossings
reproduces the exact parabolic flight segment by segment: the Hamiltonian
H = p^2/2m + e Phi is then conserved to accumulated roundoff, not just to
O(dt^2).  Splitting can be turned off to expose the plain integrator's
O(dt^2) energy error (useful for demonstrating that the dispersion check
actually measures something).

Sign conventions: the electron charge is e = -1, so the electron
accelerates toward larger Phi, the exit energy is E* = -e Phi* > 0 for a
ramp rising to Phi* > 0, and k = p*/hbar, omega = E*/hbar satisfy the free
dispersion relation hbar omega = (hbar k)^2 / 2m exactly when H = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import GunError, PhysConstants

__all__ = [
    "ActionGradientCheck",
    "DeBroglieResult",
    "GunConfig",
    "RampPotential",
    "TablePotential",
    "Trajectory",
    "action_gradient_check",
    "de_broglie_check",
    "default_gun",
    "gauge_phase",
    "ray_family",
    "trace_ray",
]


class RampPotential:
    """Linear ramp: Phi = phi_star * x3/depth on [0, depth], phi_star beyond.

    The domain starts at the cathode plane x3 = 0; a ray pushed below it has
    left the gun backwards (decelerating ramp) and is reported as an error.
    """

    def __init__(self, phi_star: float = 0.5, depth: float = 1.0):
        if depth <= 0.0:
            raise GunError("ramp depth must be positive")
        self.phi_star = float(phi_star)
        self.depth = float(depth)
        self.breakpoints = np.array([0.0, self.depth])
        self._slopes = np.array([self.phi_star / self.depth])

    def phi(self, x3: float) -> float:
        return self.phi_star * float(np.clip(x3 / self.depth, 0.0, 1.0))


class TablePotential:
    """Phi(x3) sampled on nodes, piecewise-linear inside, constant beyond
    the last node (the field-free region), extended constantly in x1, x2."""

    def __init__(self, nodes: Sequence[float], values: Sequence[float]):
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or nodes.shape != values.shape:
            raise GunError("potential table needs matching 1D nodes/values with >= 2 entries")
        if np.any(np.diff(nodes) <= 0.0):
            raise GunError("potential table nodes must be strictly increasing")
        if abs(values[0]) > 1e-12:
            raise GunError("the potential must vanish on the cathode (first table value)")
        self.breakpoints = nodes
        self._slopes = np.diff(values) / np.diff(nodes)
        self._values = values

    def phi(self, x3: float) -> float:
        return float(np.interp(x3, self.breakpoints, self._values))


def _cell_slope(pot, idx: int) -> float:
    """Slope of Phi in cell idx; cells past the table are field-free."""
    if idx >= pot._slopes.size:
        return 0.0
    if idx < 0:
        raise GunError("ray left the potential domain below the cathode plane")
    return float(pot._slopes[idx])


def _cell_of(pot, x3: float, v3: float) -> int:
    """Directional cell index: when sitting exactly on a breakpoint, the
    cell the ray is moving into."""
    b = pot.breakpoints
    j = int(np.searchsorted(b, x3, side="left"))
    if j < b.size and x3 == b[j]:
        return j if v3 >= 0.0 else j - 1
    return int(np.searchsorted(b, x3, side="right")) - 1


@dataclass(frozen=True)
class GunConfig:
    potential: object = dc_field(default_factory=RampPotential)
    constants: PhysConstants = dc_field(default_factory=PhysConstants)
    aperture_point: Tuple[float, float, float] = (0.0, 0.0, 1.0)
    emission_spread: float = 0.0

    def __post_init__(self) -> None:
        if self.emission_spread < 0.0:
            raise GunError("emission_spread must be nonnegative")
        if abs(self.potential.phi(self.potential.breakpoints[0])) > 1e-12:
            raise GunError("the potential must vanish on the cathode")

    def hamiltonian(self, x: np.ndarray, p: np.ndarray) -> float:
        c = self.constants
        return float(np.dot(p, p) / (2.0 * c.mass) + c.charge * self.potential.phi(x[2]))


def default_gun(phi_star: float = 0.5, depth: float = 1.0) -> GunConfig:
    """The standard accelerating gun: ramp to phi_star over depth.

    With e = -1 the exit energy is E* = -e phi_star = phi_star, so the
    default phi_star = 0.5 yields |p*| = 1 (k = 1, omega = 0.5)."""
    return GunConfig(
        potential=RampPotential(phi_star, depth),
        aperture_point=(0.0, 0.0, depth),
    )


@dataclass
class Trajectory:
    times: np.ndarray
    positions: np.ndarray   # (n, 3)
    momenta: np.ndarray     # (n, 3)
    action: np.ndarray      # cumulative S, action[0] = 0
    h_drift: float          # max |H(t) - H(t0)| over the samples
    phi_end: float          # Phi at the terminal position
    field_free_end: bool    # terminal point in the constant-Phi region
    dt: float

    @property
    def p_star(self) -> np.ndarray:
        return self.momenta[-1]

    @property
    def x_end(self) -> np.ndarray:
        return self.positions[-1]


def _crossing_time(x3: float, v3: float, a3: float, lo: float, hi: float, tau_max: float):
    """Earliest time in (0, tau_max] at which the parabolic x3(t) hits lo or
    hi, as (tau, boundary), or None.  The current position may sit exactly
    on a boundary (tau = 0 roots are excluded)."""
    best: Optional[Tuple[float, float]] = None
    for b in (lo, hi):
        if not np.isfinite(b):
            continue
        c0 = x3 - b
        roots = []
        if a3 == 0.0:
            if v3 != 0.0:
                roots = [-c0 / v3]
        else:
            disc = v3 * v3 - 2.0 * a3 * c0
            if disc >= 0.0:
                sq = np.sqrt(disc)
                roots = [(-v3 - sq) / a3, (-v3 + sq) / a3]
        for r in roots:
            if 1e-14 < r <= tau_max and (best is None or r < best[0]):
                best = (r, b)
    return best


def trace_ray(
    config: GunConfig,
    start: Tuple[np.ndarray, np.ndarray, float],
    t_final: float,
    dt: float = 1e-3,
    split_at_breaks: bool = True,
) -> Trajectory:
    """Stormer-Verlet ray trace from (x0, p0, t0) to t_final.

    The emission precondition H(x0, p0) = 0 is enforced within the
    emission-spread tolerance.  With split_at_breaks the step is cut at
    every x3 cell crossing, making the integration exact for the piecewise-
    linear potentials used here; without it the plain integrator shows its
    O(dt^2) energy error.  The action S = int (p . xdot - H) dt accumulates
    by the trapezoid rule over the (sub)steps.
    """
    x0, p0, t0 = start
    x = np.asarray(x0, dtype=float).copy()
    p = np.asarray(p0, dtype=float).copy()
    if x.shape != (3,) or p.shape != (3,):
        raise GunError("ray start needs 3-vectors x0, p0")
    if dt <= 0.0 or t_final <= t0:
        raise GunError("need dt > 0 and t_final > t0")

    c = config.constants
    pot = config.potential
    h0 = config.hamiltonian(x, p)
    tol = max(config.emission_spread**2, 1e-12)
    if abs(h0) > tol:
        raise GunError(
            f"emission precondition violated: H(x0, p0) = {h0:.3e} exceeds "
            f"the emission tolerance {tol:.1e}"
        )

    breaks = pot.breakpoints
    domain_min = float(breaks[0])
    n_steps = int(np.ceil((t_final - t0) / dt - 1e-12))

    times = [t0]
    positions = [x.copy()]
    momenta = [p.copy()]
    action = [0.0]
    s_acc = 0.0
    h_drift = 0.0
    x3_max = x[2]

    def lagrangian(xv: np.ndarray, pv: np.ndarray) -> float:
        return float(np.dot(pv, pv) / c.mass) - config.hamiltonian(xv, pv)

    for step in range(n_steps):
        t_here = t0 + step * dt
        step_len = min(dt, t_final - t_here)
        remaining = step_len
        while remaining > 1e-15 * dt:
            cell = _cell_of(pot, x[2], p[2])
            if cell < 0:
                raise GunError(
                    "ray left the gun below the cathode plane at "
                    f"t = {t_final - remaining:.6g} (turning point x3 = {x3_max:.6g}); "
                    "the ramp decelerates the electron"
                )
            slope = _cell_slope(pot, cell)
            f3 = -c.charge * slope  # pdot = -e grad Phi
            a3 = f3 / c.mass
            hit = None
            if split_at_breaks:
                lo = breaks[cell] if cell < breaks.size else -np.inf
                hi = breaks[cell + 1] if cell + 1 < breaks.size else np.inf
                event = _crossing_time(x[2], p[2] / c.mass, a3, lo, hi, remaining)
                tau, hit = event if event is not None else (remaining, None)
            else:
                tau = remaining
            # kick-drift-kick with the cell's (constant) force
            l_start = lagrangian(x, p)
            p_half3 = p[2] + 0.5 * tau * f3
            x = x + (tau / c.mass) * np.array([p[0], p[1], p_half3])
            if hit is not None:
                x[2] = hit  # land exactly on the breakpoint the event found
            if not split_at_breaks:
                # plain Verlet: force re-evaluated at the landing point
                cell_new = _cell_of(pot, x[2], p_half3)
                if cell_new < 0:
                    raise GunError(
                        "ray left the gun below the cathode plane "
                        f"(turning point x3 = {x3_max:.6g})"
                    )
                f3_end = -c.charge * _cell_slope(pot, cell_new)
            else:
                f3_end = f3
            p = np.array([p[0], p[1], p_half3 + 0.5 * tau * f3_end])
            s_acc += 0.5 * tau * (l_start + lagrangian(x, p))
            remaining -= tau
            x3_max = max(x3_max, x[2])
            if x[2] < domain_min - 1e-12:
                raise GunError(
                    "ray left the gun below the cathode plane at "
                    f"t = {t0 + (step + 1) * dt - remaining:.6g} "
                    f"(turning point x3 = {x3_max:.6g})"
                )
        times.append(t_here + step_len)
        positions.append(x.copy())
        momenta.append(p.copy())
        action.append(s_acc)
        h_drift = max(h_drift, abs(config.hamiltonian(x, p) - h0))

    x3 = positions[-1][2]
    field_free = x3 >= breaks[-1] - 1e-12
    return Trajectory(
        times=np.asarray(times),
        positions=np.asarray(positions),
        momenta=np.asarray(momenta),
        action=np.asarray(action),
        h_drift=h_drift,
        phi_end=pot.phi(x3),
        field_free_end=bool(field_free),
        dt=dt,
    )


def ray_family(
    config: GunConfig,
    t_star: float,
    spread: float = 1e-3,
    dt: float = 1e-3,
) -> list:
    """Base ray plus six offset rays whose endpoints straddle the base
    endpoint in every coordinate at t = t_star.

    Transverse offsets shift the launch point on the cathode plane (Phi is
    x3-only, so H stays 0); longitudinal offsets shift the launch time,
    which moves the endpoint along the flight direction.
    """
    zero = np.zeros(3)
    rays = [trace_ray(config, (zero, zero.copy(), 0.0), t_star, dt=dt)]
    for axis in (0, 1):
        for sgn in (+1.0, -1.0):
            x0 = np.zeros(3)
            x0[axis] = sgn * spread
            rays.append(trace_ray(config, (x0, np.zeros(3), 0.0), t_star, dt=dt))
    v_end = rays[0].p_star[2] / config.constants.mass
    if abs(v_end) < 1e-12:
        raise GunError("base ray is at rest at t*; cannot straddle longitudinally")
    delta = spread / abs(v_end)
    for sgn in (+1.0, -1.0):
        # launching earlier (t0 = -delta) lets the ray fly longer by t*,
        # pushing its endpoint forward by about v_end * delta
        rays.append(trace_ray(config, (np.zeros(3), np.zeros(3), -sgn * delta), t_star, dt=dt))
    return rays


@dataclass(frozen=True)
class ActionGradientCheck:
    grad_s: np.ndarray
    p_star: np.ndarray
    max_rel_error: float
    dt_s_residual: float


def action_gradient_check(
    config: GunConfig, family: Sequence[Trajectory], t_star: float
) -> ActionGradientCheck:
    """Verify grad S(x, t*) = p* by finite differences over a ray family.

    Affine least-squares fit of S against endpoint position over the family
    (all rays evaluated at the common t*), compared componentwise with the
    base ray's terminal momentum.  The time derivative dS/dt* is measured
    along the base ray as L - p*.v* (which equals -H, hence ~ 0).
    """
    if len(family) < 4:
        raise GunError("action gradient check needs a family of >= 4 rays")
    base = family[0]
    for ray in family:
        if abs(ray.times[-1] - t_star) > 1e-9 * max(1.0, t_star):
            raise GunError("every family ray must be traced exactly to t*")

    dx = np.array([r.x_end - base.x_end for r in family[1:]])
    ds = np.array([r.action[-1] - base.action[-1] for r in family[1:]])
    sv = np.linalg.svd(dx, compute_uv=False)
    if sv.size < 3 or sv[-1] < 1e-10:
        raise GunError(
            "endpoint spread too small (or degenerate) for stable differencing: "
            f"min singular value {0.0 if sv.size < 3 else sv[-1]:.2e} < 1e-10"
        )
    grad, *_ = np.linalg.lstsq(dx, ds, rcond=None)

    p_star = base.p_star
    scale = float(np.linalg.norm(p_star))
    if scale == 0.0:
        raise GunError("base ray has zero terminal momentum; gradient check undefined")
    max_rel = float(np.max(np.abs(grad - p_star)) / scale)

    # dS/dt* at fixed endpoint: extend the base ray by a short dt and use
    # dS = L dt, dx = v dt, so dS/dt|_x = L - p*.v* = -H
    c = config.constants
    ext = trace_ray(
        config,
        (base.positions[0], base.momenta[0], base.times[0]),
        t_star + base.dt,
        dt=base.dt,
    )
    l_end = float(np.dot(ext.p_star, ext.p_star) / c.mass) - config.hamiltonian(
        ext.x_end, ext.p_star
    )
    dt_s = l_end - float(np.dot(p_star, p_star)) / c.mass
    return ActionGradientCheck(
        grad_s=grad, p_star=p_star, max_rel_error=max_rel, dt_s_residual=float(dt_s)
    )


@dataclass(frozen=True)
class DeBroglieResult:
    k: np.ndarray
    omega: float
    dispersion_gap: float


def de_broglie_check(traj: Trajectory, constants: PhysConstants) -> DeBroglieResult:
    """k = p*/hbar and omega = E*/hbar with E* = -e Phi*, plus the free-
    dispersion gap |hbar omega - (hbar k)^2/2m| (zero exactly when H = 0)."""
    if not traj.field_free_end:
        raise GunError(
            "trajectory does not terminate in the field-free region beyond the anode"
        )
    k = traj.p_star / constants.hbar
    e_star = -constants.charge * traj.phi_end
    omega = e_star / constants.hbar
    gap = abs(
        constants.hbar * omega
        - constants.hbar**2 * float(np.dot(k, k)) / (2.0 * constants.mass)
    )
    return DeBroglieResult(k=k, omega=float(omega), dispersion_gap=float(gap))


def gauge_phase(
    p_star: np.ndarray,
    x: np.ndarray,
    t: float,
    constants: PhysConstants,
    phi_star: float,
) -> float:
    """Plane-wave phase (p*.x - E* t)/hbar of the gauged-out beam,
    E* = -e Phi*."""
    e_star = -constants.charge * float(phi_star)
    return float((np.dot(np.asarray(p_star), np.asarray(x)) - e_star * t) / constants.hbar)
