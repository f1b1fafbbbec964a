"""Stationary states, stationary orbits, and traveling kinks.

Three flavors of time-independent (or rigidly moving/rotating) solutions:

* constants c with F(c) = 0 for the point-oscillator string, classified
  stable/unstable by the sign of F'(c);
* stationary orbits u(x) e^{-i omega t} of the U(1) point-coupled
  Klein-Gordon model, with u(x) = C e^{-kappa |x|}, kappa = sqrt(m^2 -
  omega^2), and the jump condition 2 kappa C = a(C^2) C at the origin;
* boosted kinks tanh(gamma (x - x0)/sqrt 2) of the phi^4 model.

Closed forms give the amplitudes; a Newton polish on the discrete system
(seeded by the continuum solution, tol 1e-12, at most 50 iterations) then
removes the O(dx^2) mismatch between the sampled continuum profile and the
lattice operator, so downstream residual checks sit at solver tolerance
instead of discretization error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.linalg import solve_banded

from .core import (
    KG_U1,
    LAMB_STRING,
    PHI4,
    Grid1D,
    ModelError,
    SimState,
    make_grid,
)
from .models import ModelSpec, U1_EQUIVARIANT

__all__ = [
    "SolitonProfile",
    "StationaryOrbit",
    "StationaryStates",
    "kink_profile",
    "kink_state",
    "orbit_state",
    "solve_stationary_orbit",
    "solve_stationary_orbits",
    "stationary_states",
    "trivial_orbit",
]

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50


@dataclass(frozen=True)
class StationaryOrbit:
    """One member of the solitary manifold u(x) e^{-i omega t}."""

    omega: float
    amplitude: float        # closed-form trace value C (jump condition exact)
    kappa: float
    profile: np.ndarray     # Newton-polished samples on grid
    grid: Grid1D
    residual: float         # sup-norm of the discrete stationary equation

    def __post_init__(self) -> None:
        object.__setattr__(self, "profile", np.asarray(self.profile, dtype=np.complex128))


@dataclass(frozen=True)
class SolitonProfile:
    """Comoving kink profile of the distributed double-well model."""

    velocity: float
    center: float
    profile: np.ndarray
    grid: Grid1D
    residual: float


@dataclass(frozen=True)
class StationaryStates:
    """Isolated constant stationary states of the point oscillator.

    points is a list of (c, stable) pairs; degenerate marks F identically
    zero, where every constant is stationary and no isolated list exists.
    """

    points: tuple
    degenerate: bool


def _newton_tridiag(u, g_fun, jac_fun, g_report=None):
    """Newton iteration for a tridiagonal interior system.

    u: full node vector (ends held fixed); g_fun(u) -> residual on interior;
    jac_fun(u) -> (lower, diag, upper) interior Jacobian bands.  g_report,
    if given, is the residual used for the final report (solving may pin a
    row to remove a translation zero mode; the report never does).
    """
    for _ in range(NEWTON_MAX_ITER):
        g = g_fun(u)
        if np.max(np.abs(g)) <= NEWTON_TOL:
            break
        lower, diag, upper = jac_fun(u)
        m = diag.size
        ab = np.zeros((3, m))
        ab[0, 1:] = upper[:-1]
        ab[1, :] = diag
        ab[2, :-1] = lower[1:]
        du = solve_banded((1, 1), ab, -g)
        u = u.copy()
        u[1:-1] += du
    report = g_report if g_report is not None else g_fun
    return u, float(np.max(np.abs(report(u))))


def _orbit_residual_fun(model: ModelSpec, grid: Grid1D, kappa: float):
    dx = grid.dx
    i0 = grid.zero_index()
    coeffs = model.nonlinearity.coefficients
    dcoeffs = npoly.polyder(coeffs)

    def g_fun(u: np.ndarray) -> np.ndarray:
        lap = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / dx**2
        g = lap - kappa**2 * u[1:-1]
        g[i0 - 1] += npoly.polyval(u[i0] ** 2, coeffs) * u[i0] / dx
        return g

    def jac_fun(u: np.ndarray):
        m = grid.n_points - 2
        lower = np.full(m, 1.0 / dx**2)
        upper = np.full(m, 1.0 / dx**2)
        diag = np.full(m, -2.0 / dx**2 - kappa**2)
        s = u[i0] ** 2
        diag[i0 - 1] += (
            npoly.polyval(s, coeffs) + 2.0 * s * npoly.polyval(s, dcoeffs)
        ) / dx
        return lower, diag, upper

    return g_fun, jac_fun


def _require_kg(model: ModelSpec) -> None:
    if model.kind != KG_U1:
        raise ModelError("stationary orbits are defined for the kg_u1 model")
    if model.nonlinearity.mode != U1_EQUIVARIANT:
        raise ModelError("stationary orbits need a u1_equivariant coupling")


def trivial_orbit(model: ModelSpec, omega: float, grid: Grid1D) -> StationaryOrbit:
    """The zero solution, viewed as the C = 0 member of the orbit manifold."""
    _require_kg(model)
    if abs(omega) >= model.mass:
        raise ModelError(f"|omega|={abs(omega)} is not below the band edge m={model.mass}")
    kappa = float(np.sqrt(model.mass**2 - omega**2))
    return StationaryOrbit(
        omega=float(omega),
        amplitude=0.0,
        kappa=kappa,
        profile=np.zeros(grid.n_points, dtype=np.complex128),
        grid=grid,
        residual=0.0,
    )


def solve_stationary_orbits(
    model: ModelSpec, omega: float, grid: Grid1D
) -> List[StationaryOrbit]:
    """All stationary orbits at this frequency, ordered by amplitude C.

    Solves the jump condition a(C^2) = 2 kappa for C > 0 (polynomial roots),
    then Newton-polishes each sampled profile C e^{-kappa |x|} on the grid
    with the tails held at their continuum values.  A degenerate (constant-a)
    coupling admits only the zero orbit.
    """
    _require_kg(model)
    if abs(omega) >= model.mass:
        raise ModelError(
            f"|omega|={abs(omega)} is not below the band edge m={model.mass}: "
            "no exponentially decaying profile exists"
        )
    kappa = float(np.sqrt(model.mass**2 - omega**2))

    coeffs = np.asarray(model.nonlinearity.coefficients, dtype=float)
    shifted = coeffs.copy()
    shifted[0] -= 2.0 * kappa
    degree = int(np.max(np.nonzero(shifted)[0])) if np.any(shifted != 0.0) else 0

    if degree == 0:
        # constant coupling: a(s) = a0.  a0 == 2*kappa would make every
        # amplitude stationary (no isolated orbits); otherwise only C = 0.
        if shifted[0] == 0.0:
            raise ModelError(
                "constant coupling equals 2*kappa: the orbit amplitude is not isolated"
            )
        return [trivial_orbit(model, omega, grid)]

    roots = npoly.polyroots(shifted[: degree + 1])
    s_values = sorted(
        float(r.real)
        for r in roots
        if abs(r.imag) <= 1e-9 * max(1.0, abs(r)) and r.real >= -1e-12
    )
    # collapse numerically identical roots
    uniq: List[float] = []
    for s in s_values:
        if not uniq or s - uniq[-1] > 1e-10 * max(1.0, s):
            uniq.append(max(s, 0.0))
    if not uniq:
        raise ModelError(
            f"a(s) = 2*kappa = {2 * kappa:g} has no nonnegative root: no orbit at omega={omega}"
        )

    orbits = []
    x = grid.nodes()
    g_fun, jac_fun = _orbit_residual_fun(model, grid, kappa)
    for s in uniq:
        c = float(np.sqrt(s))
        if c == 0.0:
            orbits.append(trivial_orbit(model, omega, grid))
            continue
        seed = c * np.exp(-kappa * np.abs(x))
        polished, residual = _newton_tridiag(seed, g_fun, jac_fun)
        if residual > 1e-8:
            raise ModelError(
                f"orbit polish stalled at residual {residual:.3e} (omega={omega}, C={c:g})"
            )
        orbits.append(
            StationaryOrbit(
                omega=float(omega),
                amplitude=c,
                kappa=kappa,
                profile=polished,
                grid=grid,
                residual=residual,
            )
        )
    return orbits


def solve_stationary_orbit(model: ModelSpec, omega: float, grid: Grid1D) -> StationaryOrbit:
    """The smallest-amplitude stationary orbit at this frequency."""
    return solve_stationary_orbits(model, omega, grid)[0]


def orbit_state(orbit: StationaryOrbit, phase: float = 0.0) -> SimState:
    """Initial data that should rotate rigidly: psi = e^{i phase} u,
    psi_t = -i omega psi."""
    field = np.exp(1j * phase) * orbit.profile
    return SimState(0.0, field, -1j * orbit.omega * field, orbit.grid)


def stationary_states(model: ModelSpec) -> StationaryStates:
    """Constant stationary states of the point oscillator, stability from
    the reduced trace dynamics 2 y_dot = F(y) (stable iff F'(c) < 0)."""
    if model.kind != LAMB_STRING:
        raise ModelError("constant stationary states are defined for the lamb_string model")
    coeffs = np.asarray(model.nonlinearity.coefficients, dtype=float)
    if not np.any(coeffs != 0.0):
        return StationaryStates(points=(), degenerate=True)
    degree = int(np.max(np.nonzero(coeffs)[0]))
    if degree == 0:
        return StationaryStates(points=(), degenerate=False)  # F = const != 0: no roots
    roots = npoly.polyroots(coeffs[: degree + 1])
    dcoeffs = npoly.polyder(coeffs)
    points = []
    for r in sorted(roots, key=lambda z: z.real):
        if abs(r.imag) > 1e-9 * max(1.0, abs(r)):
            continue
        c = float(r.real)
        if points and abs(c - points[-1][0]) <= 1e-10 * max(1.0, abs(c)):
            continue
        stable = bool(npoly.polyval(c, dcoeffs) < 0.0)
        points.append((c, stable))
    return StationaryStates(points=tuple(points), degenerate=False)


_DEFAULT_KINK_GRID = (-40.0, 40.0, 8001)  # dx = 0.01


def kink_profile(
    model: ModelSpec,
    velocity: float,
    grid: Optional[Grid1D] = None,
    center: float = 0.0,
) -> SolitonProfile:
    """Boosted kink tanh(gamma (x - x0)/sqrt 2), gamma = 1/sqrt(1 - v^2),
    Newton-polished so the comoving traveling-wave equation
    (1 - v^2) f'' = f^3 - f holds on the lattice to residual <= 1e-8."""
    if model.kind != PHI4:
        raise ModelError("kink profiles are defined for the phi4 model")
    v = float(velocity)
    if abs(v) >= 1.0:
        raise ModelError(f"|v|={abs(v)} violates the light-speed bound |v| < 1")
    if grid is None:
        grid = make_grid(*_DEFAULT_KINK_GRID)
    gamma = 1.0 / np.sqrt(1.0 - v**2)
    x = grid.nodes()
    seed = np.tanh(gamma * (x - center) / np.sqrt(2.0))

    # the comoving linearization has a translation zero mode; pin the kink's
    # center node (where the odd profile vanishes) to make Newton well posed
    i_c = grid.index_of(center)
    if abs(x[i_c] - center) > 1e-9 * grid.dx:
        raise ModelError("kink center must sit on a grid node for the discrete polish")

    dx = grid.dx
    w = 1.0 - v**2

    def g_true(f: np.ndarray) -> np.ndarray:
        lap = (f[:-2] - 2.0 * f[1:-1] + f[2:]) / dx**2
        fi = f[1:-1]
        return w * lap - (fi**3 - fi)

    def g_fun(f: np.ndarray) -> np.ndarray:
        g = g_true(f)
        g[i_c - 1] = f[i_c]
        return g

    def jac_fun(f: np.ndarray):
        m = grid.n_points - 2
        lower = np.full(m, w / dx**2)
        upper = np.full(m, w / dx**2)
        diag = -2.0 * w / dx**2 - (3.0 * f[1:-1] ** 2 - 1.0)
        lower[i_c - 1] = upper[i_c - 1] = 0.0
        diag[i_c - 1] = 1.0
        return lower, diag, upper

    polished, residual = _newton_tridiag(seed, g_fun, jac_fun, g_report=g_true)
    if residual > 1e-8:
        raise ModelError(f"kink polish stalled at residual {residual:.3e} (v={v})")
    return SolitonProfile(
        velocity=v, center=float(center), profile=polished, grid=grid, residual=residual
    )


def kink_state(grid: Grid1D, velocity: float, center: float = 0.0) -> SimState:
    """Analytic boosted kink as lab-frame initial data:
    phi = tanh(gamma (x - x0)/sqrt 2), phi_t = -v phi_x."""
    v = float(velocity)
    if abs(v) >= 1.0:
        raise ModelError(f"|v|={abs(v)} violates the light-speed bound |v| < 1")
    gamma = 1.0 / np.sqrt(1.0 - v**2)
    x = grid.nodes()
    arg = gamma * (x - center) / np.sqrt(2.0)
    field = np.tanh(arg)
    dfield = gamma / np.sqrt(2.0) * (1.0 - field**2)  # sech^2 without overflow
    return SimState(0.0, field, -v * dfield, grid)
