"""Shared numerical substrate: grids, states, traces, and the discrete energy.

Everything downstream works on a uniform 1D lattice.  The one non-negotiable
convention lives here: models with a point (delta) coupling at x = 0 need the
origin to be an exact lattice node, so grids are built with ``np.linspace``
and validated rather than assembled by repeated addition of ``dx`` (which
drifts past x = 0 in floating point).

Energies are discretized with centered differences in the interior, one-sided
differences at the two boundary nodes, and trapezoid quadrature, so the
discrete Hamiltonian of a smooth state converges at O(dx^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

__all__ = [
    "AttractorLabError",
    "ConfigError",
    "DiagnosticsError",
    "DiffractionError",
    "Grid1D",
    "GridError",
    "GunError",
    "IntegrationError",
    "ModelError",
    "PhysConstants",
    "ReportEnvelope",
    "SimState",
    "TraceSeries",
    "discrete_energy",
    "make_grid",
    # model kind tags
    "KG_U1",
    "LAMB_STRING",
    "PHI4",
    "SCHRODINGER",
]


class AttractorLabError(Exception):
    """Base class for all errors raised by this package."""


class GridError(AttractorLabError):
    pass


class ModelError(AttractorLabError):
    pass


class IntegrationError(AttractorLabError):
    pass


class DiagnosticsError(AttractorLabError):
    pass


class GunError(AttractorLabError):
    pass


class DiffractionError(AttractorLabError):
    pass


class ConfigError(AttractorLabError):
    pass


# Model kind tags.  Defined here (not in models.py) so that the energy
# dispatch below needs no circular import.
LAMB_STRING = "lamb_string"  # massless string with a point-attached oscillator
KG_U1 = "kg_u1"              # Klein-Gordon with U(1)-equivariant point coupling
PHI4 = "phi4"                # distributed double-well scalar (kinks)
SCHRODINGER = "schrodinger"  # linear Schrodinger with a sampled potential

WAVE_KINDS = (LAMB_STRING, KG_U1, PHI4)
POINT_COUPLED_KINDS = (LAMB_STRING, KG_U1)


@dataclass(frozen=True)
class PhysConstants:
    """Physical constants for the quantum-facing pieces (Schrodinger, gun,
    diffraction).  Defaults are the dimensionless working units used
    throughout: hbar = m = 1, electron charge e = -1."""

    hbar: float = 1.0
    mass: float = 1.0
    charge: float = -1.0
    light_speed: float = 1.0

    def __post_init__(self) -> None:
        for name in ("hbar", "mass", "light_speed"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0.0:
                raise ConfigError(f"{name} must be finite and positive, got {v!r}")
        if not np.isfinite(self.charge) or self.charge >= 0.0:
            raise ConfigError(
                f"charge must be finite and negative (electron convention), got {self.charge!r}"
            )


@dataclass(frozen=True)
class Grid1D:
    """Uniform spatial lattice on [x_min, x_max] with n_points nodes."""

    x_min: float
    x_max: float
    n_points: int
    dx: float

    def nodes(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    def index_of(self, x0: float) -> int:
        """Index of the lattice node nearest to x0 (x0 must lie on the grid)."""
        if not (self.x_min - 0.5 * self.dx <= x0 <= self.x_max + 0.5 * self.dx):
            raise GridError(f"point x={x0!r} lies outside the grid [{self.x_min}, {self.x_max}]")
        return int(round((x0 - self.x_min) / self.dx))

    def zero_index(self, strict: bool = True) -> int:
        """Index of the node at x = 0.

        With strict=True the node must sit at 0 up to 1e-9*dx; point-coupled
        models use this because the delta coupling lives on that node.
        """
        i = self.index_of(0.0)
        xi = self.x_min + i * self.dx
        if strict and abs(xi) > 1e-9 * self.dx:
            raise GridError(
                f"grid has no exact x=0 node (nearest node at x={xi:.3e}); "
                "use symmetric bounds with an odd n_points"
            )
        return i


def make_grid(x_min: float, x_max: float, n_points: int) -> Grid1D:
    """Build a uniform grid; dx = (x_max - x_min) / (n_points - 1).

    Grids never relocate nodes: a grid contains x = 0 exactly iff the bounds
    place it there (e.g. symmetric bounds with odd n_points).
    """
    if not (np.isfinite(x_min) and np.isfinite(x_max)):
        raise GridError(f"grid bounds must be finite, got ({x_min!r}, {x_max!r})")
    if not x_min < x_max:
        raise GridError(f"grid needs x_min < x_max, got ({x_min!r}, {x_max!r})")
    n_points = int(n_points)
    if n_points < 3:
        raise GridError(f"grid needs at least 3 nodes, got {n_points}")
    dx = (x_max - x_min) / (n_points - 1)
    return Grid1D(float(x_min), float(x_max), n_points, dx)


@dataclass
class SimState:
    """Field configuration at one instant.

    field is always stored complex128 (real models simply carry zero
    imaginary part); velocity is None for first-order-in-time models.
    """

    t: float
    field: np.ndarray
    velocity: Optional[np.ndarray]
    grid: Grid1D

    def __post_init__(self) -> None:
        self.field = np.asarray(self.field, dtype=np.complex128)
        if self.field.shape != (self.grid.n_points,):
            raise GridError(
                f"field shape {self.field.shape} does not match grid ({self.grid.n_points},)"
            )
        if self.velocity is not None:
            self.velocity = np.asarray(self.velocity, dtype=np.complex128)
            if self.velocity.shape != self.field.shape:
                raise GridError("velocity shape does not match field shape")

    def copy(self) -> "SimState":
        v = None if self.velocity is None else self.velocity.copy()
        return SimState(self.t, self.field.copy(), v, self.grid)


@dataclass
class TraceSeries:
    """A complex scalar sampled at uniform time intervals."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.times.ndim != 1 or self.times.shape != self.values.shape:
            raise DiagnosticsError("trace times/values must be 1D arrays of equal length")
        if self.times.size >= 2:
            steps = np.diff(self.times)
            dt = steps[0]
            if dt <= 0.0 or np.any(np.abs(steps - dt) > 1e-12 * max(1.0, abs(dt))):
                raise DiagnosticsError("trace sampling must be uniform (rel. tol 1e-12)")

    @property
    def dt(self) -> float:
        if self.times.size < 2:
            raise DiagnosticsError("trace has fewer than 2 samples; dt undefined")
        return float(self.times[1] - self.times[0])

    def __len__(self) -> int:
        return int(self.times.size)


@dataclass
class ReportEnvelope:
    """Everything a run wants to persist: echoed config, scalar metrics,
    recorded series, and named boolean verdicts.

    Invariant: every verdict is backed by a metric of the same name, so a
    report never asserts a pass/fail without the number that justified it.
    """

    config_echo: dict
    metrics: dict = dc_field(default_factory=dict)
    series: dict = dc_field(default_factory=dict)
    verdicts: dict = dc_field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in self.verdicts:
            if name not in self.metrics:
                raise ConfigError(f"verdict {name!r} has no backing metric of the same name")


def _spatial_gradient(values: np.ndarray, dx: float) -> np.ndarray:
    # np.gradient: centered differences inside, one-sided at the ends.
    return np.gradient(values, dx)


def discrete_energy(state: SimState, model) -> float:
    """Total discrete Hamiltonian of a state under the given model.

    Wave models: integral of (|v|^2 + |psi_x|^2 (+ m^2 |psi|^2)) / 2 plus the
    point potential at x = 0 (Lamb string / U(1) point coupling) or the
    distributed double-well potential (phi^4, vacuum at phi = +-1).
    Schrodinger: integral of hbar^2 |psi_x|^2 / (2m) + V |psi|^2.
    """
    g = state.grid
    psi = state.field
    dpsi = _spatial_gradient(psi, g.dx)
    kind = model.kind

    if kind == SCHRODINGER:
        c = model.constants
        dens = (c.hbar**2 / (2.0 * c.mass)) * np.abs(dpsi) ** 2
        if model.potential is not None:
            dens = dens + model.potential * np.abs(psi) ** 2
        return float(np.trapezoid(dens, dx=g.dx))

    if kind not in WAVE_KINDS:
        raise ModelError(f"unknown model kind {kind!r}")
    if state.velocity is None:
        raise ModelError(f"model kind {kind!r} needs a velocity component in the state")

    dens = 0.5 * (np.abs(state.velocity) ** 2 + np.abs(dpsi) ** 2)
    if kind == KG_U1:
        dens = dens + 0.5 * model.mass**2 * np.abs(psi) ** 2
    total = float(np.trapezoid(dens, dx=g.dx))

    if kind == PHI4:
        # fixed double-well (phi^2 - 1)^2 / 4; vacua at phi = +-1 have zero
        # energy density, the zero field does not.
        phi = psi.real
        total += float(np.trapezoid(0.25 * (phi**2 - 1.0) ** 2, dx=g.dx))
    else:
        i0 = g.zero_index()
        total += float(model.nonlinearity.point_potential(psi[i0]))
    return total
