"""The four field models and their pointwise structure.

All models live on a line segment with Dirichlet-frozen boundary nodes:

* ``lamb_string``  — massless wave equation with a nonlinear oscillator
  attached at x = 0:  psi_tt = psi_xx + delta(x) F(psi(0,t)).
* ``kg_u1``        — Klein-Gordon field with a U(1)-equivariant point
  coupling:  psi_tt = psi_xx - m^2 psi + delta(x) a(|psi(0)|^2) psi(0).
* ``phi4``         — distributed double-well scalar, phi_tt = phi_xx + phi -
  phi^3, whose traveling kinks connect the vacua phi = -1 and phi = +1.
* ``schrodinger``  — linear Schrodinger equation i hbar psi_t =
  -(hbar^2/2m) psi_xx + V(x) psi with a node-sampled potential.

Point couplings are represented on the lattice as a 1/dx spike on the x = 0
node, which is why grids for those models must contain the origin exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as npoly

from .core import (
    KG_U1,
    LAMB_STRING,
    PHI4,
    SCHRODINGER,
    WAVE_KINDS,
    Grid1D,
    GridError,
    ModelError,
    PhysConstants,
    SimState,
    discrete_energy,
)

__all__ = [
    "ModelSpec",
    "NonlinearitySpec",
    "double_well_potential",
    "kg_u1",
    "lamb_string",
    "linear_schrodinger",
    "phi4",
    "random_initial_state",
    "rhs",
    "symmetry_action",
    "SYM_TRIVIAL",
    "SYM_TRANSLATION",
    "SYM_U1",
]

SYM_TRIVIAL = "trivial"
SYM_TRANSLATION = "translation"
SYM_U1 = "u1"

REAL_SCALAR = "real_scalar"
U1_EQUIVARIANT = "u1_equivariant"


@dataclass(frozen=True)
class NonlinearitySpec:
    """Polynomial point nonlinearity.

    mode "real_scalar": force F(y) = sum_j coefficients[j] * y^j acting on a
    real trace y = psi(0, t).
    mode "u1_equivariant": F(psi) = a(|psi|^2) psi with
    a(s) = sum_j coefficients[j] * s^j, which commutes with phase rotation.
    """

    coefficients: tuple
    mode: str = REAL_SCALAR

    def __post_init__(self) -> None:
        if self.mode not in (REAL_SCALAR, U1_EQUIVARIANT):
            raise ModelError(f"unknown nonlinearity mode {self.mode!r}")
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs:
            raise ModelError("nonlinearity needs at least one coefficient")
        if not all(np.isfinite(coeffs)):
            raise ModelError("nonlinearity coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def strictly_nonlinear(self) -> bool:
        """True iff the coupling is genuinely nonlinear: a(.) non-constant in
        the U(1) case, F of degree >= 2 in the real case."""
        min_degree = 1 if self.mode == U1_EQUIVARIANT else 2
        return any(c != 0.0 for c in self.coefficients[min_degree:])

    def point_force(self, y: complex) -> complex:
        if self.mode == U1_EQUIVARIANT:
            return complex(npoly.polyval(abs(y) ** 2, self.coefficients) * y)
        return complex(npoly.polyval(np.real(y), self.coefficients))

    def point_potential(self, y: complex) -> float:
        """U_pt with U_pt' = -F along the relevant direction, U_pt(0) = 0."""
        anti = npoly.polyint(self.coefficients)  # antiderivative, zero at 0
        if self.mode == U1_EQUIVARIANT:
            # U_pt(psi) = -A(|psi|^2)/2 with A(s) = int_0^s a
            return float(-0.5 * npoly.polyval(abs(y) ** 2, anti))
        return float(-npoly.polyval(np.real(y), anti))

    def radial_coupling(self, s: float) -> float:
        """a(s) for U(1) mode (used by the orbit solver)."""
        if self.mode != U1_EQUIVARIANT:
            raise ModelError("radial coupling a(s) only exists in u1_equivariant mode")
        return float(npoly.polyval(s, self.coefficients))


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    mass: float = 0.0
    nonlinearity: Optional[NonlinearitySpec] = None
    potential: Optional[np.ndarray] = None  # node samples, schrodinger only
    symmetry: str = SYM_TRIVIAL
    constants: PhysConstants = dc_field(default_factory=PhysConstants)

    def __post_init__(self) -> None:
        if self.kind == LAMB_STRING:
            if self.mass != 0.0:
                raise ModelError("lamb_string is a massless wave model")
            if self.nonlinearity is None or self.nonlinearity.mode != REAL_SCALAR:
                raise ModelError("lamb_string needs a real_scalar point nonlinearity")
        elif self.kind == KG_U1:
            if self.mass <= 0.0:
                raise ModelError("kg_u1 needs mass > 0 (band edge at |omega| = m)")
            if self.nonlinearity is None or self.nonlinearity.mode != U1_EQUIVARIANT:
                raise ModelError("kg_u1 needs a u1_equivariant point nonlinearity")
        elif self.kind == PHI4:
            if self.nonlinearity is not None:
                raise ModelError("phi4 carries the fixed double-well potential; no point term")
        elif self.kind == SCHRODINGER:
            if self.potential is not None and np.ndim(self.potential) != 1:
                raise ModelError("schrodinger potential must be 1D node samples")
        else:
            raise ModelError(f"unknown model kind {self.kind!r}")


def lamb_string(coefficients: tuple = (0.0, 1.0, 0.0, -1.0)) -> ModelSpec:
    """Massless string with point oscillator force F (default F(y) = y - y^3,
    stationary states at y = -1, 0, +1)."""
    return ModelSpec(
        kind=LAMB_STRING,
        mass=0.0,
        nonlinearity=NonlinearitySpec(coefficients, REAL_SCALAR),
        symmetry=SYM_TRIVIAL,
    )


def kg_u1(mass: float = 1.0, coefficients: tuple = (0.0, 1.0)) -> ModelSpec:
    """Klein-Gordon field with U(1) point coupling a(s) (default a(s) = s)."""
    return ModelSpec(
        kind=KG_U1,
        mass=float(mass),
        nonlinearity=NonlinearitySpec(coefficients, U1_EQUIVARIANT),
        symmetry=SYM_U1,
    )


def phi4() -> ModelSpec:
    """Distributed double-well scalar; vacua at phi = -1, +1, kinks between."""
    return ModelSpec(kind=PHI4, mass=0.0, symmetry=SYM_TRANSLATION)


def double_well_potential(
    grid: Grid1D, depth: float = 2.0, separation: float = 2.0, width: float = 1.0
) -> np.ndarray:
    """V(x) = -depth on |x -+ separation| < width/2, else 0.

    The defaults give exactly two bound states about 0.02 apart, a convenient
    pair for beat-frequency experiments.
    """
    x = grid.nodes()
    inside = (np.abs(x - separation) < 0.5 * width) | (np.abs(x + separation) < 0.5 * width)
    return np.where(inside, -float(depth), 0.0)


def linear_schrodinger(
    grid: Grid1D,
    potential: Optional[np.ndarray] = None,
    constants: PhysConstants = PhysConstants(),
) -> ModelSpec:
    """Linear Schrodinger model; default potential is the double finite well."""
    V = double_well_potential(grid) if potential is None else np.asarray(potential, dtype=float)
    if V.shape != (grid.n_points,):
        raise ModelError("potential samples must match the grid")
    return ModelSpec(
        kind=SCHRODINGER,
        mass=0.0,
        potential=V,
        symmetry=SYM_U1,
        constants=constants,
    )


def _laplacian(psi: np.ndarray, dx: float) -> np.ndarray:
    lap = np.zeros_like(psi)
    lap[1:-1] = (psi[:-2] - 2.0 * psi[1:-1] + psi[2:]) / dx**2
    return lap


def rhs(state: SimState, model: ModelSpec) -> np.ndarray:
    """Instantaneous time-derivative data.

    Wave models: the acceleration psi_tt (the delta coupling enters as a
    1/dx spike on the x = 0 node).  Schrodinger: d(psi)/dt.  Boundary nodes
    are Dirichlet-frozen, so their entry is always 0.
    """
    g = state.grid
    psi = state.field
    if model.kind == SCHRODINGER:
        c = model.constants
        h_psi = -(c.hbar**2 / (2.0 * c.mass)) * _laplacian(psi, g.dx)
        if model.potential is not None:
            h_psi = h_psi + model.potential * psi
        dpsi = (-1j / c.hbar) * h_psi
        dpsi[0] = dpsi[-1] = 0.0
        return dpsi

    if model.kind not in WAVE_KINDS:
        raise ModelError(f"unknown model kind {model.kind!r}")
    acc = _laplacian(psi, g.dx)
    if model.kind == KG_U1:
        acc = acc - model.mass**2 * psi
    if model.kind == PHI4:
        acc = acc + psi - psi * psi * psi
    if model.kind in (LAMB_STRING, KG_U1):
        i0 = g.zero_index()
        acc[i0] += model.nonlinearity.point_force(psi[i0]) / g.dx
    acc[0] = acc[-1] = 0.0
    return acc


def symmetry_action(state: SimState, model: ModelSpec, parameter: float) -> SimState:
    """Apply the model's symmetry group element to a state.

    u1: multiply field (and velocity) by exp(i*theta).
    translation: shift by s, (T_s psi)(x) = psi(x - s), linear interpolation
    with edge-value fill (vacuum continuation).
    trivial: only the identity element (parameter 0) exists.
    """
    if model.symmetry == SYM_U1:
        phase = np.exp(1j * float(parameter))
        v = None if state.velocity is None else phase * state.velocity
        return SimState(state.t, phase * state.field, v, state.grid)
    if model.symmetry == SYM_TRANSLATION:
        s = float(parameter)
        x = state.grid.nodes()
        xq = x - s

        def shift(arr: np.ndarray) -> np.ndarray:
            return np.interp(xq, x, arr.real) + 1j * np.interp(xq, x, arr.imag)

        v = None if state.velocity is None else shift(state.velocity)
        return SimState(state.t, shift(state.field), v, state.grid)
    if model.symmetry == SYM_TRIVIAL:
        if parameter not in (None, 0, 0.0):
            raise ModelError("trivial symmetry group has only the identity element")
        return state.copy()
    raise ModelError(f"unknown symmetry {model.symmetry!r}")


def _bump(x: np.ndarray, radius: float) -> np.ndarray:
    """Smooth compactly supported bump, exp(1 - 1/(1 - (x/R)^2)) on |x| < R."""
    out = np.zeros_like(x, dtype=float)
    u = x / radius
    inside = np.abs(u) < 1.0
    with np.errstate(divide="ignore", over="ignore"):
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


def random_initial_state(
    model: ModelSpec,
    grid: Grid1D,
    seed: int,
    energy: float,
    support_radius: float = 3.0,
    degree: int = 3,
    rotation: float = 0.9,
) -> SimState:
    """Reproducible compactly supported initial data of prescribed energy.

    Shape = smooth bump times a random polynomial; the amplitude is then
    scaled so the discrete energy matches ``energy`` exactly (bisection on
    the scale).  For U(1) models the polynomial is complex and the velocity
    is set to -i * rotation * field, which biases the data onto one rotation
    branch; for phi4 the bump perturbs the phi = +1 vacuum.
    """
    if energy <= 0.0:
        raise ModelError("requested energy must be positive")
    rng = np.random.default_rng(seed)
    x = grid.nodes()
    if support_radius >= min(-grid.x_min, grid.x_max):
        raise GridError("support_radius must fit inside the grid")

    coeffs = rng.normal(size=degree + 1)
    if model.symmetry == SYM_U1 and model.kind != SCHRODINGER:
        coeffs = coeffs + 1j * rng.normal(size=degree + 1)
    shape = _bump(x, support_radius) * npoly.polyval(x / support_radius, coeffs)
    if np.max(np.abs(shape)) == 0.0:
        raise ModelError("degenerate random shape (all coefficients zero)")
    shape = shape / np.max(np.abs(shape))

    def build(scale: float) -> SimState:
        if model.kind == PHI4:
            fld = 1.0 + scale * shape
            vel = np.zeros_like(fld)
        elif model.kind == KG_U1:
            fld = scale * shape
            vel = -1j * rotation * fld
        elif model.kind == SCHRODINGER:
            return SimState(0.0, scale * shape, None, grid)
        else:
            fld = scale * shape
            vel = np.zeros_like(fld)
        return SimState(0.0, fld, vel, grid)

    def h(scale: float) -> float:
        return discrete_energy(build(scale), model)

    # H(scale) rises from 0; for focusing point couplings it can turn over,
    # so bracket only up to the first maximum and take the first crossing.
    lo, hi = 0.0, 0.25
    h_hi = h(hi)
    while h_hi < energy:
        nxt = hi * 1.5
        h_nxt = h(nxt)
        if h_nxt <= h_hi:
            raise ModelError(
                f"energy {energy} not reachable before the focusing turnover "
                f"(max reachable about {h_hi:.4g}); request less energy"
            )
        lo, hi, h_hi = hi, nxt, h_nxt
    from scipy.optimize import brentq

    scale = brentq(lambda a: h(a) - energy, lo, hi, xtol=1e-14, rtol=1e-14)
    return build(scale)
