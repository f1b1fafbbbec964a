"""attractorlab: long-time attractors of nonlinear field models in 1D,
plus the quasiclassical electron-gun and aperture-diffraction experiments.

The package is organized the way an experiment runs:

- ``core``          grids, states, constants, energies, report envelope
- ``models``        the four field models and reproducible initial data
- ``integrate``     leapfrog / split-step evolution with light-cone guards
- ``stationary``    stationary orbits, kinks, and stationary states
- ``diagnostics``   spectra, manifold distances, soliton fits, energy checks
- ``quasiclassics`` classical rays through the gun, action bookkeeping
- ``diffraction``   Fraunhofer aperture integrals and the Born check
- ``cli``           the ``attractorlab`` command-line front end
"""

from .core import (
    AttractorLabError,
    ConfigError,
    DiagnosticsError,
    DiffractionError,
    Grid1D,
    GridError,
    GunError,
    IntegrationError,
    KG_U1,
    LAMB_STRING,
    ModelError,
    PHI4,
    PhysConstants,
    ReportEnvelope,
    SCHRODINGER,
    SimState,
    TraceSeries,
    discrete_energy,
    make_grid,
)
from .models import (
    ModelSpec,
    NonlinearitySpec,
    double_well_potential,
    kg_u1,
    lamb_string,
    linear_schrodinger,
    phi4,
    random_initial_state,
    rhs,
    symmetry_action,
)
from .integrate import (
    EvolutionResult,
    StepPlan,
    StrangStepper,
    boundary_flux,
    evolve,
    lattice_energy,
    local_energy,
)
from .stationary import (
    SolitonProfile,
    StationaryOrbit,
    StationaryStates,
    kink_profile,
    kink_state,
    orbit_state,
    solve_stationary_orbit,
    solve_stationary_orbits,
    stationary_states,
    trivial_orbit,
)
from .diagnostics import (
    AttractionReport,
    BeatSpectrum,
    DominantFrequency,
    ManifoldMatch,
    SolitonFit,
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
from .quasiclassics import (
    ActionGradientCheck,
    DeBroglieResult,
    GunConfig,
    RampPotential,
    TablePotential,
    Trajectory,
    action_gradient_check,
    de_broglie_check,
    default_gun,
    gauge_phase,
    ray_family,
    trace_ray,
)
from .diffraction import (
    AmplitudeField,
    ApertureSpec,
    BornCheck,
    CurrentField,
    FringeGeometry,
    Rect,
    ScreenLattice,
    born_ratio_check,
    current_density,
    fringe_geometry,
    kirchhoff_amplitude,
    single_rect,
    two_slits,
)

__version__ = "0.1.0"
