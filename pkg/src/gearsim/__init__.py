"""Quantum gears: angular-momentum transmission between coupled planar rotors.

The package splits along the physics: `model` owns the exact lattice
arithmetic of the gear pair, `relative` the banded relative-coordinate
Hamiltonian and its bands, `dynamics` kicks and time evolution, `ergotropy`
the work content of the driven gear, `classical` the classical limit, and
`oracle` an independent brute-force reference on the raw two-rotor lattice.
"""

from .errors import (
    ConfigError,
    ConvergenceFailure,
    GearsError,
    InternalInconsistency,
    NonPhysicalError,
    StepTooLarge,
    TruncationBreach,
    UnsupportedInertiaError,
)
from .model import (
    CollectiveMomentum,
    DerivedGeometry,
    GearConfig,
    GridSpec,
    PotentialSpec,
    allowed_relative_grid,
    angular_momentum_split,
    bloch_label,
    collective_to_momenta,
    derive_geometry,
    is_physical_mu_c,
    momenta_to_collective,
)
from .relative import (
    BandedHamiltonian,
    BandStructure,
    EigenSystem,
    RotorState,
    band_structure,
    build_hamiltonian,
    eigendecompose,
    eigensystem_for,
    ground_energy,
    ground_state,
)
from .dynamics import (
    KickProtocol,
    KickShift,
    Observables,
    TimeSeries,
    TransmissionResult,
    apply_kick,
    eigen_occupations,
    evolve,
    evolved_states,
    kick_shift,
    long_time_average,
    multi_kick,
    observables,
    revival_phase_check,
    revival_phase_defect,
    run_protocol,
    time_series,
    transmission_ratio,
    windowed_average_L2,
)
from .ergotropy import (
    ErgotropyReport,
    MomentumDistribution,
    ergotropy,
    ergotropy_time_series,
    passive_state,
    reduced_gear2,
)
from .classical import (
    ClassicalState,
    ClassicalTransmissionResult,
    Trajectory,
    classical_kick,
    classical_transmission,
    interlock_threshold,
    mean_relative_momentum,
    simulate_relative,
)
from .oracle import (
    LatticeState,
    OracleSeries,
    build_full_hamiltonian,
    oracle_apply_kick,
    oracle_ground_state,
    oracle_observables,
    oracle_run,
)

__version__ = "0.1.0"
