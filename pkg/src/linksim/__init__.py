"""linksim: classical simulator of spin-1/2 U(1) quantum link and
quantum dimer models on small superconducting plaquette circuits.

Compiles circuit parameters to effective couplings, builds microscopic
and gauge-invariant Hamiltonians on plaquette lattices, and computes
spectra, driven-dissipative steady states, real-time and adiabatic
dynamics, disorder ensembles and electric-flux observables.
"""

__version__ = "0.1.0"

from .lattice import (                                    # noqa: F401
    Lattice, LatticeError, build_custom, build_plaquette_chain,
    build_cross, build_grid, chain_string_charges, cross_pair_charges,
    flux_sign, validate_charges,
)
from .hilbert import (                                    # noqa: F401
    CapacityError, SectorBasis, SparseOperator, basis_vector, embed_state,
    enumerate_sector, full_basis, gauss_generator, op_identity, op_sminus,
    op_splus, op_sz, op_total_sz, project_state, state_from_bits,
)
from .circuit import (                                    # noqa: F401
    CircuitSpec, CouplerSpec, ModelParams, TransmonSpec, compile_at_flux,
    derive_coupling, derive_effective, derive_rk_couplings, derive_transmon,
    find_v_zero_crossing, tuning_curve,
)
from .hamiltonian import (                                # noqa: F401
    build_effective, build_microscopic, build_rk_effective,
    build_rk_microscopic, build_rotating_frame,
    effective_sector_hamiltonian, gauge_commutator_norm,
)
from .dynamics import (                                   # noqa: F401
    DecayModel, DynamicsError, EvolutionResult, Schedule, adiabatic_sweep,
    eigenspectrum, evolve_lindblad, evolve_trajectories, evolve_unitary,
    ground_state, spectroscopy_scan, steady_state,
)
from .observables import (                                # noqa: F401
    FluxMap, error_probability, excited_population, fidelity, flux_map,
    gauss_violation, magnetization, pair_correlation,
)
from .ensemble import DisorderSpec, run_disorder_sweep    # noqa: F401
