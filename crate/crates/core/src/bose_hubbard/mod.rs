//! Force-tilted Bose-Hubbard chain: basis, symmetry sectors, propagators.

pub mod basis;
pub mod family;
pub mod floquet;
pub mod sector;

pub use basis::{build_fock_basis, build_fock_basis_capped, FockBasis, DEFAULT_BASIS_CAP};
pub use family::{
    build_floquet_family, build_hardwall_tilted, FloquetFamily, FloquetOptions, HardwallFamily,
    OperatorMode,
};
pub use floquet::{
    floquet_operator, floquet_operator_converged, hamiltonian_at_time, BhOperators, BhParams,
    ConvergenceOptions, FloquetBuild, Integrator,
};
pub use sector::{build_kappa_sector, SectorState, SymmetrySector};
