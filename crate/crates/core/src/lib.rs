//! Self-organized kinetic (SOK) and hydrodynamic (SOH) solvers for
//! Vicsek-type alignment dynamics on the circle of directions.

pub mod collision;
pub mod equilibria;
pub mod error;
pub mod expansion;
pub mod gci;
pub mod hydro;
pub mod kinetic;
pub mod particles;
pub mod quadrature;
pub mod spectral;
pub mod sphere;

pub use collision::{apply_q, dissipation, CollisionScheme, LinearizedOperator};
pub use equilibria::{equilibrium_field, order_parameter_c1, vmf_density, Coefficients, VmfParams};
pub use error::{Error, Result};
pub use expansion::{
    apriori_inequality_monitor, energy_functionals, expansion_slice, extract_remainder, limit_study, solve_f1, EnergyReport,
    ExpansionBundle, ExpansionContext, LimitStudyConfig,
};
pub use gci::{coefficient_c2, coefficient_c3, solve_gci_ode, GciSolution};
pub use hydro::{run_soh, soh_rhs, soh_step, HydroConfig, MacroState};
pub use kinetic::{compute_macros, run_sok, sok_step, KineticField, KineticParams, Mode, SokStepperConfig};
pub use particles::{empirical_density, swarm_step, Swarm, SwarmParams};
pub use spectral::SpectralFilter;
pub use sphere::{AngularGrid, ThetaGrid, ThetaRule, TorusGrid};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
