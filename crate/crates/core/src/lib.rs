//! Two-time generalized measurements with Gaussian pointers, correlation
//! functions across the weak-to-projective range, and a macrorealism test
//! built on the ideally-weak-measurement criterion and no-signaling in time.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlation;
pub mod error;
pub mod format;
pub mod grid;
pub mod hamiltonian;
pub mod linalg;
pub mod measurement;
pub mod observable;
pub mod propagator;
pub mod protocol;
pub mod spectrum;
pub mod state;
pub mod systems;
pub mod truncation;
pub mod two_time;

pub use correlation::{
    backaction_first_order, correlation_brute_force, correlation_closed_form,
    correlation_collective, correlation_csv, correlation_iwm_limit, correlation_many_body,
    correlation_projective_limit, effective_dimension, effective_dimension_many_body,
    intensive_variance, CorrelationResult, Coupling, EffectiveDimension, ManyBodyDynamics,
    ManyBodySpec, Method, TraceEngine,
};
pub use error::{Error, Result};
pub use format::fmt_f64;
pub use grid::{build_grid, SpatialGrid, UniformGrid};
pub use hamiltonian::{
    build_double_well_hamiltonian, build_harmonic_hamiltonian, build_position_observable,
    DoubleWell, KineticScheme,
};
pub use linalg::{CMat, C64};
pub use measurement::{
    joint_distribution, kraus_amplitude, pointer_distribution, post_measurement_state,
    two_time_state, unmeasured_distribution, JointDistribution, MeasurementModel,
    PointerDistribution,
};
pub use observable::{diagonalize, HermitianObservable, Parity, Spectrum};
pub use propagator::{evolve, heisenberg_matrix_elements, Propagator, SignConvention};
pub use protocol::{
    delta_statistic, iwm_scan, nsit_test, run_protocol, DeltaTable, IwmScan, NsitResult,
    NsitVerdict, ProtocolConfig, ProtocolReport, ProtocolSystem, SystemFixture, Verdict,
};
pub use spectrum::{autocorrelation_spectrum, SpectrumReport, Window};
pub use state::{Basis, QuantumState};
pub use systems::OscillatorSystem;
pub use truncation::{TruncationReport, CORRELATION_TAIL, DISTRIBUTION_TAIL};
pub use two_time::TwoTimeSystem;
