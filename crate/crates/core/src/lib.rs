//! Semiclassical recurrence laboratory for a quantum system near a
//! nonlinear resonance of two coupled degrees of freedom.
//!
//! The crate reduces a coupled system to a single-resonance record
//! ([`ResonanceParams`]), computes its quasi-energies through Mathieu
//! characteristic values of fractional order, predicts the classical period
//! and quantum revival time together with their coupling-induced shifts, and
//! checks those predictions against exact wave-packet propagation.

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod fmt;
pub mod mathieu;
pub mod resonance;
pub mod spectrum;
pub mod timescales;
pub mod tridiag;

pub use analysis::{detect_peaks, extract_times, Peak, RecurrenceReport};
pub use config::RunConfig;
pub use dynamics::{
    build_hamiltonian_matrix, evolve, level_spacing_report, resonance_center_mode, AutocorrTrace,
    CenterMode, LevelSpacingReport, Propagator, WavePacketSpec,
};
pub use error::{Error, Result};
pub use mathieu::{characteristic_value, characteristic_value_oracle, MathieuValue};
pub use resonance::{
    coupling_fourier_amplitude, find_resonances, reduce_to_resonance, AngleGrid, Coupling,
    CurveKind, FrequencyCurve, ResonanceParams, ResonanceSearch,
};
pub use spectrum::{build_spectrum, quasienergy, Spectrum, SpectrumEntry};
pub use timescales::{case_relations, closed_form_times, numeric_times, Regime, TimeScales};
