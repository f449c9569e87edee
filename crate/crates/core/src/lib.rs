//! Linear-quantized precoding for massive-MIMO downlinks.
//!
//! Exact Monte Carlo of `y = ηHq(Ps) + n`, asymptotic SINR/SEP over the
//! Marchenko–Pastur law, the optimal regularized-ZF design for a given DAC
//! quantizer, and a Householder-based equivalent-model sampler.

pub mod cli;
pub mod error;
pub mod model;
pub mod mp;
pub mod optimizer;
pub mod quadrature;
pub mod quantizer;
pub mod randmat;
pub mod rng;
pub mod simulator;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use model::{Constellation, ConstellationKind, SystemConfig, make_constellation};
pub use mp::{AsymptoticReport, MpDistribution, ShapingFunction, asymptotic_sep, asymptotic_sinr, exact_sep, qce_closed_forms};
pub use optimizer::{OptimalDesign, optimal_design, optimality_audit, optimize_alpha};
pub use quantizer::{Quantizer, QuantizerMoments, moments, phi};
pub use simulator::{EtaPolicy, MonteCarloOptions, MonteCarloReport, equivalence_test, simulate_ser};
pub use num_complex::Complex64;
