//! Age of information for wireless-powered direct, decode-and-forward and
//! amplify-and-forward links: closed-form analysis and a slot-level simulator.

pub mod analysis;
pub mod charging;
pub mod error;
pub mod experiment;
pub mod gof;
pub mod params;
pub mod rng;
pub mod selftest;
pub mod sim;
pub mod specfun;

pub use analysis::{BoundKind, CycleMoments, PaoiResult, Scheme, SpecialCaseSpec};
pub use charging::{AfWaitDist, ChargeSampler, ChargeTimeDist};
pub use error::{ModelError, Result};
pub use params::{DerivedParams, Overrides, SystemParams};
pub use specfun::Tolerance;
