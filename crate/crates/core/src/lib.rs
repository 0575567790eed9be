//! Simulation of a learning-based eavesdropper against symbol-level
//! precoded multi-user MISO downlinks.
//!
//! The pipeline is: Rayleigh channels ([`channel`]), convolutionally coded
//! QPSK frames ([`fec`], [`modem`]), per-slot precoders solved as convex
//! programs ([`precoder`], [`solver`]), a logistic-regression attacker that
//! learns the symbol of one user from the received pilots
//! ([`eavesdropper`]), and a Monte-Carlo harness that sweeps scenarios and
//! writes CSV/SVG output ([`harness`]).

pub mod channel;
pub mod eavesdropper;
pub mod error;
pub mod fec;
pub mod harness;
pub mod modem;
pub mod numerics;
pub mod par;
pub mod precoder;
pub mod solver;

pub use error::{Error, Result};
