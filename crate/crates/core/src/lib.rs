//! Exact-arithmetic laboratory for multiple ergodic averages of
//! F_p^omega-actions on finite truncations F_p^N: Gowers-Host-Kra norms,
//! Hall-Petresco integrals, correlation sequences on finite Weyl systems,
//! limit-formula and Khintchine-type recurrence verification, and the
//! generic counterexample constructions.

pub mod averages;
pub mod counterex;
pub mod cyclo;
pub mod error;
pub mod fp;
pub mod hallpetresco;
pub mod khintchine;
pub mod laurent;
pub mod weyl;

pub use error::{Error, Result};
