//! Local solubility statistics for families of projective hypersurfaces
//! `f_a(x) = <a, ν_{d,n}(x)> = 0` whose coefficient vectors lie on a thin set
//! `P(a) = 0`.
//!
//! The crate is organised bottom-up:
//!
//! - [`forms`]: Veronese basis, exact evaluation and gradients.
//! - [`combinatorics`]: the constants `C_{n,d}(d1,d2)`, regime thresholds and
//!   quadratic reducibility.
//! - [`padic`]: three-valued ℤ_p solubility with Hensel and exhaustion
//!   certificates.
//! - [`real`]: real solubility with exact insolubility certificates.
//! - [`thin`]: enumeration and counting of integer points on `P(a) = 0`.
//! - [`densities`]: local densities σ_p, σ_∞ and the product constant c_P.
//! - [`census`]: proportions of locally soluble members, the quantity
//!   `d(U, A; P)` and the positivity probe.

pub mod arith;
pub mod census;
pub mod combinatorics;
pub mod densities;
pub mod error;
pub mod forms;
pub mod gram;
pub mod padic;
pub mod poly;
pub mod real;
pub mod thin;

pub use error::{Error, Result};
