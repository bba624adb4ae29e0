//! Hierarchical Schrödinger equations of motion (HSEOM) for a finite-dimensional
//! system coupled linearly to a harmonic bath.
//!
//! The bath correlation function is expanded in Bessel functions of the first
//! kind, `α(t) = Σ_k c_k J_k(Ωt)`, which closes a hierarchy of auxiliary wave
//! functions under time differentiation. A stack holding the reduced wave
//! function and all auxiliary wave functions is propagated forward along the
//! first branch of a closed time contour and backward along the second; operator
//! insertions along the way yield two-time correlation functions and reduced
//! density matrix elements.
//!
//! Units: `ħ = 1` throughout ([`HBAR`]), so energies and angular frequencies are
//! interchangeable and parameters quoted as `ħζ` are passed as `ζ`.

pub mod bath;
pub mod dynamics;
pub mod error;
pub mod hierarchy;
pub mod models;
pub mod observables;
pub mod oracles;

pub use num_complex::Complex64 as C64;

pub use crate::error::{HseomError, Result};

/// Version of this library.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Reduced Planck constant in the library's unit system.
pub const HBAR: f64 = 1.0;

/// Imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);

/// Configure the size of the global worker pool used by the hierarchy sweeps.
///
/// Has no effect once the pool has been initialized (by an earlier call or by
/// the first parallel sweep).
pub fn set_workers(workers: usize) -> bool {
    rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build_global().is_ok()
}
