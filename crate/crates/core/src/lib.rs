//! Module-LWE key exchange over `Z_q[X]/(X^256+1)` with reconciliation on the
//! E8 lattice, together with a failure-probability engine and a lattice
//! attack cost estimator.
//!
//! The protocol lives in [`kem`], the reconciliation layer in [`reconcile`]
//! and [`e8`], and byte formats in [`codec`]. [`analysis`] bounds the
//! per-exchange failure probability and [`estimator`] prices primal and dual
//! BKZ attacks in the core-SVP model.

pub mod analysis;
pub mod codec;
pub mod e8;
pub mod error;
pub mod estimator;
pub mod kem;
pub mod params;
pub mod reconcile;
pub mod ring;
pub mod sampler;

pub use error::{Error, Result};
pub use kem::{decaps, encaps, gen, Ciphertext, PublicKey, ServerState};
pub use params::{Params, Preset};
pub use reconcile::{HelpHint, SharedKey};
