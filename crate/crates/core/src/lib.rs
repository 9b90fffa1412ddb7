//! Energy-efficiency maximization for uplink hybrid NOMA-OMA systems.
//!
//! Users are grouped into clusters, one cluster per resource block (RB).
//! Inside a cluster the users share the RB with NOMA and are separated at the
//! base station by successive interference cancellation; clusters are
//! orthogonal to each other. The crate provides:
//!
//! - [`channel`]: scenario generation (placement, path loss, Rayleigh fading)
//!   and unit conversions.
//! - [`cluster`]: per-cluster feasibility, rates, and EE-optimal power
//!   allocation by Dinkelbach iterations over a coordinate-update inner solver.
//! - [`two_user`]: closed-form phase solutions for two-user clusters under
//!   both decoding orders.
//! - [`oma`]: the orthogonal baseline for a cluster.
//! - [`matching`]: user-to-RB association (greedy initialization plus swap
//!   matching) and the baseline association schemes.
//! - [`oracle`]: brute-force references used for verification.

pub mod channel;
pub mod cluster;
mod error;
pub mod matching;
pub mod oma;
pub mod oracle;
pub mod two_user;

pub use error::{Error, Result};
