//! Fault-detecting modular exponentiation.
//!
//! Two rounds of right-to-left exponentiation run on differently encoded
//! inputs (`x + k·N`, `y + k·φ(N)`). Encoded inputs reduce to the same
//! canonical values, so a fault-free pair of rounds agrees while a
//! disturbed operand almost always makes them disagree. Scheme 1 recomputes
//! the whole exponentiation; Scheme 2 recomputes only the low `l` exponent
//! bits and cross-checks the Hamming weight of the reduced exponent.
//!
//! Besides the protection schemes the crate ships the fault models used to
//! evaluate them, a Monte-Carlo coverage campaign, a wall-clock overhead
//! benchmark and two protocol demos (Diffie-Hellman and textbook RSA).

pub mod bench;
pub mod campaign;
pub mod demos;
pub mod encoding;
mod error;
pub mod fault;
pub mod numeric;
pub mod primes;
pub mod protection;
pub mod rng;

pub use error::{Error, Result};
pub use numeric::{
    modexp_instrumented, modexp_partial, modexp_plain, popcount, ExpOutput, ModulusContext, Nat,
};
pub use rng::Rng;
