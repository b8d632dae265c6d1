//! Matrix power function key agreement.
//!
//! Two protocols share one arithmetic core:
//!
//! * [`rmpf`]: rectangular public matrices, a single exchange of one token
//!   matrix per side.
//! * [`rdmpf`]: square public matrices with rank-deficient exponent bases,
//!   several rounds carried in one exchange and hashed into a 512-bit key.
//!
//! [`kem`] wraps the second protocol as a key-encapsulation exchange, and
//! [`session`] drives either one over a [`transport::Channel`].

pub mod action;
pub mod bench;
pub mod encoding;
pub mod error;
pub mod field;
pub mod kem;
pub mod matrix;
pub mod params;
pub mod rdmpf;
pub mod rmpf;
pub mod sample;
pub mod session;
pub mod token;
pub mod transport;
pub mod vectors;
pub mod wire;

pub use action::{mpf_left, mpf_right};
pub use error::{Error, ErrorClass, Result};
pub use field::FieldParams;
pub use matrix::Matrix;
pub use params::{ParamSet, Setup};
pub use rdmpf::{RdmpfParty, RdmpfSetup, Role, SessionKey};
pub use rmpf::{RmpfPrivate, RmpfSetup};
pub use token::Token;
