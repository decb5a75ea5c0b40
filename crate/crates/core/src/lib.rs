//! Normalized base-2 encoding of continuous inputs and the tooling to test
//! whether plain MLPs fed with it extrapolate periodic signals.
//!
//! The crate is `no_std` (with `alloc`). The `std` feature only enables
//! runtime CPU dispatch in the matrix kernels and wall-clock timing.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod encoding;
pub mod nn;
pub mod signals;
pub mod experiment;
pub mod analysis;
