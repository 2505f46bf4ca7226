//! Chirp detection and parameter estimation with mapping-information
//! weighting.
//!
//! A chirp traces a line in a time-frequency plane and an impulse in the
//! Hough `(ρ, θ)` plane. The [`mi`] module weights each plane using
//! statistics of the values the Hough kernel maps into every cell, and
//! alternates between the two planes for a chosen number of iterations
//! (the *order*). [`detector`] turns the resulting parameter plane into a
//! detection decision and chirp estimates; [`harness`] runs the Monte Carlo
//! benchmark that measures detection probability, output SNR, confidence
//! and estimation risk across SNR and order.

pub mod detector;
pub mod error;
pub mod harness;
pub mod hough;
pub mod mi;
pub mod pipeline;
pub mod rng;
pub mod signal;
pub mod tfr;

pub use error::{Error, Result};
