//! Polynomial jump-diffusions on the unit interval and the unit simplex.
//!
//! The crate applies Lévy-type generators to polynomials symbolically, computes
//! exact moments through matrix exponentials, validates and classifies
//! characteristic triplets, simulates paths and prices the two applications
//! (recovery-rate bonds and a jump-extended volatility-stabilized market).

pub mod polyalg;
pub mod specmodel;
pub mod generator;
pub mod moments;
pub mod simulate;
pub mod apps;
pub mod specfile;
