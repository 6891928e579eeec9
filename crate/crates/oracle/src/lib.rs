//! Independent brute-force checks for the `ecs-leggett` engine.
//!
//! Two routes are provided, both restricted to small amplitudes:
//! a truncated number-basis simulation ([`fock`]) and a characteristic
//! function to Wigner function to marginal pipeline on FFT grids ([`wigner`]).

pub mod fock;
pub mod quadrature;
pub mod regression;
pub mod wigner;
