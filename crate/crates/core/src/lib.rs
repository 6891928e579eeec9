pub mod coherent;
pub mod engine;
pub mod error;
pub mod homodyne;
pub mod inequalities;
pub mod logamp;
pub mod loss;
pub mod optimize;
pub mod rotations;
pub mod sweep;
