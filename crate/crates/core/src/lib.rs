pub mod bounds;
pub mod checks;
pub mod dephasing;
pub mod distribution;
pub mod error;
pub mod fock_oracle;
pub mod phase_encoding;
pub mod special_math;
pub mod thermal_loss;
