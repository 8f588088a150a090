pub mod convergence;
pub mod efficiency;
pub mod film;
pub mod hysteresis;
pub mod manufactured;
pub mod profile;
pub mod stability;
