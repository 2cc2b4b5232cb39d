pub mod calibration;
pub mod envelopes;
pub mod equations;
pub mod error;
pub mod exec;
pub mod fft;
pub mod integrator;
pub mod modified_energy;
pub mod random;
pub mod resonance;
pub mod spacetime;
pub mod spectral;
pub mod strichartz;
