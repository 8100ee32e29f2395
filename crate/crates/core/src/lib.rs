pub mod attack;
pub mod discrete;
pub mod encoder;
pub mod io;
pub mod privacy;
pub mod rng;
pub mod tensor;
