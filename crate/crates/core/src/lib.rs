pub mod error;
pub mod bounds;
pub mod exact;
pub mod harness;
pub mod iteration;
pub mod modulus;
pub mod space;

pub use error::{Error, Result};
