pub mod channel;
pub mod config;
pub mod error;
pub mod hamiltonians;
pub mod lindblad;
pub mod linalg;
pub mod qpe;
pub mod superop;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
