//! Special functions, quadrature, Hadamard matrices and random streams.

mod hadamard;
mod quadrature;
mod rng;
mod special;

pub use hadamard::{sylvester_hadamard, HadamardMatrix, MAX_ORDER_LOG2};
pub use quadrature::{integrate, QuadratureResult};
pub use rng::RngStreamSpec;
pub use special::{q_func, q_inv};

pub(crate) use special::q;
