//! General-purpose numerical building blocks.

pub mod linalg;
pub mod ode;
pub mod quad;
pub mod roots;
