//! Max-relative entropy between Gaussian states, its Gaussian-measured
//! counterpart, and the optimal Gaussian measurements that attain it.

pub mod certify;
pub mod designer;
pub mod divergence;
pub mod error;
pub mod fock;
pub mod io;
pub mod report;
pub mod scan;
pub mod symplectic;
pub mod tolerance;

mod linalg;

pub use error::{Error, Result};
pub use tolerance::Tolerances;
