pub mod bench;
pub mod digital_net;
pub mod error;
pub mod fooling;
pub mod gauss_hermite;
pub mod integrands;
pub mod lattice;
pub mod sparse_grid;
pub mod sum;
pub mod transforms;

pub use error::{Error, Result};
