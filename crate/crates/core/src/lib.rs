//! Static derivation of parametric I/O lower bounds for affine loop
//! programs, with an exact pebble-game oracle for cross-checking on small
//! instances.

pub mod asymbound;
pub mod cli;
pub mod dfgraph;
pub mod paramlp;
pub mod pathfind;
pub mod pebblelab;
pub mod polyset;

pub use cli::run;
