//! Certification of collective postselection strategies for genuine
//! multipartite nonlocality tests, plus an exact simulator of the
//! three-photon Yurke-Stoler interferometer and Svetlichny tooling.

pub mod causal;
pub mod dsl;
pub mod inequality;
pub mod postselection;
pub mod ys;
