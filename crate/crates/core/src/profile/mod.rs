//! The four profiling aspects.

pub mod content;
pub mod propagation;
pub mod social;
pub mod user;
