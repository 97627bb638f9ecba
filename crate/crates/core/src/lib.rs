//! Edge counts of random geometric graphs over stationary Poisson point
//! processes: simulation, closed-form moments, and Poisson/normal
//! approximation bounds.

pub mod analytics;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod graph;
pub mod quadrature;
pub mod sampling;
pub mod special;

pub use error::{Error, Result};
pub use geometry::{Dimension, LogValue};
pub use sampling::{ModelParams, PointConfiguration, RandomStream, Window};
