//! Sumsets and their structure in finite abelian groups.

mod bits;
pub mod conv;
pub mod error;
pub mod group;
pub mod gset;
pub mod rational;
pub mod search;
pub mod sets;
pub mod small;
pub mod structure;
pub mod verify;
mod wire;

pub use error::{Result, SumsetError};
pub use group::{Element, GroupSpec, Subgroup};
pub use gset::GSet;
pub use rational::Rational;
