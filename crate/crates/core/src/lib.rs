//! Forward and inverse algorithmic correspondence for distributive lattice
//! expansion logics.

pub mod signature;
pub mod syntax;
pub mod oracle;
pub mod classifier;
pub mod normalize;
pub mod trace;
pub mod alba;
pub mod kracht;
pub mod inverse;
pub mod corpus;
pub mod cli;
pub mod schemata;
