//! Program search over the Karel DSL with options harvested from existing
//! programs.

pub mod dsl;
pub mod exec;
pub mod interp;
pub mod options;
pub mod search;
pub mod seed;
pub mod tasks;
pub mod world;
