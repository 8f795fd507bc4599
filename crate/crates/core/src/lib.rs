pub mod criteria;
pub mod error;
pub mod harness;
pub mod measures;
pub mod numerics;
pub mod operators;
pub mod spaces;
pub mod weights;
