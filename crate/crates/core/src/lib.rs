//! Time-direction-aware analysis of linear time-invariant systems.
//!
//! Every quantity here comes in a forward-time and a backward-time flavour:
//! stability (f-/b-stability), quadratic regulator cost, nu-gap distance and
//! optimal robustness margin. The backward flavour of each is the forward one
//! applied to the time-conjugated system `(A, B, C, D) -> (-A, -B, C, D)`,
//! whose transfer function is `P(-s)`.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod care;
pub mod delay;
pub mod error;
pub mod gap;
pub mod linalg;
pub mod lqr;
pub mod poly;
pub mod robust;
pub mod statespace;

pub use error::{Error, Result};

/// Which way the time arrow points for a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}
