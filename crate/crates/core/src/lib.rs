//! Numerical decision procedures for composition operators `C_φ: f ↦ f∘φ`
//! between weighted spaces of smooth functions on the real line.
//!
//! The crate is organised bottom-up:
//!
//! - [`expr`]: expressions in `x`, parsing, evaluation, symbolic derivatives
//! - [`calculus`]: partitions, Faà di Bruno coefficients, Gorny orders
//! - [`weights`]: weight systems and the sup-growth classifier
//! - [`spaces`]: weighted seminorms and space membership
//! - [`criteria`]: the characterisation checks for `C_φ`
//! - [`empirical`]: bump functions, inequality harnesses, crosschecks
//! - [`cli`]: the `compop` command-line front end

pub mod calculus;
pub mod cli;
pub mod criteria;
pub mod empirical;
pub mod expr;
pub mod spaces;
pub mod weights;

pub use expr::{parse, Expr};
