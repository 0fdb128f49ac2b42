//! Saddle-point asymptotics for convolution powers of unbounded nondecreasing
//! functions on `[0, ∞)`.
//!
//! A nondecreasing right-continuous `V` with `V(x) = 0` for `x < 0` and
//! `V(x) → ∞` induces a locally finite measure on the half-line.  Its `j`-fold
//! Lebesgue–Stieltjes convolution `V^{*(j)}(t)` grows superexponentially in
//! `j` for fixed ratios `t/j`, which makes direct evaluation useless beyond
//! tiny orders.  This crate computes `V^{*(j)}(t)` two ways:
//!
//! * **saddle-point estimates** — first-order formulas driven by the
//!   log-Laplace transform `λ(s) = log V̂(s)` and the saddle `κ(j, t)`
//!   solving `-λ'(κ) = t/j` (module [`asymptotics`]), together with numeric
//!   diagnostics for the hypotheses behind those formulas (module
//!   [`conditions`]);
//! * **grid oracles** — exponentially tilted discrete convolutions that give
//!   reference values on a step grid, plus closed forms for the families
//!   that admit them (module [`oracle`]).
//!
//! Supporting layers: measure specifications and discretization
//! ([`measure`]), transform evaluation with derivatives ([`laplace`]),
//! saddle/threshold solvers ([`saddle`]), series coefficients for the
//! polynomial-regime expansion ([`asymptotics`]), and renewal-function
//! helpers that specialize the expansion to probability inter-arrival laws
//! ([`renewal`]).  The `convpow` binary wraps all of it behind sweep
//! subcommands; see the README for the command-line contract.
//!
//! Everything numeric that can overflow `f64` is carried on the log scale
//! ([`lognum::LogNumber`]), including grid masses and convolution tables, so
//! quantities like `V̂(κ)^j e^{tκ}` with exponents in the thousands stay
//! representable.

// `!(x > 0.0)` is the NaN-rejecting spelling of a domain check: it refuses
// zero, negatives, and NaN in one comparison, which `x <= 0.0` does not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod conditions;
pub mod laplace;
pub mod lognum;
pub mod measure;
pub mod oracle;
pub mod quad;
pub mod renewal;
pub mod saddle;
pub mod series;

pub mod cli;

pub use lognum::LogNumber;
pub use measure::MeasureSpec;
