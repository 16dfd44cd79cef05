//! Safety verification of concurrent transition systems by symbolic
//! depth-first search, combining partial order reduction with state
//! interpolation.
//!
//! The crate is organised bottom-up:
//!
//! - [`formula`]: linear integer arithmetic terms, formulas and an exact
//!   decision procedure.
//! - [`model`]: programs, symbolic states and the transition relation.
//! - [`frontend`]: the `.ctp` input language and benchmark generators.
//! - [`por`]: independence, semi-commutativity facts and persistent sets.
//! - [`explorer`]: the search engines and their reports.
//! - [`oracle`]: brute-force enumeration used to validate the pruning.

pub mod explorer;
pub mod formula;
pub mod frontend;
pub mod model;
pub mod oracle;
pub mod por;
mod syntax;

pub use syntax::ParseError;

/// The guide's code samples, compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/formulas.md")]
    mod formulas {}
    #[doc = include_str!("../../../book/src/input-language.md")]
    mod input_language {}
    #[doc = include_str!("../../../book/src/symbolic-execution.md")]
    mod symbolic_execution {}
    #[doc = include_str!("../../../book/src/state-interpolation.md")]
    mod state_interpolation {}
    #[doc = include_str!("../../../book/src/partial-order-reduction.md")]
    mod partial_order_reduction {}
    #[doc = include_str!("../../../book/src/synergy.md")]
    mod synergy {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
