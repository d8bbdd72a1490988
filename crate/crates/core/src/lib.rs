//! Exact computations for the probabilistic serial (PS) assignment rule.
//!
//! The crate runs PS with exact rational arithmetic, compares allocations
//! under the downward-lexicographic and expected-utility relations, computes
//! best responses, and finds pure Nash equilibria of the induced reporting
//! game by exhaustive search. Searches are exponential (`m!` reports per
//! agent, `(m!)^n` profiles) and are bounded by [`Bounds`].
//!
//! ```
//! use pslab::{run_ps, Instance, Rational};
//!
//! let inst = Instance::from_rankings(&[&[0, 1, 2], &[1, 0, 2], &[1, 2, 0]]).unwrap();
//! let (p, _) = run_ps(&inst);
//! assert_eq!(*p.get(0, 0), Rational::new(3, 4));
//! ```
//!
//! The `book/` directory at the repository root explains the model and
//! algorithms; its code snippets are compiled as doc-tests of this crate.

pub mod bounds;
pub mod cultures;
pub mod equilibria;
pub mod error;
pub mod experiments;
pub mod model;
pub mod perm;
pub mod preflib;
pub mod ps;
pub mod rational;
pub mod relations;
pub mod rng;
pub mod selfcheck;
pub mod strategy;
pub mod threat;

pub use bounds::Bounds;
pub use equilibria::{compute_granularity, enumerate_pne, spne_construct, verify_pne, PneVerdict};
pub use error::{PsError, Result};
pub use model::{social_welfare, Assignment, Instance, InstanceFile, LinearOrder, UtilityProfile};
pub use ps::{run_ps, EatingTrace};
pub use rational::Rational;
pub use relations::{dl_compare, eu_compare, eu_value, Comparison, Relation, RelationKind};
pub use strategy::{
    best_response, dl_best_response, eu_best_response, replay_path, run_dynamics, MoverPolicy,
};
pub use threat::{check_threat_guarantees, threat_profile};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/eating.md")]
    mod eating {}
    #[doc = include_str!("../../../book/src/relations.md")]
    mod relations {}
    #[doc = include_str!("../../../book/src/best-responses.md")]
    mod best_responses {}
    #[doc = include_str!("../../../book/src/equilibria.md")]
    mod equilibria {}
    #[doc = include_str!("../../../book/src/threat.md")]
    mod threat {}
    #[doc = include_str!("../../../book/src/cultures.md")]
    mod cultures {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
