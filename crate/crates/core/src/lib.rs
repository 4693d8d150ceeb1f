//! Auditing rankings for groups that are under-represented in their top-k.
//!
//! A group is a [`Pattern`]: a conjunction of categorical attribute values.
//! For every k in a range, the detectors report the most general patterns of
//! at least `τ_s` rows whose count among the top-k falls below either a global
//! lower bound `L_k` or a proportional bound `α · s_D(p) · k / |D|`.
//!
//! ```
//! use rankbias::{fixtures::students, global_bounds, BoundsSpec, LowerSchedule};
//!
//! let (data, ranking) = students();
//! let spec = BoundsSpec::global(4, 4, 5, LowerSchedule::flat(2, 4, 5));
//! let result = global_bounds(&data, &ranking, &spec).unwrap();
//! let address_u = data.pattern(&[("Address", "U")]).unwrap();
//! assert!(result.per_k[&4].contains(&address_u));
//! assert!(!result.per_k[&5].contains(&address_u));
//! ```
//!
//! [`iter_td`] runs an independent search per k; [`global_bounds`] and
//! [`prop_bounds`] carry state from one k to the next and return the same sets.
//! [`oracle::oracle_detect`] checks them by exhaustive enumeration, and
//! [`explain`] attributes a detected group's ranking to its attributes.

pub mod bounds;
pub mod data;
pub mod error;
pub mod explain;
pub mod fixtures;
pub mod generators;
pub mod global;
pub mod ingest;
pub mod lattice;
pub mod oracle;
pub mod prop;
pub mod report;
pub mod search;

pub use bounds::{validate_bounds, Alpha, BoundMode, BoundsSpec, LowerSchedule};
pub use data::{
    contains, ranking_from_rank_column, ranking_from_scores, Attribute, Dataset, DatasetBuilder, Direction, Pattern,
    Ranking, RankingSource, Schema,
};
pub use error::{BoundsError, Error, IngestError, Result};
pub use global::{global_bounds, GlobalSearch};
pub use prop::{k_tilde, prop_bounds, KSchedule, PropSearch};
pub use search::{iter_td, top_down_search, update, ResultSet, SearchOutcome, StepStats};

// Compiles and runs the book's snippets with `cargo test --doc`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/patterns.md")]
    mod patterns {}
    #[doc = include_str!("../../../book/src/global.md")]
    mod global {}
    #[doc = include_str!("../../../book/src/proportional.md")]
    mod proportional {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/explain.md")]
    mod explain {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
