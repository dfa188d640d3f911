//! Infimal convolutions on small grids.
//!
//! The library computes `(f ⊕ φ)(x) = inf_w f(w) + φ(w − x)` for
//! extended-real functions sampled on uniform 1D/2D grids, together with
//! Moreau envelopes, Minkowski gauges, minimal time and distance functions,
//! projection sets and subdifferentials, and a harness that checks the
//! classical identities relating them.

pub mod envelope;
pub mod error;
pub mod extreal;
pub mod funcspec;
pub mod gauge;
pub mod grid;
pub mod harness;
pub mod seed;
pub mod subdiff;
pub mod vecset;

pub use envelope::{
    distance_fn, min_time, moreau_fast, ArgminSet, ConvCase, FSource, WellPosednessReport,
};
pub use error::{Error, Result};
pub use extreal::ExtReal;
pub use funcspec::{FuncSpec, NormKind, SetSpec};
pub use gauge::GaugeSet;
pub use grid::{Axis, Grid, GridFn, IndexBox};
pub use harness::{builtin_corpus, run_suite, CheckCase, CheckId, CheckReport, CheckSelector};
pub use subdiff::{Certificate, DiffProbe, Transfer, Verdict};
pub use vecset::VecSet;
