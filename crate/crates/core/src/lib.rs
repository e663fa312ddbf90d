//! Finite tools for `k`-uniform step hypergraphons: homomorphism densities,
//! the pseudometrics `δ`, `δ_w` and `δ_1`, the discrete group of
//! structure-preserving maps and a terminating canonical selector.

pub mod caps;
pub mod density;
pub mod error;
pub mod hypergraph;
pub mod hypergraphon;
pub mod metrics;
pub mod perm;
pub mod rational;
pub mod sampler;
pub mod selector;
pub mod subsets;
pub mod symmetry;

pub use caps::Caps;
pub use density::{density_exact, density_mc, density_vector, DensityVector, McEstimate};
pub use error::{Error, Result};
pub use hypergraph::{density_finite, enumerate_hypergraphs, hom_count, FiniteHypergraph};
pub use hypergraphon::{distance_d1, AnyStep, Grid, LowerStepFunction, StepHypergraphon};
pub use metrics::{
    delta1_bracket, delta1_upper, delta_truncated, delta_w_lower, Delta1Search, DeltaOneBracket, Strategy,
    TruncatedDelta,
};
pub use rational::Rational;
pub use symmetry::{enumerate_group, DiscreteGroup, GroupEnumeration, StructureMap};
