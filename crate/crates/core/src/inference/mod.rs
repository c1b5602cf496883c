//! Most likely statistics of a measurement performed between the endpoints.
//!
//! Everything here acts on a [`SplitChannel`](crate::experiment::SplitChannel):
//! the pre-segment `K_l(τ,0)`, the intermediate instrument and the post-segment
//! `K_{l'}(1,τ)`. The intermediate time is a fixed experiment parameter, so
//! sweeps over `τ` rebuild the experiment (and its bridge) per grid point.

mod generalized;
mod projective;
mod quadrature;
mod weak;

pub use generalized::{
    generalized_distribution, weak_outcome_density, GeneralizedDistribution, WeakOutcomeDensity,
};
pub use projective::{
    conditional_outcome_prob, conditional_outcome_prob_assembled, intermediate_state_and_split,
    most_likely_projective_distribution, projective_sweep, reversed_conditional_outcome_prob,
    reversed_projective_distribution, IntermediateDistribution, LegOperator, ReversedDistribution,
    SplitBridge, SweepRow,
};
pub use quadrature::{Quadrature, DEFAULT_NODES};
pub use weak::{
    finite_delta_weak_average, most_likely_weak_value, weak_normalization_defect, weak_operator,
    weak_value, weak_value_table, FiniteDeltaAverage, WeakValueResult,
};

use crate::error::{Error, Result};
use crate::experiment::{ExperimentSpec, SplitChannel};
use crate::qcore::{CMat, Observable};

/// Operators of the two evolution segments around the intermediate measurement.
#[derive(Debug, Clone)]
pub(crate) struct Segments<'a> {
    pub split: &'a SplitChannel,
    pub pre: Vec<CMat>,
    pub post: Vec<CMat>,
}

pub(crate) fn segments(spec: &ExperimentSpec) -> Result<Segments<'_>> {
    let split = spec.split()?;
    Ok(Segments {
        split,
        pre: split.pre_channel()?.into_ops(),
        post: split.post_channel()?.into_ops(),
    })
}

pub(crate) fn observable_of(split: &SplitChannel) -> Result<&Observable> {
    split
        .intermediate
        .observable()
        .ok_or_else(|| Error::SpecInvalid("the intermediate measurement has no observable".into()))
}

pub(crate) fn floor_of(values: &[f64]) -> f64 {
    crate::tolerance::FLOOR_REL * values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
