//! Subsymbolic constraints: per-channel Gaussian offsets quantifying an
//! assigned relation, and the two-action duration optimization that
//! synchronizes a containment-style pair.

use crate::apkm::{ActionPairKeypointModel, Channel};
use crate::mixture::GaussianComponent;
use crate::temporal::{
    classify_interval, signature_of, Action, AllenRelation, Hand, PointRelation, TimeInterval,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SsttcError {
    #[error("channel {channel} has no component with the sign required by {relation}")]
    NoSuitableComponent {
        relation: AllenRelation,
        channel: Channel,
    },
    #[error("planning requires an {0} constraint")]
    MissingChannel(Channel),
    #[error("relation {0} is not in the containment family supported by the planner")]
    UnsupportedRelation(AllenRelation),
    #[error("no positive durations close to the demonstrated ones satisfy the constraint")]
    InfeasibleDurations,
}

/// A Gaussian constraint on one keypoint difference of an action pair,
/// following the `first - second` sign convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ssttc {
    pub channel: Channel,
    pub mean: f64,
    #[serde(rename = "var")]
    pub variance: f64,
    pub weight: f64,
}

/// The minimal set of keypoint conditions that identifies `r` among the 13
/// relations, in channel order.
pub fn necessary_channels(r: AllenRelation) -> Vec<(Channel, PointRelation)> {
    use AllenRelation::*;
    use Channel::*;
    use PointRelation::{After as A, Before as B, Equals as E};
    match r {
        Before => vec![(Es, B)],
        Meets => vec![(Es, E)],
        Overlaps => vec![(Ss, B), (Es, A), (Ee, B)],
        Starts => vec![(Ss, E), (Ee, B)],
        During => vec![(Ss, A), (Ee, B)],
        Finishes => vec![(Ss, A), (Ee, E)],
        Equals => vec![(Ss, E), (Ee, E)],
        After => vec![(Se, A)],
        MetBy => vec![(Se, E)],
        OverlappedBy => vec![(Ss, A), (Se, B), (Ee, A)],
        StartedBy => vec![(Ss, E), (Ee, A)],
        Contains => vec![(Ss, B), (Ee, A)],
        FinishedBy => vec![(Ss, B), (Ee, E)],
    }
}

fn mean_is_suitable(mean: f64, required: PointRelation, epsilon: f64) -> bool {
    match required {
        PointRelation::Before => mean < -epsilon,
        PointRelation::Equals => mean.abs() <= epsilon,
        PointRelation::After => mean > epsilon,
    }
}

fn largest_suitable(
    apkm: &ActionPairKeypointModel,
    relation: AllenRelation,
    channel: Channel,
    required: PointRelation,
    epsilon: f64,
) -> Result<GaussianComponent, SsttcError> {
    apkm.mixture(channel)
        .components
        .iter()
        .filter(|c| mean_is_suitable(c.mean, required, epsilon))
        .max_by(|a, b| a.weight.total_cmp(&b.weight))
        .copied()
        .ok_or(SsttcError::NoSuitableComponent { relation, channel })
}

fn extract(
    apkm: &ActionPairKeypointModel,
    relation: AllenRelation,
    epsilon: f64,
    conditions: &[(Channel, PointRelation)],
) -> Result<Vec<Ssttc>, SsttcError> {
    conditions
        .iter()
        .map(|&(channel, required)| {
            let component = largest_suitable(apkm, relation, channel, required, epsilon)?;
            Ok(Ssttc {
                channel,
                mean: component.mean,
                variance: component.variance,
                weight: component.weight,
            })
        })
        .collect()
}

/// For each necessary channel of `relation`, pick the largest-weight
/// component whose mean has the required sign under margin `epsilon`.
pub fn extract_ssttcs(
    apkm: &ActionPairKeypointModel,
    relation: AllenRelation,
    epsilon: f64,
) -> Result<Vec<Ssttc>, SsttcError> {
    extract(apkm, relation, epsilon, &necessary_channels(relation))
}

/// Diagnostic variant covering all four channels of the relation's full
/// signature, not only the necessary ones.
pub fn extract_ssttcs_all_channels(
    apkm: &ActionPairKeypointModel,
    relation: AllenRelation,
    epsilon: f64,
) -> Result<Vec<Ssttc>, SsttcError> {
    let sig = signature_of(relation);
    let conditions = [
        (Channel::Ss, sig.ss),
        (Channel::Se, sig.se),
        (Channel::Es, sig.es),
        (Channel::Ee, sig.ee),
    ];
    extract(apkm, relation, epsilon, &conditions)
}

/// One scheduled action of a two-action plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub action: Action,
    pub hand: Hand,
    pub start: f64,
    pub duration: f64,
}

/// A synchronized two-action timeline and the objective value it achieved.
#[derive(Debug, Clone, PartialEq)]
pub struct TimelinePlan {
    pub entries: Vec<PlanEntry>,
    pub objective_value: f64,
}

/// Duration objective: hit the demonstrated lead/lag sum with the duration
/// difference while staying close to the demonstrated mean durations. All
/// three terms are absolute deviations, which keeps the minimization
/// well-posed.
fn objective(t_outer: f64, t_inner: f64, offset_sum: f64, mean_outer: f64, mean_inner: f64) -> f64 {
    ((t_outer - t_inner).abs() - offset_sum).abs()
        + (t_outer - mean_outer).abs()
        + (t_inner - mean_inner).abs()
}

/// Plan durations and starts for a containment-family pair `(first,
/// second)` constrained by `relation` with the given start/start and end/end
/// constraints. `mean_durations` are the demonstrated mean durations of
/// `first` and `second`. The containing action starts at zero and the
/// contained one at the demonstrated lead offset; the planned intervals must
/// classify back to `relation`.
pub fn plan_bimanual(
    first: &Action,
    second: &Action,
    relation: AllenRelation,
    ssttcs: &[Ssttc],
    mean_durations: (f64, f64),
    epsilon: f64,
) -> Result<TimelinePlan, SsttcError> {
    use AllenRelation::*;
    // orient the pair: which action contains the other
    let first_is_outer = match relation {
        Contains | StartedBy | FinishedBy | Equals => true,
        During | Starts | Finishes => false,
        other => return Err(SsttcError::UnsupportedRelation(other)),
    };
    let find = |channel: Channel| {
        ssttcs
            .iter()
            .find(|c| c.channel == channel)
            .map(|c| c.mean)
            .ok_or(SsttcError::MissingChannel(channel))
    };
    let lead = find(Channel::Ss)?.abs();
    let lag = find(Channel::Ee)?.abs();
    let offset_sum = lead + lag;
    let (mean_outer, mean_inner) = if first_is_outer {
        (mean_durations.0, mean_durations.1)
    } else {
        (mean_durations.1, mean_durations.0)
    };

    // The objective is piecewise linear; its minimum sits on an intersection
    // of the breaklines t_outer = mean_outer, t_inner = mean_inner,
    // t_outer - t_inner = +-offset_sum and t_outer = t_inner.
    let candidates = [
        (mean_outer, mean_inner),
        (mean_outer, mean_outer - offset_sum),
        (mean_outer, mean_outer + offset_sum),
        (mean_outer, mean_outer),
        (mean_inner + offset_sum, mean_inner),
        (mean_inner - offset_sum, mean_inner),
        (mean_inner, mean_inner),
    ];

    let build = |t_outer: f64, t_inner: f64| -> (TimelinePlan, bool) {
        let outer_iv = TimeInterval { start: 0.0, end: t_outer };
        let inner_iv = TimeInterval { start: lead, end: lead + t_inner };
        let (first_iv, second_iv) = if first_is_outer {
            (outer_iv, inner_iv)
        } else {
            (inner_iv, outer_iv)
        };
        let classifies = classify_interval(&first_iv, &second_iv, epsilon)
            .map(|r| r == relation)
            .unwrap_or(false);
        let plan = TimelinePlan {
            entries: vec![
                PlanEntry {
                    action: first.clone(),
                    hand: Hand::Left,
                    start: first_iv.start,
                    duration: first_iv.end - first_iv.start,
                },
                PlanEntry {
                    action: second.clone(),
                    hand: Hand::Right,
                    start: second_iv.start,
                    duration: second_iv.end - second_iv.start,
                },
            ],
            objective_value: objective(t_outer, t_inner, offset_sum, mean_outer, mean_inner),
        };
        (plan, classifies)
    };

    let mut best: Option<(TimelinePlan, bool)> = None;
    for (t_outer, t_inner) in candidates {
        if t_outer <= 0.0 || t_inner <= 0.0 {
            continue;
        }
        let (plan, classifies) = build(t_outer, t_inner);
        let better = match &best {
            None => true,
            Some((cur, cur_ok)) => {
                plan.objective_value < cur.objective_value - 1e-12
                    || ((plan.objective_value - cur.objective_value).abs() <= 1e-12
                        && classifies
                        && !cur_ok)
                }
        };
        if better {
            best = Some((plan, classifies));
        }
    }
    match best {
        Some((plan, true)) => Ok(plan),
        _ => Err(SsttcError::InfeasibleDurations),
    }
}
