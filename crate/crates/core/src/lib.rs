//! Learning symbolic and subsymbolic temporal task constraints from
//! bimanual demonstrations.
//!
//! The library models the temporal structure of a two-handed task from
//! labeled action intervals. For every pair of actions it fits Gaussian
//! mixtures over the observed differences between action keypoints
//! ([`apkm`]), turns those mixtures into fuzzy memberships of the thirteen
//! interval relations ([`fuzzy`]), assigns a contradiction-free relation per
//! pair ([`solver`]), and extracts per-keypoint Gaussian offsets that let a
//! scheduler synchronize two actions the way the demonstrations did
//! ([`ssttc`]). A seeded synthetic generator ([`synth`]) and an incremental
//! learning-curve harness ([`eval`]) support experiments end to end.

pub mod apkm;
pub mod eval;
pub mod fuzzy;
pub mod io;
pub mod mixture;
pub mod model;
pub mod solver;
pub mod ssttc;
pub mod synth;
pub mod temporal;

pub use apkm::{ActionPairKeypointModel, Channel};
pub use fuzzy::{FuzzyAllenProfile, FuzzyConfig};
pub use mixture::{GaussianComponent, GaussianMixture};
pub use model::{learn, ModelConfig, TaskModel};
pub use solver::{SolverConfig, Sttc, SttcSet};
pub use ssttc::{Ssttc, TimelinePlan};
pub use temporal::{
    Action, ActionObservation, ActionPair, AllenRelation, Demonstration, Hand, PointRelation,
    TimeInterval,
};
