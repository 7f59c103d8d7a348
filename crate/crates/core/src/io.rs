//! Serialized file formats: the demonstration dataset, the ground-truth /
//! inferred constraint sets, the learned model file and the two-action plan.
//!
//! All files are JSON. Collections are emitted in sorted order and re-saving
//! a loaded file reproduces it byte for byte.

use crate::apkm::ActionPairKeypointModel;
use crate::fuzzy::FuzzyAllenProfile;
use crate::mixture::GaussianMixture;
use crate::model::{ModelConfig, TaskModel};
use crate::solver::{Sttc, SttcSet};
use crate::ssttc::{Ssttc, TimelinePlan};
use crate::temporal::{Action, ActionPair, AllenRelation, Demonstration, Hand, ALL_RELATIONS};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Version tag written into model files.
pub const MODEL_FORMAT: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    File(#[from] std::io::Error),
    #[error("bad pair key `{0}` (expected `verb:object|verb:object`)")]
    BadPairKey(String),
    #[error("unsupported model format {0} (expected {MODEL_FORMAT})")]
    UnsupportedFormat(u32),
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, IoError> {
    let mut out = serde_json::to_string_pretty(value)?;
    out.push('\n');
    Ok(out)
}

// ---------------------------------------------------------------------------
// demonstration dataset

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObsRecord {
    pub verb: String,
    pub object: String,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemoRecord {
    pub id: String,
    pub left: Vec<ObsRecord>,
    pub right: Vec<ObsRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetFile {
    pub task: String,
    pub demonstrations: Vec<DemoRecord>,
}

fn obs_records(seq: &[crate::temporal::ActionObservation]) -> Vec<ObsRecord> {
    seq.iter()
        .map(|o| ObsRecord {
            verb: o.action.verb.clone(),
            object: o.action.object.clone(),
            start: o.interval.start,
            end: o.interval.end,
        })
        .collect()
}

fn obs_from_records(records: Vec<ObsRecord>) -> Vec<crate::temporal::ActionObservation> {
    records
        .into_iter()
        .map(|r| crate::temporal::ActionObservation {
            action: Action::new(r.verb, r.object),
            interval: crate::temporal::TimeInterval { start: r.start, end: r.end },
        })
        .collect()
}

impl DatasetFile {
    pub fn from_demos(task: impl Into<String>, demos: &[Demonstration]) -> Self {
        DatasetFile {
            task: task.into(),
            demonstrations: demos
                .iter()
                .map(|d| DemoRecord {
                    id: d.id.clone(),
                    left: obs_records(&d.left),
                    right: obs_records(&d.right),
                })
                .collect(),
        }
    }

    pub fn into_demos(self) -> (String, Vec<Demonstration>) {
        let demos = self
            .demonstrations
            .into_iter()
            .map(|d| Demonstration {
                id: d.id,
                left: obs_from_records(d.left),
                right: obs_from_records(d.right),
            })
            .collect();
        (self.task, demos)
    }

    pub fn to_json(&self) -> Result<String, IoError> {
        to_pretty_json(self)
    }

    pub fn from_json(s: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(s)?)
    }
}

// ---------------------------------------------------------------------------
// constraint sets

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintRecord {
    pub a: Action,
    pub b: Action,
    pub relation: AllenRelation,
    pub membership: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetricRecord {
    pub action: Action,
    pub membership: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SttcFile {
    pub constraints: Vec<ConstraintRecord>,
    pub symmetric: Vec<SymmetricRecord>,
}

impl SttcFile {
    pub fn from_sttcs(set: &SttcSet) -> Self {
        SttcFile {
            constraints: set
                .assignments
                .iter()
                .map(|(pair, c)| ConstraintRecord {
                    a: pair.first().clone(),
                    b: pair.second().clone(),
                    relation: c.relation,
                    membership: c.membership,
                })
                .collect(),
            symmetric: set
                .symmetric
                .iter()
                .map(|(action, membership)| SymmetricRecord {
                    action: action.clone(),
                    membership: *membership,
                })
                .collect(),
        }
    }

    pub fn into_sttcs(self) -> SttcSet {
        let mut set = SttcSet::default();
        for record in self.constraints {
            if let Some((pair, swapped)) = ActionPair::oriented(record.a, record.b) {
                let relation = if swapped {
                    record.relation.inverse()
                } else {
                    record.relation
                };
                set.assignments.insert(
                    pair,
                    Sttc { relation, membership: record.membership },
                );
            }
        }
        for record in self.symmetric {
            set.symmetric.insert(record.action, record.membership);
        }
        set
    }

    pub fn to_json(&self) -> Result<String, IoError> {
        to_pretty_json(self)
    }

    pub fn from_json(s: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(s)?)
    }
}

// ---------------------------------------------------------------------------
// model file

/// Memberships of all thirteen relations, with one named field per relation
/// so the serialized order is fixed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileMemberships {
    pub before: f64,
    pub meets: f64,
    pub overlaps: f64,
    pub starts: f64,
    pub during: f64,
    pub finishes: f64,
    pub equals: f64,
    pub after: f64,
    pub met_by: f64,
    pub overlapped_by: f64,
    pub started_by: f64,
    pub contains: f64,
    pub finished_by: f64,
}

impl ProfileMemberships {
    fn from_profile(profile: &FuzzyAllenProfile) -> Self {
        let get = |r: AllenRelation| profile.get(r);
        ProfileMemberships {
            before: get(AllenRelation::Before),
            meets: get(AllenRelation::Meets),
            overlaps: get(AllenRelation::Overlaps),
            starts: get(AllenRelation::Starts),
            during: get(AllenRelation::During),
            finishes: get(AllenRelation::Finishes),
            equals: get(AllenRelation::Equals),
            after: get(AllenRelation::After),
            met_by: get(AllenRelation::MetBy),
            overlapped_by: get(AllenRelation::OverlappedBy),
            started_by: get(AllenRelation::StartedBy),
            contains: get(AllenRelation::Contains),
            finished_by: get(AllenRelation::FinishedBy),
        }
    }

    fn into_profile(self) -> FuzzyAllenProfile {
        let values = [
            self.before,
            self.meets,
            self.overlaps,
            self.starts,
            self.during,
            self.finishes,
            self.equals,
            self.after,
            self.met_by,
            self.overlapped_by,
            self.started_by,
            self.contains,
            self.finished_by,
        ];
        let mut memberships = [0.0; 13];
        for (r, v) in ALL_RELATIONS.iter().zip(values) {
            memberships[r.index()] = v;
        }
        FuzzyAllenProfile::from_memberships(memberships)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApkmRecord {
    pub pair: String,
    pub pair_count: usize,
    pub m_ss: GaussianMixture,
    pub m_se: GaussianMixture,
    pub m_es: GaussianMixture,
    pub m_ee: GaussianMixture,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub pair: String,
    pub memberships: ProfileMemberships,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairRecord {
    pub a: Action,
    pub b: Action,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SsttcRecord {
    pub pair: PairRecord,
    pub relation: AllenRelation,
    pub constraints: Vec<Ssttc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DurationRecord {
    pub action: Action,
    pub mean_duration: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: u32,
    pub config: ModelConfig,
    pub apkms: Vec<ApkmRecord>,
    pub profiles: Vec<ProfileRecord>,
    pub sttcs: SttcFile,
    pub ssttcs: Vec<SsttcRecord>,
    pub durations: Vec<DurationRecord>,
}

fn apkm_record(pair_key: String, apkm: &ActionPairKeypointModel) -> ApkmRecord {
    ApkmRecord {
        pair: pair_key,
        pair_count: apkm.pair_count,
        m_ss: apkm.m_ss.clone(),
        m_se: apkm.m_se.clone(),
        m_es: apkm.m_es.clone(),
        m_ee: apkm.m_ee.clone(),
    }
}

fn parse_pair_key(key: &str) -> Result<(Action, Action), IoError> {
    let (a, b) = key
        .split_once('|')
        .ok_or_else(|| IoError::BadPairKey(key.to_string()))?;
    match (Action::parse(a), Action::parse(b)) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(IoError::BadPairKey(key.to_string())),
    }
}

impl ModelFile {
    pub fn from_model(model: &TaskModel) -> Self {
        let mut apkms = Vec::new();
        let mut profiles = Vec::new();
        for (pair, (apkm, profile)) in &model.pairs {
            apkms.push(apkm_record(pair.key(), apkm));
            profiles.push(ProfileRecord {
                pair: pair.key(),
                memberships: ProfileMemberships::from_profile(profile),
            });
        }
        for (action, (apkm, profile)) in &model.self_pairs {
            let key = format!("{}|{}", action.key(), action.key());
            apkms.push(apkm_record(key.clone(), apkm));
            profiles.push(ProfileRecord {
                pair: key,
                memberships: ProfileMemberships::from_profile(profile),
            });
        }
        let ssttcs = model
            .ssttcs
            .iter()
            .map(|(pair, constraints)| SsttcRecord {
                pair: PairRecord {
                    a: pair.first().clone(),
                    b: pair.second().clone(),
                },
                relation: model
                    .sttcs
                    .relation(pair)
                    .expect("subsymbolic constraints only exist for assigned pairs"),
                constraints: constraints.clone(),
            })
            .collect();
        let durations = model
            .durations
            .iter()
            .map(|(action, mean)| DurationRecord {
                action: action.clone(),
                mean_duration: *mean,
            })
            .collect();
        ModelFile {
            format: MODEL_FORMAT,
            config: model.config,
            apkms,
            profiles,
            sttcs: SttcFile::from_sttcs(&model.sttcs),
            ssttcs,
            durations,
        }
    }

    pub fn into_model(self) -> Result<TaskModel, IoError> {
        if self.format != MODEL_FORMAT {
            return Err(IoError::UnsupportedFormat(self.format));
        }
        let mut profile_map: BTreeMap<String, ProfileMemberships> = self
            .profiles
            .into_iter()
            .map(|p| (p.pair, p.memberships))
            .collect();
        let mut pairs = BTreeMap::new();
        let mut self_pairs = BTreeMap::new();
        for record in self.apkms {
            let (a, b) = parse_pair_key(&record.pair)?;
            let profile = profile_map
                .remove(&record.pair)
                .map(ProfileMemberships::into_profile)
                .ok_or_else(|| IoError::BadPairKey(record.pair.clone()))?;
            let apkm = ActionPairKeypointModel {
                first: a.clone(),
                second: b.clone(),
                m_ss: record.m_ss,
                m_se: record.m_se,
                m_es: record.m_es,
                m_ee: record.m_ee,
                pair_count: record.pair_count,
            };
            match ActionPair::try_new(a.clone(), b) {
                Some(pair) => {
                    pairs.insert(pair, (apkm, profile));
                }
                None => {
                    self_pairs.insert(a, (apkm, profile));
                }
            }
        }
        let sttcs = self.sttcs.into_sttcs();
        let mut ssttcs = BTreeMap::new();
        for record in self.ssttcs {
            if let Some(pair) = ActionPair::try_new(record.pair.a, record.pair.b) {
                ssttcs.insert(pair, record.constraints);
            }
        }
        let durations = self
            .durations
            .into_iter()
            .map(|d| (d.action, d.mean_duration))
            .collect();
        Ok(TaskModel {
            config: self.config,
            pairs,
            self_pairs,
            sttcs,
            ssttcs,
            durations,
        })
    }

    pub fn to_json(&self) -> Result<String, IoError> {
        to_pretty_json(self)
    }

    pub fn from_json(s: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(s)?)
    }
}

// ---------------------------------------------------------------------------
// plan file

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanEntryRecord {
    pub verb: String,
    pub object: String,
    pub hand: Hand,
    pub start: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanFile {
    pub entries: Vec<PlanEntryRecord>,
    pub objective: f64,
}

impl PlanFile {
    pub fn from_plan(plan: &TimelinePlan) -> Self {
        PlanFile {
            entries: plan
                .entries
                .iter()
                .map(|e| PlanEntryRecord {
                    verb: e.action.verb.clone(),
                    object: e.action.object.clone(),
                    hand: e.hand,
                    start: e.start,
                    duration: e.duration,
                })
                .collect(),
            objective: plan.objective_value,
        }
    }

    pub fn to_json(&self) -> Result<String, IoError> {
        to_pretty_json(self)
    }

    pub fn from_json(s: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{learn, ModelConfig};
    use crate::temporal::{ActionObservation, TimeInterval};

    fn obs(verb: &str, object: &str, start: f64, end: f64) -> ActionObservation {
        ActionObservation::new(Action::new(verb, object), TimeInterval { start, end })
    }

    fn demos() -> Vec<Demonstration> {
        (0..10)
            .map(|i| {
                let shift = i as f64 * 0.01;
                Demonstration::new(
                    format!("d{i}"),
                    vec![obs("hold", "cup", 0.5 + shift, 5.5 + shift)],
                    vec![obs("pour", "milk", 0.0 + shift, 6.0 + shift)],
                )
            })
            .collect()
    }

    #[test]
    fn dataset_round_trip_preserves_field_names() {
        let file = DatasetFile::from_demos("pouring", &demos());
        let json = file.to_json().unwrap();
        assert!(json.contains("\"task\": \"pouring\""));
        assert!(json.contains("\"verb\": \"hold\""));
        assert!(json.contains("\"start\": 0.5"));
        let (task, loaded) = DatasetFile::from_json(&json).unwrap().into_demos();
        assert_eq!(task, "pouring");
        assert_eq!(loaded, demos());
    }

    #[test]
    fn sttc_file_uses_lowercase_relation_names() {
        let model = learn(&demos(), ModelConfig::default(), false).unwrap();
        let file = SttcFile::from_sttcs(&model.sttcs);
        let json = file.to_json().unwrap();
        assert!(json.contains("\"relation\": \"during\""));
        let loaded = SttcFile::from_json(&json).unwrap().into_sttcs();
        assert_eq!(loaded, model.sttcs);
    }

    #[test]
    fn sttc_file_reorients_swapped_records() {
        let json = r#"{
            "constraints": [
                {"a": {"verb": "pour", "object": "milk"}, "b": {"verb": "hold", "object": "cup"}, "relation": "contains", "membership": 0.9}
            ],
            "symmetric": []
        }"#;
        let set = SttcFile::from_json(json).unwrap().into_sttcs();
        let pair = ActionPair::try_new(Action::new("hold", "cup"), Action::new("pour", "milk")).unwrap();
        assert_eq!(set.relation(&pair), Some(AllenRelation::During));
    }

    #[test]
    fn model_file_round_trip_is_byte_stable() {
        let model = learn(&demos(), ModelConfig::default(), false).unwrap();
        let saved = ModelFile::from_model(&model).to_json().unwrap();
        let reloaded = ModelFile::from_json(&saved).unwrap();
        let resaved = reloaded.to_json().unwrap();
        assert_eq!(saved, resaved);

        let restored = ModelFile::from_json(&saved).unwrap().into_model().unwrap();
        assert_eq!(restored, model);
        assert!(saved.contains("\"format\": 1"));
        assert!(saved.contains("\"pair\": \"hold:cup|pour:milk\""));
    }

    #[test]
    fn model_file_rejects_unknown_format() {
        let model = learn(&demos(), ModelConfig::default(), false).unwrap();
        let mut file = ModelFile::from_model(&model);
        file.format = 99;
        assert!(matches!(file.into_model(), Err(IoError::UnsupportedFormat(99))));
    }

    #[test]
    fn mixture_serialization_shape() {
        let model = learn(&demos(), ModelConfig::default(), false).unwrap();
        let file = ModelFile::from_model(&model);
        let json = serde_json::to_string(&file.apkms[0].m_ss).unwrap();
        assert!(json.starts_with("{\"components\":[{\"w\":"));
        assert!(json.contains("\"mu\":"));
        assert!(json.contains("\"var\":"));
        assert!(json.contains("\"n\":"));
    }

    #[test]
    fn plan_file_is_flat() {
        let plan = TimelinePlan {
            entries: vec![crate::ssttc::PlanEntry {
                action: Action::new("pour", "milk"),
                hand: Hand::Right,
                start: 0.0,
                duration: 6.0,
            }],
            objective_value: 0.0,
        };
        let json = PlanFile::from_plan(&plan).to_json().unwrap();
        assert!(json.contains("\"verb\": \"pour\""));
        assert!(json.contains("\"hand\": \"right\""));
        assert!(json.contains("\"objective\": 0.0"));
    }
}
