//! Crisp temporal types: time points, intervals, actions, demonstrations,
//! the three point relations and the thirteen interval relations after Allen,
//! together with inversion, composition and demonstration validation.
//!
//! Times are `f64` seconds throughout. Classification takes an equality
//! margin `epsilon`: two points closer than `epsilon` count as simultaneous.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemporalError {
    #[error("interval [{start}, {end}] is invalid: start must be strictly before end")]
    InvalidInterval { start: f64, end: f64 },
    #[error("interval duration {duration} is too short for equality margin {epsilon} (needs > 2*epsilon)")]
    DegenerateInterval { duration: f64, epsilon: f64 },
    #[error("point-relation signature {0:?} matches none of the 13 interval relations")]
    InvalidSignature(RelationSignature),
}

/// Relation between two time points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointRelation {
    Before,
    Equals,
    After,
}

impl PointRelation {
    pub fn inverse(self) -> Self {
        match self {
            PointRelation::Before => PointRelation::After,
            PointRelation::Equals => PointRelation::Equals,
            PointRelation::After => PointRelation::Before,
        }
    }
}

/// Classify the relation of `t1` to `t2` under equality margin `epsilon`.
///
/// Equality wins on the closed margin: `|t1 - t2| <= epsilon`.
pub fn classify_point(t1: f64, t2: f64, epsilon: f64) -> PointRelation {
    debug_assert!(t1.is_finite() && t2.is_finite() && epsilon >= 0.0);
    let d = t1 - t2;
    if d.abs() <= epsilon {
        PointRelation::Equals
    } else if d < 0.0 {
        PointRelation::Before
    } else {
        PointRelation::After
    }
}

/// The thirteen interval relations after Allen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllenRelation {
    Before,
    Meets,
    Overlaps,
    Starts,
    During,
    Finishes,
    Equals,
    After,
    MetBy,
    OverlappedBy,
    StartedBy,
    Contains,
    FinishedBy,
}

pub const ALL_RELATIONS: [AllenRelation; 13] = [
    AllenRelation::Before,
    AllenRelation::Meets,
    AllenRelation::Overlaps,
    AllenRelation::Starts,
    AllenRelation::During,
    AllenRelation::Finishes,
    AllenRelation::Equals,
    AllenRelation::After,
    AllenRelation::MetBy,
    AllenRelation::OverlappedBy,
    AllenRelation::StartedBy,
    AllenRelation::Contains,
    AllenRelation::FinishedBy,
];

impl AllenRelation {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        ALL_RELATIONS[i]
    }

    /// The inverse relation: `r(x, y)` holds iff `r.inverse()(y, x)` holds.
    pub fn inverse(self) -> Self {
        use AllenRelation::*;
        match self {
            Before => After,
            Meets => MetBy,
            Overlaps => OverlappedBy,
            Starts => StartedBy,
            During => Contains,
            Finishes => FinishedBy,
            Equals => Equals,
            After => Before,
            MetBy => Meets,
            OverlappedBy => Overlaps,
            StartedBy => Starts,
            Contains => During,
            FinishedBy => Finishes,
        }
    }

    /// Lowercase name as used in serialized output.
    pub fn name(self) -> &'static str {
        use AllenRelation::*;
        match self {
            Before => "before",
            Meets => "meets",
            Overlaps => "overlaps",
            Starts => "starts",
            During => "during",
            Finishes => "finishes",
            Equals => "equals",
            After => "after",
            MetBy => "met_by",
            OverlappedBy => "overlapped_by",
            StartedBy => "started_by",
            Contains => "contains",
            FinishedBy => "finished_by",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ALL_RELATIONS.iter().copied().find(|r| r.name() == name)
    }
}

impl fmt::Display for AllenRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The four point relations between the keypoints of an interval pair
/// `(x, y)`: start/start, start/end, end/start and end/end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RelationSignature {
    pub ss: PointRelation,
    pub se: PointRelation,
    pub es: PointRelation,
    pub ee: PointRelation,
}

impl RelationSignature {
    /// The interval relation this signature encodes, if it is one of the 13
    /// realizable signatures.
    pub fn matching_relation(&self) -> Option<AllenRelation> {
        ALL_RELATIONS
            .iter()
            .copied()
            .find(|r| signature_of(*r) == *self)
    }
}

/// The full four-condition signature of a relation, including the conditions
/// that are redundant for crisp classification but carry weight in the fuzzy
/// min-conjunction.
pub fn signature_of(r: AllenRelation) -> RelationSignature {
    use PointRelation::{After as A, Before as B, Equals as E};
    let (ss, se, es, ee) = match r {
        AllenRelation::Before => (B, B, B, B),
        AllenRelation::Meets => (B, B, E, B),
        AllenRelation::Overlaps => (B, B, A, B),
        AllenRelation::Starts => (E, B, A, B),
        AllenRelation::During => (A, B, A, B),
        AllenRelation::Finishes => (A, B, A, E),
        AllenRelation::Equals => (E, B, A, E),
        AllenRelation::After => (A, A, A, A),
        AllenRelation::MetBy => (A, E, A, A),
        AllenRelation::OverlappedBy => (A, B, A, A),
        AllenRelation::StartedBy => (E, B, A, A),
        AllenRelation::Contains => (B, B, A, A),
        AllenRelation::FinishedBy => (B, B, A, E),
    };
    RelationSignature { ss, se, es, ee }
}

/// A set of Allen relations, stored as a 13-bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct AllenSet(u16);

const FULL_MASK: u16 = 0x1FFF;

impl AllenSet {
    pub const EMPTY: AllenSet = AllenSet(0);
    pub const FULL: AllenSet = AllenSet(FULL_MASK);

    pub fn singleton(r: AllenRelation) -> Self {
        AllenSet(1 << r.index())
    }

    pub fn contains(self, r: AllenRelation) -> bool {
        self.0 & (1 << r.index()) != 0
    }

    pub fn insert(&mut self, r: AllenRelation) {
        self.0 |= 1 << r.index();
    }

    pub fn intersect(self, other: AllenSet) -> AllenSet {
        AllenSet(self.0 & other.0)
    }

    pub fn union(self, other: AllenSet) -> AllenSet {
        AllenSet(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// The set of inverses of the members.
    pub fn inverse(self) -> AllenSet {
        self.iter().map(AllenRelation::inverse).collect()
    }

    pub fn iter(self) -> impl Iterator<Item = AllenRelation> {
        ALL_RELATIONS
            .iter()
            .copied()
            .filter(move |r| self.contains(*r))
    }
}

impl FromIterator<AllenRelation> for AllenSet {
    fn from_iter<T: IntoIterator<Item = AllenRelation>>(iter: T) -> Self {
        let mut set = AllenSet::EMPTY;
        for r in iter {
            set.insert(r);
        }
        set
    }
}

impl fmt::Debug for AllenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

// Transitivity table: COMPOSITION[r1][r2] is the bitmask of relations r3 such
// that r1(a, b) and r2(b, c) admit r3(a, c). Kept as explicit data so it can
// be audited against the exhaustive three-interval enumeration in the tests.
// Row/column order matches ALL_RELATIONS.
const COMPOSITION: [[u16; 13]; 13] = [
    [0x0001, 0x0001, 0x0001, 0x0001, 0x001F, 0x001F, 0x0001, 0x1FFF, 0x001F, 0x001F, 0x0001, 0x0001, 0x0001], // before
    [0x0001, 0x0001, 0x0001, 0x0002, 0x001C, 0x001C, 0x0002, 0x0F80, 0x1060, 0x001C, 0x0002, 0x0001, 0x0001], // meets
    [0x0001, 0x0001, 0x0007, 0x0004, 0x001C, 0x001C, 0x0004, 0x0F80, 0x0E00, 0x1E7C, 0x1804, 0x1807, 0x0007], // overlaps
    [0x0001, 0x0001, 0x0007, 0x0008, 0x0010, 0x0010, 0x0008, 0x0080, 0x0100, 0x0230, 0x0448, 0x1807, 0x0007], // starts
    [0x0001, 0x0001, 0x001F, 0x0010, 0x0010, 0x0010, 0x0010, 0x0080, 0x0080, 0x03B0, 0x03B0, 0x1FFF, 0x001F], // during
    [0x0001, 0x0002, 0x001C, 0x0010, 0x0010, 0x0020, 0x0020, 0x0080, 0x0080, 0x0380, 0x0380, 0x0F80, 0x1060], // finishes
    [0x0001, 0x0002, 0x0004, 0x0008, 0x0010, 0x0020, 0x0040, 0x0080, 0x0100, 0x0200, 0x0400, 0x0800, 0x1000], // equals
    [0x1FFF, 0x03B0, 0x03B0, 0x03B0, 0x03B0, 0x0080, 0x0080, 0x0080, 0x0080, 0x0080, 0x0080, 0x0080, 0x0080], // after
    [0x1807, 0x0448, 0x0230, 0x0230, 0x0230, 0x0100, 0x0100, 0x0080, 0x0080, 0x0080, 0x0080, 0x0080, 0x0100], // met_by
    [0x1807, 0x1804, 0x1E7C, 0x0230, 0x0230, 0x0200, 0x0200, 0x0080, 0x0080, 0x0380, 0x0380, 0x0F80, 0x0E00], // overlapped_by
    [0x1807, 0x1804, 0x1804, 0x0448, 0x0230, 0x0200, 0x0400, 0x0080, 0x0100, 0x0200, 0x0400, 0x0800, 0x0800], // started_by
    [0x1807, 0x1804, 0x1804, 0x1804, 0x1E7C, 0x0E00, 0x0800, 0x0F80, 0x0E00, 0x0E00, 0x0800, 0x0800, 0x0800], // contains
    [0x0001, 0x0002, 0x0004, 0x0004, 0x001C, 0x1060, 0x1000, 0x0F80, 0x0E00, 0x0E00, 0x0800, 0x0800, 0x1000], // finished_by
];

/// Compose two relations: the set of relations possible between `(a, c)`
/// given `r1(a, b)` and `r2(b, c)`.
pub fn compose(r1: AllenRelation, r2: AllenRelation) -> AllenSet {
    AllenSet(COMPOSITION[r1.index()][r2.index()])
}

/// Compose two relation sets (union of the pairwise compositions).
pub fn compose_sets(s1: AllenSet, s2: AllenSet) -> AllenSet {
    let mut out = AllenSet::EMPTY;
    for r1 in s1.iter() {
        for r2 in s2.iter() {
            out = out.union(compose(r1, r2));
        }
    }
    out
}

/// A time interval in seconds with `start < end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeInterval {
    pub start: f64,
    pub end: f64,
}

impl TimeInterval {
    pub fn new(start: f64, end: f64) -> Result<Self, TemporalError> {
        if !start.is_finite() || !end.is_finite() || start >= end {
            return Err(TemporalError::InvalidInterval { start, end });
        }
        Ok(TimeInterval { start, end })
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Classify the relation of interval `x` to interval `y` under margin
/// `epsilon`. Both intervals must be longer than `2 * epsilon`, otherwise the
/// margins overlap and the signature would be ambiguous.
pub fn classify_interval(
    x: &TimeInterval,
    y: &TimeInterval,
    epsilon: f64,
) -> Result<AllenRelation, TemporalError> {
    for iv in [x, y] {
        if iv.duration() <= 2.0 * epsilon {
            return Err(TemporalError::DegenerateInterval {
                duration: iv.duration(),
                epsilon,
            });
        }
    }
    let sig = RelationSignature {
        ss: classify_point(x.start, y.start, epsilon),
        se: classify_point(x.start, y.end, epsilon),
        es: classify_point(x.end, y.start, epsilon),
        ee: classify_point(x.end, y.end, epsilon),
    };
    sig.matching_relation()
        .ok_or(TemporalError::InvalidSignature(sig))
}

/// A nominal interval pair `(x, y)` realizing the given relation with
/// keypoint clearances of at least one second. Useful as a template when
/// constructing synthetic data.
pub fn witness_intervals(r: AllenRelation) -> (TimeInterval, TimeInterval) {
    use AllenRelation::*;
    let iv = |s: f64, e: f64| TimeInterval { start: s, end: e };
    match r {
        Before => (iv(0.0, 1.0), iv(2.0, 3.0)),
        Meets => (iv(0.0, 1.0), iv(1.0, 2.0)),
        Overlaps => (iv(0.0, 2.0), iv(1.0, 3.0)),
        Starts => (iv(0.0, 1.0), iv(0.0, 2.0)),
        During => (iv(1.0, 2.0), iv(0.0, 3.0)),
        Finishes => (iv(1.0, 2.0), iv(0.0, 2.0)),
        Equals => (iv(0.0, 1.0), iv(0.0, 1.0)),
        inverse => {
            let (x, y) = witness_intervals(inverse.inverse());
            (y, x)
        }
    }
}

/// An action: a verb applied to an object. Equality is `(verb, object)`
/// equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action {
    pub verb: String,
    pub object: String,
}

impl Action {
    pub fn new(verb: impl Into<String>, object: impl Into<String>) -> Self {
        Action {
            verb: verb.into(),
            object: object.into(),
        }
    }

    /// Parse `"verb:object"`.
    pub fn parse(s: &str) -> Option<Self> {
        let (verb, object) = s.split_once(':')?;
        if verb.is_empty() || object.is_empty() {
            return None;
        }
        Some(Action::new(verb, object))
    }

    /// `"verb:object"` key used in serialized pair maps.
    pub fn key(&self) -> String {
        format!("{}:{}", self.verb, self.object)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.verb, self.object)
    }
}

/// An unordered pair of distinct actions in canonical (lexicographic)
/// orientation. Relations attached to the pair are read as
/// `relation(first, second)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionPair {
    first: Action,
    second: Action,
}

impl ActionPair {
    /// Canonicalize `(a, b)`; `None` if the actions are equal.
    pub fn try_new(a: Action, b: Action) -> Option<Self> {
        Self::oriented(a, b).map(|(pair, _)| pair)
    }

    /// Canonicalize `(a, b)` and report whether the inputs were swapped. A
    /// relation stated for `(a, b)` must be inverted when `swapped` is true.
    pub fn oriented(a: Action, b: Action) -> Option<(Self, bool)> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some((ActionPair { first: a, second: b }, false)),
            std::cmp::Ordering::Greater => Some((ActionPair { first: b, second: a }, true)),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn first(&self) -> &Action {
        &self.first
    }

    pub fn second(&self) -> &Action {
        &self.second
    }

    /// `"verb:object|verb:object"` key used in serialized pair maps.
    pub fn key(&self) -> String {
        format!("{}|{}", self.first.key(), self.second.key())
    }
}

impl fmt::Display for ActionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.first, self.second)
    }
}

/// One observed execution of an action over a time interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionObservation {
    pub action: Action,
    pub interval: TimeInterval,
}

impl ActionObservation {
    pub fn new(action: Action, interval: TimeInterval) -> Self {
        ActionObservation { action, interval }
    }
}

/// Per-hand observations, ordered and non-overlapping (touching is allowed).
pub type ActionSequence = Vec<ActionObservation>;

/// Which hand executed an observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hand {
    Left,
    Right,
}

impl fmt::Display for Hand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hand::Left => f.write_str("left"),
            Hand::Right => f.write_str("right"),
        }
    }
}

/// One bimanual demonstration: an action sequence per hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pub id: String,
    pub left: ActionSequence,
    pub right: ActionSequence,
}

impl Demonstration {
    pub fn new(id: impl Into<String>, left: ActionSequence, right: ActionSequence) -> Self {
        Demonstration {
            id: id.into(),
            left,
            right,
        }
    }

    /// All observations of both hands, tagged with the hand.
    pub fn observations(&self) -> impl Iterator<Item = (Hand, &ActionObservation)> {
        self.left
            .iter()
            .map(|o| (Hand::Left, o))
            .chain(self.right.iter().map(|o| (Hand::Right, o)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    NonFiniteTime,
    EmptyVerb,
    EmptyObject,
    DegenerateInterval { start: f64, end: f64 },
    OverlapsPrevious { prev_end: f64, start: f64 },
}

/// A broken sequence invariant, located by hand and observation index.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub hand: Hand,
    pub index: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]: ", self.hand, self.index)?;
        match &self.kind {
            ViolationKind::NonFiniteTime => write!(f, "non-finite time value"),
            ViolationKind::EmptyVerb => write!(f, "empty action verb"),
            ViolationKind::EmptyObject => write!(f, "empty action object"),
            ViolationKind::DegenerateInterval { start, end } => {
                write!(f, "degenerate interval [{start}, {end}] (start must be strictly before end)")
            }
            ViolationKind::OverlapsPrevious { prev_end, start } => {
                write!(f, "overlaps previous observation (previous end {prev_end} > start {start})")
            }
        }
    }
}

/// Check both hand sequences of a demonstration for ordering, overlap and
/// well-formedness violations. An empty result means the demonstration is
/// valid.
pub fn validate_demonstration(d: &Demonstration) -> Vec<Violation> {
    let mut violations = Vec::new();
    for (hand, seq) in [(Hand::Left, &d.left), (Hand::Right, &d.right)] {
        for (index, obs) in seq.iter().enumerate() {
            let push = |kind, violations: &mut Vec<Violation>| {
                violations.push(Violation { hand, index, kind })
            };
            if obs.action.verb.is_empty() {
                push(ViolationKind::EmptyVerb, &mut violations);
            }
            if obs.action.object.is_empty() {
                push(ViolationKind::EmptyObject, &mut violations);
            }
            let (start, end) = (obs.interval.start, obs.interval.end);
            if !start.is_finite() || !end.is_finite() {
                push(ViolationKind::NonFiniteTime, &mut violations);
                continue;
            }
            if start >= end {
                push(ViolationKind::DegenerateInterval { start, end }, &mut violations);
            }
            if index > 0 {
                let prev_end = seq[index - 1].interval.end;
                if prev_end.is_finite() && prev_end > start {
                    push(
                        ViolationKind::OverlapsPrevious { prev_end, start },
                        &mut violations,
                    );
                }
            }
        }
    }
    violations
}
